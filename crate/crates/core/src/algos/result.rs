use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::prefs::{ArmId, JudgmentTally};

/// Which part of an algorithm issued a duel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhaseTag {
    /// prefBest pruning phase, numbered from 1.
    Prune(u32),
    Finalize,
    ExtraFinalize,
    /// A duel chosen by one of the budgeted algorithms.
    Explore,
}

impl fmt::Display for PhaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseTag::Prune(i) => write!(f, "prune-{i}"),
            PhaseTag::Finalize => f.write_str("finalize"),
            PhaseTag::ExtraFinalize => f.write_str("extra-finalize"),
            PhaseTag::Explore => f.write_str("explore"),
        }
    }
}

impl FromStr for PhaseTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "finalize" => Ok(PhaseTag::Finalize),
            "extra-finalize" => Ok(PhaseTag::ExtraFinalize),
            "explore" => Ok(PhaseTag::Explore),
            _ => s
                .strip_prefix("prune-")
                .and_then(|n| n.parse().ok())
                .filter(|&n| n >= 1)
                .map(PhaseTag::Prune)
                .ok_or_else(|| format!("unknown phase `{s}`")),
        }
    }
}

impl Serialize for PhaseTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PhaseTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One duel as issued: `(i, j)` in the order the algorithm asked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub i: ArmId,
    pub j: ArmId,
    pub winner: ArmId,
    pub phase: PhaseTag,
}

/// prefBest winner sets from each finalization round and from their merged tally.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalSets {
    pub set_one: BTreeSet<ArmId>,
    pub set_two: BTreeSet<ArmId>,
    pub combined: BTreeSet<ArmId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub winners: BTreeSet<ArmId>,
    pub comparisons: u64,
    pub max_per_pair: u32,
    /// Pruning phases run (prefBest only).
    pub phases: u32,
    /// Pool size entering each pruning phase, then the finalization pool size.
    pub pool_sizes: Vec<usize>,
    pub final_sets: Option<FinalSets>,
    pub trace: Vec<TraceEntry>,
}

impl RunResult {
    pub(crate) fn from_trace(winners: BTreeSet<ArmId>, trace: Vec<TraceEntry>) -> Self {
        let tally = tally_of(&trace);
        RunResult {
            winners,
            comparisons: tally.total(),
            max_per_pair: tally.max_per_pair(),
            phases: 0,
            pool_sizes: Vec::new(),
            final_sets: None,
            trace,
        }
    }

    pub fn tally(&self) -> JudgmentTally {
        tally_of(&self.trace)
    }

    /// Writes the trace as newline-delimited JSON, one duel per line.
    pub fn write_trace<W: Write>(&self, mut out: W) -> io::Result<()> {
        for entry in &self.trace {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub(crate) fn tally_of(trace: &[TraceEntry]) -> JudgmentTally {
    let mut t = JudgmentTally::new();
    for e in trace {
        let loser = if e.winner == e.i { e.j } else { e.i };
        t.record(e.winner, loser);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_tags_round_trip() {
        for tag in [
            PhaseTag::Prune(1),
            PhaseTag::Prune(12),
            PhaseTag::Finalize,
            PhaseTag::ExtraFinalize,
            PhaseTag::Explore,
        ] {
            assert_eq!(tag.to_string().parse::<PhaseTag>().unwrap(), tag);
        }
        assert!("prune-0".parse::<PhaseTag>().is_err());
        assert!("finalise".parse::<PhaseTag>().is_err());
    }

    #[test]
    fn trace_lines_have_fixed_keys() {
        let r = RunResult::from_trace(
            [ArmId(0)].into(),
            vec![TraceEntry {
                i: ArmId(0),
                j: ArmId(3),
                winner: ArmId(0),
                phase: PhaseTag::Prune(2),
            }],
        );
        let mut buf = Vec::new();
        r.write_trace(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"i\":0,\"j\":3,\"winner\":0,\"phase\":\"prune-2\"}\n"
        );
    }
}
