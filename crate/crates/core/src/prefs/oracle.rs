use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::{seeded_rng, ArmId, JudgmentTally, PreferenceMatrix, RunRng};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    MatrixSimulated,
    ReplayLog,
    Scripted,
}

/// Anything that can decide a duel.
pub trait PreferenceSource: Send {
    fn prefer(&mut self, i: ArmId, j: ArmId) -> Result<ArmId>;
    fn kind(&self) -> OracleKind;
}

/// Independent draws from a ground-truth matrix.
pub struct MatrixSource {
    matrix: Arc<PreferenceMatrix>,
    rng: RunRng,
}

impl MatrixSource {
    pub fn new(matrix: Arc<PreferenceMatrix>, seed: u64) -> Self {
        MatrixSource {
            matrix,
            rng: seeded_rng(seed),
        }
    }
}

impl PreferenceSource for MatrixSource {
    fn prefer(&mut self, i: ArmId, j: ArmId) -> Result<ArmId> {
        let k = self.matrix.k();
        if i.0 >= k || j.0 >= k {
            return Err(Error::invalid(format!(
                "pair ({i}, {j}) out of range for k = {k}"
            )));
        }
        let p = self.matrix.prob(i, j);
        Ok(if self.rng.random::<f64>() < p { i } else { j })
    }

    fn kind(&self) -> OracleKind {
        OracleKind::MatrixSimulated
    }
}

/// Serves logged judgments in order, per unordered pair.
#[derive(Debug, Default)]
pub struct ReplaySource {
    log: HashMap<(ArmId, ArmId), VecDeque<ArmId>>,
}

impl ReplaySource {
    /// Records are `(a, b, winner)`; the order of `a` and `b` is irrelevant.
    pub fn new<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ArmId, ArmId, ArmId)>,
    {
        let mut log: HashMap<_, VecDeque<_>> = HashMap::new();
        for (a, b, w) in records {
            if a == b || (w != a && w != b) {
                return Err(Error::invalid(format!(
                    "logged judgment ({a}, {b}) has winner {w}"
                )));
            }
            log.entry(pair_key(a, b)).or_default().push_back(w);
        }
        Ok(ReplaySource { log })
    }

    pub fn remaining(&self) -> usize {
        self.log.values().map(VecDeque::len).sum()
    }
}

fn pair_key(a: ArmId, b: ArmId) -> (ArmId, ArmId) {
    (a.min(b), a.max(b))
}

impl PreferenceSource for ReplaySource {
    fn prefer(&mut self, i: ArmId, j: ArmId) -> Result<ArmId> {
        self.log
            .get_mut(&pair_key(i, j))
            .and_then(VecDeque::pop_front)
            .ok_or(Error::ExhaustedLog(i, j))
    }

    fn kind(&self) -> OracleKind {
        OracleKind::ReplayLog
    }
}

/// Closure-backed source, mostly for tests and scripted assessors.
pub struct ScriptedSource<F>(pub F);

impl<F> PreferenceSource for ScriptedSource<F>
where
    F: FnMut(ArmId, ArmId) -> ArmId + Send,
{
    fn prefer(&mut self, i: ArmId, j: ArmId) -> Result<ArmId> {
        let w = (self.0)(i, j);
        if w != i && w != j {
            return Err(Error::invalid(format!(
                "script returned {w} for duel ({i}, {j})"
            )));
        }
        Ok(w)
    }

    fn kind(&self) -> OracleKind {
        OracleKind::Scripted
    }
}

/// A preference source plus the tally of every duel it has served.
pub struct OracleHandle {
    source: Box<dyn PreferenceSource>,
    tally: JudgmentTally,
}

impl fmt::Debug for OracleHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleHandle")
            .field("kind", &self.source.kind())
            .field("served", &self.tally.total())
            .finish()
    }
}

impl OracleHandle {
    pub fn new(source: impl PreferenceSource + 'static) -> Self {
        OracleHandle {
            source: Box::new(source),
            tally: JudgmentTally::new(),
        }
    }

    pub fn simulated(matrix: Arc<PreferenceMatrix>, seed: u64) -> Self {
        Self::new(MatrixSource::new(matrix, seed))
    }

    pub fn replay<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ArmId, ArmId, ArmId)>,
    {
        Ok(Self::new(ReplaySource::new(records)?))
    }

    pub fn scripted<F>(f: F) -> Self
    where
        F: FnMut(ArmId, ArmId) -> ArmId + Send + 'static,
    {
        Self::new(ScriptedSource(f))
    }

    pub fn kind(&self) -> OracleKind {
        self.source.kind()
    }

    /// Runs one duel and records it. Self-duels are rejected.
    pub fn duel(&mut self, i: ArmId, j: ArmId) -> Result<ArmId> {
        if i == j {
            return Err(Error::invalid(format!("arm {i} cannot duel itself")));
        }
        let winner = self.source.prefer(i, j)?;
        let loser = if winner == i { j } else { i };
        self.tally.record(winner, loser);
        Ok(winner)
    }

    pub fn tally(&self) -> &JudgmentTally {
        &self.tally
    }

    pub fn into_tally(self) -> JudgmentTally {
        self.tally
    }
}
