use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ArmId, BordaEntry, BordaVector};

/// Win counts for one unordered pair `{low, high}` with `low < high`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub low_wins: u32,
    pub high_wins: u32,
}

impl PairCounts {
    pub fn total(&self) -> u32 {
        self.low_wins + self.high_wins
    }
}

/// Per-pair win counts. Pairs are unordered: `{i, j}` and `{j, i}` share a key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JudgmentTally {
    counts: BTreeMap<(ArmId, ArmId), PairCounts>,
    total: u64,
}

fn key(i: ArmId, j: ArmId) -> (ArmId, ArmId) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl JudgmentTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, winner: ArmId, loser: ArmId) {
        debug_assert_ne!(winner, loser);
        let k = key(winner, loser);
        let entry = self.counts.entry(k).or_default();
        if winner == k.0 {
            entry.low_wins += 1;
        } else {
            entry.high_wins += 1;
        }
        self.total += 1;
    }

    /// Total duels recorded across all pairs.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Times `winner` beat `loser`.
    pub fn wins(&self, winner: ArmId, loser: ArmId) -> u32 {
        let k = key(winner, loser);
        match self.counts.get(&k) {
            Some(c) if winner == k.0 => c.low_wins,
            Some(c) => c.high_wins,
            None => 0,
        }
    }

    /// Duels on the unordered pair `{i, j}`.
    pub fn pair_total(&self, i: ArmId, j: ArmId) -> u32 {
        self.counts.get(&key(i, j)).map_or(0, PairCounts::total)
    }

    /// Largest number of duels served on any single pair; 0 when empty.
    pub fn max_per_pair(&self) -> u32 {
        self.counts
            .values()
            .map(PairCounts::total)
            .max()
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ArmId, ArmId, PairCounts)> + '_ {
        self.counts.iter().map(|(&(a, b), &c)| (a, b, c))
    }

    pub fn merge(&mut self, other: &JudgmentTally) {
        for (a, b, c) in other.iter() {
            let entry = self.counts.entry((a, b)).or_default();
            entry.low_wins += c.low_wins;
            entry.high_wins += c.high_wins;
        }
        self.total += other.total;
    }

    /// Empirical Borda estimate: wins over pairings for every arm that has duelled.
    pub fn borda(&self) -> BordaVector {
        let mut acc: BTreeMap<ArmId, (u32, u32)> = BTreeMap::new();
        for (a, b, c) in self.iter() {
            let ea = acc.entry(a).or_default();
            ea.0 += c.low_wins;
            ea.1 += c.total();
            let eb = acc.entry(b).or_default();
            eb.0 += c.high_wins;
            eb.1 += c.total();
        }
        acc.into_iter()
            .map(|(arm, (wins, count))| (arm, BordaEntry::from_wins(wins, count)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tally() {
        let t = JudgmentTally::new();
        assert_eq!(t.max_per_pair(), 0);
        assert_eq!(t.total(), 0);
    }

    #[test]
    fn unordered_keys_and_max() {
        let mut t = JudgmentTally::new();
        for _ in 0..3 {
            t.record(ArmId(1), ArmId(0));
        }
        for w in 0..5 {
            if w % 2 == 0 {
                t.record(ArmId(0), ArmId(2));
            } else {
                t.record(ArmId(2), ArmId(0));
            }
        }
        assert_eq!(t.pair_total(ArmId(0), ArmId(1)), 3);
        assert_eq!(t.pair_total(ArmId(1), ArmId(0)), 3);
        assert_eq!(t.wins(ArmId(1), ArmId(0)), 3);
        assert_eq!(t.wins(ArmId(0), ArmId(2)), 3);
        assert_eq!(t.wins(ArmId(2), ArmId(0)), 2);
        assert_eq!(t.max_per_pair(), 5);
        assert_eq!(t.total(), 8);
    }

    #[test]
    fn merge_adds_counts() {
        let mut a = JudgmentTally::new();
        a.record(ArmId(0), ArmId(1));
        let mut b = JudgmentTally::new();
        b.record(ArmId(1), ArmId(0));
        b.record(ArmId(2), ArmId(1));
        a.merge(&b);
        assert_eq!(a.total(), 3);
        assert_eq!(a.pair_total(ArmId(0), ArmId(1)), 2);
        let borda = a.borda();
        assert_eq!(borda.score(ArmId(1)), Some(1.0 / 3.0));
        assert_eq!(borda.score(ArmId(2)), Some(1.0));
    }
}
