use std::collections::{BTreeMap, BTreeSet};

use super::ArmId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BordaEntry {
    /// Mean win rate in `[0, 1]`.
    pub score: f64,
    /// Pairings the estimate is based on (`k - 1` for exact scores).
    pub count: u32,
}

impl BordaEntry {
    pub fn from_wins(wins: u32, count: u32) -> Self {
        debug_assert!(count > 0 && wins <= count);
        BordaEntry {
            score: f64::from(wins) / f64::from(count),
            count,
        }
    }
}

/// Borda scores per arm. Arms without pairings have no entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BordaVector {
    entries: BTreeMap<ArmId, BordaEntry>,
}

impl BordaVector {
    pub fn score(&self, arm: ArmId) -> Option<f64> {
        self.entries.get(&arm).map(|e| e.score)
    }

    pub fn get(&self, arm: ArmId) -> Option<&BordaEntry> {
        self.entries.get(&arm)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ArmId, &BordaEntry)> + '_ {
        self.entries.iter().map(|(&a, e)| (a, e))
    }

    /// Arms sharing the greatest score.
    pub fn argmax(&self) -> BTreeSet<ArmId> {
        let best = self
            .entries
            .values()
            .map(|e| e.score)
            .fold(f64::NEG_INFINITY, f64::max);
        self.entries
            .iter()
            .filter(|(_, e)| e.score == best)
            .map(|(&a, _)| a)
            .collect()
    }

    /// Unweighted mean of the scores; `None` when empty.
    pub fn mean(&self) -> Option<f64> {
        if self.entries.is_empty() {
            return None;
        }
        Some(self.entries.values().map(|e| e.score).sum::<f64>() / self.entries.len() as f64)
    }
}

impl FromIterator<(ArmId, BordaEntry)> for BordaVector {
    fn from_iter<I: IntoIterator<Item = (ArmId, BordaEntry)>>(iter: I) -> Self {
        BordaVector {
            entries: iter.into_iter().collect(),
        }
    }
}
