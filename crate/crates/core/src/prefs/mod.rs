//! Core preference types: ground-truth matrices, judgment tallies, Borda and
//! Copeland measures, and the oracles that serve duels to the algorithms.

mod borda;
mod matrix;
mod oracle;
mod rng;
mod tally;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use borda::{BordaEntry, BordaVector};
pub use matrix::{PreferenceMatrix, SstViolation};
pub use oracle::{
    MatrixSource, OracleHandle, OracleKind, PreferenceSource, ReplaySource, ScriptedSource,
};
pub use rng::{derive_seed, seeded_rng, stable_hash, RunRng, RNG_ID};
pub use tally::{JudgmentTally, PairCounts};

/// Index of an item within a pool.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct ArmId(pub usize);

impl ArmId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for ArmId {
    fn from(value: usize) -> Self {
        ArmId(value)
    }
}

/// Arms `0..k` as a pool.
pub fn arms(k: usize) -> Vec<ArmId> {
    (0..k).map(ArmId).collect()
}
