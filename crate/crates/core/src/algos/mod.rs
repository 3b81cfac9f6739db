//! Dueling-bandit algorithms. Every algorithm draws duels from an
//! [`OracleHandle`](crate::prefs::OracleHandle) and returns a [`RunResult`].

mod dts;
mod empirical;
mod merge_dts;
mod pairings;
mod posterior;
pub(crate) mod prefbest;
mod result;
mod round_efficient;

use serde::{Deserialize, Serialize};

pub use dts::dts;
pub use empirical::empirically_best;
pub use merge_dts::merge_dts;
pub use pairings::{complete_pairings, random_pairings, EdgeList};
pub use prefbest::{estimate_borda, finalize, pref_best, prune};
pub use result::{FinalSets, PhaseTag, RunResult, TraceEntry};
pub use round_efficient::round_efficient;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct PrefBestParams {
    /// Pairings per item in each pruning phase.
    pub n: usize,
    /// Pools at or below this size go straight to finalization.
    pub m: usize,
    /// Judge every final-pool pair a second time and merge the tallies.
    pub extra_final_phase: bool,
}

impl Default for PrefBestParams {
    fn default() -> Self {
        PrefBestParams {
            n: 7,
            m: 9,
            extra_final_phase: true,
        }
    }
}

impl PrefBestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid("prefBest needs n >= 1"));
        }
        if self.m < 2 {
            return Err(Error::invalid("prefBest needs m >= 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct DtsParams {
    pub alpha: f64,
    pub horizon: u64,
}

impl Default for DtsParams {
    fn default() -> Self {
        DtsParams {
            alpha: 0.8f64.powi(7),
            horizon: 1000,
        }
    }
}

impl DtsParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(Error::invalid("DTS needs alpha > 0"));
        }
        if self.horizon < 1 {
            return Err(Error::invalid("DTS needs horizon >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct MergeDtsParams {
    pub alpha: f64,
    pub batch_size: usize,
    pub exploration_constant: f64,
    pub horizon: u64,
}

impl Default for MergeDtsParams {
    fn default() -> Self {
        MergeDtsParams {
            alpha: 0.8f64.powi(6),
            batch_size: 16,
            exploration_constant: 4_000_000.0,
            horizon: 1000,
        }
    }
}

impl MergeDtsParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(Error::invalid("MergeDTS needs alpha > 0"));
        }
        if self.batch_size < 2 {
            return Err(Error::invalid("MergeDTS needs batch size >= 2"));
        }
        if self.exploration_constant.is_nan() || self.exploration_constant <= 1.0 {
            return Err(Error::invalid("MergeDTS needs exploration constant > 1"));
        }
        if self.horizon < 1 {
            return Err(Error::invalid("MergeDTS needs horizon >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct ReParams {
    pub error_probability: f64,
    pub budget: u64,
}

impl Default for ReParams {
    fn default() -> Self {
        ReParams {
            error_probability: 0.2,
            budget: 1000,
        }
    }
}

impl ReParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.error_probability > 0.0 && self.error_probability < 1.0) {
            return Err(Error::invalid("round-efficient needs 0 < delta < 1"));
        }
        if self.budget < 1 {
            return Err(Error::invalid("round-efficient needs budget >= 1"));
        }
        Ok(())
    }
}
