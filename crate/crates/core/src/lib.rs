//! Finding the probably-best items in a pool through pairwise preference duels.
//!
//! The crate is organised by layer:
//!
//! - [`prefs`]: preference matrices, tallies, Borda/Copeland measures, oracles
//! - [`algos`]: prefBest and three budgeted dueling-bandit baselines
//! - [`sim`]: seeded Monte-Carlo batches and the summary table
//! - [`service`]: pools from graded qrels, live campaigns, the HTTP judging API
//! - [`cli`]: the `prefbest` command-line front end
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod algos;
pub mod cli;
pub mod error;
pub mod prefs;
pub mod service;
pub mod sim;

pub use error::{Error, Result};
