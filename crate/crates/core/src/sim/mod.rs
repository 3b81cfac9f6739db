//! Seeded Monte-Carlo batches over the four algorithms and the summary table.

mod harness;
mod table;

pub use harness::{run_batch, run_one, AlgoSpec, CaseSpec, RunSpec, SimConfig, SummaryRow};
pub use table::{read_csv, render_table, write_csv};
