//! Reproduces the simulation table: every algorithm on Case A and Case B,
//! 1,000 seeded runs each.
//!
//! ```bash
//! cargo run --release -p prefbest --example simulation_table -- 1000
//! ```

use std::time::Instant;

use prefbest::algos::{DtsParams, MergeDtsParams, PrefBestParams, ReParams};
use prefbest::sim::{render_table, run_batch, AlgoSpec, CaseSpec, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sims: u64 = std::env::args().nth(1).map_or(Ok(1000), |s| s.parse())?;
    let base = PrefBestParams {
        extra_final_phase: false,
        ..PrefBestParams::default()
    };
    let algos = [
        AlgoSpec::Dts(DtsParams::default()),
        AlgoSpec::MergeDts(MergeDtsParams::default()),
        AlgoSpec::RoundEfficient(ReParams::default()),
        AlgoSpec::PrefBest(base),
        AlgoSpec::PrefBest(PrefBestParams::default()),
    ];
    let mut rows = Vec::new();
    for algo in algos {
        for case in [CaseSpec::A, CaseSpec::B] {
            let started = Instant::now();
            let row = run_batch(&SimConfig {
                algo: algo.clone(),
                case,
                k: 100,
                sims,
                master_seed: 20220711,
            })?;
            eprintln!(
                "{:>15} case {}: {:>4} best, {:>4} ties, {:>5} wrong ({:.1?})",
                row.algo,
                row.case,
                row.best_found,
                row.tie_runs,
                row.wrong_items,
                started.elapsed()
            );
            rows.push(row);
        }
    }
    print!("{}", render_table(&rows));
    Ok(())
}
