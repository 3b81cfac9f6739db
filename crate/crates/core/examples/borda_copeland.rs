//! Ground-truth measures of a preference matrix next to the estimates one
//! round robin of simulated judgments gives.
//!
//! ```bash
//! cargo run -p prefbest --example borda_copeland -- B 8
//! ```

use std::sync::Arc;

use prefbest::algos::complete_pairings;
use prefbest::prefs::{arms, OracleHandle, PreferenceMatrix};
use prefbest::sim::CaseSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let case: CaseSpec = args.next().unwrap_or_else(|| "A".into()).parse()?;
    let k: usize = args.next().map_or(Ok(8), |s| s.parse())?;
    let matrix: Arc<PreferenceMatrix> = Arc::new(case.matrix(k)?);

    let truth = matrix.borda_scores();
    println!("case {case}, K={k}");
    println!("copeland winners: {:?}", matrix.copeland_winners());
    println!("borda winners:    {:?}", truth.argmax());
    println!("SST violations:   {}", matrix.sst_violations().len());

    let mut oracle = OracleHandle::simulated(matrix.clone(), 7);
    for &(i, j) in complete_pairings(&arms(k))?.iter() {
        oracle.duel(i, j)?;
    }
    let estimate = oracle.tally().borda();
    println!("\narm  true borda  one round robin");
    for arm in arms(k) {
        println!(
            "{:>3}  {:>10.3}  {:>15.3}",
            arm.0,
            truth.score(arm).unwrap_or(f64::NAN),
            estimate.score(arm).unwrap_or(f64::NAN)
        );
    }
    println!("estimated winners: {:?}", estimate.argmax());
    Ok(())
}
