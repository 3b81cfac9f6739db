//! One prefBest run on a 100-item case: pool size per phase, the winner sets
//! of both finalization rounds, and judgment counts.
//!
//! ```bash
//! cargo run -p prefbest --example prefbest_run -- A 42
//! ```

use std::sync::Arc;

use prefbest::algos::{pref_best, PrefBestParams};
use prefbest::prefs::{arms, derive_seed, seeded_rng, OracleHandle};
use prefbest::sim::CaseSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let case: CaseSpec = args.next().unwrap_or_else(|| "A".into()).parse()?;
    let seed: u64 = args.next().map_or(Ok(42), |s| s.parse())?;
    let matrix = Arc::new(case.matrix(100)?);

    let mut oracle = OracleHandle::simulated(matrix.clone(), derive_seed(seed, 0));
    let mut rng = seeded_rng(derive_seed(seed, 1));
    let params = PrefBestParams::default();
    let run = pref_best(&arms(100), &params, &mut oracle, &mut rng)?;

    println!("case {case}, seed {seed}, n={} m={}", params.n, params.m);
    println!(
        "pool sizes: {:?} after {} pruning phases",
        run.pool_sizes, run.phases
    );
    if let Some(sets) = &run.final_sets {
        println!("set I:    {:?}", sets.set_one);
        println!("set II:   {:?}", sets.set_two);
        println!("combined: {:?}", sets.combined);
    }
    println!(
        "winners:  {:?} (true: {:?})",
        run.winners,
        case.true_winners(&matrix)
    );
    println!(
        "{} comparisons, at most {} on one pair",
        run.comparisons, run.max_per_pair
    );
    Ok(())
}
