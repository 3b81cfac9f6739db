//! Builds a judging pool from graded qrels (whole tiers, best first, until the
//! threshold is met) and folds byte-identical passages together.
//!
//! ```bash
//! cargo run -p prefbest --example pool_and_dedup
//! ```

use std::collections::HashMap;

use prefbest::service::{build_judging_pool, read_passages, read_qrels, Passage};

const QRELS: &str = "\
q1\ta\t3
q1\tb\t3
q1\tc\t2
q1\td\t2
q1\te\t2
q1\tf\t1
q1\tg\t0
";

const PASSAGES: &str = "\
a\tBoil the pasta for nine minutes.
b\tCook pasta in salted boiling water for about nine minutes.
c\tBoil the pasta for nine minutes.
d\tDrain and toss with sauce.
e\tFresh pasta cooks in two to three minutes.
f\tPasta is made from durum wheat.
g\tRome is the capital of Italy.
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let qrels = read_qrels(QRELS.as_bytes())?;
    let passages: HashMap<String, Passage> = read_passages(PASSAGES.as_bytes())?;

    for threshold in [1, 2, 3, 5, 6] {
        let pool = build_judging_pool(
            &qrels,
            &passages,
            "q1",
            "how long to cook pasta?",
            threshold,
        )?;
        let ids: Vec<&str> = pool.members.iter().map(|p| p.id.as_str()).collect();
        println!("threshold {threshold}: {} passages {ids:?}", pool.len());
    }

    let pool = build_judging_pool(&qrels, &passages, "q1", "how long to cook pasta?", 5)?
        .with_duplicates_merged();
    println!("\nduplicate classes: {:?}", pool.equivalence_classes);
    println!("arms that will be judged: {:?}", pool.duel_arms());

    match build_judging_pool(&qrels, &passages, "q2", "unjudged query", 5) {
        Err(e) => println!("\nq2: {e}"),
        Ok(p) => println!("\nq2 unexpectedly has {} passages", p.len()),
    }
    Ok(())
}
