//! Audits a run: writes its duel trace as NDJSON, reads it back and replays
//! the logged judgments through prefBest with the same pairing seed.
//!
//! ```bash
//! cargo run -p prefbest --example replay_trace -- /tmp/trace.ndjson
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::sync::Arc;

use prefbest::algos::{pref_best, PrefBestParams, TraceEntry};
use prefbest::prefs::{arms, seeded_rng, OracleHandle, PreferenceMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map_or_else(
        || std::env::temp_dir().join("prefbest-trace.ndjson"),
        Into::into,
    );
    let matrix = Arc::new(PreferenceMatrix::case_b(100)?);
    let params = PrefBestParams::default();

    let mut live = OracleHandle::simulated(matrix, 5);
    let run = pref_best(&arms(100), &params, &mut live, &mut seeded_rng(6))?;
    let mut out = BufWriter::new(File::create(&path)?);
    run.write_trace(&mut out)?;
    out.flush()?;
    println!("wrote {} duels to {}", run.trace.len(), path.display());

    let mut records = Vec::new();
    for line in BufReader::new(File::open(&path)?).lines() {
        let e: TraceEntry = serde_json::from_str(&line?)?;
        records.push((e.i, e.j, e.winner));
    }
    let mut replay = OracleHandle::replay(records)?;
    let again = pref_best(&arms(100), &params, &mut replay, &mut seeded_rng(6))?;

    println!("live winners:   {:?}", run.winners);
    println!("replay winners: {:?}", again.winners);
    assert_eq!(run.trace, again.trace, "replay diverged");
    println!("traces identical");
    Ok(())
}
