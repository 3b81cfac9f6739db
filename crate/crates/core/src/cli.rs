//! Command-line front end. [`dispatch`] parses arguments and returns the
//! process exit code: 0 on success, 1 on runtime errors, 2 on usage errors.
//!
//! Machine-readable output goes to standard output, diagnostics to standard
//! error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::{Map, Value};

use crate::algos::PrefBestParams;
use crate::error::{Error, Result};
use crate::service::{
    self, build_pools, read_id_text, read_passages, read_qrels, CampaignConfig, CampaignStore,
    Pool, TestPair, DEFAULT_LEASE_MS, DEFAULT_POOL_THRESHOLD, DEFAULT_TARGETS_PER_TASK,
};
use crate::sim::{self, render_table, run_batch, run_one, AlgoSpec, SimConfig};

#[derive(Debug, Parser)]
#[command(
    name = "prefbest",
    version,
    about = "Find the probably-best items of a pool with pairwise preference judgments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run seeded simulations of one algorithm on one case and write a CSV summary row.
    Simulate(SimulateArgs),
    /// Render the simulation table from one or more summary CSV files.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    /// Build judging pools from graded qrels and passages.
    PoolBuild(PoolBuildArgs),
    /// Group byte-identical passages of each pool into equivalence classes.
    Dedup {
        #[arg(long)]
        pools: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Create a campaign directory under `--dir`.
    CampaignCreate(CampaignCreateArgs),
    /// Serve every campaign under `--dir` over HTTP until interrupted.
    CampaignServe {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
    },
    /// Apply worker QC and move finished phases forward.
    CampaignAdvance {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        id: String,
    },
    /// Write winner sets and the accepted judgment log.
    CampaignExport {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Prefbest,
    PrefbestExtra,
    Dts,
    Mergedts,
    Re,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Prefbest => "prefbest",
            Algo::PrefbestExtra => "prefbest-extra",
            Algo::Dts => "dts",
            Algo::Mergedts => "mergedts",
            Algo::Re => "re",
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum, required_unless_present = "spec")]
    algo: Option<Algo>,
    /// `A`, `B`, or `file:<matrix.json>`.
    #[arg(long, default_value = "A")]
    case: String,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    sims: u64,
    #[arg(long, default_value_t = 20220711)]
    seed: u64,
    /// CSV output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// A JSON run spec (`algo`, `params`, `case`, `k`, `sims`, `seed`) used instead of the flags.
    #[arg(long, conflicts_with = "algo")]
    spec: Option<PathBuf>,
    /// Write the duel trace of run 0 as NDJSON.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// prefBest pairings per item and phase.
    #[arg(long)]
    n: Option<usize>,
    /// prefBest finalization threshold.
    #[arg(long)]
    m: Option<usize>,
    /// DTS / MergeDTS exploration scale.
    #[arg(long)]
    alpha: Option<f64>,
    /// Comparison budget of the budgeted algorithms.
    #[arg(long)]
    horizon: Option<u64>,
    /// MergeDTS batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// MergeDTS exploration constant.
    #[arg(long)]
    exploration_constant: Option<f64>,
    /// Round-Efficient error probability.
    #[arg(long)]
    delta: Option<f64>,
}

impl SimulateArgs {
    /// Parameter overrides as the JSON object the harness understands.
    fn params(&self, algo: Algo) -> Result<Value> {
        let mut obj = Map::new();
        let mut set = |flag: &str, key: &str, allowed: &[Algo], v: Option<Value>| -> Result<()> {
            if let Some(v) = v {
                if !allowed.contains(&algo) {
                    return Err(Error::invalid(format!(
                        "--{flag} does not apply to {}",
                        algo.name()
                    )));
                }
                obj.insert(key.to_string(), v);
            }
            Ok(())
        };
        let pb = [Algo::Prefbest, Algo::PrefbestExtra];
        set("n", "n", &pb, self.n.map(Value::from))?;
        set("m", "m", &pb, self.m.map(Value::from))?;
        set(
            "alpha",
            "alpha",
            &[Algo::Dts, Algo::Mergedts],
            self.alpha.map(Value::from),
        )?;
        let key = if algo == Algo::Re {
            "budget"
        } else {
            "horizon"
        };
        set(
            "horizon",
            key,
            &[Algo::Dts, Algo::Mergedts, Algo::Re],
            self.horizon.map(Value::from),
        )?;
        set(
            "batch-size",
            "batchSize",
            &[Algo::Mergedts],
            self.batch_size.map(Value::from),
        )?;
        set(
            "exploration-constant",
            "explorationConstant",
            &[Algo::Mergedts],
            self.exploration_constant.map(Value::from),
        )?;
        set(
            "delta",
            "errorProbability",
            &[Algo::Re],
            self.delta.map(Value::from),
        )?;
        Ok(Value::Object(obj))
    }

    fn config(&self) -> Result<SimConfig> {
        if let Some(path) = &self.spec {
            let spec: sim::RunSpec = serde_json::from_reader(BufReader::new(File::open(path)?))?;
            return SimConfig::try_from(spec);
        }
        let algo = self.algo.expect("clap requires --algo without --spec");
        Ok(SimConfig {
            algo: AlgoSpec::from_name(algo.name(), &self.params(algo)?)?,
            case: self.case.parse()?,
            k: self.k,
            sims: self.sims,
            master_seed: self.seed,
        })
    }
}

#[derive(Debug, Args)]
struct PoolBuildArgs {
    /// `queryId<TAB>passageId<TAB>grade`
    #[arg(long)]
    qrels: PathBuf,
    /// `passageId<TAB>text`
    #[arg(long)]
    passages: PathBuf,
    /// `queryId<TAB>text`; defaults to every query in the qrels, with the id as text.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_POOL_THRESHOLD)]
    threshold: usize,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CampaignCreateArgs {
    /// Root directory; the campaign lives in `<dir>/<id>`.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    id: String,
    /// Pools JSON from `pool-build` or `dedup`.
    #[arg(long)]
    pools: PathBuf,
    /// JSON list of `{question, bestKnownAnswer, offTopic}`.
    #[arg(long)]
    test_bank: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 7)]
    n: usize,
    #[arg(long, default_value_t = 9)]
    m: usize,
    /// Skip the second round over the final pool.
    #[arg(long)]
    no_extra_final: bool,
    /// Judge byte-identical passages separately.
    #[arg(long)]
    no_merge_duplicates: bool,
    #[arg(long, default_value_t = DEFAULT_LEASE_MS / 60_000)]
    lease_minutes: u64,
    #[arg(long, default_value_t = DEFAULT_TARGETS_PER_TASK)]
    targets_per_task: usize,
}

/// Parses `args` (including the program name) and runs the command.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    // A tuning flag given to the wrong algorithm is a usage error.
    if let Command::Simulate(args) = &cli.command {
        if let Some(Err(e)) = args.algo.map(|a| args.params(a)) {
            eprintln!("error: {e}");
            return 2;
        }
    }
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(&args),
        Command::Report { csv } => {
            let mut rows = Vec::new();
            for path in &csv {
                let mut part = sim::read_csv(File::open(path)?)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                rows.append(&mut part);
            }
            print!("{}", render_table(&rows));
            Ok(())
        }
        Command::PoolBuild(args) => pool_build(&args),
        Command::Dedup { pools, out } => {
            let pools: Vec<Pool> = read_json(&pools)?;
            let merged: Vec<Pool> = pools
                .into_iter()
                .map(Pool::with_duplicates_merged)
                .collect();
            for p in &merged {
                let classes = p.equivalence_classes.as_deref().unwrap_or_default();
                let dupes = classes.iter().filter(|c| c.len() > 1).count();
                if dupes > 0 {
                    info!(
                        "{}: {} passages, {} distinct, {dupes} duplicate classes",
                        p.query_id,
                        p.len(),
                        classes.len()
                    );
                }
            }
            write_json(out.as_deref(), &merged)
        }
        Command::CampaignCreate(args) => campaign_create(args),
        Command::CampaignServe { dir, listen } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::http::serve(dir, &listen))
        }
        Command::CampaignAdvance { dir, id } => {
            let mut store = CampaignStore::open(dir.join(&id))?;
            let report = store.advance(now_ms())?;
            write_json(None, &report)
        }
        Command::CampaignExport { dir, id, out } => {
            let store = CampaignStore::open(dir.join(&id))?;
            let results = store.export(&out)?;
            write_json(None, &results.summary)
        }
    }
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let config = args.config()?;
    let row = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run_batch(&config))?,
        None => run_batch(&config)?,
    };
    info!(
        "{} case {}: {} of {} runs found a true winner",
        row.algo, row.case, row.best_found, row.sims
    );
    if let Some(path) = &args.trace {
        let matrix = std::sync::Arc::new(config.case.matrix(config.k)?);
        let result = run_one(&config, &matrix, 0)?;
        let mut w = BufWriter::new(File::create(path)?);
        result.write_trace(&mut w)?;
        w.flush()?;
    }
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            sim::write_csv(std::slice::from_ref(&row), &mut w)?;
            w.flush()?;
            print!("{}", render_table(std::slice::from_ref(&row)));
        }
        None => sim::write_csv(std::slice::from_ref(&row), io::stdout().lock())?,
    }
    Ok(())
}

fn pool_build(args: &PoolBuildArgs) -> Result<()> {
    let qrels = read_qrels(File::open(&args.qrels)?)?;
    let passages = read_passages(File::open(&args.passages)?)?;
    let queries: BTreeMap<String, String> = match &args.queries {
        Some(path) => read_id_text(File::open(path)?)?,
        None => qrels
            .iter()
            .map(|q| (q.query_id.clone(), q.query_id.clone()))
            .collect(),
    };
    let (pools, skipped) = build_pools(&qrels, &passages, &queries, args.threshold)?;
    for q in &skipped {
        eprintln!("skipping query {q}: no relevant passages");
    }
    write_json(args.out.as_deref(), &pools)
}

fn campaign_create(args: CampaignCreateArgs) -> Result<()> {
    let pools: Vec<Pool> = read_json(&args.pools)?;
    let test_bank: Vec<TestPair> = read_json(&args.test_bank)?;
    let config = CampaignConfig {
        id: args.id.clone(),
        params: PrefBestParams {
            n: args.n,
            m: args.m,
            extra_final_phase: !args.no_extra_final,
        },
        seed: args.seed,
        lease_timeout_ms: args.lease_minutes.saturating_mul(60_000),
        merge_duplicates: !args.no_merge_duplicates,
        targets_per_task: args.targets_per_task,
        pools,
        test_bank,
    };
    let store = CampaignStore::create(args.dir.join(&args.id), config)?;
    write_json(None, &store.campaign().status())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn write_json<T: serde::Serialize + ?Sized>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn now_ms() -> u64 {
    (service::http::system_clock())()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(dispatch(["prefbest", "simulate", "--algo", "bogus"]), 2);
        assert_eq!(dispatch(["prefbest", "frobnicate"]), 2);
        assert_eq!(
            dispatch(["prefbest", "simulate", "--algo", "dts", "--sims", "x"]),
            2
        );
    }

    #[test]
    fn flags_only_apply_to_their_algorithm() {
        let args = SimulateArgs::try_parse_from_simulate(&["--algo", "dts", "--n", "5"]);
        assert!(args.config().is_err());
        assert_eq!(
            dispatch(["prefbest", "simulate", "--algo", "dts", "--n", "5"]),
            2
        );
        let args = SimulateArgs::try_parse_from_simulate(&[
            "--algo",
            "re",
            "--horizon",
            "50",
            "--delta",
            "0.1",
        ]);
        assert_eq!(
            args.params(Algo::Re).unwrap(),
            json!({"budget": 50, "errorProbability": 0.1})
        );
    }

    impl SimulateArgs {
        fn try_parse_from_simulate(flags: &[&str]) -> SimulateArgs {
            let argv = ["prefbest", "simulate"].iter().chain(flags);
            match Cli::try_parse_from(argv).unwrap().command {
                Command::Simulate(a) => a,
                other => panic!("parsed {other:?}"),
            }
        }
    }

    #[test]
    fn runtime_errors_exit_1() {
        assert_eq!(dispatch(["prefbest", "report", "/nonexistent/rows.csv"]), 1);
        assert_eq!(
            dispatch(["prefbest", "simulate", "--algo", "dts", "--case", "C", "--sims", "1"]),
            1
        );
    }
}
