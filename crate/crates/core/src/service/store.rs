//! On-disk campaign directories.
//!
//! ```text
//! <dir>/config.json       creation parameters, pools and test bank
//! <dir>/state.json        snapshot, rewritten after every change
//! <dir>/judgments.ndjson  one accepted target judgment per line
//! <dir>/tasks.ndjson      issued / submitted / qc / advanced events
//! ```
//!
//! The two logs are the source of truth. Opening a directory replays them and
//! rewrites the snapshot.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::campaign::{
    AdvanceReport, Campaign, CampaignConfig, CampaignResults, EventSink, JudgmentRecord, LogEvent,
    QcReport, Side, SubmitOutcome, TaskEvent, TaskPayload,
};
use crate::error::{Error, Result};

pub const CONFIG_FILE: &str = "config.json";
pub const STATE_FILE: &str = "state.json";
pub const JUDGMENTS_FILE: &str = "judgments.ndjson";
pub const TASKS_FILE: &str = "tasks.ndjson";
pub const RESULTS_FILE: &str = "results.json";

struct Logs {
    judgments: File,
    tasks: File,
}

impl EventSink for Logs {
    fn append(&mut self, event: &LogEvent) -> Result<()> {
        let (file, mut line) = match event {
            LogEvent::Judgment(j) => (&mut self.judgments, serde_json::to_vec(j)?),
            LogEvent::Task(t) => (&mut self.tasks, serde_json::to_vec(t)?),
        };
        line.push(b'\n');
        // A single write per record keeps appends whole.
        file.write_all(&line)?;
        file.flush()?;
        Ok(())
    }
}

/// A campaign bound to its directory. Every change goes to the logs first.
pub struct CampaignStore {
    dir: PathBuf,
    campaign: Campaign,
    logs: Logs,
}

impl CampaignStore {
    /// Creates `dir` and writes the initial campaign into it.
    pub fn create(dir: impl AsRef<Path>, config: CampaignConfig) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        if dir.join(CONFIG_FILE).exists() {
            return Err(Error::Config(format!(
                "{} already holds a campaign",
                dir.display()
            )));
        }
        let campaign = Campaign::create(config)?;
        fs::create_dir_all(&dir)?;
        write_json_atomic(&dir.join(CONFIG_FILE), campaign.config())?;
        let logs = Logs {
            judgments: open_log(&dir.join(JUDGMENTS_FILE))?,
            tasks: open_log(&dir.join(TASKS_FILE))?,
        };
        let store = CampaignStore {
            dir,
            campaign,
            logs,
        };
        store.snapshot()?;
        Ok(store)
    }

    /// Opens an existing campaign directory by replaying its logs.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let config: CampaignConfig =
            serde_json::from_reader(BufReader::new(File::open(dir.join(CONFIG_FILE))?))?;
        let judgments: Vec<JudgmentRecord> = read_log(&dir.join(JUDGMENTS_FILE))?;
        let tasks: Vec<TaskEvent> = read_log(&dir.join(TASKS_FILE))?;
        let events = judgments
            .into_iter()
            .map(LogEvent::Judgment)
            .chain(tasks.into_iter().map(LogEvent::Task));
        let campaign = Campaign::replay(config, events)?;
        let logs = Logs {
            judgments: open_log(&dir.join(JUDGMENTS_FILE))?,
            tasks: open_log(&dir.join(TASKS_FILE))?,
        };
        let store = CampaignStore {
            dir,
            campaign,
            logs,
        };
        store.snapshot()?;
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn campaign(&self) -> &Campaign {
        &self.campaign
    }

    pub fn next_task(&mut self, worker: &str, now: u64) -> Result<Option<TaskPayload>> {
        let out = self.campaign.next_task(worker, now, &mut self.logs)?;
        if out.is_some() {
            self.snapshot()?;
        }
        Ok(out)
    }

    pub fn submit(&mut self, task_id: &str, choices: &[Side], now: u64) -> Result<SubmitOutcome> {
        let out = self
            .campaign
            .submit(task_id, choices, now, &mut self.logs)?;
        if matches!(out, SubmitOutcome::Accepted(_)) {
            self.snapshot()?;
        }
        Ok(out)
    }

    pub fn apply_worker_qc(&mut self, now: u64) -> Result<QcReport> {
        let out = self.campaign.apply_worker_qc(now, &mut self.logs)?;
        self.snapshot()?;
        Ok(out)
    }

    pub fn advance(&mut self, now: u64) -> Result<AdvanceReport> {
        let out = self.campaign.advance(now, &mut self.logs)?;
        self.snapshot()?;
        Ok(out)
    }

    pub fn results(&self) -> CampaignResults {
        self.campaign.results()
    }

    /// Writes `results.json` and the accepted judgment log into `out`.
    pub fn export(&self, out: impl AsRef<Path>) -> Result<CampaignResults> {
        export_campaign(&self.campaign, out.as_ref())
    }

    fn snapshot(&self) -> Result<()> {
        write_json_atomic(&self.dir.join(STATE_FILE), self.campaign.state())
    }
}

/// Writes `results.json` and `judgments.ndjson` (accepted judgments only).
pub fn export_campaign(campaign: &Campaign, out: &Path) -> Result<CampaignResults> {
    fs::create_dir_all(out)?;
    let results = campaign.results();
    write_json_atomic(&out.join(RESULTS_FILE), &results)?;
    let mut buf = Vec::new();
    for j in campaign.judgment_log() {
        serde_json::to_writer(&mut buf, &j)?;
        buf.push(b'\n');
    }
    write_atomic(&out.join(JUDGMENTS_FILE), &buf)?;
    Ok(results)
}

fn open_log(path: &Path) -> Result<File> {
    Ok(OpenOptions::new().create(true).append(true).open(path)?)
}

/// Reads an NDJSON log. Every record is written with its newline in one call,
/// so a final line without one is a torn append: it is dropped and the file
/// truncated.
fn read_log<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut line = String::new();
    let mut good_len = 0u64;
    let mut lineno = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        lineno += 1;
        if !line.ends_with('\n') {
            warn!("{}: dropping torn final record", path.display());
            OpenOptions::new()
                .write(true)
                .open(path)?
                .set_len(good_len)?;
            break;
        }
        good_len += n as u64;
        let body = line.trim();
        if !body.is_empty() {
            let v = serde_json::from_str(body)
                .map_err(|e| Error::CorruptLog(format!("{} line {lineno}: {e}", path.display())))?;
            out.push(v);
        }
    }
    Ok(out)
}

pub(crate) fn write_json_atomic<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    write_atomic(path, &buf)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
