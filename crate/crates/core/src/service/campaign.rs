//! Campaign state for running prefBest with human assessors.
//!
//! Every change to a campaign is an event: a judgment record or a task
//! event. Operations first plan their events against the current state, hand
//! them to an [`EventSink`] (the on-disk logs), and only then apply them. So
//! replaying the logs through [`Campaign::replay`] rebuilds the same state.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pool::{detect_duplicates, Passage, Pool};
use crate::algos::prefbest::survivors;
use crate::algos::{complete_pairings, random_pairings, PhaseTag, PrefBestParams};
use crate::error::{Error, Result};
use crate::prefs::{derive_seed, seeded_rng, stable_hash, ArmId, JudgmentTally, RunRng};

pub const TEST_PAIRS_PER_TASK: usize = 3;
pub const DEFAULT_TARGETS_PER_TASK: usize = 10;
pub const DEFAULT_LEASE_MS: u64 = 60 * 60 * 1000;

/// A worker stays eligible while `correct / seen >= 3/4`.
fn below_threshold(correct: u32, seen: u32) -> bool {
    seen > 0 && 4 * correct < 3 * seen
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// A quality-control item: the best-known answer must beat the off-topic one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestPair {
    pub question: String,
    pub best_known_answer: Passage,
    pub off_topic: Passage,
}

fn default_lease() -> u64 {
    DEFAULT_LEASE_MS
}
fn default_targets() -> usize {
    DEFAULT_TARGETS_PER_TASK
}
fn yes() -> bool {
    true
}

/// Everything needed to start a campaign. Stored as `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignConfig {
    pub id: String,
    #[serde(default)]
    pub params: PrefBestParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_lease")]
    pub lease_timeout_ms: u64,
    /// Judge one representative per set of byte-identical passages.
    #[serde(default = "yes")]
    pub merge_duplicates: bool,
    #[serde(default = "default_targets")]
    pub targets_per_task: usize,
    pub pools: Vec<Pool>,
    pub test_bank: Vec<TestPair>,
}

impl CampaignConfig {
    pub fn new(id: impl Into<String>, pools: Vec<Pool>, test_bank: Vec<TestPair>) -> Self {
        CampaignConfig {
            id: id.into(),
            params: PrefBestParams::default(),
            seed: 0,
            lease_timeout_ms: DEFAULT_LEASE_MS,
            merge_duplicates: true,
            targets_per_task: DEFAULT_TARGETS_PER_TASK,
            pools,
            test_bank,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_id = !self.id.is_empty()
            && self
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !ok_id {
            return Err(Error::Config(format!(
                "campaign id `{}` must be nonempty ASCII letters, digits, `-` or `_`",
                self.id
            )));
        }
        self.params.validate()?;
        if self.test_bank.is_empty() {
            return Err(Error::Config("the test-pair bank is empty".into()));
        }
        if self.targets_per_task == 0 {
            return Err(Error::Config("targetsPerTask must be at least 1".into()));
        }
        if self.lease_timeout_ms == 0 {
            return Err(Error::Config("leaseTimeoutMs must be positive".into()));
        }
        let mut seen = HashSet::new();
        for pool in &self.pools {
            if !seen.insert(pool.query_id.as_str()) {
                return Err(Error::Config(format!(
                    "query {} has two pools",
                    pool.query_id
                )));
            }
            if pool.is_empty() {
                return Err(Error::EmptyPool(pool.query_id.clone()));
            }
            let mut ids = HashSet::new();
            if let Some(p) = pool.members.iter().find(|p| !ids.insert(p.id.as_str())) {
                return Err(Error::Config(format!(
                    "passage {} appears twice in the pool of {}",
                    p.id, pool.query_id
                )));
            }
        }
        Ok(())
    }
}

/// Where a query stands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Judging(PhaseTag),
    Done,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Judging(p) => p.fmt(f),
            Stage::Done => f.write_str("done"),
        }
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "done" => Ok(Stage::Done),
            _ => s.parse().map(Stage::Judging),
        }
    }
}

impl Serialize for Stage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Stage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// One line of `judgments.ndjson`. `a`, `b` and `leftWas` are passage ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JudgmentRecord {
    pub seq: u64,
    pub ts: u64,
    pub campaign: String,
    pub query: String,
    pub phase: PhaseTag,
    pub a: String,
    pub b: String,
    pub left_was: String,
    pub worker: String,
    pub choice: Side,
}

impl JudgmentRecord {
    /// Passage id of the preferred side.
    pub fn winner(&self) -> &str {
        let right = if self.left_was == self.a {
            &self.b
        } else {
            &self.a
        };
        match self.choice {
            Side::Left => &self.left_was,
            Side::Right => right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Lease {
    pub task_id: String,
    pub expires_at: u64,
}

/// A pending duel of the current phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Slot {
    pub a: ArmId,
    pub b: ArmId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lease: Option<Lease>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgment: Option<JudgmentRecord>,
}

impl Slot {
    fn open(a: ArmId, b: ArmId) -> Self {
        Slot {
            a,
            b,
            lease: None,
            judgment: None,
        }
    }

    fn available(&self, now: u64) -> bool {
        self.judgment.is_none() && self.lease.as_ref().is_none_or(|l| l.expires_at <= now)
    }

    fn matches(&self, x: ArmId, y: ArmId) -> bool {
        (self.a, self.b) == (x, y) || (self.a, self.b) == (y, x)
    }
}

/// A completed phase with the judgments it was decided on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PhaseRecord {
    pub phase: PhaseTag,
    pub pool: Vec<ArmId>,
    pub judgments: Vec<JudgmentRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryState {
    pub query_id: String,
    pub stage: Stage,
    /// Surviving duel arms.
    pub pool: Vec<ArmId>,
    pub slots: Vec<Slot>,
    pub history: Vec<PhaseRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_one: Option<Vec<ArmId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_two: Option<Vec<ArmId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combined: Option<Vec<ArmId>>,
}

impl QueryState {
    pub fn pending(&self) -> usize {
        self.slots.iter().filter(|s| s.judgment.is_none()).count()
    }

    fn phase(&self) -> Option<PhaseTag> {
        match self.stage {
            Stage::Judging(p) => Some(p),
            Stage::Done => None,
        }
    }

    fn tally(&self, pos: &HashMap<String, ArmId>) -> JudgmentTally {
        let mut t = JudgmentTally::new();
        for s in &self.slots {
            if let Some(j) = &s.judgment {
                let w = pos[j.winner()];
                t.record(w, if w == s.a { s.b } else { s.a });
            }
        }
        t
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorkerRecord {
    pub worker_id: String,
    pub test_seen: u32,
    pub test_correct: u32,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ItemKind {
    Target {
        query: String,
        phase: PhaseTag,
        a: ArmId,
        b: ArmId,
    },
    #[serde(rename_all = "camelCase")]
    Test { bank_index: usize, correct: Side },
}

/// One pair of a task with its fixed placement. `left` and `right` are passage ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskItem {
    #[serde(flatten)]
    pub kind: ItemKind,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubmissionReport {
    pub task_id: String,
    pub worker: String,
    pub targets_recorded: usize,
    pub tests_correct: u32,
    pub tests_seen: u32,
    pub worker_test_correct: u32,
    pub worker_test_seen: u32,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum TaskStatus {
    Leased,
    Submitted { report: SubmissionReport },
    Expired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskRecord {
    pub task_id: String,
    pub worker: String,
    pub issued_at: u64,
    pub expires_at: u64,
    pub items: Vec<TaskItem>,
    #[serde(flatten)]
    pub status: TaskStatus,
}

/// One line of `tasks.ndjson`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "camelCase")]
pub enum TaskEvent {
    Issued {
        seq: u64,
        ts: u64,
        task: TaskRecord,
    },
    #[serde(rename_all = "camelCase")]
    Submitted {
        seq: u64,
        ts: u64,
        task_id: String,
        choices: Vec<Side>,
    },
    Qc {
        seq: u64,
        ts: u64,
    },
    Advanced {
        seq: u64,
        ts: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogEvent {
    Judgment(JudgmentRecord),
    Task(TaskEvent),
}

impl LogEvent {
    pub fn seq(&self) -> u64 {
        match self {
            LogEvent::Judgment(j) => j.seq,
            LogEvent::Task(
                TaskEvent::Issued { seq, .. }
                | TaskEvent::Submitted { seq, .. }
                | TaskEvent::Qc { seq, .. }
                | TaskEvent::Advanced { seq, .. },
            ) => *seq,
        }
    }
}

/// Receives events before they are applied.
pub trait EventSink {
    fn append(&mut self, event: &LogEvent) -> Result<()>;
}

/// Discards events, for campaigns that live only in memory.
impl EventSink for () {
    fn append(&mut self, _: &LogEvent) -> Result<()> {
        Ok(())
    }
}

impl EventSink for Vec<LogEvent> {
    fn append(&mut self, event: &LogEvent) -> Result<()> {
        self.push(event.clone());
        Ok(())
    }
}

/// What a worker sees: no ids, and nothing that tells test pairs apart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskPayload {
    pub task_id: String,
    pub expires_at: u64,
    pub items: Vec<TaskItemView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskItemView {
    pub question_text: String,
    pub left_text: String,
    pub right_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubmitOutcome {
    Accepted(SubmissionReport),
    /// The task was already submitted; this is the original report.
    Duplicate(SubmissionReport),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QcReport {
    /// Excluded workers whose judgments this pass voided.
    pub excluded: Vec<String>,
    /// Pairs returned to the queue because their judgment was voided.
    pub requeued: usize,
}

impl QcReport {
    pub fn is_empty(&self) -> bool {
        self.excluded.is_empty() && self.requeued == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transition {
    pub query: String,
    pub from: Stage,
    pub to: Stage,
    pub pool_size: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdvanceReport {
    pub qc: QcReport,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Applied {
    Judgment,
    Issued,
    Submitted(SubmissionReport),
    Qc(QcReport),
    Advanced(AdvanceReport),
}

/// The replayable part of a campaign, stored as `state.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignState {
    pub campaign: String,
    pub queries: Vec<QueryState>,
    pub workers: BTreeMap<String, WorkerRecord>,
    pub tasks: BTreeMap<String, TaskRecord>,
    pub last_seq: u64,
    pub tasks_issued: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryResult {
    pub query_id: String,
    /// `done`, or `partial` while judging continues.
    pub status: String,
    pub stage: Stage,
    pub set_one: Vec<String>,
    pub set_two: Vec<String>,
    pub combined: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportSummary {
    pub queries: usize,
    pub done: usize,
    pub total_judgments: usize,
    pub extra_phase_judgments: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignResults {
    pub campaign: String,
    pub summary: ExportSummary,
    pub queries: Vec<QueryResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryStatus {
    pub query_id: String,
    pub stage: Stage,
    pub pool_size: usize,
    pub slots: usize,
    pub pending: usize,
    pub leased: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignStatus {
    pub id: String,
    pub queries: Vec<QueryStatus>,
    pub workers: usize,
    pub excluded_workers: Vec<String>,
    pub tasks_issued: u64,
    pub judgments: usize,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    config: CampaignConfig,
    state: CampaignState,
    /// Per query: passage id to arm.
    positions: Vec<HashMap<String, ArmId>>,
    query_index: HashMap<String, usize>,
}

impl Campaign {
    /// Builds the initial state: pools larger than `m` start pruning, the
    /// rest go straight to the round robin, single passages are done.
    pub fn create(mut config: CampaignConfig) -> Result<Self> {
        config.validate()?;
        if config.merge_duplicates {
            for pool in &mut config.pools {
                if pool.equivalence_classes.is_none() {
                    pool.equivalence_classes = Some(detect_duplicates(&pool.members));
                }
            }
        }
        let positions = config
            .pools
            .iter()
            .map(|p| {
                p.members
                    .iter()
                    .enumerate()
                    .map(|(i, m)| (m.id.clone(), ArmId(i)))
                    .collect()
            })
            .collect();
        let query_index = config
            .pools
            .iter()
            .enumerate()
            .map(|(i, p)| (p.query_id.clone(), i))
            .collect();
        let mut queries = Vec::with_capacity(config.pools.len());
        for pool in &config.pools {
            let arms = pool.duel_arms();
            let mut q = QueryState {
                query_id: pool.query_id.clone(),
                stage: Stage::Done,
                pool: arms.clone(),
                slots: Vec::new(),
                history: Vec::new(),
                set_one: None,
                set_two: None,
                combined: None,
            };
            let mut rng = phase_rng(&config, &pool.query_id, 0);
            if arms.len() == 1 {
                q.set_one = Some(arms.clone());
                q.set_two = Some(arms.clone());
                q.combined = Some(arms);
            } else if arms.len() > config.params.m {
                q.stage = Stage::Judging(PhaseTag::Prune(1));
                q.slots = slots(random_pairings(&arms, config.params.n, &mut rng)?);
            } else {
                q.stage = Stage::Judging(PhaseTag::Finalize);
                q.slots = slots(complete_pairings(&arms)?);
            }
            queries.push(q);
        }
        let state = CampaignState {
            campaign: config.id.clone(),
            queries,
            workers: BTreeMap::new(),
            tasks: BTreeMap::new(),
            last_seq: 0,
            tasks_issued: 0,
        };
        Ok(Campaign {
            config,
            state,
            positions,
            query_index,
        })
    }

    /// Rebuilds a campaign from its configuration and logged events.
    pub fn replay(
        config: CampaignConfig,
        events: impl IntoIterator<Item = LogEvent>,
    ) -> Result<Self> {
        let mut c = Campaign::create(config)?;
        let mut events: Vec<LogEvent> = events.into_iter().collect();
        events.sort_by_key(LogEvent::seq);
        for ev in &events {
            c.apply(ev)?;
        }
        Ok(c)
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.config
    }

    pub fn state(&self) -> &CampaignState {
        &self.state
    }

    pub fn pool(&self, query: &str) -> Option<&Pool> {
        self.query_index.get(query).map(|&i| &self.config.pools[i])
    }

    pub fn query(&self, query: &str) -> Option<&QueryState> {
        self.query_index.get(query).map(|&i| &self.state.queries[i])
    }

    pub fn task(&self, task_id: &str) -> Option<&TaskRecord> {
        self.state.tasks.get(task_id)
    }

    pub fn worker(&self, worker: &str) -> Option<&WorkerRecord> {
        self.state.workers.get(worker)
    }

    pub fn is_done(&self) -> bool {
        self.state.queries.iter().all(|q| q.stage == Stage::Done)
    }

    /// Leases up to `targetsPerTask` open pairs (across queries) plus three
    /// test pairs to `worker`. Returns `None` when nothing is left for them.
    pub fn next_task(
        &mut self,
        worker: &str,
        now: u64,
        sink: &mut dyn EventSink,
    ) -> Result<Option<TaskPayload>> {
        let Some(ev) = self.plan_next_task(worker, now)? else {
            return Ok(None);
        };
        let LogEvent::Task(TaskEvent::Issued { task, .. }) = &ev else {
            unreachable!("planned an issue event");
        };
        let task_id = task.task_id.clone();
        self.commit(vec![ev], sink)?;
        Ok(Some(self.payload(&task_id)?))
    }

    fn plan_next_task(&self, worker: &str, now: u64) -> Result<Option<LogEvent>> {
        if worker.is_empty() {
            return Err(Error::invalid("worker id is empty"));
        }
        if let Some(w) = self.state.workers.get(worker).filter(|w| w.excluded) {
            return Err(Error::WorkerExcluded {
                worker: worker.to_string(),
                reason: format!(
                    "answered {} of {} test pairs correctly; at least 75% is required",
                    w.test_correct, w.test_seen
                ),
            });
        }
        // A worker never sees the same pair of a query twice.
        let judged = self.judged_by(worker);
        let mut open = Vec::new();
        for (qi, q) in self.state.queries.iter().enumerate() {
            for (si, s) in q.slots.iter().enumerate() {
                if s.available(now) && !judged.contains(&(qi, s.a.min(s.b), s.a.max(s.b))) {
                    open.push((qi, si));
                }
            }
        }
        if open.is_empty() {
            return Ok(None);
        }

        let mut rng = self.task_rng();
        let picked: Vec<(usize, usize)> = open
            .choose_multiple(&mut rng, self.config.targets_per_task)
            .copied()
            .collect();
        let bank = &self.config.test_bank;
        let tests: Vec<usize> = if bank.len() >= TEST_PAIRS_PER_TASK {
            rand::seq::index::sample(&mut rng, bank.len(), TEST_PAIRS_PER_TASK).into_vec()
        } else {
            (0..TEST_PAIRS_PER_TASK)
                .map(|_| rng.random_range(0..bank.len()))
                .collect()
        };

        let mut items = Vec::with_capacity(picked.len() + tests.len());
        for &(qi, si) in &picked {
            let q = &self.state.queries[qi];
            let s = &q.slots[si];
            let pool = &self.config.pools[qi];
            items.push(TaskItem {
                kind: ItemKind::Target {
                    query: q.query_id.clone(),
                    phase: q.phase().expect("open slots belong to a judging query"),
                    a: s.a,
                    b: s.b,
                },
                left: pool.passage(s.a).id.clone(),
                right: pool.passage(s.b).id.clone(),
            });
        }
        for &t in &tests {
            let tp = &bank[t];
            items.push(TaskItem {
                kind: ItemKind::Test {
                    bank_index: t,
                    correct: Side::Left,
                },
                left: tp.best_known_answer.id.clone(),
                right: tp.off_topic.id.clone(),
            });
        }
        items.shuffle(&mut rng);
        for item in &mut items {
            if rng.random::<bool>() {
                std::mem::swap(&mut item.left, &mut item.right);
                if let ItemKind::Test { correct, .. } = &mut item.kind {
                    *correct = Side::Right;
                }
            }
        }

        let task = TaskRecord {
            task_id: format!("{}.{}", self.config.id, self.state.tasks_issued + 1),
            worker: worker.to_string(),
            issued_at: now,
            expires_at: now.saturating_add(self.config.lease_timeout_ms),
            items,
            status: TaskStatus::Leased,
        };
        Ok(Some(LogEvent::Task(TaskEvent::Issued {
            seq: self.state.last_seq + 1,
            ts: now,
            task,
        })))
    }

    fn judged_by(&self, worker: &str) -> HashSet<(usize, ArmId, ArmId)> {
        let mut out = HashSet::new();
        for (qi, q) in self.state.queries.iter().enumerate() {
            let pos = &self.positions[qi];
            let current = q.slots.iter().filter_map(|s| s.judgment.as_ref());
            let past = q.history.iter().flat_map(|h| h.judgments.iter());
            for j in current.chain(past).filter(|j| j.worker == worker) {
                let (a, b) = (pos[&j.a], pos[&j.b]);
                out.insert((qi, a.min(b), a.max(b)));
            }
        }
        out
    }

    fn task_rng(&self) -> RunRng {
        let base = derive_seed(self.config.seed, stable_hash(b"tasks"));
        seeded_rng(derive_seed(base, self.state.tasks_issued))
    }

    /// The worker-facing view of a task.
    pub fn payload(&self, task_id: &str) -> Result<TaskPayload> {
        let task = self
            .state
            .tasks
            .get(task_id)
            .ok_or_else(|| not_found("task", task_id))?;
        let items = task
            .items
            .iter()
            .map(|item| match &item.kind {
                ItemKind::Target { query, .. } => {
                    let qi = self.query_index[query];
                    let pool = &self.config.pools[qi];
                    let text = |id: &str| pool.passage(self.positions[qi][id]).text.clone();
                    TaskItemView {
                        question_text: pool.query_text.clone(),
                        left_text: text(&item.left),
                        right_text: text(&item.right),
                    }
                }
                ItemKind::Test {
                    bank_index,
                    correct,
                } => {
                    let tp = &self.config.test_bank[*bank_index];
                    let (l, r) = match correct {
                        Side::Left => (&tp.best_known_answer, &tp.off_topic),
                        Side::Right => (&tp.off_topic, &tp.best_known_answer),
                    };
                    TaskItemView {
                        question_text: tp.question.clone(),
                        left_text: l.text.clone(),
                        right_text: r.text.clone(),
                    }
                }
            })
            .collect();
        Ok(TaskPayload {
            task_id: task.task_id.clone(),
            expires_at: task.expires_at,
            items,
        })
    }

    /// Records a worker's choices, one per item in task order.
    pub fn submit(
        &mut self,
        task_id: &str,
        choices: &[Side],
        now: u64,
        sink: &mut dyn EventSink,
    ) -> Result<SubmitOutcome> {
        let task = self
            .state
            .tasks
            .get(task_id)
            .ok_or_else(|| not_found("task", task_id))?;
        match &task.status {
            TaskStatus::Submitted { report } => {
                return Ok(SubmitOutcome::Duplicate(report.clone()))
            }
            TaskStatus::Expired => {
                return Err(Error::Rejected(format!("lease on {task_id} expired")))
            }
            TaskStatus::Leased if now >= task.expires_at => {
                return Err(Error::Rejected(format!("lease on {task_id} expired")))
            }
            TaskStatus::Leased => {}
        }
        if choices.len() != task.items.len() {
            return Err(Error::Rejected(format!(
                "task {task_id} has {} items but {} choices were sent",
                task.items.len(),
                choices.len()
            )));
        }
        let mut seq = self.state.last_seq;
        let mut events = Vec::new();
        for (item, &choice) in task.items.iter().zip(choices) {
            if let ItemKind::Target { query, phase, a, b } = &item.kind {
                let pool = &self.config.pools[self.query_index[query]];
                seq += 1;
                events.push(LogEvent::Judgment(JudgmentRecord {
                    seq,
                    ts: now,
                    campaign: self.config.id.clone(),
                    query: query.clone(),
                    phase: *phase,
                    a: pool.passage(*a).id.clone(),
                    b: pool.passage(*b).id.clone(),
                    left_was: item.left.clone(),
                    worker: task.worker.clone(),
                    choice,
                }));
            }
        }
        events.push(LogEvent::Task(TaskEvent::Submitted {
            seq: seq + 1,
            ts: now,
            task_id: task_id.to_string(),
            choices: choices.to_vec(),
        }));
        match self.commit(events, sink)?.pop() {
            Some(Applied::Submitted(report)) => Ok(SubmitOutcome::Accepted(report)),
            _ => unreachable!("the last event is the submission"),
        }
    }

    /// Excludes workers below the 75% test-pair rate and voids their judgments
    /// in phases that are still open.
    pub fn apply_worker_qc(&mut self, now: u64, sink: &mut dyn EventSink) -> Result<QcReport> {
        let ev = LogEvent::Task(TaskEvent::Qc {
            seq: self.state.last_seq + 1,
            ts: now,
        });
        match self.commit(vec![ev], sink)?.pop() {
            Some(Applied::Qc(r)) => Ok(r),
            _ => unreachable!("qc event yields a qc report"),
        }
    }

    /// Runs QC, then moves every query whose pairs are all judged to its next phase.
    pub fn advance(&mut self, now: u64, sink: &mut dyn EventSink) -> Result<AdvanceReport> {
        let ev = LogEvent::Task(TaskEvent::Advanced {
            seq: self.state.last_seq + 1,
            ts: now,
        });
        match self.commit(vec![ev], sink)?.pop() {
            Some(Applied::Advanced(r)) => Ok(r),
            _ => unreachable!("advance event yields an advance report"),
        }
    }

    fn commit(&mut self, events: Vec<LogEvent>, sink: &mut dyn EventSink) -> Result<Vec<Applied>> {
        for ev in &events {
            sink.append(ev)?;
        }
        events.iter().map(|ev| self.apply(ev)).collect()
    }

    /// Applies one logged event. Events must arrive in increasing `seq` order.
    pub fn apply(&mut self, event: &LogEvent) -> Result<Applied> {
        let seq = event.seq();
        if seq <= self.state.last_seq {
            return Err(corrupt(format!(
                "event {seq} arrived after event {}",
                self.state.last_seq
            )));
        }
        let applied = match event {
            LogEvent::Judgment(j) => {
                self.apply_judgment(j)?;
                Applied::Judgment
            }
            LogEvent::Task(TaskEvent::Issued { ts, task, .. }) => {
                self.apply_issued(*ts, task)?;
                Applied::Issued
            }
            LogEvent::Task(TaskEvent::Submitted {
                task_id, choices, ..
            }) => Applied::Submitted(self.apply_submitted(task_id, choices)?),
            LogEvent::Task(TaskEvent::Qc { .. }) => Applied::Qc(self.apply_qc()),
            LogEvent::Task(TaskEvent::Advanced { .. }) => {
                let qc = self.apply_qc();
                let transitions = self.apply_transitions()?;
                Applied::Advanced(AdvanceReport { qc, transitions })
            }
        };
        self.state.last_seq = seq;
        Ok(applied)
    }

    fn apply_judgment(&mut self, j: &JudgmentRecord) -> Result<()> {
        let qi = *self.query_index.get(&j.query).ok_or_else(|| {
            corrupt(format!(
                "judgment {} names unknown query {}",
                j.seq, j.query
            ))
        })?;
        let pos = &self.positions[qi];
        let arm = |id: &str| {
            pos.get(id)
                .copied()
                .ok_or_else(|| corrupt(format!("judgment {} names unknown passage {id}", j.seq)))
        };
        let (a, b) = (arm(&j.a)?, arm(&j.b)?);
        if j.left_was != j.a && j.left_was != j.b {
            return Err(corrupt(format!(
                "judgment {} placed a passage outside its pair",
                j.seq
            )));
        }
        let q = &mut self.state.queries[qi];
        if q.phase() != Some(j.phase) {
            return Err(corrupt(format!(
                "judgment {} is for {} but query {} is at {}",
                j.seq, j.phase, j.query, q.stage
            )));
        }
        let slot = q
            .slots
            .iter_mut()
            .find(|s| s.judgment.is_none() && s.matches(a, b))
            .ok_or_else(|| corrupt(format!("judgment {} has no open pair", j.seq)))?;
        slot.judgment = Some(j.clone());
        slot.lease = None;
        Ok(())
    }

    fn apply_issued(&mut self, ts: u64, task: &TaskRecord) -> Result<()> {
        self.expire_leases(ts);
        if self.state.tasks.contains_key(&task.task_id) {
            return Err(corrupt(format!("task {} issued twice", task.task_id)));
        }
        for item in &task.items {
            let ItemKind::Target { query, a, b, .. } = &item.kind else {
                continue;
            };
            let qi = *self
                .query_index
                .get(query)
                .ok_or_else(|| corrupt(format!("task {} names unknown query", task.task_id)))?;
            let slot = self.state.queries[qi]
                .slots
                .iter_mut()
                .find(|s| s.available(ts) && s.matches(*a, *b))
                .ok_or_else(|| {
                    corrupt(format!("task {} leases an unavailable pair", task.task_id))
                })?;
            slot.lease = Some(Lease {
                task_id: task.task_id.clone(),
                expires_at: task.expires_at,
            });
        }
        self.state
            .workers
            .entry(task.worker.clone())
            .or_insert_with(|| WorkerRecord {
                worker_id: task.worker.clone(),
                ..WorkerRecord::default()
            });
        self.state.tasks.insert(task.task_id.clone(), task.clone());
        self.state.tasks_issued += 1;
        Ok(())
    }

    fn expire_leases(&mut self, now: u64) {
        for task in self.state.tasks.values_mut() {
            if task.status == TaskStatus::Leased && task.expires_at <= now {
                task.status = TaskStatus::Expired;
            }
        }
        for q in &mut self.state.queries {
            for s in &mut q.slots {
                if s.lease.as_ref().is_some_and(|l| l.expires_at <= now) {
                    s.lease = None;
                }
            }
        }
    }

    fn apply_submitted(&mut self, task_id: &str, choices: &[Side]) -> Result<SubmissionReport> {
        let task = self
            .state
            .tasks
            .get_mut(task_id)
            .ok_or_else(|| corrupt(format!("submission for unknown task {task_id}")))?;
        if task.status != TaskStatus::Leased || task.items.len() != choices.len() {
            return Err(corrupt(format!(
                "submission for {task_id} does not fit the task"
            )));
        }
        let (mut seen, mut correct, mut targets) = (0, 0, 0);
        for (item, &choice) in task.items.iter().zip(choices) {
            match item.kind {
                ItemKind::Test { correct: side, .. } => {
                    seen += 1;
                    correct += u32::from(side == choice);
                }
                ItemKind::Target { .. } => targets += 1,
            }
        }
        let w = self
            .state
            .workers
            .get_mut(&task.worker)
            .ok_or_else(|| corrupt(format!("task {task_id} has no worker record")))?;
        w.test_seen += seen;
        w.test_correct += correct;
        if below_threshold(w.test_correct, w.test_seen) {
            w.excluded = true;
        }
        let report = SubmissionReport {
            task_id: task_id.to_string(),
            worker: task.worker.clone(),
            targets_recorded: targets,
            tests_correct: correct,
            tests_seen: seen,
            worker_test_correct: w.test_correct,
            worker_test_seen: w.test_seen,
            excluded: w.excluded,
        };
        task.status = TaskStatus::Submitted {
            report: report.clone(),
        };
        for q in &mut self.state.queries {
            for s in &mut q.slots {
                if s.lease.as_ref().is_some_and(|l| l.task_id == task_id) {
                    s.lease = None;
                }
            }
        }
        Ok(report)
    }

    fn apply_qc(&mut self) -> QcReport {
        let mut excluded = BTreeSet::new();
        for w in self.state.workers.values_mut() {
            if below_threshold(w.test_correct, w.test_seen) {
                w.excluded = true;
            }
            if w.excluded {
                excluded.insert(w.worker_id.clone());
            }
        }
        if excluded.is_empty() {
            return QcReport::default();
        }
        let mut involved = BTreeSet::new();
        let mut requeued = 0;
        for q in &mut self.state.queries {
            for s in &mut q.slots {
                if let Some(j) = s.judgment.as_ref().filter(|j| excluded.contains(&j.worker)) {
                    involved.insert(j.worker.clone());
                    s.judgment = None;
                    requeued += 1;
                }
            }
        }
        // Outstanding leases of excluded workers go back to the queue as well.
        let mut released = HashSet::new();
        for task in self.state.tasks.values_mut() {
            if task.status == TaskStatus::Leased && excluded.contains(&task.worker) {
                task.status = TaskStatus::Expired;
                released.insert(task.task_id.clone());
            }
        }
        for q in &mut self.state.queries {
            for s in &mut q.slots {
                if s.lease
                    .as_ref()
                    .is_some_and(|l| released.contains(&l.task_id))
                {
                    s.lease = None;
                }
            }
        }
        QcReport {
            excluded: involved.into_iter().collect(),
            requeued,
        }
    }

    fn apply_transitions(&mut self) -> Result<Vec<Transition>> {
        let mut out = Vec::new();
        for qi in 0..self.state.queries.len() {
            let q = &self.state.queries[qi];
            let Some(phase) = q.phase() else { continue };
            if q.slots.is_empty() || q.pending() > 0 {
                continue;
            }
            let from = q.stage;
            let tally = q.tally(&self.positions[qi]);
            let mut judgments: Vec<JudgmentRecord> =
                q.slots.iter().filter_map(|s| s.judgment.clone()).collect();
            judgments.sort_by_key(|j| j.seq);
            let record = PhaseRecord {
                phase,
                pool: q.pool.clone(),
                judgments,
            };
            let mut rng = phase_rng(&self.config, &q.query_id, q.history.len() as u64 + 1);
            let params = self.config.params;
            let positions = &self.positions[qi];

            let q = &mut self.state.queries[qi];
            match phase {
                PhaseTag::Prune(i) => {
                    let next = survivors(&q.pool, &tally.borda(), &mut rng);
                    q.pool = next.clone();
                    if next.len() > params.m {
                        q.stage = Stage::Judging(PhaseTag::Prune(i + 1));
                        q.slots = slots(random_pairings(&next, params.n, &mut rng)?);
                    } else if next.len() >= 2 {
                        q.stage = Stage::Judging(PhaseTag::Finalize);
                        q.slots = slots(complete_pairings(&next)?);
                    } else {
                        q.stage = Stage::Done;
                        q.slots = Vec::new();
                        q.set_one = Some(next.clone());
                        q.set_two = Some(next.clone());
                        q.combined = Some(next);
                    }
                }
                PhaseTag::Finalize => {
                    let set_one: Vec<ArmId> = tally.borda().argmax().into_iter().collect();
                    q.set_one = Some(set_one.clone());
                    if params.extra_final_phase {
                        q.stage = Stage::Judging(PhaseTag::ExtraFinalize);
                        q.slots = slots(complete_pairings(&q.pool)?);
                    } else {
                        q.stage = Stage::Done;
                        q.slots = Vec::new();
                        q.set_two = Some(Vec::new());
                        q.combined = Some(set_one);
                    }
                }
                PhaseTag::ExtraFinalize => {
                    let first = q
                        .history
                        .iter()
                        .rev()
                        .find(|h| h.phase == PhaseTag::Finalize)
                        .ok_or_else(|| corrupt(format!("{} has no finalize round", q.query_id)))?;
                    let mut merged = JudgmentTally::new();
                    for j in &first.judgments {
                        let (a, b, w) = (positions[&j.a], positions[&j.b], positions[j.winner()]);
                        merged.record(w, if w == a { b } else { a });
                    }
                    merged.merge(&tally);
                    q.set_two = Some(tally.borda().argmax().into_iter().collect());
                    q.combined = Some(merged.borda().argmax().into_iter().collect());
                    q.stage = Stage::Done;
                    q.slots = Vec::new();
                }
                PhaseTag::Explore => return Err(corrupt("campaign queries never explore".into())),
            }
            q.history.push(record);
            out.push(Transition {
                query: q.query_id.clone(),
                from,
                to: q.stage,
                pool_size: q.pool.len(),
                pending: q.slots.len(),
            });
        }
        Ok(out)
    }

    /// Accepted judgments (voided ones excluded) in log order.
    pub fn judgment_log(&self) -> Vec<JudgmentRecord> {
        let mut out: Vec<JudgmentRecord> = self
            .state
            .queries
            .iter()
            .flat_map(|q| {
                q.history
                    .iter()
                    .flat_map(|h| h.judgments.iter())
                    .chain(q.slots.iter().filter_map(|s| s.judgment.as_ref()))
            })
            .cloned()
            .collect();
        out.sort_by_key(|j| j.seq);
        out
    }

    /// Winner sets per query, expanded to every passage of a duplicate class.
    pub fn results(&self) -> CampaignResults {
        let log = self.judgment_log();
        let mut queries = Vec::with_capacity(self.state.queries.len());
        for (qi, q) in self.state.queries.iter().enumerate() {
            let pool = &self.config.pools[qi];
            let ids = |set: &Option<Vec<ArmId>>| -> Vec<String> {
                set.as_ref()
                    .map(|s| {
                        pool.expand(s)
                            .into_iter()
                            .map(|a| pool.passage(a).id.clone())
                            .collect()
                    })
                    .unwrap_or_default()
            };
            queries.push(QueryResult {
                query_id: q.query_id.clone(),
                status: if q.stage == Stage::Done {
                    "done"
                } else {
                    "partial"
                }
                .into(),
                stage: q.stage,
                set_one: ids(&q.set_one),
                set_two: ids(&q.set_two),
                combined: ids(&q.combined),
            });
        }
        CampaignResults {
            campaign: self.config.id.clone(),
            summary: ExportSummary {
                queries: queries.len(),
                done: queries.iter().filter(|q| q.stage == Stage::Done).count(),
                total_judgments: log.len(),
                extra_phase_judgments: log
                    .iter()
                    .filter(|j| j.phase == PhaseTag::ExtraFinalize)
                    .count(),
            },
            queries,
        }
    }

    pub fn status(&self) -> CampaignStatus {
        CampaignStatus {
            id: self.config.id.clone(),
            queries: self
                .state
                .queries
                .iter()
                .map(|q| QueryStatus {
                    query_id: q.query_id.clone(),
                    stage: q.stage,
                    pool_size: q.pool.len(),
                    slots: q.slots.len(),
                    pending: q.pending(),
                    leased: q
                        .slots
                        .iter()
                        .filter(|s| s.judgment.is_none() && s.lease.is_some())
                        .count(),
                })
                .collect(),
            workers: self.state.workers.len(),
            excluded_workers: self
                .state
                .workers
                .values()
                .filter(|w| w.excluded)
                .map(|w| w.worker_id.clone())
                .collect(),
            tasks_issued: self.state.tasks_issued,
            judgments: self.judgment_log().len(),
        }
    }
}

fn phase_rng(config: &CampaignConfig, query: &str, phase_index: u64) -> RunRng {
    let base = derive_seed(config.seed, stable_hash(query.as_bytes()));
    seeded_rng(derive_seed(base, phase_index))
}

fn slots(edges: crate::algos::EdgeList) -> Vec<Slot> {
    edges.into_iter().map(|(a, b)| Slot::open(a, b)).collect()
}

fn not_found(kind: &'static str, id: &str) -> Error {
    Error::NotFound {
        kind,
        id: id.to_string(),
    }
}

fn corrupt(msg: String) -> Error {
    Error::CorruptLog(msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(q: &str, k: usize) -> Pool {
        Pool {
            query_id: q.into(),
            query_text: format!("question {q}"),
            members: (0..k)
                .map(|i| Passage::new(format!("{q}-{i}"), format!("{q} text {i}")))
                .collect(),
            equivalence_classes: None,
        }
    }

    fn bank() -> Vec<TestPair> {
        (0..5)
            .map(|i| TestPair {
                question: format!("test question {i}"),
                best_known_answer: Passage::new(format!("best-{i}"), format!("best answer {i}")),
                off_topic: Passage::new(format!("off-{i}"), format!("off topic {i}")),
            })
            .collect()
    }

    fn campaign(sizes: &[usize]) -> Campaign {
        let pools = sizes
            .iter()
            .enumerate()
            .map(|(i, &k)| pool(&format!("q{i}"), k))
            .collect();
        Campaign::create(CampaignConfig::new("c", pools, bank())).unwrap()
    }

    /// Answers every item of a task: tests right unless listed in `wrong`,
    /// targets in favour of the lower arm index.
    fn answer(c: &Campaign, task_id: &str, wrong_tests: usize) -> Vec<Side> {
        let mut wrong = wrong_tests;
        c.task(task_id)
            .unwrap()
            .items
            .iter()
            .map(|item| match &item.kind {
                ItemKind::Test { correct, .. } => {
                    if wrong > 0 {
                        wrong -= 1;
                        if *correct == Side::Left {
                            Side::Right
                        } else {
                            Side::Left
                        }
                    } else {
                        *correct
                    }
                }
                ItemKind::Target { query, .. } => {
                    let pos = &c.positions[c.query_index[query]];
                    if pos[&item.left] < pos[&item.right] {
                        Side::Left
                    } else {
                        Side::Right
                    }
                }
            })
            .collect()
    }

    fn work(c: &mut Campaign, worker: &str, wrong: usize, now: u64) -> Option<SubmissionReport> {
        let task = c.next_task(worker, now, &mut ()).unwrap()?;
        let choices = answer(c, &task.task_id, wrong);
        match c.submit(&task.task_id, &choices, now, &mut ()).unwrap() {
            SubmitOutcome::Accepted(r) => Some(r),
            SubmitOutcome::Duplicate(_) => panic!("fresh task reported as duplicate"),
        }
    }

    fn pending(c: &Campaign) -> Vec<usize> {
        c.state().queries.iter().map(|q| q.slots.len()).collect()
    }

    #[test]
    fn initial_pairings() {
        let c = campaign(&[5, 15, 130]);
        assert_eq!(pending(&c), vec![10, 53, 455]);
        let stages: Vec<Stage> = c.state().queries.iter().map(|q| q.stage).collect();
        assert_eq!(
            stages,
            vec![
                Stage::Judging(PhaseTag::Finalize),
                Stage::Judging(PhaseTag::Prune(1)),
                Stage::Judging(PhaseTag::Prune(1))
            ]
        );
    }

    #[test]
    fn single_passage_is_done() {
        let c = campaign(&[1]);
        assert!(c.is_done());
        assert_eq!(c.results().queries[0].combined, vec!["q0-0".to_string()]);
    }

    #[test]
    fn empty_bank_is_a_config_error() {
        let cfg = CampaignConfig::new("c", vec![pool("q", 3)], Vec::new());
        assert!(matches!(Campaign::create(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn tasks_batch_ten_targets_and_three_tests() {
        // 10 + 15 pending pairs.
        let mut c = campaign(&[5, 6]);
        let mut sizes = Vec::new();
        while let Some(t) = c.next_task("w", 0, &mut ()).unwrap() {
            sizes.push(t.items.len());
            let rec = c.task(&t.task_id).unwrap();
            let tests = rec
                .items
                .iter()
                .filter(|i| matches!(i.kind, ItemKind::Test { .. }))
                .count();
            assert_eq!(tests, TEST_PAIRS_PER_TASK);
        }
        assert_eq!(sizes, vec![13, 13, 8]);
        assert!(c.next_task("w", 0, &mut ()).unwrap().is_none());
    }

    #[test]
    fn placements_are_fair_coins() {
        let mut c = campaign(&[21]);
        let mut left_first = 0;
        let mut total = 0;
        while let Some(t) = c.next_task("w", 0, &mut ()).unwrap() {
            for item in &c.task(&t.task_id).unwrap().items {
                if let ItemKind::Target { a, .. } = item.kind {
                    total += 1;
                    left_first += usize::from(item.left == format!("q0-{}", a.0));
                }
            }
        }
        assert!(total >= 70);
        let n = total as f64;
        let sd = (n * 0.25).sqrt();
        assert!(
            (left_first as f64 - n / 2.0).abs() <= 3.0 * sd,
            "{left_first} of {total}"
        );
    }

    #[test]
    fn exclusion_follows_the_75_percent_rule() {
        let mut c = campaign(&[9, 9]);
        work(&mut c, "five", 0, 0).unwrap();
        let r = work(&mut c, "five", 1, 0).unwrap();
        assert_eq!(
            (r.worker_test_correct, r.worker_test_seen, r.excluded),
            (5, 6, false)
        );

        work(&mut c, "four", 0, 0).unwrap();
        let r = work(&mut c, "four", 2, 0).unwrap();
        assert_eq!(
            (r.worker_test_correct, r.worker_test_seen, r.excluded),
            (4, 6, true)
        );
        assert!(matches!(
            c.next_task("four", 0, &mut ()),
            Err(Error::WorkerExcluded { .. })
        ));
    }

    #[test]
    fn qc_requeues_exactly_the_excluded_workers_pairs() {
        let pools = vec![pool("q0", 4), pool("q1", 4)];
        let mut cfg = CampaignConfig::new("c", pools, bank());
        cfg.targets_per_task = 5;
        let mut c = Campaign::create(cfg).unwrap();
        assert!(c.apply_worker_qc(0, &mut ()).unwrap().is_empty());

        assert_eq!(work(&mut c, "bad", 0, 0).unwrap().targets_recorded, 5);
        assert_eq!(work(&mut c, "good", 0, 0).unwrap().targets_recorded, 5);
        let r = work(&mut c, "bad", 2, 0).unwrap();
        assert_eq!(r.targets_recorded, 2);
        assert!(r.excluded);

        let qc = c.apply_worker_qc(0, &mut ()).unwrap();
        assert_eq!(qc.excluded, vec!["bad".to_string()]);
        assert_eq!(qc.requeued, 7);
        let open: usize = c.state().queries.iter().map(QueryState::pending).sum();
        assert_eq!(open, 7);
        assert!(c.judgment_log().iter().all(|j| j.worker == "good"));
        // A second pass finds nothing new.
        assert_eq!(c.apply_worker_qc(0, &mut ()).unwrap().requeued, 0);
    }

    #[test]
    fn gating_and_extra_round() {
        let mut c = campaign(&[9]);
        let workers = ["a", "b", "c"];
        let mut w = 0;
        // Leave one pair of the first round unjudged.
        let t = c.next_task("a", 0, &mut ()).unwrap().unwrap();
        let mut held = Some(t.task_id);
        loop {
            if work(&mut c, workers[w % 3], 0, 0).is_none() {
                break;
            }
            w += 1;
        }
        assert!(c.advance(0, &mut ()).unwrap().transitions.is_empty());
        let id = held.take().unwrap();
        let choices = answer(&c, &id, 0);
        c.submit(&id, &choices, 0, &mut ()).unwrap();

        let rep = c.advance(0, &mut ()).unwrap();
        assert_eq!(rep.transitions.len(), 1);
        assert_eq!(
            rep.transitions[0].to,
            Stage::Judging(PhaseTag::ExtraFinalize)
        );
        assert_eq!(rep.transitions[0].pending, 36);
        while work(&mut c, workers[w % 3], 0, 0).is_some() {
            w += 1;
        }
        let rep = c.advance(0, &mut ()).unwrap();
        assert_eq!(rep.transitions[0].to, Stage::Done);
        let res = c.results();
        assert_eq!(res.summary.total_judgments, 72);
        assert_eq!(res.summary.extra_phase_judgments, 36);
        // Targets were always answered for the lower index.
        assert_eq!(res.queries[0].combined, vec!["q0-0".to_string()]);
        assert_eq!(res.queries[0].set_one, res.queries[0].set_two);
    }

    #[test]
    fn no_worker_sees_a_pair_twice() {
        let mut c = campaign(&[3]);
        while work(&mut c, "solo", 0, 0).is_some() {}
        c.advance(0, &mut ()).unwrap();
        assert_eq!(
            c.query("q0").unwrap().stage,
            Stage::Judging(PhaseTag::ExtraFinalize)
        );
        assert!(c.next_task("solo", 0, &mut ()).unwrap().is_none());
        assert!(c.next_task("other", 0, &mut ()).unwrap().is_some());
    }

    #[test]
    fn leases_expire_and_late_submissions_fail() {
        let mut c = campaign(&[3]);
        let t = c.next_task("a", 0, &mut ()).unwrap().unwrap();
        assert!(c.next_task("b", 10, &mut ()).unwrap().is_none());
        let later = DEFAULT_LEASE_MS;
        let choices = answer(&c, &t.task_id, 0);
        assert!(matches!(
            c.submit(&t.task_id, &choices, later, &mut ()),
            Err(Error::Rejected(_))
        ));
        let again = c.next_task("b", later, &mut ()).unwrap().unwrap();
        assert_eq!(c.task(&t.task_id).unwrap().status, TaskStatus::Expired);
        assert_eq!(again.items.len(), 3 + TEST_PAIRS_PER_TASK);
    }

    #[test]
    fn duplicate_and_malformed_submissions() {
        let mut c = campaign(&[3]);
        let t = c.next_task("a", 0, &mut ()).unwrap().unwrap();
        assert!(matches!(
            c.submit(&t.task_id, &[Side::Left], 0, &mut ()),
            Err(Error::Rejected(_))
        ));
        let choices = answer(&c, &t.task_id, 0);
        let SubmitOutcome::Accepted(first) = c.submit(&t.task_id, &choices, 0, &mut ()).unwrap()
        else {
            panic!("first submission must be accepted");
        };
        let again = c.submit(&t.task_id, &choices, 5, &mut ()).unwrap();
        assert_eq!(again, SubmitOutcome::Duplicate(first));
        assert_eq!(c.judgment_log().len(), 3);
        assert!(matches!(
            c.submit("c.99", &choices, 0, &mut ()),
            Err(Error::NotFound { .. })
        ));
    }

    #[test]
    fn replay_rebuilds_the_state() {
        let mut c = campaign(&[4, 12]);
        let mut log: Vec<LogEvent> = Vec::new();
        let mut t = 0;
        for round in 0..20 {
            for w in ["a", "b", "c", "d"] {
                let Ok(next) = c.next_task(w, t, &mut log) else {
                    continue;
                };
                if let Some(task) = next {
                    let wrong = if w == "d" && round == 3 { 2 } else { 0 };
                    let choices = answer(&c, &task.task_id, wrong);
                    c.submit(&task.task_id, &choices, t, &mut log).unwrap();
                }
                t += 1000;
            }
            c.advance(t, &mut log).unwrap();
        }
        let replayed = Campaign::replay(c.config().clone(), log.iter().rev().cloned()).unwrap();
        assert_eq!(replayed.state(), c.state());
        assert_eq!(
            serde_json::to_string(replayed.state()).unwrap(),
            serde_json::to_string(c.state()).unwrap()
        );
    }

    #[test]
    fn replay_rejects_foreign_judgments() {
        let c = campaign(&[3]);
        let bogus = LogEvent::Judgment(JudgmentRecord {
            seq: 1,
            ts: 0,
            campaign: "c".into(),
            query: "q0".into(),
            phase: PhaseTag::Prune(1),
            a: "q0-0".into(),
            b: "q0-1".into(),
            left_was: "q0-0".into(),
            worker: "w".into(),
            choice: Side::Left,
        });
        assert!(matches!(
            Campaign::replay(c.config().clone(), [bogus]),
            Err(Error::CorruptLog(_))
        ));
    }

    #[test]
    fn duplicates_are_judged_once_and_reported_together() {
        let mut p = pool("q0", 4);
        p.members[3].text = p.members[0].text.clone();
        let mut c = Campaign::create(CampaignConfig::new("c", vec![p], bank())).unwrap();
        assert_eq!(c.query("q0").unwrap().slots.len(), 3);
        for w in ["a", "b"] {
            while work(&mut c, w, 0, 0).is_some() {}
            c.advance(0, &mut ()).unwrap();
        }
        assert!(c.is_done());
        assert_eq!(
            c.results().queries[0].combined,
            vec!["q0-0".to_string(), "q0-3".to_string()]
        );
    }

    #[test]
    fn wire_formats() {
        let j = JudgmentRecord {
            seq: 4,
            ts: 9,
            campaign: "c".into(),
            query: "q".into(),
            phase: PhaseTag::Prune(2),
            a: "x".into(),
            b: "y".into(),
            left_was: "y".into(),
            worker: "w".into(),
            choice: Side::Right,
        };
        assert_eq!(j.winner(), "x");
        let v = serde_json::to_value(&j).unwrap();
        for key in [
            "ts", "campaign", "query", "phase", "a", "b", "leftWas", "worker", "choice",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["phase"], "prune-2");
        assert_eq!(v["choice"], "right");

        let mut c = campaign(&[3]);
        let t = c.next_task("w", 0, &mut ()).unwrap().unwrap();
        let payload = serde_json::to_value(&t).unwrap();
        for item in payload["items"].as_array().unwrap() {
            let keys: Vec<&String> = item.as_object().unwrap().keys().collect();
            assert_eq!(keys, ["leftText", "questionText", "rightText"]);
        }
        let ev = TaskEvent::Issued {
            seq: 1,
            ts: 0,
            task: c.task(&t.task_id).unwrap().clone(),
        };
        let line = serde_json::to_string(&ev).unwrap();
        assert_eq!(serde_json::from_str::<TaskEvent>(&line).unwrap(), ev);
    }
}
