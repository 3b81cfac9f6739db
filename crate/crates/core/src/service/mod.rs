//! Running prefBest with human assessors: pools, campaigns, on-disk logs and
//! the HTTP API.

mod campaign;
pub mod http;
mod pool;
mod store;

pub use campaign::{
    AdvanceReport, Applied, Campaign, CampaignConfig, CampaignResults, CampaignState,
    CampaignStatus, EventSink, ExportSummary, ItemKind, JudgmentRecord, Lease, LogEvent,
    PhaseRecord, QcReport, QueryResult, QueryState, QueryStatus, Side, Slot, Stage,
    SubmissionReport, SubmitOutcome, TaskEvent, TaskItem, TaskItemView, TaskPayload, TaskRecord,
    TaskStatus, TestPair, Transition, WorkerRecord, DEFAULT_LEASE_MS, DEFAULT_TARGETS_PER_TASK,
    TEST_PAIRS_PER_TASK,
};
pub use pool::{
    build_judging_pool, build_pools, detect_duplicates, read_id_text, read_passages, read_qrels,
    Grade, GradedQrel, Passage, Pool, DEFAULT_POOL_THRESHOLD,
};
pub use store::{
    export_campaign, CampaignStore, CONFIG_FILE, JUDGMENTS_FILE, RESULTS_FILE, STATE_FILE,
    TASKS_FILE,
};
