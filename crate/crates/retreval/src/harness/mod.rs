//! Dataset ingestion, batch execution, judge evaluation, and reporting.

pub mod creative;
pub mod dataset;
pub mod judge;
pub mod report;
pub mod runner;

pub use creative::generate_creative_prompts;
pub use dataset::{load_dataset, save_dataset, DatasetRecord};
pub use judge::{judge_evaluate, JudgeItem, JudgeVerdict, TaskType, VerdictFile};
pub use report::{summarize, write_report, ReportSummary};
pub use runner::{
    load_judge_items, run_benchmark, BenchmarkOptions, ManifestEntry, Method, PairStatus,
    ResultFile, RunManifest,
};
