//! Ground truth, retrieval metrics, the flat graph baseline and the
//! benchmark runner.

mod bench;
mod metrics;
mod mvg;
mod oracle;

pub use bench::{run_benchmark, BruteForce, MetricReport, QueryMetrics, Retriever};
pub use metrics::{mrr_at_k, recall_at_k, success_at_k, Qrels};
pub use mvg::MvgIndex;
pub use oracle::{brute_force_topk, brute_force_topk_filtered, oracle_qrels};
