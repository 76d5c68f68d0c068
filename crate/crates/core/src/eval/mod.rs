//! Ground truth, recall, connectivity analysis and sweep evaluation.

mod oracle;
mod scc;
mod sweep;

pub use oracle::{
    brute_force_batch, brute_force_search, mean_recall, read_cache, recall_at_k, write_cache, GroundTruth,
    GroundTruthCache, Recall,
};
pub use scc::{reachable_from, scc_count, scc_count_with, scc_labels, scc_labels_with};
pub use sweep::{random_ranges, run_sweep, BuildVariant, EvalReport, EvalRow, SweepSpec};
