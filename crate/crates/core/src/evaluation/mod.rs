//! Confusion-matrix metrics and the two tuning rules: best-possible score
//! over a whole tuning grid, and matching a requested subset size.

mod metrics;
mod tuning;

pub use metrics::{confusion, score, ConfusionCounts, Metric, MetricScore};
pub use tuning::{best_possible, tune_to_subset_size, BestScore, Candidate, SizeMatch};
