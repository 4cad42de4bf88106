//! Edit ratios, step accounting, equivalence checks and benchmarks.

mod bench;
mod equivalence;
mod levenshtein;
pub mod report;
mod stats;
mod sweep;

pub use bench::{bench, time_decode, BenchConfig, SentenceReport, Timing};
pub use equivalence::{check_equivalence, EquivalenceReport, Mismatch, TraceFailure};
pub use levenshtein::{edit_ratio, levenshtein};
pub use stats::{mean, median, spearman, StepStats};
pub use sweep::{sweep_depth, sweep_lmax, DepthRow, LmaxRow};
