//! Exported frames to labeled, normalized training windows.

mod file;
mod split;
mod stats;
mod window;

use thiserror::Error;

pub use self::file::DatasetFile;
pub use self::split::{holdout_partition, split_holdout, Normalization, SplitDataset, NORMALIZATION_EPSILON};
pub use self::stats::{dataset_stats, DatasetStats, SideStats, REPETITIONS_PER_MOTION, ROWS_PER_SECOND};
pub use self::window::{group_sessions, one_hot, window_count, window_sessions, SequenceWindow, SessionFrames};

/// Default train share of the hold-out split.
pub const DEFAULT_SPLIT_RATIO: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("{0}")]
    Domain(String),
    #[error("dataset file line {line}: {message}")]
    Format { line: usize, message: String },
}
