//! The shallow source-identification CNN.
//!
//! Architecture (all convolutions 3×3, stride 1, zero "same" padding):
//! `conv(C→3) → ReLU → conv(3→8) → ReLU → avgpool 2 → conv(8→16) → ReLU →
//! avgpool 2 → conv(16→32) → ReLU → flatten → dense(32·d² → classes)`,
//! with `d = ⌊⌊H/2⌋/2⌋`. Trained with softmax cross-entropy and Adam.

mod checkpoint;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest};
pub use model::{init_params, CnnParams, Conv, Dataset, Dense, Real, Workspace};
pub use train::{
    evaluate, loss_and_grad, multi_seed_stats, predict, train, write_history_csv, Adam,
    EpochRecord, SeedStats, TrainConfig, TrainResult,
};

/// Conv channel progression after the input layer.
pub const CONV_CHANNELS: [usize; 4] = [3, 8, 16, 32];
