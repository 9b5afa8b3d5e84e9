//! Optimizer, training loops, comparison baseline and checkpoints.

pub mod baseline;
pub mod checkpoint;
pub mod config;
pub mod fit;
pub mod optim;

pub use baseline::{rmse_baseline_loss, train_baseline, BaselineConfig, BaselineModel};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, ModelKind};
pub use config::TrainConfig;
pub use fit::{
    alternating_loop, alternating_round, train_discriminator, train_generator,
    AlternatingState, DiscriminatorHistory, RoundMetrics,
};
pub use optim::{rmsprop_step, OptimizerState, RmsProp};
