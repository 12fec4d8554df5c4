//! Optimisation: learning-rate schedule, Adam/AdamW, per-clip INR fitting and
//! hypernetwork training with checkpointing.

mod fit;
mod hyper;
mod optim;
mod schedule;

pub use fit::{fit_individual_inr, FitConfig, FitObjective, FitResult, StoredInr};
pub use hyper::{
    epoch_checkpoint_name, epoch_means, reconstruct, train_hypernetwork, write_history_csv, HistoryRow, HyperInit,
    TrainConfig, TrainOptions, TrainOutcome, TrainState, HISTORY_CSV_HEADER, LAST_GOOD_CHECKPOINT, LATEST_CHECKPOINT,
};
pub use optim::{Adam, AdamConfig};
pub use schedule::{one_cycle_lr, OneCycle};
