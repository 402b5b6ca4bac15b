//! Update rules and the training loop.

pub mod analytic;
pub mod config;
pub mod optim;
pub mod train;
pub mod updates;

pub use config::{Formulation, Learner, StackPGConfig, TrainConfig};
pub use optim::{Optimizer, OptimizerKind};
pub use train::{evaluate, oracle_train, train, LogRow, TrainOutcome, TrainSetup, TrainState};
pub use updates::{
    gda_update, lola_direction, lola_update, maximin_update, mgda_alpha, multi_policy_direction,
    multi_policy_gradient_update, stackpg_direction, stackpg_update,
};
