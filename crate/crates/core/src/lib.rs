//! Stackelberg-game robust reinforcement learning.
//!
//! The protagonist (leader) is trained against an adversary (follower) that
//! perturbs the environment. The adversary maximizes a mix of the
//! protagonist's negated return and the return of a separately trained oracle
//! agent; the protagonist follows the total derivative of its return through
//! the adversary's implicit best response (Stack-PG).

pub mod environments;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod learners;
pub mod numcore;
pub mod seeding;

pub use error::{Error, Result};
