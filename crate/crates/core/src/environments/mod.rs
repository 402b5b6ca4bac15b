//! Two-player stochastic games.
//!
//! Every environment emits only the protagonist's reward; the adversary's
//! objective is assembled downstream from protagonist and oracle returns.

pub mod delay;
pub mod equilibria;
pub mod highway;
pub mod lander;
pub mod matrix_game;
pub mod quadratic;
pub mod search;

use crate::error::{Error, Result};

pub use delay::{delayed_action_execute, DelayBuffer};
pub use equilibria::{brute_force_equilibria, EquilibriumReport};
pub use highway::{highway_merge_dynamics, HighwayMerge, HighwayParams, HighwayState, Lane};
pub use lander::{DelayedPointLander, LanderParams};
pub use matrix_game::MatrixGame;
pub use quadratic::{quad_game_eval, QuadEval, QuadPoint, QuadraticGameSpec};
pub use search::{extreme_return, highway_return_bounds, Extreme};

/// Static description of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvDescriptor {
    pub name: String,
    pub obs_dim_pro: usize,
    pub obs_dim_adv: usize,
    pub n_actions_pro: usize,
    pub n_actions_adv: usize,
    pub max_steps: usize,
    pub gamma: f64,
}

/// Event flags reported alongside a transition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepInfo {
    pub collision: bool,
    pub merged: bool,
    pub ramp_end: bool,
    pub crashed: bool,
    pub landed: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPlayerStepResult {
    pub next_obs_pro: Vec<f64>,
    pub next_obs_adv: Vec<f64>,
    pub reward_pro: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Physical snapshot used for trajectory dumps.
///
/// For the highway task `primary` is the ego lane and `secondary` its
/// longitudinal position; for the lander they are x and y.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TraceRow {
    pub primary: f64,
    pub secondary: f64,
    pub vx: f64,
    pub vy: f64,
}

pub trait TwoPlayerEnv: Send {
    fn descriptor(&self) -> &EnvDescriptor;

    /// Starts a new episode; deterministic in `seed`.
    fn reset(&mut self, seed: u64) -> (Vec<f64>, Vec<f64>);

    fn step(&mut self, action_pro: usize, action_adv: usize) -> Result<TwoPlayerStepResult>;

    fn trace(&self) -> TraceRow;

    /// Name of the perturbation the adversary controls, used by evaluation sweeps.
    fn sweep_param(&self) -> Option<&'static str> {
        None
    }

    /// Adversary action that leaves the environment unperturbed.
    fn neutral_adversary_action(&self) -> usize {
        0
    }

    fn boxed_clone(&self) -> Box<dyn TwoPlayerEnv>;
}

impl Clone for Box<dyn TwoPlayerEnv> {
    fn clone(&self) -> Self {
        self.boxed_clone()
    }
}

/// Shared protocol bookkeeping: reset-before-step, no steps after `done`,
/// action ranges.
#[derive(Debug, Clone, Default)]
pub(crate) struct EpisodeGuard {
    started: bool,
    done: bool,
}

impl EpisodeGuard {
    pub(crate) fn begin(&mut self) {
        self.started = true;
        self.done = false;
    }

    pub(crate) fn check(&self, desc: &EnvDescriptor, action_pro: usize, action_adv: usize) -> Result<()> {
        if !self.started {
            return Err(Error::Usage(format!("{}: step called before reset", desc.name)));
        }
        if self.done {
            return Err(Error::Usage(format!("{}: step called after the episode ended", desc.name)));
        }
        if action_pro >= desc.n_actions_pro {
            return Err(Error::Input(format!(
                "{}: protagonist action {action_pro} out of range [0, {})",
                desc.name, desc.n_actions_pro
            )));
        }
        if action_adv >= desc.n_actions_adv {
            return Err(Error::Input(format!(
                "{}: adversary action {action_adv} out of range [0, {})",
                desc.name, desc.n_actions_adv
            )));
        }
        Ok(())
    }

    pub(crate) fn finish(&mut self, done: bool) {
        self.done = done;
    }
}

/// Adversary observation: the protagonist's observation plus the normalized step index.
pub(crate) fn adversary_view(obs_pro: &[f64], t: usize, max_steps: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(obs_pro.len() + 1);
    v.extend_from_slice(obs_pro);
    v.push(t as f64 / max_steps as f64);
    v
}
