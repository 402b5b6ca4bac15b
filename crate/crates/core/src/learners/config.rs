//! Learner configuration.

use serde::{Deserialize, Serialize};

use super::optim::OptimizerKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    Stackpg,
    Gda,
    Maximin,
    Lola,
    NoAdv,
}

impl Learner {
    pub fn name(self) -> &'static str {
        match self {
            Learner::Stackpg => "stackpg",
            Learner::Gda => "gda",
            Learner::Maximin => "maximin",
            Learner::Lola => "lola",
            Learner::NoAdv => "no_adv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    ZeroSum,
    #[default]
    RrlStack,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Formulation::ZeroSum => "zero_sum",
            Formulation::RrlStack => "rrl_stack",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackPGConfig {
    pub lr_theta: f64,
    pub lr_psi: f64,
    pub lr_omega: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub auto_tuning: bool,
    pub ema: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub oracle_steps_per_iter: usize,
    pub n_iter: usize,
    pub optimizer: OptimizerKind,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    /// λ escalations (×10 each) attempted after a failed solve.
    pub lambda_retries: usize,
    /// Consecutive skipped iterations tolerated before training aborts.
    pub max_skipped: usize,
    /// Adversary updates per protagonist update for the maximin learner.
    pub maximin_adversary_steps: usize,
    /// Weight second-order terms by baselined rather than raw returns.
    pub centered_second_order: bool,
}

impl Default for StackPGConfig {
    fn default() -> Self {
        Self {
            lr_theta: 3e-3,
            lr_psi: 3e-3,
            lr_omega: 3e-3,
            lambda: 1.0,
            alpha: 0.5,
            auto_tuning: false,
            ema: 0.9,
            m: 24,
            oracle_steps_per_iter: 5,
            n_iter: 300,
            optimizer: OptimizerKind::Adam,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            lambda_retries: 3,
            max_skipped: 3,
            maximin_adversary_steps: 3,
            centered_second_order: false,
        }
    }
}

impl StackPGConfig {
    /// Checks ranges; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        let positive = [("lr_theta", self.lr_theta), ("lr_psi", self.lr_psi), ("lr_omega", self.lr_omega)];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("`{key}` must be a positive number, got {v}")));
            }
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("`lambda` must be nonnegative, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("`alpha` must lie in [0, 1], got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.ema) {
            return Err(Error::Config(format!("`ema` must lie in [0, 1), got {}", self.ema)));
        }
        for (key, beta) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::Config(format!("`{key}` must lie in [0, 1), got {beta}")));
            }
        }
        let counts = [
            ("M", self.m),
            ("oracle_steps_per_iter", self.oracle_steps_per_iter),
            ("n_iter", self.n_iter),
            ("maximin_adversary_steps", self.maximin_adversary_steps),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("`{key}` must be a positive integer")));
            }
        }
        Ok(())
    }
}

/// Everything the training loop needs apart from the environment and networks.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learner: Learner,
    pub formulation: Formulation,
    pub stack: StackPGConfig,
    /// Episodes in the per-iteration evaluation written to the training log.
    pub log_eval_episodes: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.stack.validate()?;
        if self.log_eval_episodes == 0 {
            return Err(Error::Config("`log_eval_episodes` must be a positive integer".into()));
        }
        Ok(())
    }

    pub fn has_adversary(&self) -> bool {
        self.learner != Learner::NoAdv
    }

    /// The oracle only exists in the regret-based formulation.
    pub fn has_oracle(&self) -> bool {
        self.has_adversary() && self.formulation == Formulation::RrlStack
    }

    /// Zero-sum play pins α to 1 without tuning.
    pub fn initial_alpha(&self) -> f64 {
        match self.formulation {
            Formulation::ZeroSum => 1.0,
            Formulation::RrlStack => self.stack.alpha,
        }
    }

    pub fn auto_alpha(&self) -> bool {
        self.formulation == Formulation::RrlStack && self.stack.auto_tuning
    }
}
