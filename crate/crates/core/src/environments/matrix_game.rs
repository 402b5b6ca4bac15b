//! One-shot two-player matrix game.

use super::{EnvDescriptor, EpisodeGuard, StepInfo, TraceRow, TwoPlayerEnv, TwoPlayerStepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MatrixGame {
    payoff: Vec<Vec<f64>>,
    desc: EnvDescriptor,
    guard: EpisodeGuard,
    last: (usize, usize),
}

impl MatrixGame {
    /// `payoff[i][j]` is the protagonist reward for row `i` against column `j`.
    pub fn new(payoff: Vec<Vec<f64>>) -> Result<Self> {
        let rows = payoff.len();
        let cols = payoff.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::Config("payoff matrix must be nonempty".into()));
        }
        if payoff.iter().any(|r| r.len() != cols) {
            return Err(Error::Config("payoff matrix rows differ in length".into()));
        }
        if payoff.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("payoff matrix entries must be finite".into()));
        }
        let desc = EnvDescriptor {
            name: "matrix".into(),
            obs_dim_pro: 0,
            obs_dim_adv: 0,
            n_actions_pro: rows,
            n_actions_adv: cols,
            max_steps: 1,
            gamma: 1.0,
        };
        Ok(Self { payoff, desc, guard: EpisodeGuard::default(), last: (0, 0) })
    }

    pub fn payoff(&self) -> &[Vec<f64>] {
        &self.payoff
    }
}

impl TwoPlayerEnv for MatrixGame {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.desc
    }

    fn reset(&mut self, _seed: u64) -> (Vec<f64>, Vec<f64>) {
        self.guard.begin();
        (Vec::new(), Vec::new())
    }

    fn step(&mut self, action_pro: usize, action_adv: usize) -> Result<TwoPlayerStepResult> {
        self.guard.check(&self.desc, action_pro, action_adv)?;
        self.guard.finish(true);
        self.last = (action_pro, action_adv);
        Ok(TwoPlayerStepResult {
            next_obs_pro: Vec::new(),
            next_obs_adv: Vec::new(),
            reward_pro: self.payoff[action_pro][action_adv],
            done: true,
            info: StepInfo::default(),
        })
    }

    fn trace(&self) -> TraceRow {
        TraceRow { primary: self.last.0 as f64, secondary: self.last.1 as f64, vx: 0.0, vy: 0.0 }
    }

    fn boxed_clone(&self) -> Box<dyn TwoPlayerEnv> {
        Box::new(self.clone())
    }
}
