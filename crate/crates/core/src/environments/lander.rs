//! Point-mass lander with adversarial actuation delay.
//!
//! A 2-D point mass starts above the landing pad and must touch down softly.
//! Four discrete commands mirror the classic lander: engines off, left engine
//! (pushes right), right engine (pushes left), main engine. The adversary
//! picks, every step, how many steps the current command is delayed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::delay::{DelayBuffer, MAX_DELAY};
use super::{adversary_view, EnvDescriptor, EpisodeGuard, StepInfo, TraceRow, TwoPlayerEnv, TwoPlayerStepResult};
use crate::error::Result;
use crate::seeding::stream_rng;

pub const ENGINES_OFF: usize = 0;
pub const LEFT_ENGINE: usize = 1;
pub const RIGHT_ENGINE: usize = 2;
pub const MAIN_ENGINE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LanderParams {
    pub gravity: f64,
    pub dt: f64,
    pub lateral_thrust: f64,
    pub main_thrust: f64,
    pub start_height: f64,
    pub start_offset: f64,
    pub pad_half_width: f64,
    pub safe_vx: f64,
    pub safe_vy: f64,
    pub x_limit: f64,
    pub y_limit: f64,
    pub terminal_reward: f64,
    pub main_engine_cost: f64,
    /// Weight of distance-to-pad in the shaping potential.
    pub shaping_distance: f64,
    /// Weight of speed in the shaping potential.
    pub shaping_speed: f64,
    pub max_steps: usize,
    pub gamma: f64,
}

impl Default for LanderParams {
    fn default() -> Self {
        Self {
            gravity: 1.0,
            dt: 0.1,
            lateral_thrust: 0.6,
            main_thrust: 1.4,
            start_height: 1.0,
            start_offset: 0.4,
            pad_half_width: 0.2,
            safe_vx: 0.3,
            safe_vy: 0.4,
            x_limit: 1.5,
            y_limit: 2.0,
            terminal_reward: 100.0,
            main_engine_cost: 0.3,
            shaping_distance: 10.0,
            shaping_speed: 10.0,
            max_steps: 300,
            gamma: 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LanderState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

#[derive(Debug, Clone)]
pub struct DelayedPointLander {
    params: LanderParams,
    desc: EnvDescriptor,
    state: LanderState,
    buffer: DelayBuffer,
    t: usize,
    last_executed: usize,
    guard: EpisodeGuard,
}

impl DelayedPointLander {
    pub const OBS_DIM: usize = 4;

    pub fn new(params: LanderParams) -> Self {
        let desc = EnvDescriptor {
            name: "lander".into(),
            obs_dim_pro: Self::OBS_DIM,
            obs_dim_adv: Self::OBS_DIM + 1,
            n_actions_pro: 4,
            n_actions_adv: MAX_DELAY + 1,
            max_steps: params.max_steps,
            gamma: params.gamma,
        };
        Self {
            params,
            desc,
            state: LanderState::default(),
            buffer: DelayBuffer::new(),
            t: 0,
            last_executed: ENGINES_OFF,
            guard: EpisodeGuard::default(),
        }
    }

    pub fn params(&self) -> &LanderParams {
        &self.params
    }

    pub fn state(&self) -> &LanderState {
        &self.state
    }

    pub fn set_state(&mut self, state: LanderState) {
        self.state = state;
    }

    /// Action actually applied on the most recent step.
    pub fn last_executed(&self) -> usize {
        self.last_executed
    }

    fn potential(&self, s: &LanderState) -> f64 {
        let p = &self.params;
        -p.shaping_distance * (s.x * s.x + s.y * s.y).sqrt() - p.shaping_speed * (s.vx * s.vx + s.vy * s.vy).sqrt()
    }

    fn obs_pro(&self) -> Vec<f64> {
        let s = &self.state;
        vec![s.x, s.y, s.vx, s.vy]
    }

    fn observe(&self) -> (Vec<f64>, Vec<f64>) {
        let pro = self.obs_pro();
        let adv = adversary_view(&pro, self.t, self.params.max_steps);
        (pro, adv)
    }
}

impl TwoPlayerEnv for DelayedPointLander {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.desc
    }

    fn reset(&mut self, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = stream_rng(seed, 0x4c44);
        let off = self.params.start_offset;
        let x = if off > 0.0 { rng.gen_range(-off..=off) } else { 0.0 };
        self.state = LanderState { x, y: self.params.start_height, vx: 0.0, vy: 0.0 };
        self.buffer.clear();
        self.t = 0;
        self.last_executed = ENGINES_OFF;
        self.guard.begin();
        self.observe()
    }

    fn step(&mut self, action_pro: usize, action_adv: usize) -> Result<TwoPlayerStepResult> {
        self.guard.check(&self.desc, action_pro, action_adv)?;
        let executed = self.buffer.execute(self.t, action_pro, action_adv);
        self.last_executed = executed;
        let p = self.params.clone();
        let before = self.state;

        let (ax, ay) = match executed {
            LEFT_ENGINE => (p.lateral_thrust, 0.0),
            RIGHT_ENGINE => (-p.lateral_thrust, 0.0),
            MAIN_ENGINE => (0.0, p.main_thrust),
            _ => (0.0, 0.0),
        };
        let s = &mut self.state;
        s.vx += ax * p.dt;
        s.vy += (ay - p.gravity) * p.dt;
        s.x += s.vx * p.dt;
        s.y += s.vy * p.dt;
        self.t += 1;

        let after = self.state;
        let mut reward = self.potential(&after) - self.potential(&before);
        if executed == MAIN_ENGINE {
            reward -= p.main_engine_cost;
        }
        let mut info = StepInfo::default();
        let mut done = false;
        if after.y <= 0.0 {
            done = true;
            let soft = after.vx.abs() <= p.safe_vx && after.vy.abs() <= p.safe_vy;
            if !soft {
                info.crashed = true;
                reward -= p.terminal_reward;
            } else if after.x.abs() <= p.pad_half_width {
                info.landed = true;
                reward += p.terminal_reward;
            }
        } else if after.x.abs() > p.x_limit || after.y > p.y_limit {
            done = true;
            info.crashed = true;
            reward -= p.terminal_reward;
        } else if self.t >= p.max_steps {
            done = true;
            info.truncated = true;
        }
        self.guard.finish(done);
        let (next_obs_pro, next_obs_adv) = self.observe();
        Ok(TwoPlayerStepResult { next_obs_pro, next_obs_adv, reward_pro: reward, done, info })
    }

    fn trace(&self) -> TraceRow {
        TraceRow { primary: self.state.x, secondary: self.state.y, vx: self.state.vx, vy: self.state.vy }
    }

    fn sweep_param(&self) -> Option<&'static str> {
        Some("delay")
    }

    fn boxed_clone(&self) -> Box<dyn TwoPlayerEnv> {
        Box::new(self.clone())
    }
}
