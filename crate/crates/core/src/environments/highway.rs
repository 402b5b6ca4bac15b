//! Discrete-time kinematic highway merge.
//!
//! Three lanes: the on-ramp, the middle lane and the left lane. The ego car
//! (protagonist) starts on the ramp, which ends at a fixed longitudinal
//! position; it may move into the middle lane once it reaches the merge zone.
//! The yellow car drives only in the middle lane, and the adversary sets its
//! aggressiveness each step: the yellow car's acceleration is proportional to
//! the aggressiveness level and points toward the ego car, so level 0 keeps
//! its speed constant and high levels chase the ego.
//!
//! Positions are in car lengths and speeds in car lengths per step. A
//! collision is the two cars sharing a lane with a longitudinal gap below one
//! car length.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{adversary_view, EnvDescriptor, EpisodeGuard, StepInfo, TraceRow, TwoPlayerEnv, TwoPlayerStepResult};
use crate::error::Result;
use crate::seeding::stream_rng;

pub const N_EGO_ACTIONS: usize = 5;
pub const N_AGGRESSIVENESS_LEVELS: usize = 11;

pub const KEEP: usize = 0;
pub const ACCELERATE: usize = 1;
pub const DECELERATE: usize = 2;
pub const LANE_LEFT: usize = 3;
pub const LANE_RIGHT: usize = 4;

pub const REWARD_SUCCESS: f64 = 10.0;
pub const REWARD_COLLISION: f64 = -10.0;
pub const REWARD_RAMP_END: f64 = -10.0;
pub const STEP_COST: f64 = -0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    Ramp,
    Middle,
    Left,
}

impl Lane {
    pub fn index(self) -> usize {
        match self {
            Lane::Ramp => 0,
            Lane::Middle => 1,
            Lane::Left => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HighwayParams {
    pub ramp_end: f64,
    pub merge_start: f64,
    pub success_x: f64,
    pub car_length: f64,
    pub ego_v0: f64,
    pub ego_v_min: f64,
    pub ego_v_max: f64,
    pub ego_dv: f64,
    /// Velocity change per step per aggressiveness level.
    pub accel_gain: f64,
    /// Weight of the speed difference in the yellow car's pursuit signal.
    pub chase_damping: f64,
    pub yellow_v0: f64,
    pub yellow_v_max: f64,
    pub yellow_gap_min: f64,
    pub yellow_gap_max: f64,
    pub max_steps: usize,
    pub gamma: f64,
}

impl Default for HighwayParams {
    fn default() -> Self {
        Self {
            ramp_end: 10.0,
            merge_start: 6.0,
            success_x: 13.0,
            car_length: 1.0,
            ego_v0: 1.0,
            ego_v_min: 0.5,
            ego_v_max: 1.5,
            ego_dv: 0.25,
            accel_gain: 0.07,
            chase_damping: 1.0,
            yellow_v0: 0.5,
            yellow_v_max: 2.0,
            yellow_gap_min: 1.5,
            yellow_gap_max: 2.5,
            max_steps: 60,
            gamma: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighwayState {
    pub ego_lane: Lane,
    pub ego_x: f64,
    pub ego_v: f64,
    pub yellow_x: f64,
    pub yellow_v: f64,
}

/// One kinematic step. Lane changes keep the current speed; the ramp can only
/// be left inside the merge zone, and the middle lane can only be left back
/// onto the ramp while the ramp still exists.
pub fn highway_merge_dynamics(p: &HighwayParams, s: &HighwayState, a_pro: usize, aggressiveness: usize) -> HighwayState {
    let mut next = *s;
    match a_pro {
        ACCELERATE => next.ego_v = (s.ego_v + p.ego_dv).min(p.ego_v_max),
        DECELERATE => next.ego_v = (s.ego_v - p.ego_dv).max(p.ego_v_min),
        LANE_LEFT => {
            next.ego_lane = match s.ego_lane {
                Lane::Ramp if s.ego_x >= p.merge_start => Lane::Middle,
                Lane::Middle => Lane::Left,
                other => other,
            }
        }
        LANE_RIGHT => {
            next.ego_lane = match s.ego_lane {
                Lane::Left => Lane::Middle,
                Lane::Middle if s.ego_x >= p.merge_start && s.ego_x < p.ramp_end => Lane::Ramp,
                other => other,
            }
        }
        _ => {}
    }
    let toward_ego = ((s.ego_x - s.yellow_x) + p.chase_damping * (s.ego_v - s.yellow_v)).clamp(-1.0, 1.0);
    next.yellow_v = (s.yellow_v + toward_ego * p.accel_gain * aggressiveness as f64).clamp(0.0, p.yellow_v_max);
    next.ego_x = s.ego_x + next.ego_v;
    next.yellow_x = s.yellow_x + next.yellow_v;
    next
}

#[derive(Debug, Clone)]
pub struct HighwayMerge {
    params: HighwayParams,
    desc: EnvDescriptor,
    state: HighwayState,
    t: usize,
    guard: EpisodeGuard,
}

impl HighwayMerge {
    pub const OBS_DIM: usize = 7;

    pub fn new(params: HighwayParams) -> Self {
        let desc = EnvDescriptor {
            name: "highway".into(),
            obs_dim_pro: Self::OBS_DIM,
            obs_dim_adv: Self::OBS_DIM + 1,
            n_actions_pro: N_EGO_ACTIONS,
            n_actions_adv: N_AGGRESSIVENESS_LEVELS,
            max_steps: params.max_steps,
            gamma: params.gamma,
        };
        let state = HighwayState {
            ego_lane: Lane::Ramp,
            ego_x: 0.0,
            ego_v: params.ego_v0,
            yellow_x: -params.yellow_gap_min,
            yellow_v: params.yellow_v0,
        };
        Self { params, desc, state, t: 0, guard: EpisodeGuard::default() }
    }

    pub fn params(&self) -> &HighwayParams {
        &self.params
    }

    pub fn state(&self) -> &HighwayState {
        &self.state
    }

    pub fn step_index(&self) -> usize {
        self.t
    }

    /// Overrides the current state (scripted tests).
    pub fn set_state(&mut self, state: HighwayState) {
        self.state = state;
    }

    fn obs_pro(&self) -> Vec<f64> {
        let s = &self.state;
        let p = &self.params;
        vec![
            (s.ego_lane == Lane::Ramp) as u8 as f64,
            (s.ego_lane == Lane::Middle) as u8 as f64,
            (s.ego_lane == Lane::Left) as u8 as f64,
            s.ego_x / p.ramp_end,
            s.ego_v,
            (s.yellow_x - s.ego_x) / 4.0,
            s.yellow_v,
        ]
    }

    fn observe(&self) -> (Vec<f64>, Vec<f64>) {
        let pro = self.obs_pro();
        let adv = adversary_view(&pro, self.t, self.params.max_steps);
        (pro, adv)
    }
}

impl TwoPlayerEnv for HighwayMerge {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.desc
    }

    fn reset(&mut self, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = stream_rng(seed, 0x4877);
        let p = &self.params;
        let gap = if p.yellow_gap_max > p.yellow_gap_min {
            rng.gen_range(p.yellow_gap_min..p.yellow_gap_max)
        } else {
            p.yellow_gap_min
        };
        self.state = HighwayState {
            ego_lane: Lane::Ramp,
            ego_x: 0.0,
            ego_v: p.ego_v0,
            yellow_x: -gap,
            yellow_v: p.yellow_v0,
        };
        self.t = 0;
        self.guard.begin();
        self.observe()
    }

    fn step(&mut self, action_pro: usize, action_adv: usize) -> Result<TwoPlayerStepResult> {
        self.guard.check(&self.desc, action_pro, action_adv)?;
        let p = &self.params;
        let prev_lane = self.state.ego_lane;
        self.state = highway_merge_dynamics(p, &self.state, action_pro, action_adv);
        self.t += 1;
        let s = &self.state;

        let mut info = StepInfo {
            merged: prev_lane == Lane::Ramp && s.ego_lane == Lane::Middle,
            ..StepInfo::default()
        };
        let (reward, done) = if s.ego_lane == Lane::Middle && (s.ego_x - s.yellow_x).abs() < p.car_length {
            info.collision = true;
            (REWARD_COLLISION, true)
        } else if s.ego_lane == Lane::Ramp && s.ego_x >= p.ramp_end {
            info.ramp_end = true;
            (REWARD_RAMP_END, true)
        } else if s.ego_lane != Lane::Ramp && s.ego_x >= p.success_x {
            (REWARD_SUCCESS, true)
        } else if self.t >= p.max_steps {
            info.truncated = true;
            (STEP_COST, true)
        } else {
            (STEP_COST, false)
        };
        self.guard.finish(done);
        let (next_obs_pro, next_obs_adv) = self.observe();
        Ok(TwoPlayerStepResult { next_obs_pro, next_obs_adv, reward_pro: reward, done, info })
    }

    fn trace(&self) -> TraceRow {
        TraceRow {
            primary: self.state.ego_lane.index() as f64,
            secondary: self.state.ego_x,
            vx: self.state.ego_v,
            vy: self.state.yellow_x,
        }
    }

    fn sweep_param(&self) -> Option<&'static str> {
        Some("aggressiveness")
    }

    fn boxed_clone(&self) -> Box<dyn TwoPlayerEnv> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn run(env: &mut HighwayMerge, actions: &[(usize, usize)]) -> Vec<TwoPlayerStepResult> {
        actions.iter().map(|&(a, b)| env.step(a, b).unwrap()).collect()
    }

    #[test]
    fn reset_is_seed_deterministic() {
        let mut env = HighwayMerge::new(HighwayParams::default());
        let a = env.reset(7);
        let b = env.reset(7);
        assert_eq!(a, b);
        assert_eq!(a.0.len(), HighwayMerge::OBS_DIM);
        assert_eq!(a.1.len(), HighwayMerge::OBS_DIM + 1);
        let c = env.reset(8);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_aggressiveness_keeps_yellow_speed() {
        let mut env = HighwayMerge::new(HighwayParams::default());
        env.reset(1);
        let v0 = env.state().yellow_v;
        loop {
            let r = env.step(KEEP, 0).unwrap();
            assert_eq!(env.state().yellow_v, v0);
            if r.done {
                break;
            }
        }
    }

    #[test]
    fn yellow_acceleration_proportional_to_level() {
        let p = HighwayParams::default();
        let s = HighwayState { ego_lane: Lane::Ramp, ego_x: 0.0, ego_v: 1.0, yellow_x: -2.0, yellow_v: 0.5 };
        for level in 0..N_AGGRESSIVENESS_LEVELS {
            let n = highway_merge_dynamics(&p, &s, KEEP, level);
            assert!((n.yellow_v - (0.5 + p.accel_gain * level as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn staying_on_ramp_hits_ramp_end() {
        let mut env = HighwayMerge::new(HighwayParams::default());
        env.reset(3);
        let mut last = None;
        for _ in 0..60 {
            let r = env.step(KEEP, 0).unwrap();
            let done = r.done;
            last = Some(r);
            if done {
                break;
            }
        }
        let r = last.unwrap();
        assert!(r.done && r.info.ramp_end);
        assert_eq!(r.reward_pro, REWARD_RAMP_END);
        assert_eq!(env.step_index(), 10);
        assert!(matches!(env.step(KEEP, 0), Err(Error::Usage(_))));
    }

    #[test]
    fn scripted_merge_succeeds() {
        let mut env = HighwayMerge::new(HighwayParams::default());
        env.reset(3);
        // Six steps to the merge zone, merge, move left, then drive to the success line.
        let mut script = vec![(KEEP, 0); 6];
        script.push((LANE_LEFT, 0));
        script.push((LANE_LEFT, 0));
        script.extend(vec![(KEEP, 0); 5]);
        let rs = run(&mut env, &script);
        let last = rs.last().unwrap();
        assert!(last.done);
        assert_eq!(last.reward_pro, REWARD_SUCCESS);
        assert!(rs[6].info.merged);
        assert!(rs[..rs.len() - 1].iter().all(|r| r.reward_pro == STEP_COST));
    }

    #[test]
    fn scripted_collision() {
        let mut env = HighwayMerge::new(HighwayParams::default());
        env.reset(3);
        // Place the yellow car alongside the ego car in the merge zone.
        let mut s = *env.state();
        s.ego_x = 6.0;
        s.yellow_x = 6.2;
        s.yellow_v = 1.0;
        env.set_state(s);
        let r = env.step(LANE_LEFT, 0).unwrap();
        assert!(r.info.collision && r.done);
        assert_eq!(r.reward_pro, REWARD_COLLISION);
    }

    #[test]
    fn merge_blocked_before_zone() {
        let p = HighwayParams::default();
        let s = HighwayState { ego_lane: Lane::Ramp, ego_x: 2.0, ego_v: 1.0, yellow_x: -2.0, yellow_v: 0.5 };
        assert_eq!(highway_merge_dynamics(&p, &s, LANE_LEFT, 0).ego_lane, Lane::Ramp);
        let s = HighwayState { ego_x: 6.0, ..s };
        assert_eq!(highway_merge_dynamics(&p, &s, LANE_LEFT, 0).ego_lane, Lane::Middle);
    }

    #[test]
    fn invalid_actions_rejected() {
        let mut env = HighwayMerge::new(HighwayParams::default());
        assert!(matches!(env.step(0, 0), Err(Error::Usage(_))));
        env.reset(0);
        assert!(matches!(env.step(5, 0), Err(Error::Input(_))));
        assert!(matches!(env.step(0, 11), Err(Error::Input(_))));
    }
}
