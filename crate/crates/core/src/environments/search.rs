//! Exhaustive search over protagonist action sequences in deterministic
//! environments with a fixed adversary action.

use std::collections::HashMap;
use std::hash::Hash;

use super::highway::{HighwayMerge, HighwayParams};
use super::TwoPlayerEnv;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Min,
    Max,
}

impl Extreme {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Extreme::Min => a < b,
            Extreme::Max => a > b,
        }
    }
}

/// Best or worst achievable return from the environment's current state.
///
/// `key` must identify the full environment state (including the step
/// index); it is used to memoize subtrees.
pub fn extreme_return<E, K, F>(env: &E, adv_action: usize, gamma: f64, extreme: Extreme, key: &F) -> Result<f64>
where
    E: TwoPlayerEnv + Clone,
    K: Hash + Eq,
    F: Fn(&E) -> K,
{
    let mut memo = HashMap::new();
    search(env, adv_action, gamma, extreme, key, &mut memo)
}

fn search<E, K, F>(env: &E, adv: usize, gamma: f64, extreme: Extreme, key: &F, memo: &mut HashMap<K, f64>) -> Result<f64>
where
    E: TwoPlayerEnv + Clone,
    K: Hash + Eq,
    F: Fn(&E) -> K,
{
    let k = key(env);
    if let Some(&v) = memo.get(&k) {
        return Ok(v);
    }
    let mut best: Option<f64> = None;
    for a in 0..env.descriptor().n_actions_pro {
        let mut child = env.clone();
        let step = child.step(a, adv)?;
        let mut value = step.reward_pro;
        if !step.done {
            value += gamma * search(&child, adv, gamma, extreme, key, memo)?;
        }
        if best.map_or(true, |b| extreme.better(value, b)) {
            best = Some(value);
        }
    }
    let v = best.unwrap_or(0.0);
    memo.insert(k, v);
    Ok(v)
}

fn highway_key(env: &HighwayMerge) -> (usize, usize, [u64; 4]) {
    let s = env.state();
    (env.step_index(), s.ego_lane.index(), [s.ego_x.to_bits(), s.ego_v.to_bits(), s.yellow_x.to_bits(), s.yellow_v.to_bits()])
}

/// Lowest and highest episodic return of the highway task without
/// adversarial perturbation, over `seeds` initial states.
///
/// Returns are summed with discount `gamma` (use 1.0 for the plain
/// episodic sum reported by evaluations).
pub fn highway_return_bounds(params: &HighwayParams, seeds: impl IntoIterator<Item = u64>, gamma: f64) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for seed in seeds {
        let mut env = HighwayMerge::new(params.clone());
        env.reset(seed);
        lo = lo.min(extreme_return(&env, 0, gamma, Extreme::Min, &highway_key)?);
        hi = hi.max(extreme_return(&env, 0, gamma, Extreme::Max, &highway_key)?);
    }
    Ok((lo, hi))
}
