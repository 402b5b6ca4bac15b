//! Trajectory dumps for inspecting learned behavior.

use crate::environments::TwoPlayerEnv;
use crate::error::Result;
use crate::estimators::{rollout, Adversary};
use crate::numcore::Policy;
use crate::seeding::derive_seed;

/// Stream tag for dump rollouts, distinct from training and evaluation.
const DUMP_STREAM: u64 = 30;

/// Names of the four trace columns for an environment.
fn trace_columns(env: &dyn TwoPlayerEnv) -> [&'static str; 4] {
    match env.descriptor().name.as_str() {
        "highway" => ["lane", "position", "speed", "yellow_position"],
        "lander" => ["x", "y", "vx", "vy"],
        _ => ["primary", "secondary", "vx", "vy"],
    }
}

/// Rolls `episodes` episodes and renders them as CSV, one row per step.
///
/// Trace columns hold the physical state after the step. `collision` marks
/// a collision or crash.
pub fn dump_trajectories(
    env: &dyn TwoPlayerEnv,
    pro: &Policy,
    adv: Adversary<'_>,
    episodes: usize,
    seed: u64,
    config_hash: &str,
) -> Result<String> {
    let batch = rollout(env, pro, adv, episodes, derive_seed(seed, DUMP_STREAM))?;
    let [c0, c1, c2, c3] = trace_columns(env);
    let mut out = format!(
        "# config_hash={config_hash}\nepisode,step,{c0},{c1},{c2},{c3},action_pro,action_adv,reward,collision,done\n"
    );
    for (ep, traj) in batch.iter().enumerate() {
        let last = traj.len().saturating_sub(1);
        for (t, tr) in traj.transitions.iter().enumerate() {
            let tc = &tr.trace;
            out.push_str(&format!(
                "{ep},{t},{},{},{},{},{},{},{},{},{}\n",
                tc.primary,
                tc.secondary,
                tc.vx,
                tc.vy,
                tr.action_pro,
                tr.action_adv,
                tr.reward_pro,
                u8::from(tr.info.collision || tr.info.crashed),
                u8::from(t == last),
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{HighwayMerge, HighwayParams};
    use crate::numcore::{Activation, MlpSpec};
    use crate::seeding::stream_rng;

    #[test]
    fn one_row_per_step_and_one_done_per_episode() {
        let env = HighwayMerge::new(HighwayParams::default());
        let d = env.descriptor();
        let spec = MlpSpec::new(d.obs_dim_pro, d.n_actions_pro, vec![4], Activation::Tanh).unwrap();
        let pro = Policy::random(spec, &mut stream_rng(0, 0));
        let csv = dump_trajectories(&env, &pro, Adversary::Fixed(3), 5, 11, "h").unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# config_hash=h"));
        assert!(lines.next().unwrap().starts_with("episode,step,lane,position"));
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert!(rows.iter().all(|r| r.len() == 11 && r[7] == "3"));
        assert_eq!(rows.iter().filter(|r| r[10] == "1").count(), 5);
        assert_eq!(csv, dump_trajectories(&env, &pro, Adversary::Fixed(3), 5, 11, "h").unwrap());
    }
}
