//! Trajectory sampling.

use crate::environments::{StepInfo, TraceRow, TwoPlayerEnv};
use crate::error::{Error, Result};
use crate::numcore::Policy;
use crate::seeding::{derive_seed, stream_rng};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs_pro: Vec<f64>,
    pub obs_adv: Vec<f64>,
    pub action_pro: usize,
    pub action_adv: usize,
    pub reward_pro: f64,
    pub info: StepInfo,
    /// Physical state after the transition.
    pub trace: TraceRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.transitions.iter().map(|t| t.reward_pro)
    }

    /// Undiscounted sum of protagonist rewards.
    pub fn episodic_return(&self) -> f64 {
        self.rewards().sum()
    }
}

/// How the adversary chooses its actions during a rollout.
#[derive(Debug, Clone, Copy)]
pub enum Adversary<'a> {
    Policy(&'a Policy),
    /// The same action at every step.
    Fixed(usize),
}

/// How the protagonist chooses its actions during a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    #[default]
    Sample,
    Greedy,
}

/// Samples `m` trajectories. Trajectory `i` draws its initial state and
/// actions from the stream derived from `(seed, i)`.
pub fn rollout(
    env: &dyn TwoPlayerEnv,
    pro: &Policy,
    adv: Adversary<'_>,
    m: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    rollout_with(env, pro, adv, m, seed, Selection::Sample)
}

pub fn rollout_with(
    env: &dyn TwoPlayerEnv,
    pro: &Policy,
    adv: Adversary<'_>,
    m: usize,
    seed: u64,
    selection: Selection,
) -> Result<Vec<Trajectory>> {
    let desc = env.descriptor();
    if pro.spec.output_dim != desc.n_actions_pro || pro.spec.input_dim != desc.obs_dim_pro {
        return Err(Error::Config(format!(
            "protagonist network ({} -> {}) does not fit {} ({} -> {})",
            pro.spec.input_dim, pro.spec.output_dim, desc.name, desc.obs_dim_pro, desc.n_actions_pro
        )));
    }
    match adv {
        Adversary::Policy(p) if p.spec.output_dim != desc.n_actions_adv || p.spec.input_dim != desc.obs_dim_adv => {
            return Err(Error::Config(format!(
                "adversary network ({} -> {}) does not fit {} ({} -> {})",
                p.spec.input_dim, p.spec.output_dim, desc.name, desc.obs_dim_adv, desc.n_actions_adv
            )));
        }
        Adversary::Fixed(a) if a >= desc.n_actions_adv => {
            return Err(Error::Input(format!("fixed adversary action {a} out of range for {}", desc.name)));
        }
        _ => {}
    }
    (0..m as u64).map(|i| rollout_one(env, pro, adv, derive_seed(seed, i), selection)).collect()
}

fn rollout_one(
    template: &dyn TwoPlayerEnv,
    pro: &Policy,
    adv: Adversary<'_>,
    seed: u64,
    selection: Selection,
) -> Result<Trajectory> {
    let mut env = template.boxed_clone();
    let mut rng = stream_rng(seed, 1);
    let (mut obs_pro, mut obs_adv) = env.reset(seed);
    let max_steps = env.descriptor().max_steps;
    let mut transitions = Vec::new();
    for _ in 0..max_steps {
        let action_pro = match selection {
            Selection::Sample => pro.sample(&obs_pro, &mut rng)?.0,
            Selection::Greedy => pro.greedy(&obs_pro)?,
        };
        let action_adv = match adv {
            Adversary::Policy(p) => p.sample(&obs_adv, &mut rng)?.0,
            Adversary::Fixed(a) => a,
        };
        let step = env.step(action_pro, action_adv)?;
        transitions.push(Transition {
            obs_pro,
            obs_adv,
            action_pro,
            action_adv,
            reward_pro: step.reward_pro,
            info: step.info,
            trace: env.trace(),
        });
        obs_pro = step.next_obs_pro;
        obs_adv = step.next_obs_adv;
        if step.done {
            break;
        }
    }
    Ok(Trajectory { transitions, seed })
}
