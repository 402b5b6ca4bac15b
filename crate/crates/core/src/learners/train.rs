//! The outer training loop.
//!
//! Each iteration rolls a protagonist batch under (θ, ψ) and an oracle batch
//! under (ω, ψ), updates the protagonist, then the adversary from the same
//! batches, then trains the oracle against the new adversary.

use crate::environments::TwoPlayerEnv;
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_bundle, estimate_first_order, rollout, Adversary, BundleOrder, GradientBundle, Player, Trajectory,
};
use crate::numcore::{norm, MlpSpec, ParamVector, Policy};
use crate::seeding::{derive_seed, stream_rng, tags};

use super::config::{Learner, TrainConfig};
use super::optim::Optimizer;
use super::updates::{lola_direction, multi_policy_direction, stackpg_direction};

/// Batch slots inside one iteration's seed stream.
const SLOT_PRO: u64 = 0;
const SLOT_ORA: u64 = 1;
const SLOT_MAXIMIN: u64 = 10;
const SLOT_ORACLE_TRAIN: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub pro: Policy,
    pub adv: Policy,
    pub ora: Policy,
    pub alpha: f64,
    /// Number of completed iterations.
    pub iteration: usize,
}

impl TrainState {
    pub fn init(pro: MlpSpec, adv: MlpSpec, ora: MlpSpec, alpha: f64, seed: u64) -> Self {
        Self {
            pro: Policy::random(pro, &mut stream_rng(seed, tags::INIT_PRO)),
            adv: Policy::random(adv, &mut stream_rng(seed, tags::INIT_ADV)),
            ora: Policy::random(ora, &mut stream_rng(seed, tags::INIT_ORA)),
            alpha,
            iteration: 0,
        }
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub eval_return_no_adv: f64,
    pub mean_r_pro: f64,
    pub mean_r_ora: f64,
    pub alpha: f64,
    pub grad_norm_theta: f64,
    pub grad_norm_psi: f64,
    pub correction_norm: f64,
    pub lambda_used: f64,
    pub seed: u64,
}

impl LogRow {
    pub const HEADER: [&'static str; 10] = [
        "iter",
        "eval_return_no_adv",
        "mean_R_pro",
        "mean_R_ora",
        "alpha",
        "grad_norm_theta",
        "grad_norm_psi",
        "correction_norm",
        "lambda_used",
        "seed",
    ];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.iter.to_string(),
            self.eval_return_no_adv.to_string(),
            self.mean_r_pro.to_string(),
            self.mean_r_ora.to_string(),
            self.alpha.to_string(),
            self.grad_norm_theta.to_string(),
            self.grad_norm_psi.to_string(),
            self.correction_norm.to_string(),
            self.lambda_used.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Environment, networks and learner settings for one run.
pub struct TrainSetup {
    pub env: Box<dyn TwoPlayerEnv>,
    pub pro_spec: MlpSpec,
    pub adv_spec: MlpSpec,
    pub ora_spec: MlpSpec,
    pub config: TrainConfig,
}

impl TrainSetup {
    pub fn initial_state(&self, seed: u64) -> TrainState {
        TrainState::init(
            self.pro_spec.clone(),
            self.adv_spec.clone(),
            self.ora_spec.clone(),
            self.config.initial_alpha(),
            seed,
        )
    }

    fn optimizer(&self, lr: f64, dim: usize) -> Optimizer {
        let s = &self.config.stack;
        Optimizer::new(s.optimizer, lr, (s.adam_beta1, s.adam_beta2), dim)
    }

    fn adversary<'a>(&self, adv: &'a Policy) -> Adversary<'a> {
        if self.config.has_adversary() {
            Adversary::Policy(adv)
        } else {
            Adversary::Fixed(self.env.neutral_adversary_action())
        }
    }
}

fn mean_episodic(batch: &[Trajectory]) -> f64 {
    batch.iter().map(Trajectory::episodic_return).sum::<f64>() / batch.len() as f64
}

/// Mean undiscounted return of `episodes` rollouts with the adversary pinned
/// to `adv_action`, on the evaluation stream of `seed`.
pub fn evaluate(env: &dyn TwoPlayerEnv, pro: &Policy, adv_action: usize, episodes: usize, seed: u64) -> Result<Vec<f64>> {
    let batch = rollout(env, pro, Adversary::Fixed(adv_action), episodes, derive_seed(seed, tags::EVAL))?;
    Ok(batch.iter().map(Trajectory::episodic_return).collect())
}

/// Baselined policy-gradient steps for the oracle against a fixed adversary.
pub fn oracle_train(
    ora: &mut Policy,
    adv: &Policy,
    env: &dyn TwoPlayerEnv,
    steps: usize,
    m: usize,
    opt: &mut Optimizer,
    seed: u64,
) -> Result<()> {
    let gamma = env.descriptor().gamma;
    for j in 0..steps {
        let batch = rollout(env, ora, Adversary::Policy(adv), m, derive_seed(seed, j as u64))?;
        let g = estimate_first_order(&batch, ora, Player::Pro, gamma, true)?;
        opt.step(&mut ora.params, &g);
    }
    Ok(())
}

pub struct TrainOutcome {
    pub state: TrainState,
    pub rows: Vec<LogRow>,
}

struct Optimizers {
    pro: Optimizer,
    adv: Optimizer,
    ora: Optimizer,
}

/// Runs iterations `state.iteration..n_iter`, handing each log row to `sink`
/// as soon as it is produced.
pub fn train<F>(setup: &TrainSetup, seed: u64, state: Option<TrainState>, mut sink: F) -> Result<TrainOutcome>
where
    F: FnMut(&LogRow) -> Result<()>,
{
    setup.config.validate()?;
    let mut state = state.unwrap_or_else(|| setup.initial_state(seed));
    let s = &setup.config.stack;
    let mut opts = Optimizers {
        pro: setup.optimizer(s.lr_theta, state.pro.n_params()),
        adv: setup.optimizer(s.lr_psi, state.adv.n_params()),
        ora: setup.optimizer(s.lr_omega, state.ora.n_params()),
    };
    let mut rows = Vec::new();
    let mut skipped = 0;
    while state.iteration < s.n_iter {
        let (row, ok) = iteration(setup, seed, &mut state, &mut opts)?;
        sink(&row)?;
        rows.push(row);
        skipped = if ok { 0 } else { skipped + 1 };
        if skipped > s.max_skipped {
            return Err(Error::Numeric {
                message: format!("training aborted after {skipped} consecutive singular iterations"),
                condition: f64::INFINITY,
            });
        }
    }
    Ok(TrainOutcome { state, rows })
}

/// Protagonist direction, correction norm and λ actually used, or None when
/// every regularization level failed.
fn protagonist_direction(setup: &TrainSetup, bundle: &GradientBundle) -> Result<Option<(ParamVector, f64, f64)>> {
    let s = &setup.config.stack;
    match setup.config.learner {
        Learner::Stackpg => {
            let mut lambda = s.lambda;
            for attempt in 0..=s.lambda_retries {
                match stackpg_direction(bundle, lambda) {
                    Ok((dir, c)) => return Ok(Some((dir, c, lambda))),
                    Err(Error::Numeric { .. }) if attempt < s.lambda_retries => lambda *= 10.0,
                    Err(Error::Numeric { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            Ok(None)
        }
        Learner::Lola => match lola_direction(bundle, s.lr_psi) {
            Ok((dir, c)) => Ok(Some((dir, c, f64::NAN))),
            Err(Error::Numeric { .. }) => Ok(None),
            Err(e) => Err(e),
        },
        _ => Ok(Some((bundle.grad_pro_theta.clone(), 0.0, f64::NAN))),
    }
}

fn iteration(setup: &TrainSetup, seed: u64, state: &mut TrainState, opts: &mut Optimizers) -> Result<(LogRow, bool)> {
    let cfg = &setup.config;
    let s = &cfg.stack;
    let env = setup.env.as_ref();
    let gamma = env.descriptor().gamma;
    let k = state.iteration;
    let iter_seed = derive_seed(derive_seed(seed, tags::ROLLOUT), k as u64);

    let batch_pro = rollout(env, &state.pro, setup.adversary(&state.adv), s.m, derive_seed(iter_seed, SLOT_PRO))?;
    let batch_ora = if cfg.has_oracle() {
        Some(rollout(env, &state.ora, Adversary::Policy(&state.adv), s.m, derive_seed(iter_seed, SLOT_ORA))?)
    } else {
        None
    };
    let order = match cfg.learner {
        Learner::Stackpg => BundleOrder::Second,
        Learner::Lola => BundleOrder::Mixed,
        _ => BundleOrder::First,
    };
    let bundle = estimate_bundle(&batch_pro, batch_ora.as_deref(), &state.pro, &state.adv, state.alpha, gamma, order, s.centered_second_order)?;
    let mean_r_pro = mean_episodic(&batch_pro);
    let mean_r_ora = batch_ora.as_deref().map_or(f64::NAN, mean_episodic);
    let grad_norm_theta = norm(&bundle.grad_pro_theta);

    let Some((dir_theta, correction_norm, lambda_used)) = protagonist_direction(setup, &bundle)? else {
        let eval = evaluate(env, &state.pro, env.neutral_adversary_action(), cfg.log_eval_episodes, seed)?;
        state.iteration += 1;
        let row = LogRow {
            iter: k,
            eval_return_no_adv: eval.iter().sum::<f64>() / eval.len() as f64,
            mean_r_pro,
            mean_r_ora,
            alpha: state.alpha,
            grad_norm_theta,
            grad_norm_psi: f64::NAN,
            correction_norm: f64::NAN,
            lambda_used: s.lambda * 10f64.powi(s.lambda_retries as i32),
            seed,
        };
        return Ok((row, false));
    };

    let mut pro = state.pro.clone();
    opts.pro.step(&mut pro.params, &dir_theta);

    let mut adv = state.adv.clone();
    let mut alpha = state.alpha;
    let mut grad_norm_psi = 0.0;
    if cfg.has_adversary() {
        let (dir_psi, a) = multi_policy_direction(&bundle.g1, &bundle.g2, alpha, cfg.auto_alpha(), s.ema);
        alpha = a;
        grad_norm_psi = norm(&dir_psi);
        opts.adv.step(&mut adv.params, &dir_psi);
        if cfg.learner == Learner::Maximin {
            for j in 1..s.maximin_adversary_steps {
                let slot = derive_seed(iter_seed, SLOT_MAXIMIN + j as u64);
                let bp = rollout(env, &pro, Adversary::Policy(&adv), s.m, derive_seed(slot, SLOT_PRO))?;
                let bo = if cfg.has_oracle() {
                    Some(rollout(env, &state.ora, Adversary::Policy(&adv), s.m, derive_seed(slot, SLOT_ORA))?)
                } else {
                    None
                };
                let b = estimate_bundle(&bp, bo.as_deref(), &pro, &adv, alpha, gamma, BundleOrder::First, false)?;
                let (dir_psi, a) = multi_policy_direction(&b.g1, &b.g2, alpha, cfg.auto_alpha(), s.ema);
                alpha = a;
                opts.adv.step(&mut adv.params, &dir_psi);
            }
        }
    }

    if !pro.params.is_finite() || !adv.params.is_finite() {
        return Err(Error::Numeric { message: format!("non-finite parameters at iteration {k}"), condition: f64::NAN });
    }
    state.pro = pro;
    state.adv = adv;
    state.alpha = alpha;

    if cfg.has_oracle() {
        let oracle_seed = derive_seed(iter_seed, SLOT_ORACLE_TRAIN);
        oracle_train(&mut state.ora, &state.adv, env, s.oracle_steps_per_iter, s.m, &mut opts.ora, oracle_seed)?;
    }

    let eval = evaluate(env, &state.pro, env.neutral_adversary_action(), cfg.log_eval_episodes, seed)?;
    state.iteration += 1;
    let row = LogRow {
        iter: k,
        eval_return_no_adv: eval.iter().sum::<f64>() / eval.len() as f64,
        mean_r_pro,
        mean_r_ora,
        alpha: state.alpha,
        grad_norm_theta,
        grad_norm_psi,
        correction_norm,
        lambda_used,
        seed,
    };
    Ok((row, true))
}
