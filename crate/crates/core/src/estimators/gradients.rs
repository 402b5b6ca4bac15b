//! Score-function estimators for first- and second-order derivatives of
//! expected returns.

use crate::error::{Error, Result};
use crate::numcore::{DenseMatrix, ParamVector, Policy};

use super::rollout::Trajectory;

/// Which side of the transitions a policy acted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    /// The protagonist slot (also used by the oracle in its own batches).
    Pro,
    Adv,
}

/// Σ_t γᵗ r_t.
pub fn discounted_return(traj: &Trajectory, gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for r in traj.rewards() {
        total += discount * r;
        discount *= gamma;
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnStats {
    pub returns: Vec<f64>,
    pub baseline: f64,
}

impl ReturnStats {
    pub fn new(batch: &[Trajectory], gamma: f64) -> Self {
        let returns: Vec<f64> = batch.iter().map(|t| discounted_return(t, gamma)).collect();
        let baseline = if returns.is_empty() { 0.0 } else { returns.iter().sum::<f64>() / returns.len() as f64 };
        Self { returns, baseline }
    }

    pub fn mean(&self) -> f64 {
        self.baseline
    }

    /// Per-trajectory weights: raw returns, or returns minus the baseline.
    pub fn weights(&self, centered: bool) -> Vec<f64> {
        let b = if centered { self.baseline } else { 0.0 };
        self.returns.iter().map(|r| r - b).collect()
    }
}

/// Whole-trajectory score S = Σ_t ∇ log π(a_t|s_t).
pub fn trajectory_score(policy: &Policy, traj: &Trajectory, who: Player) -> Result<ParamVector> {
    let mut s = ParamVector::zeros(policy.n_params());
    for tr in &traj.transitions {
        match who {
            Player::Pro => policy.accumulate_grad(&tr.obs_pro, tr.action_pro, &mut s)?,
            Player::Adv => policy.accumulate_grad(&tr.obs_adv, tr.action_adv, &mut s)?,
        }
    }
    Ok(s)
}

pub fn batch_scores(policy: &Policy, batch: &[Trajectory], who: Player) -> Result<Vec<ParamVector>> {
    batch.iter().map(|t| trajectory_score(policy, t, who)).collect()
}

fn nonempty(batch_len: usize, weights_len: usize) -> Result<()> {
    if batch_len == 0 {
        return Err(Error::Input("estimator needs a nonempty batch".into()));
    }
    if batch_len != weights_len {
        return Err(Error::Input(format!("{weights_len} weights for a batch of {batch_len} trajectories")));
    }
    Ok(())
}

/// (1/M) Σ (w_τ − b) S_τ with b the mean weight when `baseline_on`, else 0.
pub fn first_order_from_scores(scores: &[ParamVector], weights: &[f64], baseline_on: bool) -> Result<ParamVector> {
    nonempty(scores.len(), weights.len())?;
    let m = scores.len() as f64;
    let b = if baseline_on { weights.iter().sum::<f64>() / m } else { 0.0 };
    let mut g = ParamVector::zeros(scores[0].dim());
    for (s, w) in scores.iter().zip(weights) {
        g.axpy((w - b) / m, s);
    }
    Ok(g)
}

/// Policy gradient of the expected discounted protagonist return.
pub fn estimate_first_order(
    batch: &[Trajectory],
    policy: &Policy,
    who: Player,
    gamma: f64,
    baseline_on: bool,
) -> Result<ParamVector> {
    let stats = ReturnStats::new(batch, gamma);
    let scores = batch_scores(policy, batch, who)?;
    first_order_from_scores(&scores, &stats.returns, baseline_on)
}

/// (1/M) Σ w_τ S_a,τ S_b,τᵀ.
pub fn mixed_from_scores(scores_a: &[ParamVector], scores_b: &[ParamVector], weights: &[f64]) -> Result<DenseMatrix> {
    nonempty(scores_a.len(), weights.len())?;
    nonempty(scores_b.len(), weights.len())?;
    let m = weights.len() as f64;
    let mut out = DenseMatrix::zeros(scores_a[0].dim(), scores_b[0].dim());
    for ((sa, sb), w) in scores_a.iter().zip(scores_b).zip(weights) {
        out.add_outer(w / m, sa, sb);
    }
    Ok(out)
}

/// Mixed second derivative estimate for per-trajectory weights.
pub fn estimate_mixed(
    batch: &[Trajectory],
    policy_a: (&Policy, Player),
    policy_b: (&Policy, Player),
    weights: &[f64],
) -> Result<DenseMatrix> {
    let sa = batch_scores(policy_a.0, batch, policy_a.1)?;
    let sb = batch_scores(policy_b.0, batch, policy_b.1)?;
    mixed_from_scores(&sa, &sb, weights)
}

/// Adds (scale/M) Σ_τ w_τ [S Sᵀ + Σ_t ∇² log π] to `out`.
pub fn accumulate_second_order(
    out: &mut DenseMatrix,
    batch: &[Trajectory],
    policy: &Policy,
    who: Player,
    weights: &[f64],
    scale: f64,
) -> Result<()> {
    nonempty(batch.len(), weights.len())?;
    let m = batch.len() as f64;
    for (traj, &w) in batch.iter().zip(weights) {
        let c = scale * w / m;
        if c == 0.0 {
            continue;
        }
        let s = trajectory_score(policy, traj, who)?;
        out.add_outer(c, &s, &s);
        for tr in &traj.transitions {
            let point = match who {
                Player::Pro => policy.curvature(&tr.obs_pro, tr.action_pro)?,
                Player::Adv => policy.curvature(&tr.obs_adv, tr.action_adv)?,
            };
            point.add_hessian(c, out);
        }
    }
    Ok(())
}

/// Hessian of the adversary objective α E[−R_pro] + (1−α) E[R_ora] in ψ.
///
/// With `centered` each batch's returns are shifted by their mean first.
pub fn estimate_adv_hessian(
    batch_pro: &[Trajectory],
    batch_ora: &[Trajectory],
    adv: &Policy,
    alpha: f64,
    gamma: f64,
    centered: bool,
) -> Result<DenseMatrix> {
    let n = adv.n_params();
    let mut h = DenseMatrix::zeros(n, n);
    if n == 0 {
        return Ok(h);
    }
    if alpha != 0.0 {
        let w: Vec<f64> = ReturnStats::new(batch_pro, gamma).weights(centered).iter().map(|r| -r).collect();
        accumulate_second_order(&mut h, batch_pro, adv, Player::Adv, &w, alpha)?;
    }
    if alpha != 1.0 {
        let w = ReturnStats::new(batch_ora, gamma).weights(centered);
        accumulate_second_order(&mut h, batch_ora, adv, Player::Adv, &w, 1.0 - alpha)?;
    }
    h.symmetrize();
    Ok(h)
}

/// α·mean(−R_pro) + (1−α)·mean(R_ora).
pub fn adversary_objective_value(batch_pro: &[Trajectory], batch_ora: &[Trajectory], alpha: f64, gamma: f64) -> f64 {
    let mut v = 0.0;
    if alpha != 0.0 {
        v += alpha * -ReturnStats::new(batch_pro, gamma).mean();
    }
    if alpha != 1.0 {
        v += (1.0 - alpha) * ReturnStats::new(batch_ora, gamma).mean();
    }
    v
}
