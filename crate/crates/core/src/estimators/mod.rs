//! Rollouts and sample-based gradient estimates.
//!
//! Every estimator reduces over the batch sequentially in trajectory order,
//! so identical batches give bit-identical results.

pub mod gradients;
pub mod rollout;

pub use gradients::{
    accumulate_second_order, adversary_objective_value, batch_scores, discounted_return, estimate_adv_hessian,
    estimate_first_order, estimate_mixed, first_order_from_scores, mixed_from_scores, trajectory_score, Player,
    ReturnStats,
};
pub use rollout::{rollout, rollout_with, Adversary, Selection, Trajectory, Transition};

use crate::error::{Error, Result};
use crate::numcore::{DenseMatrix, ParamVector, Policy};

/// Sampled derivative information for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    /// ∇θ E[R_pro].
    pub grad_pro_theta: ParamVector,
    /// ∇ψ E[R_pro].
    pub grad_pro_psi: ParamVector,
    /// ∇ψ f_adv at the α used to build the bundle.
    pub grad_adv_psi: ParamVector,
    /// ∇ψ E[−R_pro].
    pub g1: ParamVector,
    /// ∇ψ E[R_ora]; zero without an oracle batch.
    pub g2: ParamVector,
    /// ∇θ∇ψ f_adv, shape n_θ × n_ψ.
    pub mixed_theta_psi: DenseMatrix,
    /// ∇ψ² f_adv, symmetric.
    pub hess_adv_psi: DenseMatrix,
    pub sample_count: usize,
    pub mean_return_pro: f64,
    pub mean_return_ora: Option<f64>,
}

/// Which bundle entries to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleOrder {
    /// First-order terms only; second-order entries are left empty.
    First,
    /// Adds the mixed term.
    Mixed,
    /// Adds the mixed term and the adversary Hessian.
    Second,
}

/// Estimates every derivative used by the protagonist and adversary updates.
///
/// `batch_pro` is rolled with (θ, ψ), `batch_ora` with (ω, ψ). With
/// `centered_second_order` the mixed and Hessian terms weight trajectories by
/// baselined returns, which keeps them unbiased.
pub fn estimate_bundle(
    batch_pro: &[Trajectory],
    batch_ora: Option<&[Trajectory]>,
    pro: &Policy,
    adv: &Policy,
    alpha: f64,
    gamma: f64,
    order: BundleOrder,
    centered_second_order: bool,
) -> Result<GradientBundle> {
    if batch_pro.is_empty() {
        return Err(Error::Input("protagonist batch is empty".into()));
    }
    let stats_pro = ReturnStats::new(batch_pro, gamma);
    let s_theta = batch_scores(pro, batch_pro, Player::Pro)?;
    let s_psi = batch_scores(adv, batch_pro, Player::Adv)?;
    let grad_pro_theta = first_order_from_scores(&s_theta, &stats_pro.returns, true)?;
    let grad_pro_psi = first_order_from_scores(&s_psi, &stats_pro.returns, true)?;
    let mut g1 = grad_pro_psi.clone();
    g1.scale(-1.0);

    let (g2, mean_return_ora) = match batch_ora {
        Some(b) if !b.is_empty() => {
            let stats = ReturnStats::new(b, gamma);
            let scores = batch_scores(adv, b, Player::Adv)?;
            (first_order_from_scores(&scores, &stats.returns, true)?, Some(stats.mean()))
        }
        _ => (ParamVector::zeros(adv.n_params()), None),
    };
    let mut grad_adv_psi = ParamVector::zeros(adv.n_params());
    grad_adv_psi.axpy(alpha, &g1);
    grad_adv_psi.axpy(1.0 - alpha, &g2);

    let neg_weighted: Vec<f64> = stats_pro.weights(centered_second_order).iter().map(|r| -alpha * r).collect();
    let mixed_theta_psi = match order {
        BundleOrder::First => DenseMatrix::zeros(0, 0),
        _ => mixed_from_scores(&s_theta, &s_psi, &neg_weighted)?,
    };
    let hess_adv_psi = match order {
        BundleOrder::Second => estimate_adv_hessian(batch_pro, batch_ora.unwrap_or(&[]), adv, alpha, gamma, centered_second_order)?,
        _ => DenseMatrix::zeros(0, 0),
    };
    Ok(GradientBundle {
        grad_pro_theta,
        grad_pro_psi,
        grad_adv_psi,
        g1,
        g2,
        mixed_theta_psi,
        hess_adv_psi,
        sample_count: batch_pro.len(),
        mean_return_pro: stats_pro.mean(),
        mean_return_ora,
    })
}
