//! Update directions for the protagonist and adversary.

use crate::error::{Error, Result};
use crate::estimators::GradientBundle;
use crate::numcore::{norm, regularized_solve, DenseMatrix, ParamVector};

/// Threshold below which the two adversary gradients count as identical.
const MGDA_TIE: f64 = 1e-12;

/// Stack-PG direction g_θ + ∇θ∇ψ f_adv (−∇ψ² f_adv + λI)⁻¹ ∇ψ f_pro.
///
/// Returns the direction and the norm of the implicit correction term.
pub fn stackpg_direction(bundle: &GradientBundle, lambda: f64) -> Result<(ParamVector, f64)> {
    let x = regularized_solve(&bundle.hess_adv_psi, lambda, &bundle.grad_pro_psi)?;
    correction_direction(&bundle.grad_pro_theta, &bundle.mixed_theta_psi, &x)
}

/// LOLA-style direction: the inverse Hessian is replaced by γ_ψ·I.
pub fn lola_direction(bundle: &GradientBundle, lr_psi: f64) -> Result<(ParamVector, f64)> {
    let x: Vec<f64> = bundle.grad_pro_psi.iter().map(|g| lr_psi * g).collect();
    correction_direction(&bundle.grad_pro_theta, &bundle.mixed_theta_psi, &x)
}

fn correction_direction(grad: &ParamVector, mixed: &DenseMatrix, x: &[f64]) -> Result<(ParamVector, f64)> {
    if mixed.rows() != grad.dim() || mixed.cols() != x.len() {
        return Err(Error::Config(format!(
            "mixed term is {}x{}, expected {}x{}",
            mixed.rows(),
            mixed.cols(),
            grad.dim(),
            x.len()
        )));
    }
    let correction = mixed.matvec(x);
    let mut dir = grad.clone();
    dir.axpy(1.0, &correction);
    if !dir.is_finite() {
        return Err(Error::Numeric { message: "non-finite protagonist direction".into(), condition: f64::INFINITY });
    }
    Ok((dir, norm(&correction)))
}

/// θ' = θ + γ_θ·[g_θ + mixed·(−H + λI)⁻¹ g_ψ].
pub fn stackpg_update(bundle: &GradientBundle, theta: &[f64], lambda: f64, lr_theta: f64) -> Result<ParamVector> {
    let (dir, _) = stackpg_direction(bundle, lambda)?;
    Ok(step(theta, &dir, lr_theta))
}

/// θ' = θ + γ_θ·[g_θ + mixed·(γ_ψ g_ψ)].
pub fn lola_update(bundle: &GradientBundle, theta: &[f64], lr_theta: f64, lr_psi: f64) -> Result<ParamVector> {
    let (dir, _) = lola_direction(bundle, lr_psi)?;
    Ok(step(theta, &dir, lr_theta))
}

/// Simultaneous first-order step for both players: returns (θ', ψ').
pub fn gda_update(bundle: &GradientBundle, theta: &[f64], psi: &[f64], lr_theta: f64, lr_psi: f64) -> (ParamVector, ParamVector) {
    (step(theta, &bundle.grad_pro_theta, lr_theta), step(psi, &bundle.grad_adv_psi, lr_psi))
}

/// One protagonist step followed by `adversary_steps` adversary steps; the
/// adversary gradient is re-estimated by `regrad` before every step after
/// the first.
pub fn maximin_update<F>(
    bundle: &GradientBundle,
    theta: &[f64],
    psi: &[f64],
    lr_theta: f64,
    lr_psi: f64,
    adversary_steps: usize,
    mut regrad: F,
) -> Result<(ParamVector, ParamVector)>
where
    F: FnMut(&[f64], &[f64]) -> Result<ParamVector>,
{
    let theta_new = step(theta, &bundle.grad_pro_theta, lr_theta);
    let mut psi_new = ParamVector::from(psi.to_vec());
    for k in 0..adversary_steps {
        let g = if k == 0 { bundle.grad_adv_psi.clone() } else { regrad(&theta_new, &psi_new)? };
        psi_new = step(&psi_new, &g, lr_psi);
    }
    Ok((theta_new, psi_new))
}

fn step(x: &[f64], dir: &[f64], lr: f64) -> ParamVector {
    ParamVector::from(x.iter().zip(dir).map(|(a, d)| a + lr * d).collect::<Vec<_>>())
}

/// Minimizer of ½‖αg1 + (1−α)g2‖² over α ∈ [0, 1].
pub fn mgda_alpha(g1: &[f64], g2: &[f64]) -> f64 {
    assert_eq!(g1.len(), g2.len(), "gradient length mismatch");
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in g1.iter().zip(g2) {
        let diff = b - a;
        num += diff * b;
        den += diff * diff;
    }
    if den.sqrt() < MGDA_TIE {
        return 0.5;
    }
    (num / den).clamp(0.0, 1.0)
}

/// Adversary step of the mixed objective.
///
/// With `auto` the weight follows α ← ρα + (1−ρ)α*; returns the ascent
/// direction α'g1 + (1−α')g2 and α'.
pub fn multi_policy_direction(g1: &[f64], g2: &[f64], alpha: f64, auto: bool, rho: f64) -> (ParamVector, f64) {
    let alpha = if auto { (rho * alpha + (1.0 - rho) * mgda_alpha(g1, g2)).clamp(0.0, 1.0) } else { alpha };
    let dir = g1.iter().zip(g2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect::<Vec<_>>();
    (ParamVector::from(dir), alpha)
}

/// Plain-SGD form: ψ' = ψ + γ_ψ(α'g1 + (1−α')g2).
pub fn multi_policy_gradient_update(
    g1: &[f64],
    g2: &[f64],
    psi: &[f64],
    alpha: f64,
    auto: bool,
    rho: f64,
    lr_psi: f64,
) -> (ParamVector, f64) {
    let (dir, alpha) = multi_policy_direction(g1, g2, alpha, auto, rho);
    (step(psi, &dir, lr_psi), alpha)
}
