//! Learning dynamics on scalar quadratic games with exact gradients.

use crate::environments::QuadraticGameSpec;
use crate::error::Result;
use crate::estimators::GradientBundle;
use crate::numcore::{DenseMatrix, ParamVector};

use super::updates::{gda_update, stackpg_update};

/// Exact derivative bundle of a quadratic game at (θ, ψ).
pub fn exact_bundle(spec: &QuadraticGameSpec, theta: f64, psi: f64) -> GradientBundle {
    let q = spec.eval(theta, psi);
    let v = |x: f64| ParamVector::from(vec![x]);
    GradientBundle {
        grad_pro_theta: v(q.dpro_dtheta),
        grad_pro_psi: v(q.dpro_dpsi),
        grad_adv_psi: v(q.dadv_dpsi),
        g1: v(q.dadv_dpsi),
        g2: v(0.0),
        mixed_theta_psi: DenseMatrix::from_rows(&[vec![q.d2adv_dtheta_dpsi]]),
        hess_adv_psi: DenseMatrix::from_rows(&[vec![q.d2adv_dpsi2]]),
        sample_count: 1,
        mean_return_pro: q.f_pro,
        mean_return_ora: None,
    }
}

/// Leader Stack-PG step followed by a follower gradient step at the new θ.
///
/// With `lr_psi = −1/(2e)` the follower step lands exactly on its best response.
pub fn stackpg_quadratic(
    spec: &QuadraticGameSpec,
    start: (f64, f64),
    lr_theta: f64,
    lr_psi: f64,
    lambda: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut path = Vec::with_capacity(steps + 1);
    let (mut theta, mut psi) = start;
    path.push((theta, psi));
    for _ in 0..steps {
        theta = stackpg_update(&exact_bundle(spec, theta, psi), &[theta], lambda, lr_theta)?[0];
        psi += lr_psi * spec.eval(theta, psi).dadv_dpsi;
        path.push((theta, psi));
    }
    Ok(path)
}

/// Simultaneous gradient ascent (leader on f_pro, follower on f_adv).
pub fn gda_quadratic(spec: &QuadraticGameSpec, start: (f64, f64), lr: f64, steps: usize) -> Vec<(f64, f64)> {
    let mut path = Vec::with_capacity(steps + 1);
    let (mut theta, mut psi) = start;
    path.push((theta, psi));
    for _ in 0..steps {
        let (t, p) = gda_update(&exact_bundle(spec, theta, psi), &[theta], &[psi], lr, lr);
        theta = t[0];
        psi = p[0];
        path.push((theta, psi));
    }
    path
}

/// The bilinear zero-sum game f_pro = θψ = −f_adv.
pub fn bilinear_zero_sum() -> QuadraticGameSpec {
    QuadraticGameSpec { a: 1.0, d: -1.0, ..QuadraticGameSpec::default() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DseCertificate {
    pub follower_gradient: f64,
    pub total_derivative: f64,
    pub second_total_derivative: f64,
    pub holds: bool,
}

/// Local Stackelberg certificate: follower stationarity, leader stationarity
/// along the best response, and strict concavity of the reduced objective.
pub fn dse_certificate(spec: &QuadraticGameSpec, theta: f64, psi: f64, tol: f64) -> DseCertificate {
    let follower_gradient = spec.eval(theta, psi).dadv_dpsi;
    let total_derivative = spec.total_derivative(theta, psi);
    let second_total_derivative = spec.second_total_derivative();
    let holds = follower_gradient.abs() <= tol && total_derivative.abs() <= tol && second_total_derivative < 0.0;
    DseCertificate { follower_gradient, total_derivative, second_total_derivative, holds }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> QuadraticGameSpec {
        QuadraticGameSpec::new(1.0, 0.0, 0.0, -1.0, -0.5).unwrap()
    }

    #[test]
    fn stackpg_follows_closed_form_recursion() {
        let lr = 0.1;
        let path = stackpg_quadratic(&canonical(), (1.0, -1.0), lr, 1.0, 0.0, 500).unwrap();
        for (k, &(theta, psi)) in path.iter().enumerate() {
            assert!(theta.abs() <= (1.0 - 2.0 * lr).powi(k as i32) + 1e-12);
            assert_eq!(psi, -theta);
        }
        let (theta, psi) = *path.last().unwrap();
        assert!(dse_certificate(&canonical(), theta, psi, 1e-6).holds);
    }

    #[test]
    fn gda_spirals_outward_on_bilinear_game() {
        let path = gda_quadratic(&bilinear_zero_sum(), (1.0, 1.0), 0.05, 1000);
        let norms: Vec<f64> = path.iter().map(|(t, p)| (t * t + p * p).sqrt()).collect();
        assert!(norms.windows(2).all(|w| w[1] >= w[0]));
        assert!(norms.iter().all(|&n| n > 1e-3));
    }
}
