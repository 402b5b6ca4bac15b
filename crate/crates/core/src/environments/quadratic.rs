//! Scalar quadratic leader-follower games with closed-form equilibria.
//!
//! f_pro(θ, ψ) = aθψ + bθ² + cψ² + gθ + hψ
//! f_adv(θ, ψ) = dθψ + eψ² + kψ
//!
//! The protagonist (leader) maximizes f_pro, the adversary (follower)
//! maximizes f_adv. With e < 0 the follower's best response is the unique
//! r*(θ) = −(dθ + k) / (2e).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadraticGameSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub g: f64,
    pub h: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEval {
    pub f_pro: f64,
    pub f_adv: f64,
    pub dpro_dtheta: f64,
    pub dpro_dpsi: f64,
    pub dadv_dpsi: f64,
    pub d2adv_dpsi2: f64,
    pub d2adv_dtheta_dpsi: f64,
}

/// A pure equilibrium point of the quadratic game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub theta: f64,
    pub psi: f64,
    pub f_pro: f64,
}

impl QuadraticGameSpec {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64) -> Result<Self> {
        let spec = Self { a, b, c, d, e, ..Self::default() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_linear(mut self, g: f64, h: f64, k: f64) -> Self {
        self.g = g;
        self.h = h;
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.b, self.c, self.d, self.e, self.g, self.h, self.k];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("quadratic game coefficients must be finite".into()));
        }
        if self.e >= 0.0 {
            return Err(Error::Config(format!("quadratic game needs e < 0 for a unique best response, got {}", self.e)));
        }
        Ok(())
    }

    pub fn eval(&self, theta: f64, psi: f64) -> QuadEval {
        let Self { a, b, c, d, e, g, h, k } = *self;
        QuadEval {
            f_pro: a * theta * psi + b * theta * theta + c * psi * psi + g * theta + h * psi,
            f_adv: d * theta * psi + e * psi * psi + k * psi,
            dpro_dtheta: a * psi + 2.0 * b * theta + g,
            dpro_dpsi: a * theta + 2.0 * c * psi + h,
            dadv_dpsi: d * theta + 2.0 * e * psi + k,
            d2adv_dpsi2: 2.0 * e,
            d2adv_dtheta_dpsi: d,
        }
    }

    pub fn best_response(&self, theta: f64) -> f64 {
        -(self.d * theta + self.k) / (2.0 * self.e)
    }

    /// Leader gradient through the follower's implicit best response.
    pub fn total_derivative(&self, theta: f64, psi: f64) -> f64 {
        let q = self.eval(theta, psi);
        q.dpro_dtheta - q.d2adv_dtheta_dpsi / q.d2adv_dpsi2 * q.dpro_dpsi
    }

    /// Coefficients (κ, l) of the leader's reduced objective κθ² + lθ + const.
    fn reduced(&self) -> (f64, f64) {
        let p = -self.d / (2.0 * self.e);
        let q = -self.k / (2.0 * self.e);
        let kappa = self.a * p + self.b + self.c * p * p;
        let l = self.a * q + 2.0 * self.c * p * q + self.g + self.h * p;
        (kappa, l)
    }

    /// Second total derivative of the leader objective along the best response.
    pub fn second_total_derivative(&self) -> f64 {
        2.0 * self.reduced().0
    }

    /// Stackelberg equilibrium, when the reduced leader objective is strictly concave.
    pub fn stackelberg(&self) -> Option<QuadPoint> {
        let (kappa, l) = self.reduced();
        if kappa >= 0.0 {
            return None;
        }
        let theta = -l / (2.0 * kappa);
        let psi = self.best_response(theta);
        Some(QuadPoint { theta, psi, f_pro: self.eval(theta, psi).f_pro })
    }

    /// Nash equilibrium (mutual best responses), when the leader's own objective is strictly concave in θ.
    pub fn nash(&self) -> Option<QuadPoint> {
        if self.b >= 0.0 {
            return None;
        }
        let p = -self.d / (2.0 * self.e);
        let q = -self.k / (2.0 * self.e);
        let denom = self.a * p + 2.0 * self.b;
        if denom.abs() < 1e-12 {
            return None;
        }
        let theta = -(self.a * q + self.g) / denom;
        let psi = self.best_response(theta);
        Some(QuadPoint { theta, psi, f_pro: self.eval(theta, psi).f_pro })
    }
}

/// Closed-form values and derivatives at (θ, ψ).
pub fn quad_game_eval(spec: &QuadraticGameSpec, theta: f64, psi: f64) -> QuadEval {
    spec.eval(theta, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn canonical() -> QuadraticGameSpec {
        QuadraticGameSpec::new(1.0, 0.0, 0.0, -1.0, -0.5).unwrap()
    }

    #[test]
    fn canonical_best_response_and_total_derivative() {
        let s = canonical();
        for theta in [-2.0, -0.3, 0.0, 1.0, 4.5] {
            assert_eq!(s.best_response(theta), -theta);
            assert!((s.total_derivative(theta, -theta) + 2.0 * theta).abs() < 1e-12);
        }
        assert!(s.second_total_derivative() < 0.0);
        let se = s.stackelberg().unwrap();
        assert_eq!((se.theta, se.psi), (0.0, 0.0));
    }

    #[test]
    fn decoupled_at_zero_theta() {
        let s = canonical();
        let q = s.eval(0.0, 0.7);
        assert_eq!(q.f_pro, 0.0);
        assert_eq!(q.dadv_dpsi, 2.0 * s.e * 0.7);
    }

    #[test]
    fn rejects_nonnegative_e() {
        assert!(QuadraticGameSpec::new(1.0, 0.0, 0.0, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(
            coef in proptest::collection::vec(-2.0f64..2.0, 8),
            e in -2.0f64..-0.1,
            theta in -3.0f64..3.0,
            psi in -3.0f64..3.0,
        ) {
            let s = QuadraticGameSpec { a: coef[0], b: coef[1], c: coef[2], d: coef[3], e, g: coef[4], h: coef[5], k: coef[6] };
            let h = 1e-5;
            let q = s.eval(theta, psi);
            let fd = |f: &dyn Fn(f64, f64) -> f64, dt: f64, dp: f64| (f(theta + dt, psi + dp) - f(theta - dt, psi - dp)) / (2.0 * h);
            let pro = |t: f64, p: f64| s.eval(t, p).f_pro;
            let adv = |t: f64, p: f64| s.eval(t, p).f_adv;
            let dadv_dpsi = |t: f64, p: f64| s.eval(t, p).dadv_dpsi;
            prop_assert!((fd(&pro, h, 0.0) - q.dpro_dtheta).abs() < 1e-6);
            prop_assert!((fd(&pro, 0.0, h) - q.dpro_dpsi).abs() < 1e-6);
            prop_assert!((fd(&adv, 0.0, h) - q.dadv_dpsi).abs() < 1e-6);
            prop_assert!((fd(&dadv_dpsi, 0.0, h) - q.d2adv_dpsi2).abs() < 1e-6);
            prop_assert!((fd(&dadv_dpsi, h, 0.0) - q.d2adv_dtheta_dpsi).abs() < 1e-6);
        }

        #[test]
        fn best_response_is_follower_stationary(
            d in -2.0f64..2.0, e in -2.0f64..-0.1, k in -1.0f64..1.0, theta in -3.0f64..3.0,
        ) {
            let s = QuadraticGameSpec { d, e, k, ..QuadraticGameSpec::default() };
            prop_assert!(s.eval(theta, s.best_response(theta)).dadv_dpsi.abs() < 1e-12);
        }
    }
}
