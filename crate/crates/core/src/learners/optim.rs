//! Ascent optimizers applied to update directions.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64, m: Vec<f64>, v: Vec<f64>, t: u32 },
}

impl Optimizer {
    pub fn sgd(lr: f64) -> Self {
        Optimizer::Sgd { lr }
    }

    pub fn adam(lr: f64, beta1: f64, beta2: f64, dim: usize) -> Self {
        Optimizer::Adam { lr, beta1, beta2, eps: 1e-8, m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    pub fn new(kind: OptimizerKind, lr: f64, betas: (f64, f64), dim: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Self::sgd(lr),
            OptimizerKind::Adam => Self::adam(lr, betas.0, betas.1, dim),
        }
    }

    /// Moves `params` along the ascent direction `dir`.
    pub fn step(&mut self, params: &mut [f64], dir: &[f64]) {
        assert_eq!(params.len(), dir.len(), "direction length mismatch");
        match self {
            Optimizer::Sgd { lr } => {
                for (p, d) in params.iter_mut().zip(dir) {
                    *p += *lr * d;
                }
            }
            Optimizer::Adam { lr, beta1, beta2, eps, m, v, t } => {
                *t += 1;
                let c1 = 1.0 - beta1.powi(*t as i32);
                let c2 = 1.0 - beta2.powi(*t as i32);
                for i in 0..params.len() {
                    m[i] = *beta1 * m[i] + (1.0 - *beta1) * dir[i];
                    v[i] = *beta2 * v[i] + (1.0 - *beta2) * dir[i] * dir[i];
                    params[i] += *lr * (m[i] / c1) / ((v[i] / c2).sqrt() + *eps);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_is_plain_ascent() {
        let mut p = vec![1.0, 2.0];
        Optimizer::sgd(0.5).step(&mut p, &[2.0, -4.0]);
        assert_eq!(p, vec![2.0, 0.0]);
    }

    #[test]
    fn adam_first_step_has_magnitude_lr() {
        let mut p = vec![0.0, 0.0, 0.0];
        let mut opt = Optimizer::adam(0.01, 0.9, 0.999, 3);
        opt.step(&mut p, &[5.0, -0.2, 0.0]);
        assert!((p[0] - 0.01).abs() < 1e-9);
        assert!((p[1] + 0.01).abs() < 1e-7);
        assert_eq!(p[2], 0.0);
    }
}
