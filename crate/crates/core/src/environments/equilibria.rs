//! Pure-strategy equilibrium enumeration for small matrix games.

use crate::error::{Error, Result};

/// Follower best responses are compared with this slack.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    /// Row maximizing the worst-case payoff.
    pub maximin_action: usize,
    /// Row maximizing the best-case payoff.
    pub maximax_action: usize,
    /// Leader row at the Stackelberg equilibrium.
    pub se_action: usize,
    /// Protagonist value at the Stackelberg equilibrium.
    pub se_pro_value: f64,
    /// (row, column, protagonist value) for each pure Nash equilibrium.
    pub ne: Vec<(usize, usize, f64)>,
}

impl EquilibriumReport {
    pub fn ne_pro_values(&self) -> Vec<f64> {
        self.ne.iter().map(|&(_, _, v)| v).collect()
    }
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Follower payoff α·(−M[i][j]) + (1−α)·max_i' M[i'][j].
pub fn follower_payoff(m: &[Vec<f64>], alpha: f64, i: usize, j: usize) -> f64 {
    let best_col = m.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max);
    alpha * (-m[i][j]) + (1.0 - alpha) * best_col
}

/// Enumerates pure strategy pairs of the α-mixed leader-follower game.
pub fn brute_force_equilibria(m: &[Vec<f64>], alpha: f64) -> Result<EquilibriumReport> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || m.iter().any(|r| r.len() != cols) {
        return Err(Error::Input("payoff matrix must be rectangular and nonempty".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Input(format!("alpha must lie in [0, 1], got {alpha}")));
    }

    let maximin_action = argmax_first(m.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)));
    let maximax_action = argmax_first(m.iter().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)));

    let follower_best = |i: usize| -> Vec<usize> {
        let vals: Vec<f64> = (0..cols).map(|j| follower_payoff(m, alpha, i, j)).collect();
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..cols).filter(|&j| vals[j] >= top - TIE_TOL).collect()
    };

    // Pessimistic leader value over the follower's best-response set.
    let se_values: Vec<f64> =
        (0..rows).map(|i| follower_best(i).into_iter().map(|j| m[i][j]).fold(f64::INFINITY, f64::min)).collect();
    let se_action = argmax_first(se_values.iter().copied());
    let se_pro_value = se_values[se_action];

    let mut ne = Vec::new();
    for i in 0..rows {
        let br = follower_best(i);
        for &j in &br {
            let col_max = m.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            if m[i][j] >= col_max - TIE_TOL {
                ne.push((i, j, m[i][j]));
            }
        }
    }

    Ok(EquilibriumReport { maximin_action, maximax_action, se_action, se_pro_value, ne })
}
