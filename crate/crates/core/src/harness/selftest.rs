//! Fast analytic checks of the whole stack, runnable from the CLI.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::environments::{brute_force_equilibria, QuadraticGameSpec};
use crate::error::Result;
use crate::learners::analytic::{bilinear_zero_sum, dse_certificate, gda_quadratic, stackpg_quadratic};
use crate::learners::{mgda_alpha, train};
use crate::numcore::{log_prob, log_prob_grad, log_prob_hessian, Activation, MlpSpec, Policy};
use crate::seeding::stream_rng;

use super::config::GameConfig;

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

type Suite = fn() -> Result<(bool, String)>;

pub const SUITES: [(&str, Suite); 7] = [
    ("log-prob derivatives", derivative_suite),
    ("mgda closed form", mgda_suite),
    ("stackelberg convergence", dse_suite),
    ("gda on bilinear game", gda_suite),
    ("alpha extremes", alpha_extremes_suite),
    ("se vs ne", se_vs_ne_suite),
    ("config validation", config_suite),
];

pub fn run_selftest() -> Vec<SuiteResult> {
    SUITES
        .iter()
        .map(|&(name, suite)| {
            let start = Instant::now();
            let (passed, detail) = suite().unwrap_or_else(|e| (false, format!("error: {e}")));
            SuiteResult { name, passed, detail, elapsed: start.elapsed() }
        })
        .collect()
}

pub fn render_table(results: &[SuiteResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status}  {:width$}  {:>7.2}s  {}\n", r.name, r.elapsed.as_secs_f64(), r.detail));
    }
    out
}

fn derivative_suite() -> Result<(bool, String)> {
    let mut rng = stream_rng(0x5e1f, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let hidden = vec![rng.gen_range(1..=6), rng.gen_range(1..=6)];
        let spec = MlpSpec::new(rng.gen_range(1..=4), rng.gen_range(2..=4), hidden, Activation::Tanh)?;
        let policy = Policy::random(spec.clone(), &mut rng);
        let obs: Vec<f64> = (0..spec.input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let action = rng.gen_range(0..spec.output_dim);
        let p = policy.params.to_vec();
        let g = log_prob_grad(&spec, &p, &obs, action)?;
        let h = log_prob_hessian(&spec, &p, &obs, action)?;
        let eps = 1e-5;
        for i in 0..p.len() {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus[i] += eps;
            minus[i] -= eps;
            let fd = (log_prob(&spec, &plus, &obs, action)? - log_prob(&spec, &minus, &obs, action)?) / (2.0 * eps);
            worst = worst.max(excess(g[i], fd));
            let gp = log_prob_grad(&spec, &plus, &obs, action)?;
            let gm = log_prob_grad(&spec, &minus, &obs, action)?;
            for j in 0..p.len() {
                worst = worst.max(excess(h[(j, i)], (gp[j] - gm[j]) / (2.0 * eps)));
            }
        }
    }
    Ok((worst <= 1.0, format!("worst error / tolerance = {worst:.1e}")))
}

/// Error relative to the tolerance max(1e-3, 1e-4·|reference|).
fn excess(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / (1e-4 * reference.abs()).max(1e-3)
}

fn mgda_suite() -> Result<(bool, String)> {
    let hand = [(mgda_alpha(&[1.0, 0.0], &[0.0, 1.0]), 0.5), (mgda_alpha(&[2.0, 0.0], &[-0.5, 0.0]), 0.2)];
    let hand_ok = hand.iter().all(|(got, want)| (got - want).abs() < 1e-12);
    let mut rng = stream_rng(0x3da, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..6);
        let g1: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g2: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm_at = |a: f64| g1.iter().zip(&g2).map(|(x, y)| (a * x + (1.0 - a) * y).powi(2)).sum::<f64>();
        let grid = (0..=10_000).map(|k| k as f64 * 1e-4).fold((0.0, f64::INFINITY), |best, a| {
            let v = norm_at(a);
            if v < best.1 {
                (a, v)
            } else {
                best
            }
        });
        worst = worst.max((mgda_alpha(&g1, &g2) - grid.0).abs());
    }
    Ok((hand_ok && worst <= 2e-4, format!("hand cases {}, worst grid gap {worst:.1e}", if hand_ok { "ok" } else { "wrong" })))
}

fn canonical_quadratic() -> Result<QuadraticGameSpec> {
    QuadraticGameSpec::new(1.0, 0.0, 0.0, -1.0, -0.5)
}

fn dse_suite() -> Result<(bool, String)> {
    let spec = canonical_quadratic()?;
    let path = stackpg_quadratic(&spec, (1.0, -1.0), 0.1, 1.0, 0.0, 500)?;
    let hit = path.iter().position(|(t, _)| t.abs() <= 1e-3);
    let &(theta, psi) = path.last().expect("path is nonempty");
    let cert = dse_certificate(&spec, theta, psi, 1e-6);
    let ok = hit.is_some() && cert.holds;
    Ok((ok, format!("|θ| ≤ 1e-3 at step {hit:?}, certificate {}", cert.holds)))
}

fn gda_suite() -> Result<(bool, String)> {
    let path = gda_quadratic(&bilinear_zero_sum(), (1.0, 1.0), 0.05, 1000);
    let closest = path.iter().map(|(t, p)| (t * t + p * p).sqrt()).fold(f64::INFINITY, f64::min);
    Ok((closest > 1e-3, format!("closest approach to the origin {closest:.3}")))
}

/// Stack-PG on the 2×2 game used by the α-extreme checks.
pub fn alpha_extreme_config(alpha: f64, seeds: Vec<u64>) -> GameConfig {
    let text = format!(
        "learner = \"stackpg\"\neval_episodes = 1\n\n[env]\nname = \"matrix\"\npayoff = [[3.0, 0.0], [2.0, 2.0]]\n\n\
         [train]\nalpha = {alpha:?}\nlr_theta = 0.02\nlr_psi = 0.02\nlr_omega = 0.02\nM = 16\nn_iter = 2000\n"
    );
    let mut cfg = GameConfig::from_toml_str(&text).expect("built-in config is valid");
    cfg.seeds = seeds;
    cfg
}

/// Number of seeds whose final protagonist plays `row` with probability ≥ 0.9.
pub fn alpha_extreme_hits(alpha: f64, row: usize, seeds: &[u64]) -> Result<usize> {
    let cfg = alpha_extreme_config(alpha, seeds.to_vec());
    let setup = cfg.setup()?;
    let mut hits = 0;
    for &seed in seeds {
        let out = train(&setup, seed, None, |_| Ok(()))?;
        if out.state.pro.probs(&[])?[row] >= 0.9 {
            hits += 1;
        }
    }
    Ok(hits)
}

fn alpha_extremes_suite() -> Result<(bool, String)> {
    let m = vec![vec![3.0, 0.0], vec![2.0, 2.0]];
    let eq = brute_force_equilibria(&m, 1.0)?;
    let seeds = [0, 1, 2, 3, 4];
    let maximin = alpha_extreme_hits(1.0, eq.maximin_action, &seeds)?;
    let maximax = alpha_extreme_hits(0.0, eq.maximax_action, &seeds)?;
    Ok((maximin >= 4 && maximax >= 4, format!("maximin row {maximin}/5, maximax row {maximax}/5")))
}

/// Random general-sum quadratic game with both equilibria defined.
pub fn random_quadratic<R: Rng>(rng: &mut R) -> QuadraticGameSpec {
    loop {
        let mut u = || -> f64 { rng.gen_range(-2.0..2.0) };
        let (a, b, c, d) = (u(), -u().abs() - 0.1, u(), u());
        let (g, h, k) = (u(), u(), u());
        let e = -rng.gen_range(0.1..2.0);
        let spec = QuadraticGameSpec { a, b, c, d, e, g, h, k };
        if spec.stackelberg().is_some() && spec.nash().is_some() {
            return spec;
        }
    }
}

fn se_vs_ne_suite() -> Result<(bool, String)> {
    let mut rng = stream_rng(0x5e5e, 0);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let spec = random_quadratic(&mut rng);
        let (se, ne) = (spec.stackelberg().expect("checked"), spec.nash().expect("checked"));
        worst = worst.min(se.f_pro - ne.f_pro);
    }
    Ok((worst >= -1e-8, format!("min SE − NE value {worst:.3e}")))
}

fn config_suite() -> Result<(bool, String)> {
    let text = "learner = \"stackpg\"\n[env]\nname = \"highway\"\n[train]\nlambda = -1.0\n";
    match GameConfig::from_toml_str(text) {
        Err(e) if e.to_string().contains("lambda") => Ok((true, "negative lambda rejected".into())),
        Err(e) => Ok((false, format!("unexpected error: {e}"))),
        Ok(_) => Ok((false, "negative lambda accepted".into())),
    }
}
