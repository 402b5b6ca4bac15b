//! Robustness sweeps: evaluate a protagonist with the perturbation pinned to
//! each value of a range in turn.

use crate::environments::TwoPlayerEnv;
use crate::error::{Error, Result};
use crate::learners::evaluate;
use crate::numcore::Policy;

/// `param=lo..hi[:step]`, bounds inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub param: String,
    pub lo: usize,
    pub hi: usize,
    pub step: usize,
}

impl SweepSpec {
    pub fn new(param: &str, lo: usize, hi: usize, step: usize) -> Self {
        Self { param: param.to_string(), lo, hi, step }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Input(format!("sweep `{text}` is not of the form param=lo..hi[:step]"));
        let (param, range) = text.split_once('=').ok_or_else(bad)?;
        let (range, step) = match range.split_once(':') {
            Some((r, s)) => (r, s.trim().parse().map_err(|_| bad())?),
            None => (range, 1),
        };
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        let param = param.trim();
        if param.is_empty() || step == 0 || hi < lo {
            return Err(bad());
        }
        Ok(Self::new(param, lo, hi, step))
    }

    pub fn values(&self) -> Vec<usize> {
        (self.lo..=self.hi).step_by(self.step).collect()
    }

    /// The parameter must be the one the environment exposes, and every
    /// value must be a valid adversary action.
    pub fn check(&self, env: &dyn TwoPlayerEnv) -> Result<()> {
        let d = env.descriptor();
        match env.sweep_param() {
            Some(p) if p == self.param => {}
            Some(p) => {
                return Err(Error::Input(format!("unknown sweep parameter `{}` for {} (expected `{p}`)", self.param, d.name)))
            }
            None => return Err(Error::Input(format!("{} has no sweep parameter", d.name))),
        }
        if self.hi >= d.n_actions_adv {
            return Err(Error::Input(format!(
                "sweep value {} out of range for `{}` (max {})",
                self.hi,
                self.param,
                d.n_actions_adv - 1
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}={}..{}", self.param, self.lo, self.hi)?;
        if self.step != 1 {
            write!(f, ":{}", self.step)?;
        }
        Ok(())
    }
}

/// Episode returns of one seed's protagonist at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    /// Indexed like `EvalReport::values`.
    pub returns: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub param: String,
    pub values: Vec<usize>,
    pub seeds: Vec<SeedResult>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

impl EvalReport {
    /// Per-seed mean returns at value index `i`.
    pub fn seed_means(&self, i: usize) -> Vec<f64> {
        self.seeds.iter().map(|s| mean(&s.returns[i])).collect()
    }

    /// Mean over seeds of the per-seed means at value index `i`.
    pub fn mean_at(&self, i: usize) -> f64 {
        mean(&self.seed_means(i))
    }

    /// Cross-seed SD at value index `i`.
    pub fn sd_at(&self, i: usize) -> f64 {
        sample_sd(&self.seed_means(i))
    }

    /// Sum over sweep values of the cross-seed means.
    pub fn aggregate(&self) -> f64 {
        (0..self.values.len()).map(|i| self.mean_at(i)).sum()
    }

    /// Mean over sweep values of the cross-seed means.
    pub fn sweep_mean(&self) -> f64 {
        self.aggregate() / self.values.len() as f64
    }

    /// Per-seed rows then one `all` row per value; `sd` is across episodes
    /// for seed rows and across seeds for `all` rows.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = format!("# config_hash={config_hash}\nparam,value,seed,mean_return,sd\n");
        for (i, v) in self.values.iter().enumerate() {
            for s in &self.seeds {
                let r = &s.returns[i];
                out.push_str(&format!("{},{v},{},{},{}\n", self.param, s.seed, mean(r), sample_sd(r)));
            }
        }
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{v},all,{},{}\n", self.param, self.mean_at(i), self.sd_at(i)));
        }
        out
    }
}

/// Evaluates each protagonist across the sweep with the adversary replaced
/// by the fixed sweep value.
pub fn eval_sweep(
    env: &dyn TwoPlayerEnv,
    sweep: &SweepSpec,
    protagonists: &[(u64, &Policy)],
    episodes: usize,
) -> Result<EvalReport> {
    sweep.check(env)?;
    let values = sweep.values();
    let mut seeds = Vec::with_capacity(protagonists.len());
    for &(seed, pro) in protagonists {
        let returns = values.iter().map(|&v| evaluate(env, pro, v, episodes, seed)).collect::<Result<Vec<_>>>()?;
        seeds.push(SeedResult { seed, returns });
    }
    Ok(EvalReport { param: sweep.param.clone(), values, seeds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{HighwayMerge, HighwayParams, MatrixGame};

    #[test]
    fn parse_forms() {
        assert_eq!(SweepSpec::parse("delay=0..4").unwrap(), SweepSpec::new("delay", 0, 4, 1));
        assert_eq!(SweepSpec::parse("aggressiveness=0..10:2").unwrap().values(), vec![0, 2, 4, 6, 8, 10]);
        for bad in ["delay", "delay=4..0", "delay=0..x", "=0..3", "delay=0..3:0"] {
            assert!(SweepSpec::parse(bad).is_err(), "{bad}");
        }
        let s = SweepSpec::parse("delay=1..3:2").unwrap();
        assert_eq!(SweepSpec::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn aggressiveness_sweep_has_eleven_values() {
        let env = HighwayMerge::new(HighwayParams::default());
        let s = SweepSpec::parse("aggressiveness=0..10").unwrap();
        s.check(&env).unwrap();
        assert_eq!(s.values().len(), 11);
    }

    #[test]
    fn unknown_param_is_input_error() {
        let env = HighwayMerge::new(HighwayParams::default());
        let err = SweepSpec::parse("delay=0..3").unwrap().check(&env).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
        let game = MatrixGame::new(vec![vec![1.0]]).unwrap();
        assert!(matches!(SweepSpec::parse("x=0..0").unwrap().check(&game), Err(Error::Input(_))));
    }

    #[test]
    fn report_statistics() {
        let report = EvalReport {
            param: "delay".into(),
            values: vec![0, 1],
            seeds: vec![
                SeedResult { seed: 0, returns: vec![vec![1.0, 3.0], vec![0.0, 0.0]] },
                SeedResult { seed: 1, returns: vec![vec![4.0, 4.0], vec![2.0, 2.0]] },
            ],
        };
        assert_eq!(report.seed_means(0), vec![2.0, 4.0]);
        assert_eq!(report.mean_at(0), 3.0);
        assert!((report.sd_at(0) - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(report.aggregate(), 4.0);
        let csv = report.to_csv("abc");
        assert!(csv.starts_with("# config_hash=abc\nparam,value,seed,mean_return,sd\n"));
        assert_eq!(csv.lines().count(), 2 + 4 + 2);
        assert!(csv.contains("delay,1,all,1,"));
    }
}
