//! Running configured experiments and writing their artifacts.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::learners::{train, Learner, LogRow, TrainState};

use super::checkpoint::Checkpoint;
use super::config::GameConfig;
use super::sweep::{eval_sweep, EvalReport, SweepSpec};

/// Environment variable that overrides every output directory.
pub const OUT_DIR_ENV: &str = "STACKRL_OUT_DIR";

/// `STACKRL_OUT_DIR` when set, otherwise `fallback`.
pub fn resolve_out_dir(fallback: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => fallback.to_path_buf(),
    }
}

/// CSV writer that flushes every row as a single write.
pub struct CsvLog {
    file: File,
}

impl CsvLog {
    pub fn create(path: &Path, config_hash: &str, header: &[&str]) -> Result<Self> {
        let mut file = File::create(path)?;
        file.write_all(format!("# config_hash={config_hash}\n{}\n", header.join(",")).as_bytes())?;
        file.flush()?;
        Ok(Self { file })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        let line = format!("{}\n", fields.join(","));
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

pub fn train_csv_path(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("train_seed{seed}.csv"))
}

pub fn checkpoint_path(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("checkpoint_seed{seed}.txt"))
}

/// Final state of one seed's run.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub state: TrainState,
    pub rows: Vec<LogRow>,
}

/// Trains one seed, streaming its log to `train_seed<k>.csv` and writing
/// `checkpoint_seed<k>.txt` at the end.
pub fn train_seed(config: &GameConfig, seed: u64, out_dir: &Path) -> Result<SeedRun> {
    let setup = config.setup()?;
    let hash = config.hash();
    std::fs::create_dir_all(out_dir)?;
    let mut log = CsvLog::create(&train_csv_path(out_dir, seed), &hash, &LogRow::HEADER)?;
    let outcome = train(&setup, seed, None, |row| log.row(&row.fields()))?;
    Checkpoint::new(config, seed, outcome.state.clone()).save(&checkpoint_path(out_dir, seed))?;
    Ok(SeedRun { seed, state: outcome.state, rows: outcome.rows })
}

/// Trains every configured seed in order.
pub fn train_all(config: &GameConfig, out_dir: &Path) -> Result<Vec<SeedRun>> {
    config.seeds.iter().map(|&seed| train_seed(config, seed, out_dir)).collect()
}

/// Evaluates trained protagonists on `sweep` and writes `eval.csv`.
pub fn evaluate_runs(config: &GameConfig, runs: &[SeedRun], sweep: &SweepSpec, out_dir: &Path) -> Result<EvalReport> {
    let env = config.env.build()?;
    let pros: Vec<_> = runs.iter().map(|r| (r.seed, &r.state.pro)).collect();
    let report = eval_sweep(env.as_ref(), sweep, &pros, config.eval_episodes)?;
    std::fs::write(out_dir.join("eval.csv"), report.to_csv(&config.hash()))?;
    Ok(report)
}

/// Label used for one entry of an α sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSetting {
    Fixed(f64),
    /// MGDA tuning started from the config's α.
    Auto,
}

impl AlphaSetting {
    pub fn label(self) -> String {
        match self {
            AlphaSetting::Fixed(a) => format!("{a}"),
            AlphaSetting::Auto => "auto".into(),
        }
    }

    pub fn apply(self, config: &GameConfig) -> GameConfig {
        let mut c = config.clone();
        match self {
            AlphaSetting::Fixed(a) => {
                c.train.alpha = a;
                c.train.auto_tuning = false;
            }
            AlphaSetting::Auto => c.train.auto_tuning = true,
        }
        c
    }
}

pub fn default_alphas() -> Vec<f64> {
    vec![0.0, 0.4, 0.5, 0.6, 1.0]
}

/// Trains and evaluates one run set per α setting.
///
/// Each setting writes into `<out_dir>/alpha_<label>/`; a combined
/// `alpha_sweep.csv` summarizes the cross-seed mean and SD per sweep value.
pub fn alpha_sweep(config: &GameConfig, settings: &[AlphaSetting], out_dir: &Path) -> Result<Vec<(AlphaSetting, EvalReport)>> {
    if config.learner != Learner::Stackpg {
        return Err(Error::Config(format!("alpha sweep needs `learner = \"stackpg\"`, got `{}`", config.learner.name())));
    }
    let sweep = config
        .sweep_spec()?
        .ok_or_else(|| Error::Input("alpha sweep needs an environment with a sweep parameter".into()))?;
    std::fs::create_dir_all(out_dir)?;
    let mut summary = CsvLog::create(&out_dir.join("alpha_sweep.csv"), &config.hash(), &["alpha", "param", "value", "mean_return", "sd"])?;
    let mut reports = Vec::new();
    for &setting in settings {
        let cfg = setting.apply(config);
        let dir = out_dir.join(format!("alpha_{}", setting.label()));
        let runs = train_all(&cfg, &dir)?;
        let report = evaluate_runs(&cfg, &runs, &sweep, &dir)?;
        for (i, v) in report.values.iter().enumerate() {
            summary.row(&[
                setting.label(),
                report.param.clone(),
                v.to_string(),
                report.mean_at(i).to_string(),
                report.sd_at(i).to_string(),
            ])?;
        }
        reports.push((setting, report));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(learner: &str) -> GameConfig {
        let text = format!(
            "learner = \"{learner}\"\nseeds = [1, 2]\neval_episodes = 4\n[env]\nname = \"matrix\"\npayoff = [[3.0, 0.0], [2.0, 2.0]]\n[train]\nn_iter = 3\nM = 4\n"
        );
        GameConfig::from_toml_str(&text).unwrap()
    }

    #[test]
    fn train_writes_csv_and_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny("stackpg");
        let runs = train_all(&cfg, dir.path()).unwrap();
        assert_eq!(runs.len(), 2);
        let csv = std::fs::read_to_string(train_csv_path(dir.path(), 2)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), format!("# config_hash={}", cfg.hash()));
        assert_eq!(lines.next().unwrap(), LogRow::HEADER.join(","));
        assert_eq!(lines.count(), 3);
        let ck = Checkpoint::load(&checkpoint_path(dir.path(), 2)).unwrap();
        assert_eq!(ck.state, runs[1].state);
        assert_eq!(ck.state.iteration, 3);
    }

    #[test]
    fn alpha_sweep_requires_stackpg_and_a_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let err = alpha_sweep(&tiny("gda"), &[AlphaSetting::Auto], dir.path()).unwrap_err();
        assert!(err.to_string().contains("stackpg"));
        let err = alpha_sweep(&tiny("stackpg"), &[AlphaSetting::Auto], dir.path()).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn alpha_settings_rewrite_config() {
        let cfg = tiny("stackpg");
        let fixed = AlphaSetting::Fixed(0.4).apply(&cfg);
        assert_eq!((fixed.train.alpha, fixed.train.auto_tuning), (0.4, false));
        assert!(AlphaSetting::Auto.apply(&cfg).train.auto_tuning);
        assert_eq!(AlphaSetting::Fixed(0.0).label(), "0");
    }
}
