//! Configuration files, run artifacts, robustness sweeps and self-checks.

pub mod checkpoint;
pub mod config;
pub mod dump;
pub mod run;
pub mod selftest;
pub mod sweep;

pub use checkpoint::Checkpoint;
pub use config::{EnvConfig, GameConfig, NetworkConfig};
pub use dump::dump_trajectories;
pub use run::{
    alpha_sweep, checkpoint_path, default_alphas, evaluate_runs, resolve_out_dir, train_all, train_csv_path, train_seed,
    AlphaSetting, CsvLog, SeedRun, OUT_DIR_ENV,
};
pub use selftest::{render_table, run_selftest, SuiteResult};
pub use sweep::{eval_sweep, EvalReport, SeedResult, SweepSpec};
