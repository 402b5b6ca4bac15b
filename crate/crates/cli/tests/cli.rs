use std::path::Path;
use std::process::{Command, Output};

const MATRIX: &str = r#"
learner = "stackpg"
seeds = [3, 4]
eval_episodes = 8

[env]
name = "matrix"
payoff = [[3.0, 0.0], [2.0, 2.0]]

[train]
n_iter = 20
M = 8
"#;

const HIGHWAY: &str = r#"
learner = "gda"
seeds = [0, 1]
eval_episodes = 4

[env]
name = "highway"

[network]
protagonist = [4]
adversary = [4]

[train]
n_iter = 2
M = 4
"#;

fn stackrl(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stackrl"));
    cmd.args(args).env_remove("STACKRL_OUT_DIR");
    if let Some(dir) = out_dir {
        cmd.env("STACKRL_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn train_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", MATRIX);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = stackrl(&["train", &cfg], Some(out));
        assert!(res.status.success(), "{}", stderr(&res));
    }
    for seed in [3, 4] {
        let name = format!("train_seed{seed}.csv");
        let left = std::fs::read(a.join(&name)).unwrap();
        assert_eq!(left, std::fs::read(b.join(&name)).unwrap());
        let text = String::from_utf8(left).unwrap();
        assert!(text.starts_with("# config_hash="));
        assert_eq!(text.lines().nth(1).unwrap(), "iter,eval_return_no_adv,mean_R_pro,mean_R_ora,alpha,grad_norm_theta,grad_norm_psi,correction_norm,lambda_used,seed");
        assert_eq!(text.lines().count(), 22);
        assert!(a.join(format!("checkpoint_seed{seed}.txt")).exists());
    }
}

#[test]
fn out_flag_is_used_without_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", MATRIX);
    let out = dir.path().join("flag");
    let res = stackrl(&["train", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(out.join("train_seed3.csv").exists());
}

#[test]
fn missing_learner_fails_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[env]\nname = \"highway\"\n");
    let res = stackrl(&["train", &cfg], Some(dir.path()));
    assert!(!res.status.success());
    assert!(stderr(&res).contains("learner"), "{}", stderr(&res));
}

#[test]
fn typo_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &MATRIX.replace("n_iter = 20", "n_iters = 20"));
    let res = stackrl(&["train", &cfg], Some(dir.path()));
    assert!(!res.status.success());
    let err = stderr(&res);
    assert!(err.contains("n_iters") && err.contains("line 11"), "{err}");
}

#[test]
fn eval_dump_and_bad_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HIGHWAY);
    let out = dir.path().join("run");
    let res = stackrl(&["train", &cfg], Some(&out));
    assert!(res.status.success(), "{}", stderr(&res));
    let ck0 = out.join("checkpoint_seed0.txt");
    let ck1 = out.join("checkpoint_seed1.txt");
    let (c0, c1) = (ck0.to_str().unwrap(), ck1.to_str().unwrap());

    let res = stackrl(&["eval", c0, c1, "--sweep", "aggressiveness=0..10"], None);
    assert!(res.status.success(), "{}", stderr(&res));
    let report = String::from_utf8(res.stdout).unwrap();
    let rows: Vec<&str> = report.lines().skip(2).collect();
    assert_eq!(rows.len(), 11 * 2 + 11);
    assert_eq!(rows.iter().filter(|r| r.contains(",all,")).count(), 11);

    let res = stackrl(&["eval", c0, "--sweep", "delay=0..3"], None);
    assert!(!res.status.success());
    assert!(stderr(&res).contains("unknown sweep parameter"), "{}", stderr(&res));

    let res = stackrl(&["dump-traj", c0, "--episodes", "3"], None);
    assert!(res.status.success(), "{}", stderr(&res));
    let dump = String::from_utf8(res.stdout).unwrap();
    let done = dump.lines().skip(2).filter(|l| l.ends_with(",1")).count();
    assert_eq!(done, 3);
}

#[test]
fn selftest_passes() {
    let res = stackrl(&["selftest"], None);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stdout));
    let table = String::from_utf8(res.stdout).unwrap();
    assert_eq!(table.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}
