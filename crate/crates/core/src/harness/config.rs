//! Experiment configuration files.
//!
//! Configs are TOML. Unknown keys are rejected everywhere, and parse errors
//! carry the line and column of the offending key.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::environments::{DelayedPointLander, HighwayMerge, HighwayParams, LanderParams, MatrixGame, TwoPlayerEnv};
use crate::error::{Error, Result};
use crate::learners::{Formulation, Learner, StackPGConfig, TrainConfig, TrainSetup};
use crate::numcore::{Activation, MlpSpec};

use super::sweep::SweepSpec;

/// Environment selection plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    Highway {
        #[serde(default)]
        params: HighwayParams,
    },
    Lander {
        #[serde(default)]
        params: LanderParams,
    },
    /// One-shot matrix game; rows are protagonist actions.
    Matrix { payoff: Vec<Vec<f64>> },
}

impl EnvConfig {
    pub fn build(&self) -> Result<Box<dyn TwoPlayerEnv>> {
        Ok(match self {
            EnvConfig::Highway { params } => Box::new(HighwayMerge::new(params.clone())),
            EnvConfig::Lander { params } => Box::new(DelayedPointLander::new(params.clone())),
            EnvConfig::Matrix { payoff } => Box::new(MatrixGame::new(payoff.clone())?),
        })
    }

    /// Sweep used when none is given explicitly.
    pub fn default_sweep(&self) -> Option<SweepSpec> {
        match self {
            EnvConfig::Highway { .. } => Some(SweepSpec::new("aggressiveness", 0, 10, 1)),
            EnvConfig::Lander { .. } => Some(SweepSpec::new("delay", 0, 4, 1)),
            EnvConfig::Matrix { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Hidden widths of the protagonist and the oracle.
    pub protagonist: Vec<usize>,
    pub adversary: Vec<usize>,
    pub activation: Activation,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { protagonist: vec![32, 32], adversary: vec![8, 8], activation: Activation::Tanh }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

fn default_eval_episodes() -> usize {
    48
}

fn default_log_eval_episodes() -> usize {
    8
}

/// One experiment: an environment, a learner and a list of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub learner: Learner,
    #[serde(default)]
    pub formulation: Formulation,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    /// Episodes per iteration for the training log's no-adversary evaluation.
    #[serde(default = "default_log_eval_episodes")]
    pub log_eval_episodes: usize,
    /// Robustness sweep, e.g. `"delay=0..3"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
    pub env: EnvConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub train: StackPGConfig,
}

impl GameConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: GameConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML rendering; identical configs render identically.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        if self.eval_episodes == 0 {
            return Err(Error::Config("`eval_episodes` must be a positive integer".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("`seeds` must list at least one seed".into()));
        }
        for (key, widths) in [("network.protagonist", &self.network.protagonist), ("network.adversary", &self.network.adversary)] {
            if widths.iter().any(|&w| w == 0) {
                return Err(Error::Config(format!("`{key}` widths must be positive")));
            }
        }
        let env = self.env.build()?;
        if let Some(sweep) = self.sweep_spec()? {
            sweep.check(env.as_ref())?;
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learner: self.learner,
            formulation: self.formulation,
            stack: self.train.clone(),
            log_eval_episodes: self.log_eval_episodes,
        }
    }

    /// Explicit sweep if configured, otherwise the environment default.
    pub fn sweep_spec(&self) -> Result<Option<SweepSpec>> {
        match &self.sweep {
            Some(s) => SweepSpec::parse(s).map(Some),
            None => Ok(self.env.default_sweep()),
        }
    }

    pub fn setup(&self) -> Result<TrainSetup> {
        let env = self.env.build()?;
        let d = env.descriptor().clone();
        let net = &self.network;
        let mlp = |input, output, hidden: &Vec<usize>| {
            if input == 0 {
                Ok(MlpSpec::tabular(output))
            } else {
                MlpSpec::new(input, output, hidden.clone(), net.activation)
            }
        };
        Ok(TrainSetup {
            pro_spec: mlp(d.obs_dim_pro, d.n_actions_pro, &net.protagonist)?,
            adv_spec: mlp(d.obs_dim_adv, d.n_actions_adv, &net.adversary)?,
            ora_spec: mlp(d.obs_dim_pro, d.n_actions_pro, &net.protagonist)?,
            env,
            config: self.train_config(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
learner = "stackpg"

[env]
name = "highway"
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = GameConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.seeds, vec![0, 1, 2, 3, 4]);
        assert_eq!((cfg.eval_episodes, cfg.log_eval_episodes), (48, 8));
        assert_eq!(cfg.formulation, Formulation::RrlStack);
        assert_eq!(cfg.env, EnvConfig::Highway { params: HighwayParams::default() });
        assert_eq!(cfg.sweep_spec().unwrap().unwrap().param, "aggressiveness");
    }

    #[test]
    fn missing_learner_is_named() {
        let err = GameConfig::from_toml_str("[env]\nname = \"highway\"\n").unwrap_err().to_string();
        assert!(err.contains("learner"), "{err}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "learner = \"gda\"\n\n[train]\nlr_thetaa = 0.1\n\n[env]\nname = \"lander\"\n";
        let err = GameConfig::from_toml_str(text).unwrap_err().to_string();
        assert!(err.contains("lr_thetaa"), "{err}");
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn unknown_env_param_rejected() {
        let text = "learner = \"gda\"\n[env]\nname = \"highway\"\n[env.params]\nspeed_of_light = 3\n";
        let err = GameConfig::from_toml_str(text).unwrap_err().to_string();
        assert!(err.contains("speed_of_light"), "{err}");
    }

    #[test]
    fn negative_lambda_fails_validation() {
        let text = format!("{MINIMAL}\n[train]\nlambda = -1.0\n");
        let err = GameConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("lambda"), "{err}");
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = GameConfig::from_toml_str(MINIMAL).unwrap();
        let b = GameConfig::from_toml_str(&format!("# comment\n{MINIMAL}")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.train.alpha = 0.4;
        assert_ne!(a.hash(), c.hash());
        let round = GameConfig::from_toml_str(&a.to_toml()).unwrap();
        assert_eq!(round, a);
    }

    #[test]
    fn matrix_env_gets_tabular_policies() {
        let text = "learner = \"stackpg\"\n[env]\nname = \"matrix\"\npayoff = [[3.0, 0.0], [2.0, 2.0]]\n";
        let cfg = GameConfig::from_toml_str(text).unwrap();
        let setup = cfg.setup().unwrap();
        assert_eq!(setup.pro_spec, MlpSpec::tabular(2));
        assert!(cfg.sweep_spec().unwrap().is_none());
    }

    #[test]
    fn sweep_outside_action_range_rejected() {
        let text = format!("sweep = \"aggressiveness=0..12\"\n{MINIMAL}");
        assert!(GameConfig::from_toml_str(&text).is_err());
        let text = format!("sweep = \"delay=0..3\"\n{MINIMAL}");
        let err = GameConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, Error::Input(_)), "{err}");
    }
}
