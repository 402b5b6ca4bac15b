//! Plain-text checkpoints.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! save → load → save reproduces the file byte for byte.
//!
//! ```text
//! stackrl-checkpoint 1
//! config_hash <hex>
//! seed 3
//! iteration 300
//! alpha 0.5
//! agent pro
//! input_dim 7
//! output_dim 3
//! hidden 32 32
//! activation tanh
//! params 1316
//! <one value per line>
//! agent adv
//! ...
//! config
//! <the run's canonical TOML>
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::learners::TrainState;
use crate::numcore::{Activation, MlpSpec, ParamVector, Policy};

use super::config::GameConfig;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "stackrl-checkpoint";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: String,
    pub seed: u64,
    pub state: TrainState,
    pub config: GameConfig,
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Tanh => "tanh",
        Activation::Relu => "relu",
    }
}

fn write_agent(out: &mut String, name: &str, policy: &Policy) {
    let spec = &policy.spec;
    let hidden: Vec<String> = spec.hidden.iter().map(|w| w.to_string()).collect();
    out.push_str(&format!("agent {name}\n"));
    out.push_str(&format!("input_dim {}\n", spec.input_dim));
    out.push_str(&format!("output_dim {}\n", spec.output_dim));
    out.push_str(&format!("hidden {}\n", hidden.join(" ")).trim_end());
    out.push('\n');
    out.push_str(&format!("activation {}\n", activation_name(spec.activation)));
    out.push_str(&format!("params {}\n", policy.params.dim()));
    for v in policy.params.iter() {
        out.push_str(&format!("{v:?}\n"));
    }
}

impl Checkpoint {
    pub fn new(config: &GameConfig, seed: u64, state: TrainState) -> Self {
        Self { config_hash: config.hash(), seed, state, config: config.clone() }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {FORMAT_VERSION}\n");
        out.push_str(&format!("config_hash {}\n", self.config_hash));
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!("iteration {}\n", self.state.iteration));
        out.push_str(&format!("alpha {:?}\n", self.state.alpha));
        write_agent(&mut out, "pro", &self.state.pro);
        write_agent(&mut out, "adv", &self.state.adv);
        write_agent(&mut out, "ora", &self.state.ora);
        out.push_str("config\n");
        out.push_str(&self.config.to_toml());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
        let header = lines.next_line()?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| Error::Format("not a stackrl checkpoint".into()))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let config_hash = lines.field("config_hash")?.to_string();
        let seed = lines.parsed("seed")?;
        let iteration = lines.parsed("iteration")?;
        let alpha = lines.parsed("alpha")?;
        let pro = lines.agent("pro")?;
        let adv = lines.agent("adv")?;
        let ora = lines.agent("ora")?;
        if lines.next_line()? != "config" {
            return Err(lines.error("expected `config`"));
        }
        let rest: Vec<&str> = lines.inner.map(|(_, l)| l).collect();
        let config = GameConfig::from_toml_str(&rest.join("\n"))?;
        if config.hash() != config_hash {
            return Err(Error::Format("config hash does not match the embedded config".into()));
        }
        Ok(Self { config_hash, seed, state: TrainState { pro, adv, ora, alpha, iteration }, config })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

struct Lines<'a, I: Iterator<Item = (usize, &'a str)>> {
    inner: I,
    last: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    fn error(&self, msg: &str) -> Error {
        Error::Format(format!("line {}: {msg}", self.last + 1))
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i;
                Ok(l)
            }
            None => Err(Error::Format("unexpected end of checkpoint".into())),
        }
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ if line == key => Ok(""),
            _ => Err(self.error(&format!("expected `{key}`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.parse().map_err(|_| self.error(&format!("bad value for `{key}`: {v}")))
    }

    fn agent(&mut self, name: &str) -> Result<Policy> {
        if self.field("agent")? != name {
            return Err(self.error(&format!("expected agent `{name}`")));
        }
        let input_dim = self.parsed("input_dim")?;
        let output_dim = self.parsed("output_dim")?;
        let hidden = self
            .field("hidden")?
            .split_whitespace()
            .map(|w| w.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| self.error("bad hidden widths"))?;
        let activation = match self.field("activation")? {
            "tanh" => Activation::Tanh,
            "relu" => Activation::Relu,
            other => return Err(self.error(&format!("unknown activation `{other}`"))),
        };
        let n: usize = self.parsed("params")?;
        let mut params = Vec::with_capacity(n);
        for _ in 0..n {
            let line = self.next_line()?;
            params.push(line.parse::<f64>().map_err(|_| self.error(&format!("bad parameter `{line}`")))?);
        }
        let spec = MlpSpec { input_dim, output_dim, hidden, activation };
        Policy::new(spec, ParamVector::from(params)).map_err(|e| self.error(&e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let cfg = GameConfig::from_toml_str("learner = \"stackpg\"\n[env]\nname = \"lander\"\n").unwrap();
        let setup = cfg.setup().unwrap();
        let mut state = setup.initial_state(7);
        state.pro.params[0] = 0.1 + 0.2;
        state.pro.params[1] = -1e-300;
        state.pro.params[2] = f64::MIN_POSITIVE / 3.0;
        state.alpha = 1.0 / 3.0;
        state.iteration = 12;
        Checkpoint::new(&cfg, 7, state)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let text = ck.to_text();
        let back = Checkpoint::from_text(&text).unwrap();
        assert_eq!(back, ck);
        for (a, b) in back.state.pro.params.iter().zip(ck.state.pro.params.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn tabular_agents_round_trip() {
        let cfg = GameConfig::from_toml_str("learner = \"gda\"\n[env]\nname = \"matrix\"\npayoff = [[1.0, 2.0]]\n").unwrap();
        let ck = Checkpoint::new(&cfg, 0, cfg.setup().unwrap().initial_state(0));
        assert_eq!(Checkpoint::from_text(&ck.to_text()).unwrap(), ck);
    }

    #[test]
    fn corrupted_inputs_are_rejected() {
        let text = sample().to_text();
        assert!(Checkpoint::from_text("hello\n").is_err());
        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(Checkpoint::from_text(&truncated).is_err());
        let tampered = text.replace("seed 7", "seed x");
        let err = Checkpoint::from_text(&tampered).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let rehashed = text.replace("lr_theta = 0.003", "lr_theta = 0.004");
        assert!(Checkpoint::from_text(&rehashed).is_err());
    }
}
