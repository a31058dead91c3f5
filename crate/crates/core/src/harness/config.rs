//! Experiment configuration: TOML with dotted keys, strict about unknown
//! keys, with every default spelled out in the emitted effective config.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{DapParams, EnvKind, GsppParams, SmspParams};
use crate::model::Schedule;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Srl,
    Sil,
    Ppo,
    Greedy,
    Expert,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Srl => "srl",
            Algorithm::Sil => "sil",
            Algorithm::Ppo => "ppo",
            Algorithm::Greedy => "greedy",
            Algorithm::Expert => "expert",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Algorithm::Srl | Algorithm::Sil | Algorithm::Ppo)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "srl" => Ok(Algorithm::Srl),
            "sil" => Ok(Algorithm::Sil),
            "ppo" => Ok(Algorithm::Ppo),
            "greedy" => Ok(Algorithm::Greedy),
            "expert" => Ok(Algorithm::Expert),
            other => Err(Error::config(
                "algorithm",
                format!("unknown algorithm `{other}` (expected srl, sil, ppo, greedy, or expert)"),
            )),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A constant, or `[start, end]` interpolated linearly over the training
/// episodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Constant(f64),
    Linear([f64; 2]),
}

impl ScheduleSpec {
    pub fn schedule(&self, episodes: usize) -> Schedule {
        match *self {
            ScheduleSpec::Constant(v) => Schedule::constant(v),
            ScheduleSpec::Linear([a, b]) => Schedule::linear(a, b, episodes),
        }
    }

    fn values(&self) -> [f64; 2] {
        match *self {
            ScheduleSpec::Constant(v) => [v, v],
            ScheduleSpec::Linear(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: usize,
    /// Update batches per episode.
    pub iterations: usize,
    pub batch_size: usize,
    /// Trajectories collected per episode.
    pub rollouts: usize,
    pub replay_capacity: usize,
    /// Episodes at the start during which only the critic learns.
    pub critic_warmup: usize,
    pub gamma: f64,
    pub lr_actor: ScheduleSpec,
    pub lr_critic: ScheduleSpec,
    pub huber_delta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            iterations: 10,
            batch_size: 32,
            rollouts: 1,
            replay_capacity: 20_000,
            critic_warmup: 0,
            gamma: 0.9,
            lr_actor: ScheduleSpec::Constant(1e-3),
            lr_critic: ScheduleSpec::Constant(1e-3),
            huber_delta: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreConfig {
    pub sigma_f: ScheduleSpec,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self {
            sigma_f: ScheduleSpec::Constant(0.1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrlConfig {
    pub candidates: usize,
    pub sigma_b: ScheduleSpec,
    pub tau: ScheduleSpec,
}

impl Default for SrlConfig {
    fn default() -> Self {
        Self {
            candidates: 20,
            sigma_b: ScheduleSpec::Constant(1.0),
            tau: ScheduleSpec::Constant(1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FyConfig {
    pub eps: ScheduleSpec,
    pub samples: usize,
}

impl Default for FyConfig {
    fn default() -> Self {
        Self {
            eps: ScheduleSpec::Constant(0.1),
            samples: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self { clip: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Seeds the instances and the hidden environment parameters, shared
    /// by every training seed.
    pub seed: u64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// Directory of pre-generated datasets; empty means generate in memory.
    pub dir: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            seed: 1234,
            train: 20,
            val: 10,
            test: 10,
            dir: String::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Validation instances used per episode; 0 means all.
    pub val_subset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvKind,
    pub algorithm: Algorithm,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub explore: ExploreConfig,
    #[serde(default)]
    pub srl: SrlConfig,
    #[serde(default)]
    pub fy: FyConfig,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub smsp: SmspParams,
    #[serde(default)]
    pub dap: DapParams,
    #[serde(default)]
    pub gspp: GsppParams,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config {
            key: e
                .span()
                .and_then(|s| text[s].lines().next().map(|l| l.trim().to_string()))
                .unwrap_or_default(),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.train;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must list at least one seed"));
        }
        for (key, v) in [
            ("train.iterations", t.iterations),
            ("train.batch_size", t.batch_size),
            ("train.rollouts", t.rollouts),
            ("train.replay_capacity", t.replay_capacity),
            ("srl.candidates", self.srl.candidates),
            ("fy.samples", self.fy.samples),
            ("data.train", self.data.train),
            ("data.val", self.data.val),
            ("data.test", self.data.test),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&t.gamma) {
            return Err(Error::config(
                "train.gamma",
                format!("must lie in [0, 1], got {}", t.gamma),
            ));
        }
        if !(t.huber_delta > 0.0) {
            return Err(Error::config("train.huber_delta", "must be positive"));
        }
        if !(self.ppo.clip > 0.0) {
            return Err(Error::config("ppo.clip", "must be positive"));
        }
        let positive = [
            ("train.lr_actor", &t.lr_actor),
            ("train.lr_critic", &t.lr_critic),
            ("srl.tau", &self.srl.tau),
        ];
        for (key, s) in positive {
            if s.values().iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::config(key, "schedule values must be positive"));
            }
        }
        let nonneg = [
            ("explore.sigma_f", &self.explore.sigma_f),
            ("srl.sigma_b", &self.srl.sigma_b),
            ("fy.eps", &self.fy.eps),
        ];
        for (key, s) in nonneg {
            if s.values().iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::config(key, "schedule values must be nonnegative"));
            }
        }
        if self.algorithm == Algorithm::Ppo && self.explore.sigma_f.values().iter().any(|v| *v <= 0.0) {
            return Err(Error::config(
                "explore.sigma_f",
                "ppo needs a positive exploration scale",
            ));
        }
        match self.environment {
            EnvKind::Smsp if self.smsp.jobs == 0 => Err(Error::config("smsp.jobs", "must be positive")),
            EnvKind::Dap => self.dap.validate(),
            EnvKind::Gspp => self.gspp.validate(),
            _ => Ok(()),
        }
    }

    /// Every effective setting as `dotted.key = value` lines, sorted by
    /// section order; parsing the output yields an identical config.
    pub fn emit(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes to TOML");
        let mut out = String::new();
        flatten("", &value, &mut out);
        out
    }

    /// SHA-256 of the effective config, lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.emit().as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut String) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => {
            let _ = writeln!(out, "{prefix} = {other}");
        }
    }
}
