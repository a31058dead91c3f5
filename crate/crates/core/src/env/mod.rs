//! Combinatorial MDPs: a static scheduling problem and two dynamic problems
//! with endogenous state changes.
//!
//! An environment exposes its actor inputs, the CO-layer for a state, the
//! transition function, reference policies, and the critic layout the
//! learners should build for it.

pub mod dap;
pub mod gspp;
pub mod smsp;

use std::fmt::Debug;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::agent::CriticDesign;
use crate::colayer::ActionSpace;
use crate::model::{Features, ModelSpec};
use crate::rng::Rng;
use crate::{Error, Result};

pub use dap::{DapEnv, DapParams, DapState};
pub use gspp::{GsppEnv, GsppParams, GsppState};
pub use smsp::{SmspEnv, SmspInstance, SmspParams, SmspState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Smsp,
    Dap,
    Gspp,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Smsp => "smsp",
            EnvKind::Dap => "dap",
            EnvKind::Gspp => "gspp",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smsp" => Ok(EnvKind::Smsp),
            "dap" => Ok(EnvKind::Dap),
            "gspp" => Ok(EnvKind::Gspp),
            other => Err(Error::config(
                "environment",
                format!("unknown environment `{other}` (expected smsp, dap, or gspp)"),
            )),
        }
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub trait Environment: Sync {
    type State: Clone + Debug + Send + Sync + Serialize + DeserializeOwned;
    type Layer: ActionSpace;

    fn kind(&self) -> EnvKind;

    /// Samples an initial state.
    fn generate(&self, rng: &mut Rng) -> Self::State;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Actor inputs, one row per score-vector entry.
    fn observe(&self, state: &Self::State) -> Features;

    /// The CO-layer `f(·, s)` for this state.
    fn layer(&self, state: &Self::State) -> Result<Self::Layer>;

    fn step(&self, state: &Self::State, action: &[f64], rng: &mut Rng) -> Result<(Self::State, f64)>;

    fn expert(&self, state: &Self::State) -> Result<Vec<f64>>;

    fn greedy(&self, state: &Self::State) -> Result<Vec<f64>>;

    fn actor_spec(&self) -> ModelSpec;

    fn critic_design(&self) -> CriticDesign;

    /// Critic inputs for one input view of a learned critic.
    fn critic_input(&self, _state: &Self::State, _action: &[f64], view: usize) -> Result<Features> {
        Err(Error::InvalidModel(format!(
            "{} has no learned critic input view {view}",
            self.kind()
        )))
    }

    /// Black-box action value, for environments that expose one.
    fn exact_q(&self, _state: &Self::State, _action: &[f64]) -> Result<f64> {
        Err(Error::InvalidModel(format!("{} has no exact critic", self.kind())))
    }
}
