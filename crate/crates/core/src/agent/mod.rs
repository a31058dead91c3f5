//! Learners built around a COAML actor: structured RL, structured
//! imitation, and a PPO baseline, plus the replay buffer and critics they
//! share.

mod critic;
mod ppo;
mod replay;
mod sil;
mod srl;

pub use critic::{
    critic_update, Aggregate, Critic, CriticDesign, CriticEnsemble, CriticMember, CriticStats, CriticTarget,
    MemberDesign, SetCritic,
};
pub use ppo::{gaussian_log_density, ppo_sample_gradient, ppo_update, PpoSample, PpoStats};
pub use replay::ReplayBuffer;
pub use sil::{sil_batch_update, sil_update};
pub use srl::{srl_actor_update, srl_target, SrlHyper, SrlStats};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::colayer::ActionSpace;
use crate::env::Environment;
use crate::model::Model;
use crate::rng::Rng;
use crate::{Error, Result};

/// A statistical model scoring each action-vector entry, composed with the
/// environment's CO-layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Actor {
    pub model: Model,
}

/// One exploratory decision: clean scores, perturbed scores, and the
/// action the CO-layer picked for the perturbed scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Exploration {
    pub theta: Vec<f64>,
    pub eta: Vec<f64>,
    pub action: Vec<f64>,
}

impl Actor {
    pub fn new(model: Model) -> Result<Self> {
        if model.spec().output_dim != 1 {
            return Err(Error::InvalidModel(format!(
                "actor must emit one score per row, got output_dim {}",
                model.spec().output_dim
            )));
        }
        Ok(Self { model })
    }

    pub fn init<E: Environment>(env: &E, rng: &mut Rng) -> Result<Self> {
        Self::new(Model::init(env.actor_spec(), rng)?)
    }

    /// `θ = φ_w(s)`.
    pub fn scores<E: Environment>(&self, env: &E, state: &E::State) -> Result<Vec<f64>> {
        self.model.forward_rows(&env.observe(state))
    }

    /// The deterministic policy `f(φ_w(s), s)`.
    pub fn act<E: Environment>(&self, env: &E, state: &E::State) -> Result<Vec<f64>> {
        env.layer(state)?.argmax(&self.scores(env, state)?)
    }

    /// Samples `η ~ N(θ, σ_f² I)` and returns `f(η, s)`. With `σ_f = 0` no
    /// noise is drawn and the action is deterministic.
    pub fn act_explore<E: Environment>(
        &self,
        env: &E,
        state: &E::State,
        sigma_f: f64,
        rng: &mut Rng,
    ) -> Result<Exploration> {
        if !(sigma_f >= 0.0 && sigma_f.is_finite()) {
            return Err(Error::NonPositiveSigma(sigma_f));
        }
        let theta = self.scores(env, state)?;
        let eta = if sigma_f == 0.0 {
            theta.clone()
        } else {
            theta
                .iter()
                .map(|&t| t + sigma_f * rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect()
        };
        let action = env.layer(state)?.argmax(&eta)?;
        Ok(Exploration { theta, eta, action })
    }

    /// Adds the parameter gradient of `⟨g, φ_w(s)⟩` into `param_grad`.
    pub fn accumulate<E: Environment>(
        &self,
        env: &E,
        state: &E::State,
        score_grad: &[f64],
        param_grad: &mut [f64],
    ) -> Result<()> {
        self.model.backward_rows(&env.observe(state), score_grad, param_grad)?;
        Ok(())
    }
}

/// `(s, a, r, s′)` plus what the learners need about how `a` was chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition<S> {
    pub state: S,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: S,
    pub terminal: bool,
    pub sigma_f: f64,
    pub eta: Vec<f64>,
    pub theta_old: Vec<f64>,
    /// Discounted return from this step to the end of its episode.
    pub return_to_go: f64,
}

/// Fills `return_to_go` backwards over one finished episode.
pub fn assign_returns<S>(episode: &mut [Transition<S>], gamma: f64) {
    let mut g = 0.0;
    for t in episode.iter_mut().rev() {
        g = t.reward + if t.terminal { 0.0 } else { gamma * g };
        t.return_to_go = g;
    }
}

/// Draws the seed of an independent per-item stream from `rng`.
pub(crate) fn substream(rng: &mut Rng) -> Rng {
    crate::rng::from_seed(rng.random())
}
