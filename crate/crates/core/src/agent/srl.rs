use super::{substream, Actor, Critic};
use crate::colayer::ActionSpace;
use crate::env::Environment;
use crate::model::adam_step;
use crate::perturb::{fy_loss_and_grad, gaussian_perturb, softmax_target, PerturbationSpec, TargetAction};
use crate::rng::Rng;
use crate::{Error, Result};

/// Per-update settings of the structured actor step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SrlHyper {
    /// Candidate actions `m` sampled around the current scores.
    pub candidates: usize,
    /// Candidate sampling scale `σ_b`.
    pub sigma_b: f64,
    /// Softmax temperature over candidate values.
    pub tau: f64,
    /// Monte Carlo draws `M` for the loss.
    pub loss_samples: usize,
    /// Loss perturbation scale `ε`.
    pub eps: f64,
}

impl SrlHyper {
    pub fn validate(&self) -> Result<()> {
        if self.candidates == 0 || self.loss_samples == 0 {
            return Err(Error::NoCandidates);
        }
        if !(self.tau > 0.0) {
            return Err(Error::NonPositiveTemperature(self.tau));
        }
        PerturbationSpec::new(self.sigma_b, self.candidates)?;
        PerturbationSpec::new(self.eps, self.loss_samples)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SrlStats {
    /// Mean Fenchel-Young loss over the batch.
    pub loss: f64,
    /// Mean of the best candidate value per state.
    pub best_q: f64,
}

/// Samples `m` candidate actions around `θ`, scores them with the critic,
/// and mixes them into the softmax target action.
pub fn srl_target<E: Environment>(
    env: &E,
    critic: &Critic,
    state: &E::State,
    theta: &[f64],
    layer: &E::Layer,
    hyper: &SrlHyper,
    rng: &mut Rng,
) -> Result<(TargetAction, Vec<Vec<f64>>, Vec<f64>)> {
    let spec = PerturbationSpec::new(hyper.sigma_b, hyper.candidates)?;
    let candidates = gaussian_perturb(theta, &spec, rng)
        .iter()
        .map(|eta| layer.argmax(eta))
        .collect::<Result<Vec<_>>>()?;
    let q = candidates
        .iter()
        .map(|a| critic.q(env, state, a))
        .collect::<Result<Vec<_>>>()?;
    let target = softmax_target(&candidates, &q, hyper.tau)?;
    Ok((target, candidates, q))
}

/// One Adam step on the actor: every state gets its own target action and
/// Fenchel-Young gradient, drawn from an independent noise stream, and the
/// parameter gradients are averaged over the batch.
pub fn srl_actor_update<E: Environment>(
    env: &E,
    actor: &mut Actor,
    critic: &Critic,
    states: &[&E::State],
    hyper: &SrlHyper,
    lr: f64,
    rng: &mut Rng,
) -> Result<SrlStats> {
    if states.is_empty() {
        return Err(Error::InsufficientSamples {
            requested: 1,
            available: 0,
        });
    }
    hyper.validate()?;
    let mut grad = actor.model.zero_grad();
    let mut stats = SrlStats::default();
    for &s in states {
        let mut sub = substream(rng);
        let theta = actor.scores(env, s)?;
        let layer = env.layer(s)?;
        let (target, _, q) = srl_target(env, critic, s, &theta, &layer, hyper, &mut sub)?;
        let fy = fy_loss_and_grad(&theta, &target.values, &layer, hyper.eps, hyper.loss_samples, &mut sub)?;
        actor.accumulate(env, s, &fy.gradient, &mut grad)?;
        stats.loss += fy.value;
        stats.best_q += q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    let n = states.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    adam_step(&mut actor.model.params, &grad, lr)?;
    stats.loss /= n;
    stats.best_q /= n;
    Ok(stats)
}
