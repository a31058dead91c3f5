//! Deterministic policy evaluation on fixed instances.

use super::data::InstanceRecord;
use crate::agent::Actor;
use crate::env::Environment;
use crate::rng::stream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub enum Policy<'a> {
    Actor(&'a Actor),
    Greedy,
    Expert,
}

impl Policy<'_> {
    pub fn action<E: Environment>(&self, env: &E, state: &E::State) -> Result<Vec<f64>> {
        match self {
            Policy::Actor(a) => a.act(env, state),
            Policy::Greedy => env.greedy(state),
            Policy::Expert => env.expert(state),
        }
    }
}

/// Undiscounted episode reward from an instance's initial state. The
/// transition noise comes from the instance seed, so every policy faces the
/// same random stream.
pub fn rollout<E: Environment>(env: &E, policy: Policy<'_>, instance: &InstanceRecord<E::State>) -> Result<f64> {
    let mut rng = stream(instance.seed, "rollout", 0);
    let mut state = instance.initial_state.clone();
    let mut total = 0.0;
    while !env.is_terminal(&state) {
        let a = policy.action(env, &state)?;
        let (next, r) = env.step(&state, &a, &mut rng)?;
        total += r;
        state = next;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub per_instance: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over instances.
    pub std: f64,
}

impl Evaluation {
    pub fn from_rewards(per_instance: Vec<f64>) -> Result<Self> {
        if per_instance.is_empty() {
            return Err(Error::Dataset("cannot evaluate on an empty dataset".into()));
        }
        let (mean, std) = mean_std(&per_instance);
        Ok(Self {
            per_instance,
            mean,
            std,
        })
    }
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn evaluate_policy<E: Environment>(
    env: &E,
    policy: Policy<'_>,
    instances: &[InstanceRecord<E::State>],
) -> Result<Evaluation> {
    let rewards = instances
        .iter()
        .map(|i| rollout(env, policy, i))
        .collect::<Result<Vec<_>>>()?;
    Evaluation::from_rewards(rewards)
}
