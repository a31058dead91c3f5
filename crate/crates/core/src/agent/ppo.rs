use super::{Actor, Critic, Transition};
use crate::colayer::{check_dim, ActionSpace};
use crate::env::Environment;
use crate::model::adam_step;
use crate::{Error, Result};

/// `Σ_i [−log(σ√(2π)) − (η_i − θ_i)² / (2σ²)]`.
pub fn gaussian_log_density(eta: &[f64], theta: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    check_dim("perturbed scores", theta.len(), eta.len())?;
    let norm = (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
    Ok(eta
        .iter()
        .zip(theta)
        .map(|(e, t)| -norm - (e - t) * (e - t) / (2.0 * sigma * sigma))
        .sum())
}

/// Clipped surrogate of one sample and the gradient of its negation with
/// respect to the current scores.
#[derive(Clone, Debug, PartialEq)]
pub struct PpoSample {
    pub ratio: f64,
    pub unclipped: f64,
    pub surrogate: f64,
    pub score_grad: Vec<f64>,
}

pub fn ppo_sample_gradient(
    theta: &[f64],
    theta_old: &[f64],
    eta: &[f64],
    advantage: f64,
    sigma: f64,
    clip: f64,
) -> Result<PpoSample> {
    check_dim("old scores", theta.len(), theta_old.len())?;
    let log_ratio = gaussian_log_density(eta, theta, sigma)? - gaussian_log_density(eta, theta_old, sigma)?;
    let ratio = log_ratio.exp();
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    let surrogate = unclipped.min(clipped);
    let score_grad = if unclipped <= clipped {
        let s2 = sigma * sigma;
        eta.iter()
            .zip(theta)
            .map(|(e, t)| -advantage * ratio * (e - t) / s2)
            .collect()
    } else {
        vec![0.0; theta.len()]
    };
    Ok(PpoSample {
        ratio,
        unclipped,
        surrogate,
        score_grad,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PpoStats {
    pub surrogate: f64,
    pub mean_ratio: f64,
    pub clipped_fraction: f64,
}

/// One Adam step maximizing the clipped surrogate. The policy scale is the
/// batch mean of the exploration scales used at collection, and the
/// advantage is `Q(s, f(η)) − Q(s, f(θ_old))`.
pub fn ppo_update<E: Environment>(
    env: &E,
    actor: &mut Actor,
    critic: &Critic,
    batch: &[&Transition<E::State>],
    clip: f64,
    lr: f64,
) -> Result<PpoStats> {
    if batch.is_empty() {
        return Err(Error::InsufficientSamples {
            requested: 1,
            available: 0,
        });
    }
    let n = batch.len() as f64;
    let sigma = batch.iter().map(|t| t.sigma_f).sum::<f64>() / n;
    let mut grad = actor.model.zero_grad();
    let mut stats = PpoStats::default();
    for t in batch {
        let theta = actor.scores(env, &t.state)?;
        let old_action = env.layer(&t.state)?.argmax(&t.theta_old)?;
        let advantage = critic.q(env, &t.state, &t.action)? - critic.q(env, &t.state, &old_action)?;
        let s = ppo_sample_gradient(&theta, &t.theta_old, &t.eta, advantage, sigma, clip)?;
        actor.accumulate(env, &t.state, &s.score_grad, &mut grad)?;
        stats.surrogate += s.surrogate;
        stats.mean_ratio += s.ratio;
        if s.surrogate < s.unclipped {
            stats.clipped_fraction += 1.0;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    adam_step(&mut actor.model.params, &grad, lr)?;
    stats.surrogate /= n;
    stats.mean_ratio /= n;
    stats.clipped_fraction /= n;
    Ok(stats)
}
