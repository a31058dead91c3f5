//! Gaussian perturbations of score vectors, softmax-weighted target actions,
//! and the perturbed Fenchel-Young loss
//!
//! ```text
//! L(θ; â) = E_Z[ max_{a ∈ A} ⟨θ + εZ | a⟩ ] − ⟨θ | â⟩
//! ∇_θ L   = E_Z[ f(θ + εZ) ] − â
//! ```
//!
//! estimated with `M` Monte Carlo draws. The value and the gradient of one
//! evaluation always share the same draws.

use rand_distr::StandardNormal;

use crate::colayer::{check_dim, dot, ActionSpace};
use crate::{Error, Result};

/// Standard deviation and number of i.i.d. isotropic Gaussian draws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationSpec {
    sigma: f64,
    count: usize,
}

impl PerturbationSpec {
    pub fn new(sigma: f64, count: usize) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::NonPositiveSigma(sigma));
        }
        if count == 0 {
            return Err(Error::NoCandidates);
        }
        Ok(Self { sigma, count })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Draws a standard normal matrix of `count × dim`.
pub fn standard_normal(dim: usize, count: usize, rng: &mut impl rand::Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// `η_k = θ + σ Z_k` for `k = 1..count`.
pub fn gaussian_perturb(theta: &[f64], spec: &PerturbationSpec, rng: &mut impl rand::Rng) -> Vec<Vec<f64>> {
    standard_normal(theta.len(), spec.count, rng)
        .into_iter()
        .map(|z| shift(theta, spec.sigma, &z))
        .collect()
}

fn shift(theta: &[f64], sigma: f64, z: &[f64]) -> Vec<f64> {
    theta.iter().zip(z).map(|(t, z)| t + sigma * z).collect()
}

/// Convex combination of candidate actions with its weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetAction {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `softmax(q / τ)` with max-subtraction.
pub fn softmax_weights(q: &[f64], tau: f64) -> Result<Vec<f64>> {
    if q.is_empty() {
        return Err(Error::NoCandidates);
    }
    if !(tau > 0.0) {
        return Err(Error::NonPositiveTemperature(tau));
    }
    let scaled: Vec<f64> = q.iter().map(|v| v / tau).collect();
    let top = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `â = Σ_k a_k softmax(Q/τ)_k`. Repeated candidates each keep their own
/// weight, so they count proportionally to their multiplicity.
pub fn softmax_target(candidates: &[Vec<f64>], q_values: &[f64], tau: f64) -> Result<TargetAction> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    check_dim("q-values", candidates.len(), q_values.len())?;
    let dim = candidates[0].len();
    let weights = softmax_weights(q_values, tau)?;
    let mut values = vec![0.0; dim];
    for (a, w) in candidates.iter().zip(&weights) {
        check_dim("candidate action", dim, a.len())?;
        for (v, x) in values.iter_mut().zip(a) {
            *v += w * x;
        }
    }
    Ok(TargetAction { values, weights })
}

/// Maximizer outputs at the perturbed scores `θ + εZ_k`, with their
/// objective values `⟨θ + εZ_k | a_k⟩`.
fn perturbed_argmaxes<S: ActionSpace + ?Sized>(
    theta: &[f64],
    layer: &S,
    eps: f64,
    noise: &[Vec<f64>],
) -> Result<Vec<(f64, Vec<f64>)>> {
    check_dim("score vector", layer.dim(), theta.len())?;
    if noise.is_empty() {
        return Err(Error::NoCandidates);
    }
    // ε = 0: every draw gives the same maximizer; solve once
    if eps == 0.0 {
        let a = layer.argmax(theta)?;
        return Ok(vec![(dot(theta, &a), a)]);
    }
    noise
        .iter()
        .map(|z| {
            check_dim("noise draw", theta.len(), z.len())?;
            let eta = shift(theta, eps, z);
            let a = layer.argmax(&eta)?;
            Ok((dot(&eta, &a), a))
        })
        .collect()
}

/// `(1/M) Σ_k max_a ⟨θ + εZ_k | a⟩` for the given standard normal draws.
pub fn smoothed_max_with_noise<S: ActionSpace + ?Sized>(
    theta: &[f64],
    layer: &S,
    eps: f64,
    noise: &[Vec<f64>],
) -> Result<f64> {
    let sols = perturbed_argmaxes(theta, layer, eps, noise)?;
    Ok(sols.iter().map(|(v, _)| v).sum::<f64>() / sols.len() as f64)
}

pub fn smoothed_max_estimate<S: ActionSpace + ?Sized>(
    theta: &[f64],
    layer: &S,
    eps: f64,
    samples: usize,
    rng: &mut impl rand::Rng,
) -> Result<f64> {
    let noise = standard_normal(theta.len(), samples.max(1), rng);
    smoothed_max_with_noise(theta, layer, eps, &noise)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FyLoss {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Perturbed Fenchel-Young loss and its gradient for given noise draws.
pub fn fy_loss_with_noise<S: ActionSpace + ?Sized>(
    theta: &[f64],
    target: &[f64],
    layer: &S,
    eps: f64,
    noise: &[Vec<f64>],
) -> Result<FyLoss> {
    check_dim("target action", theta.len(), target.len())?;
    let sols = perturbed_argmaxes(theta, layer, eps, noise)?;
    let m = sols.len() as f64;
    let mut mean = vec![0.0; theta.len()];
    let mut smoothed = 0.0;
    for (v, a) in &sols {
        smoothed += v;
        for (g, x) in mean.iter_mut().zip(a) {
            *g += x;
        }
    }
    smoothed /= m;
    let gradient = mean.iter().zip(target).map(|(g, t)| g / m - t).collect();
    Ok(FyLoss {
        value: smoothed - dot(theta, target),
        gradient,
    })
}

pub fn fy_loss_and_grad<S: ActionSpace + ?Sized>(
    theta: &[f64],
    target: &[f64],
    layer: &S,
    eps: f64,
    samples: usize,
    rng: &mut impl rand::Rng,
) -> Result<FyLoss> {
    check_dim("target action", theta.len(), target.len())?;
    let noise = if eps == 0.0 {
        vec![vec![0.0; theta.len()]]
    } else {
        standard_normal(theta.len(), samples.max(1), rng)
    };
    fy_loss_with_noise(theta, target, layer, eps, &noise)
}
