use super::{substream, Actor};
use crate::env::Environment;
use crate::model::adam_step;
use crate::perturb::fy_loss_and_grad;
use crate::rng::Rng;
use crate::{Error, Result};

/// One Fenchel-Young step toward an expert action.
pub fn sil_update<E: Environment>(
    env: &E,
    actor: &mut Actor,
    state: &E::State,
    expert: &[f64],
    eps: f64,
    loss_samples: usize,
    lr: f64,
    rng: &mut Rng,
) -> Result<f64> {
    sil_batch_update(env, actor, &[(state, expert)], eps, loss_samples, lr, rng)
}

/// Batch-averaged Fenchel-Young step toward expert actions; returns the
/// mean loss.
pub fn sil_batch_update<E: Environment>(
    env: &E,
    actor: &mut Actor,
    batch: &[(&E::State, &[f64])],
    eps: f64,
    loss_samples: usize,
    lr: f64,
    rng: &mut Rng,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InsufficientSamples {
            requested: 1,
            available: 0,
        });
    }
    let mut grad = actor.model.zero_grad();
    let mut loss = 0.0;
    for &(s, expert) in batch {
        let mut sub = substream(rng);
        let layer = env.layer(s)?;
        let theta = actor.scores(env, s)?;
        let fy = fy_loss_and_grad(&theta, expert, &layer, eps, loss_samples, &mut sub)?;
        actor.accumulate(env, s, &fy.gradient, &mut grad)?;
        loss += fy.value;
    }
    let n = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    adam_step(&mut actor.model.params, &grad, lr)?;
    Ok(loss / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colayer::{ActionSpace, TopKSpace};
    use crate::env::{SmspEnv, SmspParams};
    use crate::rng::from_seed;

    #[test]
    fn expert_at_argmax_gives_zero_loss_and_no_move() {
        let env = SmspEnv::new(SmspParams {
            jobs: 4,
            ..SmspParams::default()
        });
        let mut rng = from_seed(0);
        let mut actor = Actor::init(&env, &mut rng).unwrap();
        let s = env.generate(&mut rng);
        let a = actor.act(&env, &s).unwrap();
        let before = actor.model.params.values.clone();
        let loss = sil_update(&env, &mut actor, &s, &a, 0.0, 1, 0.1, &mut rng).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(actor.model.params.values, before);
    }

    #[test]
    fn gradient_is_fenchel_young_gradient() {
        let layer = TopKSpace::new(3, 1).unwrap();
        let theta = [0.3, -0.2, 0.1];
        let expert = [0.0, 1.0, 0.0];
        let fy = fy_loss_and_grad(&theta, &expert, &layer, 0.0, 1, &mut from_seed(0)).unwrap();
        let top = layer.argmax(&theta).unwrap();
        let expected: Vec<f64> = top.iter().zip(&expert).map(|(a, b)| a - b).collect();
        assert_eq!(fy.gradient, expected);
    }
}
