use serde::{Deserialize, Serialize};

use super::{Actor, Transition};
use crate::env::Environment;
use crate::model::{adam_step, huber, Features, Model, ModelSpec};
use crate::rng::Rng;
use crate::{Error, Result};

/// What a critic member regresses onto.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticTarget {
    /// `r + γ Q̄(s′, a′)`, or `r` on terminal transitions.
    TemporalDifference,
    /// `r`.
    ImmediateReward,
    /// Discounted return after the immediate reward, from recent episodes.
    ReturnToGo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregate {
    Mean,
    Sum,
}

/// One critic network: a per-row encoder over an environment input view,
/// followed by an optional head over the concatenated encodings. Without a
/// head the encodings are summed.
#[derive(Clone, Debug, PartialEq)]
pub struct MemberDesign {
    pub view: usize,
    pub encoder: ModelSpec,
    pub head: Option<ModelSpec>,
    pub target: CriticTarget,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CriticDesign {
    /// The environment evaluates actions exactly.
    Exact,
    Learned {
        members: Vec<MemberDesign>,
        aggregate: Aggregate,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetCritic {
    pub encoder: Model,
    pub head: Option<Model>,
}

impl SetCritic {
    pub fn init(design: &MemberDesign, rng: &mut Rng) -> Result<Self> {
        let encoder = Model::init(design.encoder, rng)?;
        let head = design.head.map(|h| Model::init(h, rng)).transpose()?;
        Ok(Self { encoder, head })
    }

    pub fn value(&self, rows: &Features) -> Result<f64> {
        let z = self.encoder.forward_rows(rows)?;
        match &self.head {
            Some(h) => Ok(h.forward(&z)?[0]),
            None => Ok(z.iter().sum()),
        }
    }

    /// Adds `upstream · ∂Q/∂params` into the two gradient buffers.
    pub fn gradient_into(
        &self,
        rows: &Features,
        upstream: f64,
        encoder_grad: &mut [f64],
        head_grad: &mut [f64],
    ) -> Result<()> {
        let dz = match &self.head {
            Some(h) => {
                let z = self.encoder.forward_rows(rows)?;
                let g = h.backward(&z, &[upstream])?;
                head_grad.iter_mut().zip(&g.params).for_each(|(a, b)| *a += b);
                g.input
            }
            None => vec![upstream; rows.rows() * self.encoder.spec().output_dim],
        };
        self.encoder.backward_rows(rows, &dz, encoder_grad)?;
        Ok(())
    }

    fn head_len(&self) -> usize {
        self.head.as_ref().map_or(0, |h| h.params.len())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticMember {
    pub design: MemberDesign,
    pub online: SetCritic,
    pub target: SetCritic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticEnsemble {
    pub members: Vec<CriticMember>,
    pub aggregate: Aggregate,
}

impl CriticEnsemble {
    pub fn init(members: &[MemberDesign], aggregate: Aggregate, rng: &mut Rng) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidModel("critic ensemble needs at least one member".into()));
        }
        let members = members
            .iter()
            .map(|d| {
                let online = SetCritic::init(d, rng)?;
                Ok(CriticMember {
                    design: d.clone(),
                    target: online.clone(),
                    online,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { members, aggregate })
    }

    /// Online values of each member.
    pub fn member_values<E: Environment>(&self, env: &E, state: &E::State, action: &[f64]) -> Result<Vec<f64>> {
        self.members
            .iter()
            .map(|m| m.online.value(&env.critic_input(state, action, m.design.view)?))
            .collect()
    }

    pub fn value<E: Environment>(&self, env: &E, state: &E::State, action: &[f64]) -> Result<f64> {
        let v = self.member_values(env, state, action)?;
        let sum: f64 = v.iter().sum();
        Ok(match self.aggregate {
            Aggregate::Sum => sum,
            Aggregate::Mean => sum / v.len() as f64,
        })
    }

    /// Hard copy `ψ̄ ← ψ` for every member.
    pub fn sync_targets(&mut self) {
        for m in &mut self.members {
            m.target.clone_from(&m.online);
        }
    }

    pub fn has_target(&self, target: CriticTarget) -> bool {
        self.members.iter().any(|m| m.design.target == target)
    }
}

/// Action values used to score candidate actions.
#[derive(Clone, Debug, PartialEq)]
pub enum Critic {
    Exact,
    Learned(CriticEnsemble),
}

impl Critic {
    pub fn from_design(design: &CriticDesign, rng: &mut Rng) -> Result<Self> {
        match design {
            CriticDesign::Exact => Ok(Critic::Exact),
            CriticDesign::Learned { members, aggregate } => {
                Ok(Critic::Learned(CriticEnsemble::init(members, *aggregate, rng)?))
            }
        }
    }

    pub fn q<E: Environment>(&self, env: &E, state: &E::State, action: &[f64]) -> Result<f64> {
        match self {
            Critic::Exact => env.exact_q(state, action),
            Critic::Learned(c) => c.value(env, state, action),
        }
    }

    pub fn sync_targets(&mut self) {
        if let Critic::Learned(c) = self {
            c.sync_targets();
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CriticStats {
    /// Mean Huber loss over members and samples.
    pub loss: f64,
}

/// One gradient step per member. Temporal-difference and immediate-reward
/// members train on `batch`; return members train on `recent`, which should
/// hold on-policy transitions. Each temporal-difference member bootstraps
/// from its own target copy with `a′` the actor's deterministic action.
pub fn critic_update<E: Environment>(
    env: &E,
    critic: &mut CriticEnsemble,
    actor: &Actor,
    batch: &[&Transition<E::State>],
    recent: &[&Transition<E::State>],
    gamma: f64,
    lr: f64,
    huber_delta: f64,
) -> Result<CriticStats> {
    let next_actions: Vec<Option<Vec<f64>>> = if critic.has_target(CriticTarget::TemporalDifference) && gamma != 0.0 {
        batch
            .iter()
            .map(|t| (!t.terminal).then(|| actor.act(env, &t.next_state)).transpose())
            .collect::<Result<_>>()?
    } else {
        vec![None; batch.len()]
    };

    let mut total = 0.0;
    let mut count = 0usize;
    for m in &mut critic.members {
        let samples = match m.design.target {
            CriticTarget::ReturnToGo => recent,
            _ => batch,
        };
        if samples.is_empty() {
            continue;
        }
        let mut enc_grad = vec![0.0; m.online.encoder.params.len()];
        let mut head_grad = vec![0.0; m.online.head_len()];
        let mut loss = 0.0;
        for (j, t) in samples.iter().enumerate() {
            let y = match m.design.target {
                CriticTarget::ImmediateReward => t.reward,
                CriticTarget::ReturnToGo => t.return_to_go - t.reward,
                CriticTarget::TemporalDifference => match &next_actions[j] {
                    Some(a) => {
                        let rows = env.critic_input(&t.next_state, a, m.design.view)?;
                        t.reward + gamma * m.target.value(&rows)?
                    }
                    None => t.reward,
                },
            };
            let rows = env.critic_input(&t.state, &t.action, m.design.view)?;
            let (l, g) = huber(m.online.value(&rows)?, y, huber_delta);
            loss += l;
            m.online.gradient_into(&rows, g, &mut enc_grad, &mut head_grad)?;
        }
        let scale = 1.0 / samples.len() as f64;
        enc_grad.iter_mut().for_each(|g| *g *= scale);
        head_grad.iter_mut().for_each(|g| *g *= scale);
        adam_step(&mut m.online.encoder.params, &enc_grad, lr)?;
        if let Some(h) = &mut m.online.head {
            adam_step(&mut h.params, &head_grad, lr)?;
        }
        total += loss * scale;
        count += 1;
    }
    Ok(CriticStats {
        loss: if count == 0 { 0.0 } else { total / count as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{GsppEnv, GsppParams, GsppState};
    use crate::rng::from_seed;

    fn setup() -> (GsppEnv, Actor, CriticEnsemble, GsppState) {
        let params = GsppParams {
            rows: 4,
            cols: 4,
            ..GsppParams::default()
        };
        let mut rng = from_seed(0);
        let env = GsppEnv::sample(params, &mut rng).unwrap();
        let actor = Actor::init(&env, &mut rng).unwrap();
        let CriticDesign::Learned { members, aggregate } = env.critic_design() else {
            unreachable!()
        };
        let critic = CriticEnsemble::init(&members, aggregate, &mut rng).unwrap();
        let s = env.generate(&mut rng);
        (env, actor, critic, s)
    }

    fn transition(env: &GsppEnv, s: &GsppState, terminal: bool) -> Transition<GsppState> {
        let a = env.greedy(s).unwrap();
        let (next, r) = env.step(s, &a, &mut from_seed(1)).unwrap();
        Transition {
            state: s.clone(),
            action: a,
            reward: r,
            next_state: next,
            terminal,
            sigma_f: 0.0,
            eta: vec![],
            theta_old: vec![],
            return_to_go: r,
        }
    }

    #[test]
    fn sync_copies_and_decouples() {
        let (env, actor, mut c, s) = setup();
        let t = transition(&env, &s, false);
        critic_update(&env, &mut c, &actor, &[&t], &[], 0.9, 0.01, 1.0).unwrap();
        assert_ne!(c.members[0].online, c.members[0].target);
        c.sync_targets();
        let once = c.clone();
        c.sync_targets();
        assert_eq!(c, once);
        for m in &c.members {
            assert_eq!(m.online, m.target);
        }
        let before = c.members[0].target.clone();
        critic_update(&env, &mut c, &actor, &[&t], &[], 0.9, 0.01, 1.0).unwrap();
        assert_eq!(c.members[0].target, before);
    }

    #[test]
    fn double_q_value_is_mean() {
        let (env, _, c, s) = setup();
        let a = env.expert(&s).unwrap();
        let v = c.member_values(&env, &s, &a).unwrap();
        assert_eq!(v.len(), 2);
        assert!((c.value(&env, &s, &a).unwrap() - 0.5 * (v[0] + v[1])).abs() < 1e-15);
    }

    #[test]
    fn regression_reaches_fixed_target() {
        let (env, actor, mut c, s) = setup();
        for terminal in [true, false] {
            let t = transition(&env, &s, terminal);
            for _ in 0..1000 {
                // gamma = 0 and terminal transitions both regress onto r.
                critic_update(&env, &mut c, &actor, &[&t], &[], 0.0, 0.01, 1.0).unwrap();
            }
            for v in c.member_values(&env, &t.state, &t.action).unwrap() {
                assert!((v - t.reward).abs() < 1e-3, "{v} vs {}", t.reward);
            }
        }
    }

    #[test]
    fn terminal_ignores_next_state() {
        let (env, actor, c, s) = setup();
        let t = transition(&env, &s, true);
        let mut a = c.clone();
        let mut b = c.clone();
        critic_update(&env, &mut a, &actor, &[&t], &[], 0.99, 0.01, 1.0).unwrap();
        let mut t2 = t.clone();
        t2.next_state.rho = 50.0;
        critic_update(&env, &mut b, &actor, &[&t2], &[], 0.99, 0.01, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn set_critic_gradient_matches_finite_differences() {
        let design = MemberDesign {
            view: 0,
            encoder: ModelSpec::linear(3, 2),
            head: Some(ModelSpec::mlp2(6, 4, 1)),
            target: CriticTarget::TemporalDifference,
        };
        let mut sc = SetCritic::init(&design, &mut from_seed(3)).unwrap();
        let mut rows = Features::new(3);
        rows.push_row(&[0.2, -0.4, 0.9]);
        rows.push_row(&[1.0, 0.3, -0.5]);
        rows.push_row(&[-0.7, 0.1, 0.6]);
        let mut eg = vec![0.0; sc.encoder.params.len()];
        let mut hg = vec![0.0; sc.head_len()];
        sc.gradient_into(&rows, 1.0, &mut eg, &mut hg).unwrap();
        let h = 1e-6;
        for i in 0..eg.len() {
            let x = sc.encoder.params.values[i];
            sc.encoder.params.values[i] = x + h;
            let up = sc.value(&rows).unwrap();
            sc.encoder.params.values[i] = x - h;
            let down = sc.value(&rows).unwrap();
            sc.encoder.params.values[i] = x;
            assert!((eg[i] - (up - down) / (2.0 * h)).abs() < 1e-7);
        }
    }
}
