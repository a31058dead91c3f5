//! Dynamic assortment: each step shows `k` of `n` items to a customer who
//! buys at most one according to a multinomial logit model. Purchases
//! temporarily hype an item and permanently raise its satisfaction trait.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{EnvKind, Environment};
use crate::agent::{Aggregate, CriticDesign, CriticTarget, MemberDesign};
use crate::colayer::{ActionSpace, TopKSpace};
use crate::model::{Features, ModelSpec};
use crate::rng::Rng;
use crate::{Error, Result};

/// Static and evolving traits per item.
pub const TRAITS: usize = 4;
/// Trait raised temporarily by a purchase.
pub const HYPE_TRAIT: usize = 2;
/// Trait raised permanently by a purchase.
pub const SATISFACTION_TRAIT: usize = 3;
/// Actor input width.
pub const OBSERVATION: usize = 10;
/// Width of the immediate-reward critic's per-item input.
pub const SELECTED_VIEW: usize = 6;
/// Width of the return critic's per-item input.
pub const FULL_VIEW: usize = 11;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DapParams {
    pub items: usize,
    pub k: usize,
    pub steps: usize,
    pub hype: f64,
    /// Steps over which a hype increment is removed in equal decrements.
    pub hype_steps: usize,
    pub satisfaction: f64,
    pub price_min: f64,
    pub price_max: f64,
    /// Prices enter the utility and the observations divided by this.
    pub price_scale: f64,
}

impl Default for DapParams {
    fn default() -> Self {
        Self {
            items: 20,
            k: 4,
            steps: 80,
            hype: 0.5,
            hype_steps: 4,
            satisfaction: 0.1,
            price_min: 1.0,
            price_max: 10.0,
            price_scale: 10.0,
        }
    }
}

impl DapParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.items {
            return Err(Error::config(
                "dap.k",
                format!("need 1 ≤ k ≤ items, got k = {}", self.k),
            ));
        }
        if self.steps == 0 {
            return Err(Error::config("dap.steps", "must be positive"));
        }
        if self.hype_steps == 0 {
            return Err(Error::config("dap.hype_steps", "must be positive"));
        }
        if !(self.price_min > 0.0 && self.price_min <= self.price_max) {
            return Err(Error::config("dap.price_min", "need 0 < price_min ≤ price_max"));
        }
        if !(self.price_scale > 0.0) {
            return Err(Error::config("dap.price_scale", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypeEntry {
    pub item: usize,
    pub remaining: usize,
    pub decrement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DapState {
    pub traits: Vec<[f64; TRAITS]>,
    pub prices: Vec<f64>,
    /// Hidden customer weights over the traits and the scaled price.
    pub customer: [f64; TRAITS + 1],
    pub ledger: Vec<HypeEntry>,
    /// Evolving traits at the previous step and at the episode start.
    pub previous: Vec<[f64; 2]>,
    pub initial: Vec<[f64; 2]>,
    pub t: usize,
}

fn evolving(traits: &[f64; TRAITS]) -> [f64; 2] {
    [traits[HYPE_TRAIT], traits[SATISFACTION_TRAIT]]
}

/// Purchase probabilities for the shown items followed by the no-purchase
/// probability, `P(i|S) = e^{Θ_i} / (1 + Σ_j e^{Θ_j})`.
pub fn mnl_probs(theta: &[f64]) -> Vec<f64> {
    let shift = theta.iter().copied().fold(0.0_f64, f64::max);
    let mut p: Vec<f64> = theta.iter().map(|&x| (x - shift).exp()).collect();
    p.push((-shift).exp());
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    p
}

#[derive(Clone, Debug)]
pub struct DapEnv {
    pub params: DapParams,
    pub customer: [f64; TRAITS + 1],
}

impl DapEnv {
    pub fn new(params: DapParams, customer: [f64; TRAITS + 1]) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, customer })
    }

    /// Draws the hidden customer weights from `N(0, 1)`.
    pub fn sample(params: DapParams, rng: &mut Rng) -> Result<Self> {
        let mut customer = [0.0; TRAITS + 1];
        for c in &mut customer {
            *c = StandardNormal.sample(rng);
        }
        Self::new(params, customer)
    }

    /// True utility `Θ_i` of item `i`.
    pub fn utility(&self, state: &DapState, item: usize) -> f64 {
        let v = &state.traits[item];
        let phi = &state.customer;
        v.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>() + state.prices[item] / self.params.price_scale * phi[TRAITS]
    }

    pub fn selected(&self, state: &DapState, action: &[f64]) -> Result<Vec<usize>> {
        let space = TopKSpace::new(state.prices.len(), self.params.k)?;
        if !space.is_feasible(action) {
            return Err(Error::InfeasibleAction(format!(
                "assortment must select exactly {} of {} items",
                self.params.k,
                state.prices.len()
            )));
        }
        Ok((0..action.len()).filter(|&i| action[i] == 1.0).collect())
    }

    pub fn choice_probs(&self, state: &DapState, items: &[usize]) -> Vec<f64> {
        let theta: Vec<f64> = items.iter().map(|&i| self.utility(state, i)).collect();
        mnl_probs(&theta)
    }

    /// `R(S) = Σ_{i∈S} r(i) P(i|S)`.
    pub fn expected_revenue(&self, state: &DapState, items: &[usize]) -> f64 {
        let p = self.choice_probs(state, items);
        items.iter().zip(&p).map(|(&i, q)| state.prices[i] * q).sum()
    }

    /// Indicator vector of an item list.
    pub fn assortment(&self, state: &DapState, items: &[usize]) -> Vec<f64> {
        let mut a = vec![0.0; state.prices.len()];
        for &i in items {
            a[i] = 1.0;
        }
        a
    }

    fn observe_row(&self, state: &DapState, i: usize) -> [f64; OBSERVATION] {
        let v = &state.traits[i];
        let now = evolving(v);
        [
            v[0],
            v[1],
            v[2],
            v[3],
            state.prices[i] / self.params.price_scale,
            state.t as f64 / self.params.steps as f64,
            now[0] - state.previous[i][0],
            now[1] - state.previous[i][1],
            now[0] - state.initial[i][0],
            now[1] - state.initial[i][1],
        ]
    }
}

impl Environment for DapEnv {
    type State = DapState;
    type Layer = TopKSpace;

    fn kind(&self) -> EnvKind {
        EnvKind::Dap
    }

    fn generate(&self, rng: &mut Rng) -> DapState {
        let p = &self.params;
        let traits: Vec<[f64; TRAITS]> = (0..p.items)
            .map(|_| std::array::from_fn(|_| rng.random::<f64>()))
            .collect();
        let prices = (0..p.items)
            .map(|_| p.price_min + rng.random::<f64>() * (p.price_max - p.price_min))
            .collect();
        let start: Vec<[f64; 2]> = traits.iter().map(evolving).collect();
        DapState {
            traits,
            prices,
            customer: self.customer,
            ledger: Vec::new(),
            previous: start.clone(),
            initial: start,
            t: 0,
        }
    }

    fn is_terminal(&self, state: &DapState) -> bool {
        state.t >= self.params.steps
    }

    fn observe(&self, state: &DapState) -> Features {
        let mut f = Features::with_rows(OBSERVATION, state.prices.len());
        for i in 0..state.prices.len() {
            f.push_row(&self.observe_row(state, i));
        }
        f
    }

    fn layer(&self, state: &DapState) -> Result<TopKSpace> {
        TopKSpace::new(state.prices.len(), self.params.k)
    }

    fn step(&self, state: &DapState, action: &[f64], rng: &mut Rng) -> Result<(DapState, f64)> {
        let items = self.selected(state, action)?;
        let probs = self.choice_probs(state, &items);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut bought = None;
        for (slot, &p) in probs[..items.len()].iter().enumerate() {
            acc += p;
            if u < acc {
                bought = Some(items[slot]);
                break;
            }
        }

        let mut next = state.clone();
        next.previous = state.traits.iter().map(evolving).collect();
        for entry in &mut next.ledger {
            next.traits[entry.item][HYPE_TRAIT] -= entry.decrement;
            entry.remaining -= 1;
        }
        next.ledger.retain(|e| e.remaining > 0);

        let mut reward = 0.0;
        if let Some(i) = bought {
            reward = state.prices[i];
            next.traits[i][HYPE_TRAIT] += self.params.hype;
            next.traits[i][SATISFACTION_TRAIT] += self.params.satisfaction;
            next.ledger.push(HypeEntry {
                item: i,
                remaining: self.params.hype_steps,
                decrement: self.params.hype / self.params.hype_steps as f64,
            });
        }
        next.t += 1;
        Ok((next, reward))
    }

    /// Assortment with the highest expected one-step revenue under the
    /// true customer model, found by enumerating every `k`-subset.
    fn expert(&self, state: &DapState) -> Result<Vec<f64>> {
        let space = self.layer(state)?;
        let n = state.prices.len();
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for a in space.enumerate()? {
            let items: Vec<usize> = (0..n).filter(|&i| a[i] == 1.0).collect();
            let r = self.expected_revenue(state, &items);
            if r > best.0 {
                best = (r, a);
            }
        }
        Ok(best.1)
    }

    /// The `k` most expensive items.
    fn greedy(&self, state: &DapState) -> Result<Vec<f64>> {
        self.layer(state)?.argmax(&state.prices)
    }

    fn actor_spec(&self) -> ModelSpec {
        ModelSpec::mlp2(OBSERVATION, 5, 1)
    }

    /// An immediate-reward critic over the shown items plus a return critic
    /// over all items; their outputs are added.
    fn critic_design(&self) -> CriticDesign {
        let k = self.params.k;
        let n = self.params.items;
        CriticDesign::Learned {
            members: vec![
                MemberDesign {
                    view: 0,
                    encoder: ModelSpec::linear(SELECTED_VIEW, 3),
                    head: Some(ModelSpec::linear(3 * k, 1)),
                    target: CriticTarget::ImmediateReward,
                },
                MemberDesign {
                    view: 1,
                    encoder: ModelSpec::linear(FULL_VIEW, 5),
                    head: Some(ModelSpec::mlp2(5 * n, 10, 1)),
                    target: CriticTarget::ReturnToGo,
                },
            ],
            aggregate: Aggregate::Sum,
        }
    }

    fn critic_input(&self, state: &DapState, action: &[f64], view: usize) -> Result<Features> {
        match view {
            0 => {
                let items = self.selected(state, action)?;
                let mut f = Features::with_rows(SELECTED_VIEW, items.len());
                for i in items {
                    let row = self.observe_row(state, i);
                    f.push_row(&row[..SELECTED_VIEW]);
                }
                Ok(f)
            }
            1 => {
                let n = state.prices.len();
                crate::colayer::check_dim("assortment", n, action.len())?;
                let mut f = Features::with_rows(FULL_VIEW, n);
                let mut row = [0.0; FULL_VIEW];
                for i in 0..n {
                    row[..OBSERVATION].copy_from_slice(&self.observe_row(state, i));
                    row[OBSERVATION] = action[i];
                    f.push_row(&row);
                }
                Ok(f)
            }
            _ => Err(Error::InvalidModel(format!("dap has no critic view {view}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    fn env() -> DapEnv {
        DapEnv::sample(DapParams::default(), &mut from_seed(1)).unwrap()
    }

    #[test]
    fn mnl_examples() {
        let p = mnl_probs(&[0.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let p = mnl_probs(&[0.0, 0.0]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let p = mnl_probs(&[50.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-9);
        let p = mnl_probs(&[800.0, -800.0, 3.0]);
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generator_contract() {
        let e = env();
        let s = e.generate(&mut from_seed(2));
        assert_eq!(s.prices.len(), 20);
        assert!(s.prices.iter().all(|p| (1.0..=10.0).contains(p)));
        assert_eq!(s, e.generate(&mut from_seed(2)));
        let f = e.observe(&s);
        assert_eq!((f.rows(), f.cols()), (20, 10));
        assert_eq!(e.layer(&s).unwrap().k(), 4);
    }

    #[test]
    fn wrong_cardinality_rejected() {
        let e = env();
        let s = e.generate(&mut from_seed(3));
        let mut a = vec![0.0; 20];
        a[0] = 1.0;
        assert!(e.step(&s, &a, &mut from_seed(0)).is_err());
    }

    fn step_until(e: &DapEnv, s: &DapState, a: &[f64], want_purchase: bool) -> (DapState, f64) {
        for seed in 0..10_000 {
            let (n, r) = e.step(s, a, &mut from_seed(seed)).unwrap();
            if (r > 0.0) == want_purchase {
                return (n, r);
            }
        }
        panic!("no matching outcome");
    }

    #[test]
    fn no_purchase_changes_nothing() {
        let e = env();
        let s = e.generate(&mut from_seed(4));
        let a = e.greedy(&s).unwrap();
        let (n, r) = step_until(&e, &s, &a, false);
        assert_eq!(r, 0.0);
        assert_eq!(n.traits, s.traits);
        assert_eq!(n.t, 1);
    }

    #[test]
    fn hype_rises_then_decays_to_baseline() {
        let e = env();
        let s = e.generate(&mut from_seed(5));
        let a = e.greedy(&s).unwrap();
        let (mut n, r) = step_until(&e, &s, &a, true);
        let i = (0..20).find(|&i| s.prices[i] == r).unwrap();
        assert!((n.traits[i][HYPE_TRAIT] - s.traits[i][HYPE_TRAIT] - 0.5).abs() < 1e-12);
        assert!((n.traits[i][SATISFACTION_TRAIT] - s.traits[i][SATISFACTION_TRAIT] - 0.1).abs() < 1e-12);
        // Show items other than `i` and force no purchase for four steps.
        let others: Vec<usize> = (0..20).filter(|&j| j != i).take(4).collect();
        let b = e.assortment(&n, &others);
        let mut expected = n.traits[i][HYPE_TRAIT];
        for _ in 0..4 {
            let (m, _) = step_until(&e, &n, &b, false);
            expected -= 0.125;
            assert!((m.traits[i][HYPE_TRAIT] - expected).abs() < 1e-12);
            n = m;
        }
        assert!((n.traits[i][HYPE_TRAIT] - s.traits[i][HYPE_TRAIT]).abs() < 1e-12);
        assert!(n.ledger.is_empty());
        assert!((n.traits[i][SATISFACTION_TRAIT] - s.traits[i][SATISFACTION_TRAIT] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn expert_small_cases() {
        let params = DapParams {
            items: 2,
            k: 1,
            ..DapParams::default()
        };
        let e = DapEnv::new(params, [0.0; 5]).unwrap();
        let mut s = e.generate(&mut from_seed(0));
        s.prices = vec![1.0, 2.0];
        assert_eq!(e.expert(&s).unwrap(), vec![0.0, 1.0]);

        let params = DapParams {
            items: 4,
            k: 4,
            ..DapParams::default()
        };
        let e = DapEnv::new(params, [0.3; 5]).unwrap();
        let s = e.generate(&mut from_seed(0));
        assert_eq!(e.expert(&s).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn expert_bounds_greedy_revenue() {
        let e = env();
        let mut rng = from_seed(6);
        for _ in 0..5 {
            let s = e.generate(&mut rng);
            let ex = e.selected(&s, &e.expert(&s).unwrap()).unwrap();
            let gr = e.selected(&s, &e.greedy(&s).unwrap()).unwrap();
            assert!(e.expected_revenue(&s, &ex) >= e.expected_revenue(&s, &gr));
        }
    }

    #[test]
    fn critic_views() {
        let e = env();
        let s = e.generate(&mut from_seed(7));
        let a = e.greedy(&s).unwrap();
        let v0 = e.critic_input(&s, &a, 0).unwrap();
        assert_eq!((v0.rows(), v0.cols()), (4, SELECTED_VIEW));
        let v1 = e.critic_input(&s, &a, 1).unwrap();
        assert_eq!((v1.rows(), v1.cols()), (20, FULL_VIEW));
        assert_eq!(v1.iter_rows().filter(|r| r[OBSERVATION] == 1.0).count(), 4);
        assert!(e.critic_input(&s, &a, 2).is_err());
    }
}
