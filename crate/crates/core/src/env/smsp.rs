//! Single machine scheduling with release dates, minimizing total
//! completion time. Static: one decision per instance.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{EnvKind, Environment};
use crate::agent::CriticDesign;
use crate::colayer::{ranks_to_sequence, sequence_to_ranks, ActionSpace, RankingSpace};
use crate::model::{Features, ModelSpec};
use crate::rng::Rng;
use crate::{Error, Result};

/// Largest instance the exhaustive expert accepts.
pub const EXHAUSTIVE_MAX_JOBS: usize = 8;

/// Per-job feature width.
pub const FEATURES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmspParams {
    pub jobs: usize,
    /// Processing times are uniform integers in `1..=max_processing`.
    pub max_processing: u32,
    /// Release dates are uniform in `[0, release_factor · Σp]`.
    pub release_factor: f64,
}

impl Default for SmspParams {
    fn default() -> Self {
        Self {
            jobs: 8,
            max_processing: 100,
            release_factor: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmspInstance {
    pub release: Vec<f64>,
    pub processing: Vec<f64>,
}

impl SmspInstance {
    pub fn new(release: Vec<f64>, processing: Vec<f64>) -> Result<Self> {
        if release.len() != processing.len() || release.is_empty() {
            return Err(Error::Dataset(
                "release and processing lengths differ or are empty".into(),
            ));
        }
        if processing.iter().any(|&p| !(p > 0.0)) || release.iter().any(|&r| !(r >= 0.0)) {
            return Err(Error::Dataset("need p_j > 0 and r_j ≥ 0".into()));
        }
        Ok(Self { release, processing })
    }

    pub fn generate(n: usize, params: &SmspParams, rng: &mut Rng) -> Self {
        let processing: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(1..=params.max_processing)))
            .collect();
        let horizon = params.release_factor * processing.iter().sum::<f64>();
        let release = (0..n).map(|_| rng.random::<f64>() * horizon).collect();
        Self { release, processing }
    }

    pub fn len(&self) -> usize {
        self.processing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processing.is_empty()
    }

    /// `Σ_j C_j` for a job sequence, with `C_{j_k} = max(r_{j_k}, C_{j_{k−1}}) + p_{j_k}`.
    pub fn total_completion(&self, sequence: &[usize]) -> Result<f64> {
        let n = self.len();
        if sequence.len() != n {
            return Err(Error::InvalidPermutation(format!(
                "expected {n} jobs, got {}",
                sequence.len()
            )));
        }
        let mut seen = vec![false; n];
        for &j in sequence {
            if j >= n || seen[j] {
                return Err(Error::InvalidPermutation(format!("{sequence:?}")));
            }
            seen[j] = true;
        }
        Ok(self.total_completion_unchecked(sequence))
    }

    fn total_completion_unchecked(&self, sequence: &[usize]) -> f64 {
        let mut clock = 0.0_f64;
        let mut total = 0.0;
        for &j in sequence {
            clock = clock.max(self.release[j]) + self.processing[j];
            total += clock;
        }
        total
    }

    /// Jobs sorted by release date, then processing time, then index.
    pub fn greedy_sequence(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.release[a]
                .total_cmp(&self.release[b])
                .then(self.processing[a].total_cmp(&self.processing[b]))
                .then(a.cmp(&b))
        });
        order
    }

    /// Optimal sequence by exhaustive search over all `n!` orders. Among
    /// equal totals the lexicographically first sequence wins.
    pub fn exhaustive_sequence(&self) -> Result<Vec<usize>> {
        let n = self.len();
        if n > EXHAUSTIVE_MAX_JOBS {
            return Err(Error::InstanceTooLarge {
                n,
                max: EXHAUSTIVE_MAX_JOBS,
            });
        }
        let mut best = (f64::INFINITY, Vec::new());
        let mut prefix = Vec::with_capacity(n);
        let mut used = vec![false; n];
        self.branch(&mut prefix, &mut used, 0.0, 0.0, &mut best);
        Ok(best.1)
    }

    // Depth-first over sequences in lexicographic order; a prefix is cut
    // only when its partial sum already exceeds the incumbent, which keeps
    // the search exact.
    fn branch(&self, prefix: &mut Vec<usize>, used: &mut [bool], clock: f64, total: f64, best: &mut (f64, Vec<usize>)) {
        let n = self.len();
        if total > best.0 {
            return;
        }
        if prefix.len() == n {
            if total < best.0 {
                *best = (total, prefix.clone());
            }
            return;
        }
        for j in 0..n {
            if used[j] {
                continue;
            }
            let c = clock.max(self.release[j]) + self.processing[j];
            used[j] = true;
            prefix.push(j);
            self.branch(prefix, used, c, total + c, best);
            prefix.pop();
            used[j] = false;
        }
    }

    /// Start times when the machine repeatedly picks the unscheduled job
    /// minimizing `2·max(r_j, t) + p_j`, with `t` the time it becomes free.
    pub fn dispatch_starts(&self) -> Vec<f64> {
        let n = self.len();
        let mut start = vec![0.0; n];
        let mut pending: Vec<usize> = (0..n).collect();
        let mut clock = 0.0_f64;
        while !pending.is_empty() {
            let priority = |j: usize| 2.0 * self.release[j].max(clock) + self.processing[j];
            let slot = (0..pending.len())
                .min_by(|&a, &b| {
                    let (ja, jb) = (pending[a], pending[b]);
                    priority(ja).total_cmp(&priority(jb)).then(ja.cmp(&jb))
                })
                .expect("pending is nonempty");
            let j = pending.swap_remove(slot);
            start[j] = clock.max(self.release[j]);
            clock = start[j] + self.processing[j];
        }
        start
    }

    /// Eight features per job, each in `[−1, 1]`:
    /// release, processing, and earliest completion (scaled), the rank of
    /// release and of processing time, the start time under priority
    /// dispatching (see [`Self::dispatch_starts`]), the mean slack between this
    /// job's earliest completion and the other release dates, and a
    /// constant.
    pub fn features(&self) -> Features {
        let n = self.len();
        let horizon = (0..n).map(|j| self.release[j] + self.processing[j]).fold(0.0, f64::max);
        let p_max = self.processing.iter().copied().fold(0.0, f64::max);
        let rank = |v: &[f64], j: usize| -> f64 {
            if n == 1 {
                return 0.0;
            }
            let below = (0..n).filter(|&k| v[k] < v[j] || (v[k] == v[j] && k < j)).count();
            below as f64 / (n - 1) as f64
        };
        let starts = self.dispatch_starts();
        let span = (0..n).map(|j| starts[j] + self.processing[j]).fold(horizon, f64::max);
        let mut out = Features::with_rows(FEATURES, n);
        for j in 0..n {
            let (r, p) = (self.release[j], self.processing[j]);
            let others = (n - 1).max(1) as f64;
            let slack = (0..n)
                .filter(|&k| k != j)
                .map(|k| ((self.release[k] - r - p) / horizon).clamp(-1.0, 1.0))
                .sum::<f64>()
                / others;
            out.push_row(&[
                r / horizon,
                p / p_max,
                (r + p) / horizon,
                rank(&self.release, j),
                rank(&self.processing, j),
                starts[j] / span,
                slack,
                1.0,
            ]);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmspState {
    pub instance: SmspInstance,
    pub done: bool,
}

#[derive(Clone, Debug, Default)]
pub struct SmspEnv {
    pub params: SmspParams,
}

impl SmspEnv {
    pub fn new(params: SmspParams) -> Self {
        Self { params }
    }

    pub fn state(instance: SmspInstance) -> SmspState {
        SmspState { instance, done: false }
    }

    fn sequence(&self, state: &SmspState, action: &[f64]) -> Result<Vec<usize>> {
        let space = RankingSpace::new(state.instance.len())?;
        if !space.is_feasible(action) {
            return Err(Error::InfeasibleAction(format!("not a ranking: {action:?}")));
        }
        Ok(ranks_to_sequence(action))
    }
}

impl Environment for SmspEnv {
    type State = SmspState;
    type Layer = RankingSpace;

    fn kind(&self) -> EnvKind {
        EnvKind::Smsp
    }

    fn generate(&self, rng: &mut Rng) -> SmspState {
        Self::state(SmspInstance::generate(self.params.jobs, &self.params, rng))
    }

    fn is_terminal(&self, state: &SmspState) -> bool {
        state.done
    }

    fn observe(&self, state: &SmspState) -> Features {
        state.instance.features()
    }

    fn layer(&self, state: &SmspState) -> Result<RankingSpace> {
        RankingSpace::new(state.instance.len())
    }

    fn step(&self, state: &SmspState, action: &[f64], _rng: &mut Rng) -> Result<(SmspState, f64)> {
        let reward = self.exact_q(state, action)?;
        let mut next = state.clone();
        next.done = true;
        Ok((next, reward))
    }

    fn expert(&self, state: &SmspState) -> Result<Vec<f64>> {
        Ok(sequence_to_ranks(&state.instance.exhaustive_sequence()?))
    }

    fn greedy(&self, state: &SmspState) -> Result<Vec<f64>> {
        Ok(sequence_to_ranks(&state.instance.greedy_sequence()))
    }

    fn actor_spec(&self) -> ModelSpec {
        ModelSpec::linear(FEATURES, 1)
    }

    fn critic_design(&self) -> CriticDesign {
        CriticDesign::Exact
    }

    /// Negative total completion time of the ranked sequence.
    fn exact_q(&self, state: &SmspState, action: &[f64]) -> Result<f64> {
        let seq = self.sequence(state, action)?;
        Ok(-state.instance.total_completion_unchecked(&seq))
    }
}
