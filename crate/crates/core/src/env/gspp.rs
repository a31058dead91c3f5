//! Gridworld shortest paths with an endogenous cost multiplier. Each step
//! the robot walks an 8-connected path to its target; the cells it crosses
//! set the step cost and rescale the multiplier applied to later paths.

use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{EnvKind, Environment};
use crate::agent::{Aggregate, CriticDesign, CriticTarget, MemberDesign};
use crate::colayer::{ActionSpace, Cell, GridPathSpace, PositiveScores};
use crate::model::{Activation, Features, ModelSpec};
use crate::rng::Rng;
use crate::{Error, Result};

/// Features per cell: three drive the cost, three drive the multiplier.
pub const CELL_FEATURES: usize = 6;
/// Actor input width.
pub const OBSERVATION: usize = CELL_FEATURES + 1;
/// Critic input width.
pub const CRITIC_VIEW: usize = CELL_FEATURES + 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GsppParams {
    pub rows: usize,
    pub cols: usize,
    pub steps: usize,
    pub phi_cost_min: f64,
    pub phi_cost_max: f64,
    /// Multiplier weights are uniform in `[−phi_rho_scale, phi_rho_scale]`.
    pub phi_rho_scale: f64,
    pub rho0: f64,
    /// Lower bound on the per-step factor applied to the multiplier.
    pub rho_floor: f64,
    /// Use two critics and average them.
    pub double_q: bool,
}

impl Default for GsppParams {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            steps: 40,
            phi_cost_min: 0.1,
            phi_cost_max: 1.0,
            phi_rho_scale: 0.005,
            rho0: 1.0,
            rho_floor: 0.1,
            double_q: true,
        }
    }
}

impl GsppParams {
    pub fn validate(&self) -> Result<()> {
        if self.rows * self.cols < 2 {
            return Err(Error::config("gspp.rows", "grid needs at least two cells"));
        }
        if self.steps == 0 {
            return Err(Error::config("gspp.steps", "must be positive"));
        }
        if !(self.phi_cost_min > 0.0 && self.phi_cost_min <= self.phi_cost_max) {
            return Err(Error::config(
                "gspp.phi_cost_min",
                "need 0 < phi_cost_min ≤ phi_cost_max",
            ));
        }
        if !(self.phi_rho_scale >= 0.0) {
            return Err(Error::config("gspp.phi_rho_scale", "must be nonnegative"));
        }
        if !(self.rho0 > 0.0) {
            return Err(Error::config("gspp.rho0", "must be positive"));
        }
        if !(self.rho_floor > 0.0) {
            return Err(Error::config("gspp.rho_floor", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GsppState {
    pub rows: usize,
    pub cols: usize,
    /// Row-major cell features, shared between the states of one episode.
    pub features: Arc<Vec<[f64; CELL_FEATURES]>>,
    pub phi_cost: [f64; 3],
    pub phi_rho: [f64; 3],
    pub rho: f64,
    pub robot: Cell,
    pub target: Cell,
    pub t: usize,
}

impl GsppState {
    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, c: Cell) -> usize {
        c.row * self.cols + c.col
    }

    /// `c_{ij} = (v^c_{ij})ᵀ Φᶜ`.
    pub fn cost(&self, index: usize) -> f64 {
        let v = &self.features[index];
        (0..3).map(|k| v[k] * self.phi_cost[k]).sum()
    }

    /// `Δρ_{ij} = (v^ρ_{ij})ᵀ Φ^ρ`.
    pub fn rho_change(&self, index: usize) -> f64 {
        let v = &self.features[index];
        (0..3).map(|k| v[3 + k] * self.phi_rho[k]).sum()
    }

    pub fn costs(&self) -> Vec<f64> {
        (0..self.cell_count()).map(|i| self.cost(i)).collect()
    }

    fn space(&self) -> Result<GridPathSpace> {
        Ok(GridPathSpace::new(self.rows, self.cols, self.robot, self.target)?
            .with_positive_scores(PositiveScores::Clamp))
    }
}

#[derive(Clone, Debug)]
pub struct GsppEnv {
    pub params: GsppParams,
    pub phi_cost: [f64; 3],
    pub phi_rho: [f64; 3],
}

impl GsppEnv {
    pub fn new(params: GsppParams, phi_cost: [f64; 3], phi_rho: [f64; 3]) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            phi_cost,
            phi_rho,
        })
    }

    /// Draws the hidden cost and multiplier weights.
    pub fn sample(params: GsppParams, rng: &mut Rng) -> Result<Self> {
        params.validate()?;
        let (lo, hi) = (params.phi_cost_min, params.phi_cost_max);
        let phi_cost = std::array::from_fn(|_| lo + rng.random::<f64>() * (hi - lo));
        let s = params.phi_rho_scale;
        let phi_rho = std::array::from_fn(|_| (2.0 * rng.random::<f64>() - 1.0) * s);
        Self::new(params, phi_cost, phi_rho)
    }

    fn random_cell(&self, rng: &mut Rng, avoid: Option<Cell>) -> Cell {
        let (rows, cols) = (self.params.rows, self.params.cols);
        loop {
            let c = Cell::new(rng.random_range(0..rows), rng.random_range(0..cols));
            if Some(c) != avoid {
                return c;
            }
        }
    }

    pub fn path(&self, state: &GsppState, action: &[f64]) -> Result<Vec<Cell>> {
        state
            .space()?
            .decode(action)
            .ok_or_else(|| Error::InfeasibleAction("not a robot-to-target path".into()))
    }
}

/// Moves diagonally toward the target while both coordinates differ, then
/// straight along the remaining axis.
pub fn straight_path(from: Cell, to: Cell) -> Vec<Cell> {
    let mut path = vec![from];
    let mut c = from;
    while c != to {
        c = Cell::new(step_toward(c.row, to.row), step_toward(c.col, to.col));
        path.push(c);
    }
    path
}

fn step_toward(a: usize, b: usize) -> usize {
    match a.cmp(&b) {
        std::cmp::Ordering::Less => a + 1,
        std::cmp::Ordering::Greater => a - 1,
        std::cmp::Ordering::Equal => a,
    }
}

impl Environment for GsppEnv {
    type State = GsppState;
    type Layer = GridPathSpace;

    fn kind(&self) -> EnvKind {
        EnvKind::Gspp
    }

    fn generate(&self, rng: &mut Rng) -> GsppState {
        let n = self.params.rows * self.params.cols;
        let features = (0..n).map(|_| std::array::from_fn(|_| rng.random::<f64>())).collect();
        let robot = self.random_cell(rng, None);
        let target = self.random_cell(rng, Some(robot));
        GsppState {
            rows: self.params.rows,
            cols: self.params.cols,
            features: Arc::new(features),
            phi_cost: self.phi_cost,
            phi_rho: self.phi_rho,
            rho: self.params.rho0,
            robot,
            target,
            t: 0,
        }
    }

    fn is_terminal(&self, state: &GsppState) -> bool {
        state.t >= self.params.steps
    }

    fn observe(&self, state: &GsppState) -> Features {
        let rel = state.t as f64 / self.params.steps as f64;
        let mut f = Features::with_rows(OBSERVATION, state.cell_count());
        let mut row = [0.0; OBSERVATION];
        for v in state.features.iter() {
            row[..CELL_FEATURES].copy_from_slice(v);
            row[CELL_FEATURES] = rel;
            f.push_row(&row);
        }
        f
    }

    fn layer(&self, state: &GsppState) -> Result<GridPathSpace> {
        state.space()
    }

    /// Reward `−ρ Σ c` over every cell of the path, both endpoints
    /// included; then `ρ ← ρ · max(floor, 1 + Σ Δρ)`.
    fn step(&self, state: &GsppState, action: &[f64], rng: &mut Rng) -> Result<(GsppState, f64)> {
        let path = self.path(state, action)?;
        let (mut cost, mut change) = (0.0, 0.0);
        for &c in &path {
            let i = state.index(c);
            cost += state.cost(i);
            change += state.rho_change(i);
        }
        let reward = -state.rho * cost;
        let mut next = state.clone();
        next.rho = state.rho * (1.0 + change).max(self.params.rho_floor);
        next.robot = state.target;
        next.target = self.random_cell(rng, Some(next.robot));
        next.t += 1;
        Ok((next, reward))
    }

    /// Cheapest path under the true immediate costs, ignoring the
    /// multiplier dynamics.
    fn expert(&self, state: &GsppState) -> Result<Vec<f64>> {
        let theta: Vec<f64> = state.costs().iter().map(|c| -c).collect();
        state.space()?.argmax(&theta)
    }

    fn greedy(&self, state: &GsppState) -> Result<Vec<f64>> {
        Ok(state.space()?.encode(&straight_path(state.robot, state.target)))
    }

    fn actor_spec(&self) -> ModelSpec {
        ModelSpec::linear(OBSERVATION, 1).with_activation(Activation::NegativeAbsolute)
    }

    /// Per-cell linear critics summed over the grid; two averaged copies
    /// when double Q-learning is on.
    fn critic_design(&self) -> CriticDesign {
        let member = MemberDesign {
            view: 0,
            encoder: ModelSpec::linear(CRITIC_VIEW, 1),
            head: None,
            target: CriticTarget::TemporalDifference,
        };
        let copies = if self.params.double_q { 2 } else { 1 };
        CriticDesign::Learned {
            members: vec![member; copies],
            aggregate: Aggregate::Mean,
        }
    }

    /// Cell features, relative time, and the multiplier on path cells;
    /// zero rows elsewhere.
    fn critic_input(&self, state: &GsppState, action: &[f64], view: usize) -> Result<Features> {
        if view != 0 {
            return Err(Error::InvalidModel(format!("gspp has no critic view {view}")));
        }
        crate::colayer::check_dim("path encoding", state.cell_count(), action.len())?;
        let rel = state.t as f64 / self.params.steps as f64;
        let mut f = Features::zeros(state.cell_count(), CRITIC_VIEW);
        for (i, &on) in action.iter().enumerate() {
            if on != 0.0 {
                let row = f.row_mut(i);
                row[..CELL_FEATURES].copy_from_slice(&state.features[i]);
                row[CELL_FEATURES] = rel;
                row[CELL_FEATURES + 1] = state.rho;
            }
        }
        Ok(f)
    }
}
