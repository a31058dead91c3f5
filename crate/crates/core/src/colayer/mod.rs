//! Linear maximizers `f(θ) = argmax_{a ∈ A} ⟨θ|a⟩` over combinatorial
//! action sets, and exhaustive oracles for small instances.
//!
//! Every space encodes its actions as real vectors of a fixed dimension so
//! that the Fenchel-Young machinery can treat them uniformly.

mod grid;
mod ranking;
mod topk;

pub use grid::{Cell, GridPathSpace, PositiveScores, NEIGHBOR_OFFSETS};
pub use ranking::{ranks_to_sequence, sequence_to_ranks, RankingSpace};
pub use topk::TopKSpace;

use crate::{Error, Result};

/// Upper bound on the number of actions any enumeration may produce.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

/// A feasible action set together with its linear maximizer.
pub trait ActionSpace {
    /// Length of score and action vectors.
    fn dim(&self) -> usize;

    /// Returns an action maximizing `⟨theta|a⟩`. Ties are broken
    /// deterministically; see the implementors for the rule.
    fn argmax(&self, theta: &[f64]) -> Result<Vec<f64>>;

    /// Lists every feasible action exactly once, in a fixed order.
    fn enumerate(&self) -> Result<Vec<Vec<f64>>>;

    fn is_feasible(&self, action: &[f64]) -> bool;
}

impl<S: ActionSpace + ?Sized> ActionSpace for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn argmax(&self, theta: &[f64]) -> Result<Vec<f64>> {
        (**self).argmax(theta)
    }
    fn enumerate(&self) -> Result<Vec<Vec<f64>>> {
        (**self).enumerate()
    }
    fn is_feasible(&self, action: &[f64]) -> bool {
        (**self).is_feasible(action)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, got })
    }
}

/// Exhaustive maximizer: the first enumerated action with the largest
/// objective value.
pub fn brute_force_argmax<S: ActionSpace + ?Sized>(space: &S, theta: &[f64]) -> Result<Vec<f64>> {
    check_dim("score vector", space.dim(), theta.len())?;
    let actions = space.enumerate()?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for a in actions {
        let v = dot(theta, &a);
        match &best {
            Some((bv, _)) if v <= *bv => {}
            _ => best = Some((v, a)),
        }
    }
    best.map(|(_, a)| a).ok_or(Error::NoCandidates)
}
