//! Structured reinforcement learning for combinatorial action spaces.
//!
//! The actor is a small score model composed with a linear combinatorial
//! maximizer (a "CO-layer"). Training goes through a perturbed Fenchel-Young
//! loss whose target is a softmax over critic-scored candidate actions.
//!
//! Crate layout:
//!
//! - [`perturb`]: Gaussian perturbations, softmax target actions, and the
//!   perturbed Fenchel-Young loss.
//! - [`colayer`]: top-k, ranking, and grid shortest-path maximizers with
//!   exhaustive oracles.
//! - [`model`]: linear and two-layer score models with hand-written
//!   backpropagation, Adam, schedules, and the Huber loss.
//! - [`agent`]: SRL, SIL, and PPO updates, critics, and the replay buffer.
//! - [`env`]: scheduling, assortment, and gridworld environments.
//! - [`harness`]: configuration, training orchestration, evaluation,
//!   checkpoints, and CSV output.

pub mod agent;
pub mod colayer;
pub mod env;
pub mod error;
pub mod harness;
pub mod model;
pub mod perturb;
pub mod rng;

pub use error::{Error, Result};
