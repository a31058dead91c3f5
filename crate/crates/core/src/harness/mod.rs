//! Experiment orchestration: configuration, datasets, training runs,
//! evaluation, checkpoints, and result files.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod eval;
pub mod report;
pub mod train;

use std::path::Path;

pub use checkpoint::Checkpoint;
pub use config::{Algorithm, ExperimentConfig, ScheduleSpec};
pub use data::{Datasets, InstanceRecord, Split};
pub use eval::{evaluate_policy, rollout, Evaluation, Policy};
pub use report::{emit_results, CurvePoint, FinalRow, RunReport, RunStatus};
pub use train::{run_training, TrainOutcome};

use crate::agent::Actor;
use crate::env::{DapEnv, EnvKind, Environment, GsppEnv, SmspEnv};
use crate::rng::stream;
use crate::{Error, Result};

/// Work that needs the concrete environment type.
pub trait EnvTask {
    type Output;

    fn run<E: Environment>(self, env: &E, cfg: &ExperimentConfig) -> Result<Self::Output>;
}

/// Builds the configured environment, drawing any hidden parameters from
/// the data seed, and hands it to `task`.
pub fn dispatch<T: EnvTask>(cfg: &ExperimentConfig, task: T) -> Result<T::Output> {
    match cfg.environment {
        EnvKind::Smsp => task.run(&SmspEnv::new(cfg.smsp.clone()), cfg),
        EnvKind::Dap => {
            let env = DapEnv::sample(cfg.dap.clone(), &mut stream(cfg.data.seed, "dap-customer", 0))?;
            task.run(&env, cfg)
        }
        EnvKind::Gspp => {
            let env = GsppEnv::sample(cfg.gspp.clone(), &mut stream(cfg.data.seed, "gspp-weights", 0))?;
            task.run(&env, cfg)
        }
    }
}

/// Reads datasets from `data.dir` when set, otherwise generates them from
/// `data.seed`.
pub fn datasets<E: Environment>(env: &E, cfg: &ExperimentConfig) -> Result<Datasets<E::State>> {
    if cfg.data.dir.is_empty() {
        Ok(data::generate_datasets(
            env,
            cfg.data.seed,
            [cfg.data.train, cfg.data.val, cfg.data.test],
        ))
    } else {
        data::read_datasets(Path::new(&cfg.data.dir), env.kind())
    }
}

/// Trains one seed.
pub struct Train {
    pub seed: u64,
}

impl EnvTask for Train {
    type Output = TrainOutcome;

    fn run<E: Environment>(self, env: &E, cfg: &ExperimentConfig) -> Result<TrainOutcome> {
        let data = datasets(env, cfg)?;
        run_training(env, cfg, self.seed, &data)
    }
}

/// Trains one seed and returns its report.
pub fn run(cfg: &ExperimentConfig, seed: u64) -> Result<TrainOutcome> {
    dispatch(cfg, Train { seed })
}

/// Writes the train, validation, and test datasets as JSONL files.
pub struct GenerateData<'a> {
    pub dir: &'a Path,
}

impl EnvTask for GenerateData<'_> {
    type Output = ();

    fn run<E: Environment>(self, env: &E, cfg: &ExperimentConfig) -> Result<()> {
        let data = data::generate_datasets(env, cfg.data.seed, [cfg.data.train, cfg.data.val, cfg.data.test]);
        data::write_datasets(self.dir, &data)
    }
}

/// Evaluates a stored actor, or a reference policy, on the train and test
/// splits.
pub struct Evaluate {
    pub seed: u64,
    pub checkpoint: Option<Checkpoint>,
}

impl EnvTask for Evaluate {
    type Output = RunReport;

    fn run<E: Environment>(self, env: &E, cfg: &ExperimentConfig) -> Result<RunReport> {
        let data = datasets(env, cfg)?;
        let hash = cfg.hash();
        let mut report = RunReport::new(env.kind(), cfg.algorithm, self.seed, hash.clone());
        let actor = match (self.checkpoint, cfg.algorithm.is_learned()) {
            (Some(c), true) => {
                report.warnings.extend(c.hash_warning(&hash));
                report.best_episode = Some(c.episode);
                Some(Actor::new(c.into_model(&env.actor_spec())?)?)
            }
            (None, true) => {
                return Err(Error::Checkpoint(format!(
                    "evaluating {} needs a checkpoint",
                    cfg.algorithm
                )))
            }
            (_, false) => None,
        };
        let policy = match (&actor, cfg.algorithm) {
            (Some(a), _) => Policy::Actor(a),
            (None, Algorithm::Expert) => Policy::Expert,
            (None, _) => Policy::Greedy,
        };
        train::fill_finals(env, policy, &data, &mut report)?;
        Ok(report)
    }
}
