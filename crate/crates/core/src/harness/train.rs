//! The per-seed experiment loop: collect, update, validate, keep the best
//! actor, and evaluate it on the train and test splits.

use std::time::Instant;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng as _;

use super::config::{Algorithm, ExperimentConfig};
use super::data::{Datasets, InstanceRecord, Split};
use super::eval::{evaluate_policy, Policy};
use super::report::{FinalRow, RunReport, RunStatus};
use crate::agent::{
    assign_returns, critic_update, ppo_update, sil_batch_update, srl_actor_update, Actor, Critic, ReplayBuffer,
    SrlHyper, Transition,
};
use crate::env::Environment;
use crate::rng::{stream, Rng};
use crate::Result;

/// A finished run: its report and, for learned algorithms, the restored
/// best actor.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub report: RunReport,
    pub actor: Option<Actor>,
}

/// One exploratory trajectory from `initial`, with returns filled in.
pub fn collect_episode<E: Environment>(
    env: &E,
    actor: &Actor,
    initial: &E::State,
    sigma_f: f64,
    gamma: f64,
    rng: &mut Rng,
) -> Result<Vec<Transition<E::State>>> {
    let mut out = Vec::new();
    let mut state = initial.clone();
    while !env.is_terminal(&state) {
        let x = actor.act_explore(env, &state, sigma_f, rng)?;
        let (next, reward) = env.step(&state, &x.action, rng)?;
        let terminal = env.is_terminal(&next);
        out.push(Transition {
            state,
            action: x.action,
            reward,
            next_state: next.clone(),
            terminal,
            sigma_f,
            eta: x.eta,
            theta_old: x.theta,
            return_to_go: 0.0,
        });
        state = next;
    }
    assign_returns(&mut out, gamma);
    Ok(out)
}

/// States visited by the expert on each instance, paired with the expert
/// action.
pub fn expert_demonstrations<E: Environment>(
    env: &E,
    instances: &[InstanceRecord<E::State>],
) -> Result<Vec<(E::State, Vec<f64>)>> {
    let mut out = Vec::new();
    for inst in instances {
        let mut rng = stream(inst.seed, "rollout", 0);
        let mut state = inst.initial_state.clone();
        while !env.is_terminal(&state) {
            let a = env.expert(&state)?;
            let (next, _) = env.step(&state, &a, &mut rng)?;
            out.push((state, a));
            state = next;
        }
    }
    Ok(out)
}

fn pick<'a, T>(items: &'a [T], n: usize, rng: &mut Rng) -> Vec<&'a T> {
    let n = n.min(items.len());
    if n == 0 {
        return Vec::new();
    }
    sample(rng, items.len(), n).into_iter().map(|i| &items[i]).collect()
}

fn validation_set<'a, S>(cfg: &ExperimentConfig, data: &'a Datasets<S>) -> &'a [InstanceRecord<S>] {
    let k = cfg.eval.val_subset;
    if k == 0 || k >= data.val.len() {
        &data.val
    } else {
        &data.val[..k]
    }
}

/// Runs one seed end to end. Errors raised after training has started are
/// recorded in a report marked failed rather than returned.
pub fn run_training<E: Environment>(
    env: &E,
    cfg: &ExperimentConfig,
    seed: u64,
    data: &Datasets<E::State>,
) -> Result<TrainOutcome> {
    let started = Instant::now();
    let mut report = RunReport::new(env.kind(), cfg.algorithm, seed, cfg.hash());
    let result = match cfg.algorithm {
        Algorithm::Greedy | Algorithm::Expert => {
            let policy = if cfg.algorithm == Algorithm::Greedy {
                Policy::Greedy
            } else {
                Policy::Expert
            };
            evaluate_policy(env, policy, validation_set(cfg, data)).map(|v| {
                report.record_validation(0, v.mean);
                None
            })
        }
        _ => train_learner(env, cfg, seed, data, &mut report).map(Some),
    };

    let actor = match result {
        Ok(actor) => actor,
        Err(e) => {
            report.status = RunStatus::Failed;
            report.error = Some(e.to_string());
            report.wall_clock_secs = started.elapsed().as_secs_f64();
            return Ok(TrainOutcome { report, actor: None });
        }
    };

    let policy = match (&actor, cfg.algorithm) {
        (Some(a), _) => Policy::Actor(a),
        (None, Algorithm::Expert) => Policy::Expert,
        (None, _) => Policy::Greedy,
    };
    fill_finals(env, policy, data, &mut report)?;
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(TrainOutcome { report, actor })
}

/// Evaluates `policy` on the train and test splits and stores one row per
/// instance, with the greedy policy as reference.
pub fn fill_finals<E: Environment>(
    env: &E,
    policy: Policy<'_>,
    data: &Datasets<E::State>,
    report: &mut RunReport,
) -> Result<()> {
    for split in [Split::Train, Split::Test] {
        let instances = data.split(split);
        let reference = evaluate_policy(env, Policy::Greedy, instances)?;
        let eval = evaluate_policy(env, policy, instances)?;
        for ((inst, &r), &g) in instances.iter().zip(&eval.per_instance).zip(&reference.per_instance) {
            report.finals.push(FinalRow {
                instance_id: inst.instance_id,
                split,
                algorithm: report.algorithm,
                seed: report.seed,
                reward: r,
                delta_vs_greedy: r - g,
            });
        }
    }
    report.sort_finals();
    report.train_mean = report.split_mean(Split::Train);
    report.test_mean = report.split_mean(Split::Test);
    Ok(())
}

fn train_learner<E: Environment>(
    env: &E,
    cfg: &ExperimentConfig,
    seed: u64,
    data: &Datasets<E::State>,
    report: &mut RunReport,
) -> Result<Actor> {
    let t = &cfg.train;
    let episodes = t.episodes;
    let lr_actor = t.lr_actor.schedule(episodes);
    let lr_critic = t.lr_critic.schedule(episodes);
    let sigma_f = cfg.explore.sigma_f.schedule(episodes);
    let sigma_b = cfg.srl.sigma_b.schedule(episodes);
    let tau = cfg.srl.tau.schedule(episodes);
    let eps = cfg.fy.eps.schedule(episodes);

    let mut actor = Actor::init(env, &mut stream(seed, "actor-init", 0))?;
    let mut critic = match cfg.algorithm {
        Algorithm::Sil => Critic::Exact,
        _ => Critic::from_design(&env.critic_design(), &mut stream(seed, "critic-init", 0))?,
    };
    let mut rng = stream(seed, "train", 0);
    let val = validation_set(cfg, data);

    let initial = evaluate_policy(env, Policy::Actor(&actor), val)?.mean;
    report.record_validation(0, initial);
    let mut best = actor.clone();

    let demos = if cfg.algorithm == Algorithm::Sil {
        expert_demonstrations(env, &data.train)?
    } else {
        Vec::new()
    };
    let mut demo_order: Vec<usize> = Vec::new();

    let mut replay = ReplayBuffer::new(t.replay_capacity);
    for ep in 0..episodes {
        if cfg.algorithm == Algorithm::Sil {
            for _ in 0..t.iterations {
                let mut batch = Vec::with_capacity(t.batch_size.min(demos.len()));
                while batch.len() < t.batch_size.min(demos.len()) {
                    if demo_order.is_empty() {
                        demo_order = (0..demos.len()).collect();
                        demo_order.shuffle(&mut rng);
                    }
                    let (s, a) = &demos[demo_order.pop().expect("refilled above")];
                    batch.push((s, a.as_slice()));
                }
                sil_batch_update(
                    env,
                    &mut actor,
                    &batch,
                    eps.at(ep),
                    cfg.fy.samples,
                    lr_actor.at(ep),
                    &mut rng,
                )?;
            }
        } else {
            let mut recent = Vec::new();
            for r in 0..t.rollouts {
                let inst = &data.train[rng.random_range(0..data.train.len())];
                let mut env_rng = stream(seed, "collect", (ep * t.rollouts + r) as u64);
                recent.extend(collect_episode(
                    env,
                    &actor,
                    &inst.initial_state,
                    sigma_f.at(ep),
                    t.gamma,
                    &mut env_rng,
                )?);
            }
            for tr in &recent {
                replay.push(tr.clone());
            }
            let warm = ep < t.critic_warmup;
            let hyper = SrlHyper {
                candidates: cfg.srl.candidates,
                sigma_b: sigma_b.at(ep),
                tau: tau.at(ep),
                loss_samples: cfg.fy.samples,
                eps: eps.at(ep),
            };
            for _ in 0..t.iterations {
                let batch = replay.sample(t.batch_size.min(replay.len()), &mut rng)?;
                if let Critic::Learned(c) = &mut critic {
                    let on_policy = pick(&recent, t.batch_size, &mut rng);
                    critic_update(
                        env,
                        c,
                        &actor,
                        &batch,
                        &on_policy,
                        t.gamma,
                        lr_critic.at(ep),
                        t.huber_delta,
                    )?;
                }
                if warm {
                    continue;
                }
                match cfg.algorithm {
                    Algorithm::Srl => {
                        let states: Vec<&E::State> = batch.iter().map(|tr| &tr.state).collect();
                        srl_actor_update(env, &mut actor, &critic, &states, &hyper, lr_actor.at(ep), &mut rng)?;
                    }
                    Algorithm::Ppo => {
                        let on_policy = pick(&recent, t.batch_size, &mut rng);
                        ppo_update(env, &mut actor, &critic, &on_policy, cfg.ppo.clip, lr_actor.at(ep))?;
                    }
                    _ => unreachable!("non-learning algorithms never reach the update loop"),
                }
            }
            critic.sync_targets();
        }

        let mean = evaluate_policy(env, Policy::Actor(&actor), val)?.mean;
        log::debug!("seed {seed} episode {} validation {mean:.4}", ep + 1);
        if report.record_validation(ep + 1, mean) {
            best = actor.clone();
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SmspEnv;
    use crate::harness::config::ExperimentConfig;
    use crate::harness::data::generate_datasets;

    fn cfg(algo: &str, episodes: usize) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            "environment = \"smsp\"\nalgorithm = \"{algo}\"\ntrain.episodes = {episodes}\nsmsp.jobs = 5\n\
             train.iterations = 2\ntrain.batch_size = 4\n"
        ))
        .unwrap()
    }

    #[test]
    fn zero_episodes_reports_only_initial_evaluation() {
        let env = SmspEnv::new(cfg("srl", 0).smsp);
        let data = generate_datasets(&env, 1, [4, 3, 3]);
        let out = run_training(&env, &cfg("srl", 0), 0, &data).unwrap();
        assert_eq!(out.report.curve.len(), 1);
        assert_eq!(out.report.curve[0].episode, 0);
        assert_eq!(out.report.finals.len(), 7);
    }

    #[test]
    fn greedy_delta_is_zero() {
        let env = SmspEnv::new(cfg("greedy", 3).smsp);
        let data = generate_datasets(&env, 1, [4, 3, 3]);
        let out = run_training(&env, &cfg("greedy", 3), 0, &data).unwrap();
        assert!(out.report.finals.iter().all(|r| r.delta_vs_greedy == 0.0));
        assert!(out.actor.is_none());
    }

    #[test]
    fn learners_run_and_curve_is_monotone() {
        for algo in ["srl", "sil", "ppo"] {
            let c = cfg(algo, 4);
            let env = SmspEnv::new(c.smsp.clone());
            let data = generate_datasets(&env, 2, [6, 3, 3]);
            let out = run_training(&env, &c, 5, &data).unwrap();
            assert_eq!(out.report.status, RunStatus::Ok, "{algo}: {:?}", out.report.error);
            assert_eq!(out.report.curve.len(), 5);
            assert!(out
                .report
                .curve
                .windows(2)
                .all(|w| w[1].best_so_far >= w[0].best_so_far));
        }
    }
}
