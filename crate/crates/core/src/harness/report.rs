//! Run reports and their CSV and JSON files.
//!
//! `curve.csv` columns: `episode,split,mean_reward,best_so_far`, ordered by
//! episode. `final.csv` columns:
//! `instance_id,split,algorithm,seed,reward,delta_vs_greedy`, ordered by
//! split (train before test), then instance and seed. `delta_vs_greedy` is
//! the reward minus the greedy policy's reward on the same instance.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use super::data::Split;
use crate::env::EnvKind;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub split: Split,
    pub mean_reward: f64,
    pub best_so_far: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalRow {
    pub instance_id: usize,
    pub split: Split,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub reward: f64,
    pub delta_vs_greedy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub environment: EnvKind,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub config_hash: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub best_episode: Option<usize>,
    pub train_mean: Option<f64>,
    pub test_mean: Option<f64>,
    pub wall_clock_secs: f64,
    pub warnings: Vec<String>,
    pub curve: Vec<CurvePoint>,
    pub finals: Vec<FinalRow>,
}

impl RunReport {
    pub fn new(environment: EnvKind, algorithm: Algorithm, seed: u64, config_hash: String) -> Self {
        Self {
            environment,
            algorithm,
            seed,
            config_hash,
            status: RunStatus::Ok,
            error: None,
            best_episode: None,
            train_mean: None,
            test_mean: None,
            wall_clock_secs: 0.0,
            warnings: Vec::new(),
            curve: Vec::new(),
            finals: Vec::new(),
        }
    }

    /// Appends a validation mean; `best_so_far` is the running maximum.
    /// Returns whether this point is a new best.
    pub fn record_validation(&mut self, episode: usize, mean_reward: f64) -> bool {
        let prev = self.curve.last().map(|p| p.best_so_far);
        let improved = prev.is_none_or(|b| mean_reward > b);
        let best_so_far = prev.map_or(mean_reward, |b| b.max(mean_reward));
        self.curve.push(CurvePoint {
            episode,
            split: Split::Val,
            mean_reward,
            best_so_far,
        });
        if improved {
            self.best_episode = Some(episode);
        }
        improved
    }

    pub fn split_mean(&self, split: Split) -> Option<f64> {
        let v: Vec<f64> = self
            .finals
            .iter()
            .filter(|r| r.split == split)
            .map(|r| r.reward)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn sort_finals(&mut self) {
        self.finals.sort_by_key(|a| (a.split, a.instance_id, a.seed));
    }
}

pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "split", "mean_reward", "best_so_far"])?;
    for p in curve {
        w.serialize((p.episode, p.split, p.mean_reward, p.best_so_far))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_final_csv(path: &Path, rows: &[FinalRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["instance_id", "split", "algorithm", "seed", "reward", "delta_vs_greedy"])?;
    for r in rows {
        w.serialize((r.instance_id, r.split, r.algorithm, r.seed, r.reward, r.delta_vs_greedy))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `curve.csv`, `final.csv`, and `report.json` into `dir`. Only the
/// JSON file carries wall-clock time, so the CSVs are reproducible byte for
/// byte.
pub fn emit_results(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_curve_csv(&dir.join("curve.csv"), &report.curve)?;
    write_final_csv(&dir.join("final.csv"), &report.finals)?;
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(dir.join("report.json"), text)?;
    Ok(())
}
