//! Seeded instance datasets and their line-delimited JSON files.
//!
//! Each line is one record:
//!
//! ```text
//! {"format_version":1,"env":"gspp","split":"test","instance_id":0,"seed":…,"initial_state":{…}}
//! ```
//!
//! `seed` drives the stochastic transitions of every evaluation rollout
//! from that instance, so evaluation is reproducible across policies.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::env::{EnvKind, Environment};
use crate::rng::{derive_seed, from_seed};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord<S> {
    pub format_version: u32,
    pub env: EnvKind,
    pub split: Split,
    pub instance_id: usize,
    pub seed: u64,
    pub initial_state: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Datasets<S> {
    pub train: Vec<InstanceRecord<S>>,
    pub val: Vec<InstanceRecord<S>>,
    pub test: Vec<InstanceRecord<S>>,
}

impl<S> Datasets<S> {
    pub fn split(&self, split: Split) -> &[InstanceRecord<S>] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

pub fn generate_split<E: Environment>(
    env: &E,
    data_seed: u64,
    split: Split,
    count: usize,
) -> Vec<InstanceRecord<E::State>> {
    (0..count)
        .map(|i| {
            let seed = derive_seed(data_seed, split.name(), i as u64);
            InstanceRecord {
                format_version: FORMAT_VERSION,
                env: env.kind(),
                split,
                instance_id: i,
                seed,
                initial_state: env.generate(&mut from_seed(seed)),
            }
        })
        .collect()
}

pub fn generate_datasets<E: Environment>(env: &E, data_seed: u64, sizes: [usize; 3]) -> Datasets<E::State> {
    let [train, val, test] = sizes;
    Datasets {
        train: generate_split(env, data_seed, Split::Train, train),
        val: generate_split(env, data_seed, Split::Val, val),
        test: generate_split(env, data_seed, Split::Test, test),
    }
}

pub fn write_jsonl<S: Serialize>(path: &Path, records: &[InstanceRecord<S>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records and checks their version, environment, and split.
pub fn read_jsonl<S: DeserializeOwned>(path: &Path, env: EnvKind, split: Split) -> Result<Vec<InstanceRecord<S>>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: InstanceRecord<S> =
            serde_json::from_str(&line).map_err(|e| Error::Dataset(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if r.format_version != FORMAT_VERSION {
            return Err(Error::Dataset(format!(
                "{}:{}: format version {} (expected {FORMAT_VERSION})",
                path.display(),
                n + 1,
                r.format_version
            )));
        }
        if r.env != env || r.split != split {
            return Err(Error::Dataset(format!(
                "{}:{}: record is {}/{}, expected {env}/{split}",
                path.display(),
                n + 1,
                r.env,
                r.split
            )));
        }
        out.push(r);
    }
    if out.is_empty() {
        return Err(Error::Dataset(format!("{} holds no records", path.display())));
    }
    Ok(out)
}

pub fn dataset_path(dir: &Path, split: Split) -> std::path::PathBuf {
    dir.join(format!("{split}.jsonl"))
}

pub fn write_datasets<S: Serialize>(dir: &Path, data: &Datasets<S>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for split in Split::ALL {
        write_jsonl(&dataset_path(dir, split), data.split(split))?;
    }
    Ok(())
}

pub fn read_datasets<S: DeserializeOwned>(dir: &Path, env: EnvKind) -> Result<Datasets<S>> {
    Ok(Datasets {
        train: read_jsonl(&dataset_path(dir, Split::Train), env, Split::Train)?,
        val: read_jsonl(&dataset_path(dir, Split::Val), env, Split::Val)?,
        test: read_jsonl(&dataset_path(dir, Split::Test), env, Split::Test)?,
    })
}
