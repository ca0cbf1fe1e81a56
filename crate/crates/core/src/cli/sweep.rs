//! `sweep`: one run per value of a single configuration axis.

use std::fmt;
use std::fs;
use std::str::FromStr;

use crate::anomaly::{median, WeightGroup};
use crate::config::ExperimentConfig;
use crate::data::Rate;
use crate::error::{Error, Result};

use super::run::{run_to_dir, RunOutput};

pub const SUMMARY_FILE: &str = "sweep_summary.csv";
pub const SUMMARY_HEADER: [&str; 10] = [
    "axis",
    "value",
    "dir",
    "rounds",
    "final_main_acc",
    "final_backdoor_acc",
    "round1_malicious_final_bias",
    "round1_benign_final_bias_median",
    "rounds_flagged_exactly",
    "malicious_samples",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Axis {
    /// Number of malicious clients; clients `0..n` are malicious.
    MaliciousClients,
    LearningRate,
    MaliciousRate,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::MaliciousClients => "malicious_clients",
            Axis::LearningRate => "learning_rate",
            Axis::MaliciousRate => "malicious_rate",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "malicious_clients" => Ok(Axis::MaliciousClients),
            "learning_rate" => Ok(Axis::LearningRate),
            "malicious_rate" => Ok(Axis::MaliciousRate),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?} (expected malicious_clients, learning_rate or malicious_rate)"
            ))),
        }
    }
}

/// The configuration for one sweep value, written to a subdirectory of the
/// base output directory. The global seed is left unchanged so that only
/// the swept factor differs between runs.
pub fn apply_axis(base: &ExperimentConfig, axis: Axis, value: &str) -> Result<ExperimentConfig> {
    let bad = |why: String| Error::Config(format!("sweep value {value:?} for {axis}: {why}"));
    let mut cfg = base.clone();
    match axis {
        Axis::MaliciousClients => {
            let n: usize = value.trim().parse().map_err(|e| bad(format!("{e}")))?;
            cfg.federation.malicious_clients = (0..n).collect();
        }
        Axis::LearningRate => {
            cfg.training.learning_rate = value.trim().parse().map_err(|e| bad(format!("{e}")))?;
        }
        Axis::MaliciousRate => {
            cfg.backdoor.malicious_rate = value.parse::<Rate>().map_err(|e| bad(e.to_string()))?;
        }
    }
    cfg.output_dir = base.output_dir.join(subdir_name(axis, value));
    cfg.validate().map_err(|e| bad(e.to_string()))?;
    Ok(cfg)
}

/// `axis=value` with characters unsafe in file names replaced.
pub fn subdir_name(axis: Axis, value: &str) -> String {
    let clean: String = value
        .trim()
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{axis}={clean}")
}

/// Summary statistics of one sweep entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub value: String,
    pub output: RunOutput,
    pub malicious_samples: usize,
}

/// Final-layer bias deviations of round 1: the largest malicious value and
/// the benign median. `None` when a side is empty or there is no round.
pub fn round1_final_bias(output: &RunOutput, malicious: &[usize]) -> (Option<f64>, Option<f64>) {
    let Some(r1) = output.records.first() else {
        return (None, None);
    };
    let m = &r1.deviations;
    let group = WeightGroup::bias(m.final_layer());
    let (mut mal, mut benign) = (Vec::new(), Vec::new());
    for &c in m.clients() {
        let v = m.get(c, group).unwrap_or(0.0);
        if malicious.contains(&c) {
            mal.push(v)
        } else {
            benign.push(v)
        }
    }
    (
        mal.into_iter().reduce(f64::max),
        (!benign.is_empty()).then(|| median(&benign)),
    )
}

/// Runs every value in turn and writes the summary CSV into the base
/// output directory.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: Axis,
    values: &[String],
) -> Result<Vec<SweepEntry>> {
    let configs = values
        .iter()
        .map(|v| apply_axis(base, axis, v))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&base.output_dir)?;
    let mut summary = csv::Writer::from_path(base.output_dir.join(SUMMARY_FILE))?;
    summary.write_record(SUMMARY_HEADER)?;
    summary.flush()?;
    let mut entries = Vec::new();
    for (value, cfg) in values.iter().zip(&configs) {
        let output = run_to_dir(cfg)?;
        let malicious: Vec<usize> = cfg.federation.malicious_clients.iter().copied().collect();
        let malicious_samples = count_malicious_samples(cfg)?;
        let (mal, benign) = round1_final_bias(&output, &malicious);
        let exact = output
            .flags
            .iter()
            .filter(|f| f.flagged_clients.as_deref() == Some(&malicious[..]))
            .count();
        let last = output.records.last();
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        summary.write_record([
            axis.name().to_string(),
            value.trim().to_string(),
            subdir_name(axis, value),
            output.records.len().to_string(),
            opt(last.map(|r| r.joint_main_accuracy)),
            opt(last.map(|r| r.joint_backdoor_accuracy)),
            opt(mal),
            opt(benign),
            exact.to_string(),
            malicious_samples.to_string(),
        ])?;
        summary.flush()?;
        entries.push(SweepEntry {
            value: value.clone(),
            output,
            malicious_samples,
        });
    }
    Ok(entries)
}

/// Total poisoned samples across all malicious clients of `cfg`.
pub fn count_malicious_samples(cfg: &ExperimentConfig) -> Result<usize> {
    let data = cfg.load_data()?;
    let ids: Vec<usize> = cfg.federation.malicious_clients.iter().copied().collect();
    let poisoned = crate::data::inject_backdoor(&data.clients, &cfg.backdoor, &ids, cfg.seed)?;
    Ok(poisoned.malicious_indices.values().map(Vec::len).sum())
}

/// Splits a comma-separated value list; an empty string gives no values.
pub fn parse_values(list: &str) -> Vec<String> {
    list.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(String::from)
        .collect()
}
