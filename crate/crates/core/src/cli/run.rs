//! `run`: one experiment, written to an output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::anomaly::{flag_scores, rank_groups, GroupScore, WeightGroup};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::fl::{run_experiment_with, RoundRecord};

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const DEVIATIONS_FILE: &str = "deviations.csv";
pub const FLAGS_FILE: &str = "flags.jsonl";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.toml";

pub const ROUNDS_HEADER: [&str; 5] = [
    "round",
    "main_loss",
    "main_acc",
    "backdoor_loss",
    "backdoor_acc",
];
pub const DEVIATIONS_HEADER: [&str; 5] = [
    "round",
    "client_id",
    "layer_index",
    "group_kind",
    "max_abs_deviation",
];

/// One line of `flags.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagLine {
    pub round: usize,
    pub group: WeightGroup,
    pub k: f64,
    /// `None` when fewer than 3 clients take part.
    pub flagged_clients: Option<Vec<usize>>,
    /// Flagged client → deviation / median.
    pub scores: Option<std::collections::BTreeMap<usize, f64>>,
    /// Empty when fewer than 2 clients take part.
    pub group_ranking: Vec<GroupScore>,
}

impl FlagLine {
    pub fn from_record(record: &RoundRecord, k: f64) -> Result<Self> {
        let m = &record.deviations;
        let group = WeightGroup::bias(m.final_layer());
        let scores = if m.clients().len() >= 3 {
            Some(flag_scores(m, group, k)?)
        } else {
            None
        };
        Ok(Self {
            round: record.round_index,
            group,
            k,
            flagged_clients: scores.as_ref().map(|s| s.keys().copied().collect()),
            scores,
            group_ranking: if m.clients().len() >= 2 {
                rank_groups(m)?
            } else {
                Vec::new()
            },
        })
    }
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub records: Vec<RoundRecord>,
    pub flags: Vec<FlagLine>,
}

struct Writers {
    rounds: csv::Writer<File>,
    deviations: csv::Writer<File>,
    flags: BufWriter<File>,
}

impl Writers {
    fn create(dir: &Path) -> Result<Self> {
        let mut rounds = csv::Writer::from_path(dir.join(ROUNDS_FILE))?;
        rounds.write_record(ROUNDS_HEADER)?;
        rounds.flush()?;
        let mut deviations = csv::Writer::from_path(dir.join(DEVIATIONS_FILE))?;
        deviations.write_record(DEVIATIONS_HEADER)?;
        deviations.flush()?;
        let flags = BufWriter::new(File::create(dir.join(FLAGS_FILE))?);
        Ok(Self {
            rounds,
            deviations,
            flags,
        })
    }

    fn append(&mut self, record: &RoundRecord, flags: &FlagLine) -> Result<()> {
        let r = record.round_index.to_string();
        self.rounds.write_record([
            r.clone(),
            record.joint_main_loss.to_string(),
            record.joint_main_accuracy.to_string(),
            record.joint_backdoor_loss.to_string(),
            record.joint_backdoor_accuracy.to_string(),
        ])?;
        for (client, group, value) in record.deviations.cells() {
            self.deviations.write_record([
                r.clone(),
                client.to_string(),
                group.layer_index.to_string(),
                group.kind.to_string(),
                value.to_string(),
            ])?;
        }
        serde_json::to_writer(&mut self.flags, flags)?;
        self.flags.write_all(b"\n")?;
        self.rounds.flush()?;
        self.deviations.flush()?;
        self.flags.flush()?;
        Ok(())
    }
}

/// Runs `config` and writes its metrics into `config.output_dir`, one row
/// per round as each round finishes.
pub fn run_to_dir(config: &ExperimentConfig) -> Result<RunOutput> {
    run_with_progress(config, |_| {})
}

/// Like [`run_to_dir`], reporting each finished round to `progress`.
pub fn run_with_progress(
    config: &ExperimentConfig,
    mut progress: impl FnMut(&RoundRecord),
) -> Result<RunOutput> {
    config.validate()?;
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(RESOLVED_CONFIG_FILE), config.to_toml()?)?;
    let fl = config.fl_config()?;
    let data = config.load_data()?;
    let mut writers = Writers::create(&dir)?;
    let mut flags = Vec::new();
    let records = run_experiment_with(&fl, &data, &config.backdoor, |record| {
        let line = FlagLine::from_record(record, config.detector.k)?;
        writers.append(record, &line)?;
        progress(record);
        flags.push(line);
        Ok(())
    })?;
    Ok(RunOutput {
        dir,
        records,
        flags,
    })
}
