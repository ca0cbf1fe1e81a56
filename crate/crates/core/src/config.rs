//! Experiment configuration files.
//!
//! A configuration is a TOML document. Unknown keys are rejected, and
//! everything omitted takes the defaults shown by [`ExperimentConfig::to_toml`].
//!
//! ```toml
//! seed = 7
//! output_dir = "runs/baseline"
//!
//! [dataset]
//! kind = "synthetic"        # or: kind = "cifar10", path = "data/cifar-10-batches-bin"
//!
//! [partition]
//! scheme = "dirichlet"
//! beta = 0.5
//!
//! [model]
//! preset = "mlp"
//! hidden = [32]
//!
//! [training]
//! learning_rate = 0.01
//!
//! [federation]
//! num_clients = 10
//! malicious_clients = [0]
//! rounds = 25
//!
//! [backdoor]
//! malicious_rate = "1/3"
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anomaly::DEFAULT_FLAG_FACTOR;
use crate::data::{
    self, cifar, partition, BackdoorSpec, PartitionPlan, PartitionScheme, SyntheticParams,
};
use crate::error::{Error, Result};
use crate::fl::{FederatedData, FlConfig};
use crate::nn::{Activation, Architecture, LossKind};
use crate::seed::{derive_seed, Stream};

/// Environment variable that replaces `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "BACKDOOR_LAB_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    Synthetic(SyntheticParams),
    Cifar10(CifarConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CifarConfig {
    /// Directory holding the CIFAR-10 binary batches.
    pub path: PathBuf,
    /// Use only the first `limit_train` training samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_train: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_test: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Synthetic(SyntheticParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
        #[serde(default = "default_hidden_activation")]
        hidden_activation: HiddenActivation,
    },
    Cnn {
        #[serde(default = "default_filters")]
        filters: usize,
        #[serde(default = "default_dense_units")]
        dense_units: usize,
    },
}

fn default_hidden() -> Vec<usize> {
    vec![32]
}
/// One activation for every hidden layer, or a list with one per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HiddenActivation {
    Uniform(Activation),
    PerLayer(Vec<Activation>),
}

impl HiddenActivation {
    /// Pairs each hidden width with its activation.
    pub fn layers(&self, hidden: &[usize]) -> Result<Vec<(usize, Activation)>> {
        match self {
            HiddenActivation::Uniform(a) => Ok(hidden.iter().map(|&h| (h, *a)).collect()),
            HiddenActivation::PerLayer(acts) if acts.len() == hidden.len() => {
                Ok(hidden.iter().copied().zip(acts.iter().copied()).collect())
            }
            HiddenActivation::PerLayer(acts) => Err(Error::Config(format!(
                "model.hidden_activation lists {} activations for {} hidden layers",
                acts.len(),
                hidden.len()
            ))),
        }
    }
}

fn default_hidden_activation() -> HiddenActivation {
    HiddenActivation::Uniform(Activation::Sigmoid)
}
fn default_filters() -> usize {
    8
}
fn default_dense_units() -> usize {
    32
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Mlp {
            hidden: default_hidden(),
            hidden_activation: default_hidden_activation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub loss: LossKind,
    pub local_epochs: usize,
    pub server_init_epochs: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 32,
            loss: LossKind::CrossEntropy,
            local_epochs: 2,
            server_init_epochs: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FederationConfig {
    pub num_clients: usize,
    pub malicious_clients: BTreeSet<usize>,
    pub rounds: usize,
    /// Share of the training set held by the server for initialization.
    pub server_share: f64,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            num_clients: 10,
            malicious_clients: BTreeSet::from([0]),
            rounds: 25,
            server_share: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    /// A client is flagged when its final-layer bias deviation exceeds `k`
    /// times the median over clients.
    pub k: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_FLAG_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default = "default_partition")]
    pub partition: PartitionScheme,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub federation: FederationConfig,
    #[serde(default)]
    pub backdoor: BackdoorSpec,
    #[serde(default)]
    pub detector: DetectorConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}
fn default_partition() -> PartitionScheme {
    PartitionScheme::Sharded {
        shards_per_client: 2,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: default_output_dir(),
            dataset: DatasetConfig::default(),
            partition: default_partition(),
            model: ModelConfig::default(),
            training: TrainingConfig::default(),
            federation: FederationConfig::default(),
            backdoor: BackdoorSpec::default(),
            detector: DetectorConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a configuration document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses and validates `path`; relative dataset paths are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let DatasetConfig::Cifar10(c) = &mut cfg.dataset {
            if c.path.is_relative() {
                if let Some(parent) = path.parent() {
                    c.path = parent.join(&c.path);
                }
            }
        }
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        Ok(cfg)
    }

    /// Applies the output-directory environment override.
    pub fn with_env_overrides(mut self) -> Self {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.output_dir = PathBuf::from(dir);
        }
        self
    }

    /// The fully resolved configuration, defaults included.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn image_shape(&self) -> Vec<usize> {
        match &self.dataset {
            DatasetConfig::Synthetic(p) => p.image_shape.clone(),
            DatasetConfig::Cifar10(_) => cifar::IMAGE_SHAPE.to_vec(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match &self.dataset {
            DatasetConfig::Synthetic(p) => p.num_classes,
            DatasetConfig::Cifar10(_) => cifar::NUM_CLASSES,
        }
    }

    pub fn architecture(&self) -> Result<Architecture> {
        let input = self.image_shape();
        let classes = self.num_classes();
        match &self.model {
            ModelConfig::Mlp {
                hidden,
                hidden_activation,
            } => Architecture::mlp_layers(
                input,
                &hidden_activation.layers(hidden)?,
                classes,
                Activation::Softmax,
            ),
            ModelConfig::Cnn {
                filters,
                dense_units,
            } => Architecture::cnn(input, *filters, *dense_units, classes),
        }
    }

    pub fn fl_config(&self) -> Result<FlConfig> {
        let t = &self.training;
        Ok(FlConfig {
            num_clients: self.federation.num_clients,
            malicious_client_ids: self.federation.malicious_clients.clone(),
            rounds: self.federation.rounds,
            local_epochs: t.local_epochs,
            server_init_epochs: t.server_init_epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            loss: t.loss,
            seed: self.seed,
            architecture: self.architecture()?,
        })
    }

    pub fn partition_plan(&self) -> PartitionPlan {
        PartitionPlan {
            scheme: self.partition,
            num_clients: self.federation.num_clients,
            server_share: self.federation.server_share,
            seed: derive_seed(self.seed, Stream::Partition, 0, 0),
        }
    }

    /// Loads or generates the data and partitions it.
    pub fn load_data(&self) -> Result<FederatedData> {
        let (train, test) = match &self.dataset {
            DatasetConfig::Synthetic(p) => {
                data::synthetic_train_test(p, derive_seed(self.seed, Stream::SyntheticTrain, 0, 0))?
            }
            DatasetConfig::Cifar10(c) => {
                let (train, test) = data::load_cifar10(&c.path)?;
                let head = |ds: data::Dataset, n: Option<usize>| match n {
                    Some(n) if n < ds.len() => ds.subset(&(0..n).collect::<Vec<_>>()),
                    _ => ds,
                };
                (head(train, c.limit_train), head(test, c.limit_test))
            }
        };
        let parts = partition(&train, &self.partition_plan())?;
        Ok(FederatedData {
            server: parts.server,
            clients: parts.clients,
            test,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: Error| Error::Config(format!("{name}: {e}"));
        match &self.dataset {
            DatasetConfig::Synthetic(p) => {
                if p.num_classes < 2 || p.train_per_class == 0 || p.test_per_class == 0 {
                    return Err(Error::Config(
                        "dataset: need at least 2 classes and positive per-class sample counts"
                            .into(),
                    ));
                }
                if p.image_shape.len() != 3 || p.image_shape.contains(&0) {
                    return Err(Error::Config(format!(
                        "dataset.image_shape: expected [channels, height, width], got {:?}",
                        p.image_shape
                    )));
                }
                if !(p.noise >= 0.0 && p.pattern >= 0.0) {
                    return Err(Error::Config(
                        "dataset: noise and pattern must be non-negative".into(),
                    ));
                }
            }
            DatasetConfig::Cifar10(c) => {
                if !c.path.exists() {
                    return Err(Error::Config(format!(
                        "dataset.path: {} does not exist",
                        c.path.display()
                    )));
                }
            }
        }
        match self.partition {
            PartitionScheme::Sharded {
                shards_per_client: 0,
            } => {
                return Err(Error::Config(
                    "partition.shards_per_client must be at least 1".into(),
                ))
            }
            PartitionScheme::Dirichlet { beta } if !(beta > 0.0 && beta.is_finite()) => {
                return Err(Error::Config(format!(
                    "partition.beta must be positive, got {beta}"
                )))
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.federation.server_share) {
            return Err(Error::Config(format!(
                "federation.server_share must lie in [0, 1), got {}",
                self.federation.server_share
            )));
        }
        if !(self.detector.k > 0.0 && self.detector.k.is_finite()) {
            return Err(Error::Config(format!(
                "detector.k must be positive, got {}",
                self.detector.k
            )));
        }
        self.architecture().map_err(|e| field("model", e))?;
        self.fl_config()
            .and_then(|c| c.validate())
            .map_err(|e| field("training/federation", e))?;
        self.backdoor
            .validate(&self.image_shape(), self.num_classes())
            .map_err(|e| field("backdoor", e))
    }
}
