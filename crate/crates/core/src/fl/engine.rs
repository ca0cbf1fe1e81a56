use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate, Evaluation};
use crate::anomaly::{deviation_matrix, DeviationMatrix};
use crate::data::{inject_backdoor, make_backdoor_testset, BackdoorSpec, Dataset};
use crate::error::{Error, Result};
use crate::nn::{train_epochs, Architecture, Hyperparams, LayerParams, LossKind, ModelParams};
use crate::seed::{derive_seed, Stream};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct FlConfig {
    pub num_clients: usize,
    pub malicious_client_ids: BTreeSet<usize>,
    pub rounds: usize,
    pub local_epochs: usize,
    pub server_init_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub loss: LossKind,
    /// Global seed; every random stream is derived from it.
    pub seed: u64,
    pub architecture: Architecture,
}

impl FlConfig {
    pub fn new(architecture: Architecture) -> Self {
        Self {
            num_clients: 10,
            malicious_client_ids: BTreeSet::new(),
            rounds: 25,
            local_epochs: 2,
            server_init_epochs: 2,
            learning_rate: 0.01,
            batch_size: 32,
            loss: LossKind::CrossEntropy,
            seed: 0,
            architecture,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_clients == 0 {
            return Err(Error::InvalidArgument(
                "num_clients must be positive".into(),
            ));
        }
        if let Some(&bad) = self
            .malicious_client_ids
            .iter()
            .find(|&&c| c >= self.num_clients)
        {
            return Err(Error::InvalidArgument(format!(
                "malicious client {bad} is not among the {} clients",
                self.num_clients
            )));
        }
        if self.local_epochs == 0 {
            return Err(Error::InvalidArgument(
                "local_epochs must be at least 1".into(),
            ));
        }
        self.hyper(1, 0).validate()
    }

    /// Training hyperparameters for `epochs` passes on stream `seed`.
    pub fn hyper(&self, epochs: usize, seed: u64) -> Hyperparams {
        Hyperparams {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs,
            loss: self.loss,
            seed,
        }
    }
}

/// A client and its (possibly poisoned) local data, fixed across rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    pub client_id: usize,
    pub data: Dataset,
}

impl ClientState {
    /// Shuffle seed of this client in `round`.
    pub fn stream_seed(&self, global: u64, round: usize) -> u64 {
        derive_seed(
            global,
            Stream::ClientShuffle,
            self.client_id as u64,
            round as u64,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: usize,
    /// Deviation of each local update from the joint model distributed in
    /// this round.
    pub deviations: DeviationMatrix,
    pub joint_main_loss: f64,
    pub joint_main_accuracy: f64,
    pub joint_backdoor_loss: f64,
    pub joint_backdoor_accuracy: f64,
}

impl RoundRecord {
    pub fn evaluation(&self) -> Evaluation {
        Evaluation {
            main_loss: self.joint_main_loss,
            main_accuracy: self.joint_main_accuracy,
            backdoor_loss: self.joint_backdoor_loss,
            backdoor_accuracy: self.joint_backdoor_accuracy,
        }
    }
}

/// Seeded initialization trained `server_init_epochs` epochs on the
/// server's own data.
pub fn init_server_model(config: &FlConfig, server: &Dataset) -> Result<ModelParams> {
    if server.is_empty() {
        return Err(Error::EmptyDataset("the server holds no data".into()));
    }
    let init = ModelParams::init(
        &config.architecture,
        derive_seed(config.seed, Stream::Init, 0, 0),
    );
    if config.server_init_epochs == 0 {
        return Ok(init);
    }
    let hyper = config.hyper(
        config.server_init_epochs,
        derive_seed(config.seed, Stream::ServerShuffle, 0, 0),
    );
    Ok(train_epochs(&init, &config.architecture, server, &hyper)?.0)
}

/// `local_epochs` of SGD on the client's data, starting from `joint`.
pub fn run_local_training(
    joint: &ModelParams,
    client: &ClientState,
    config: &FlConfig,
    round_index: usize,
) -> Result<ModelParams> {
    let hyper = config.hyper(
        config.local_epochs,
        client.stream_seed(config.seed, round_index),
    );
    train_epochs(joint, &config.architecture, &client.data, &hyper)
        .map(|(m, _)| m)
        .map_err(|e| match e {
            Error::EmptyDataset(m) => {
                Error::EmptyDataset(format!("client {}: {m}", client.client_id))
            }
            other => other,
        })
}

/// Unweighted elementwise mean, accumulated in the given order as a running
/// mean `m += (u − m) / k`. A set of identical updates averages to exactly
/// that update.
pub fn fedavg_aggregate(updates: &[ModelParams]) -> Result<ModelParams> {
    let (first, rest) = updates
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("cannot aggregate zero updates".into()))?;
    for (k, u) in rest.iter().enumerate() {
        first.same_shape(&u.layers, &format!("fedavg update {}", k + 1))?;
    }
    let mean_of = |pick: &dyn Fn(&LayerParams) -> &Tensor, layer: usize| {
        let mut acc = pick(&first.layers[layer]).data().to_vec();
        for (k, u) in rest.iter().enumerate() {
            let count = (k + 2) as f64;
            for (m, &v) in acc.iter_mut().zip(pick(&u.layers[layer]).data()) {
                *m += (v - *m) / count;
            }
        }
        Tensor::from_parts(pick(&first.layers[layer]).shape().to_vec(), acc)
    };
    Ok(ModelParams {
        layers: (0..first.layers.len())
            .map(|l| LayerParams {
                weights: mean_of(&|p| &p.weights, l),
                bias: mean_of(&|p| &p.bias, l),
            })
            .collect(),
    })
}

/// One round: every client trains from `joint`, deviations are measured
/// against `joint`, updates are averaged in ascending client order and the
/// new joint model is evaluated.
pub fn run_round(
    joint: &ModelParams,
    clients: &[ClientState],
    config: &FlConfig,
    round_index: usize,
    clean_test: &Dataset,
    backdoor_test: &Dataset,
) -> Result<(ModelParams, RoundRecord)> {
    joint.check(&config.architecture)?;
    let mut ordered: Vec<&ClientState> = clients.iter().collect();
    ordered.sort_by_key(|c| c.client_id);
    let updates = ordered
        .par_iter()
        .map(|c| run_local_training(joint, c, config, round_index))
        .collect::<Result<Vec<_>>>()?;
    let locals: BTreeMap<usize, ModelParams> = ordered
        .iter()
        .map(|c| c.client_id)
        .zip(updates.iter().cloned())
        .collect();
    if locals.len() != ordered.len() {
        return Err(Error::InvalidArgument("duplicate client ids".into()));
    }
    let deviations = deviation_matrix(&locals, joint)?;
    let next = fedavg_aggregate(&updates)?;
    let eval = evaluate(
        &next,
        &config.architecture,
        config.loss,
        clean_test,
        backdoor_test,
    )?;
    Ok((
        next,
        RoundRecord {
            round_index,
            deviations,
            joint_main_loss: eval.main_loss,
            joint_main_accuracy: eval.main_accuracy,
            joint_backdoor_loss: eval.backdoor_loss,
            joint_backdoor_accuracy: eval.backdoor_accuracy,
        },
    ))
}

/// Clean, partitioned experiment inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct FederatedData {
    pub server: Dataset,
    pub clients: Vec<Dataset>,
    pub test: Dataset,
}

/// Poisons the malicious clients and builds the backdoor test set.
pub fn prepare_clients(
    config: &FlConfig,
    data: &FederatedData,
    spec: &BackdoorSpec,
) -> Result<(Vec<ClientState>, Dataset)> {
    config.validate()?;
    if data.clients.len() != config.num_clients {
        return Err(Error::InvalidArgument(format!(
            "{} client datasets for {} clients",
            data.clients.len(),
            config.num_clients
        )));
    }
    let malicious: Vec<usize> = config.malicious_client_ids.iter().copied().collect();
    let poisoned = inject_backdoor(&data.clients, spec, &malicious, config.seed)?;
    let clients = poisoned
        .datasets
        .into_iter()
        .enumerate()
        .map(|(client_id, data)| ClientState { client_id, data })
        .collect();
    let backdoor_test = make_backdoor_testset(&data.test, spec)?;
    Ok((clients, backdoor_test))
}

pub fn run_experiment(
    config: &FlConfig,
    data: &FederatedData,
    spec: &BackdoorSpec,
) -> Result<Vec<RoundRecord>> {
    run_experiment_with(config, data, spec, |_| Ok(()))
}

/// Like [`run_experiment`], calling `on_round` as each round completes.
pub fn run_experiment_with(
    config: &FlConfig,
    data: &FederatedData,
    spec: &BackdoorSpec,
    mut on_round: impl FnMut(&RoundRecord) -> Result<()>,
) -> Result<Vec<RoundRecord>> {
    let (clients, backdoor_test) = prepare_clients(config, data, spec)?;
    if config.rounds == 0 {
        return Ok(Vec::new());
    }
    let mut joint = init_server_model(config, &data.server)?;
    let mut records = Vec::with_capacity(config.rounds);
    for round in 1..=config.rounds {
        let (next, record) =
            run_round(&joint, &clients, config, round, &data.test, &backdoor_test)?;
        on_round(&record)?;
        records.push(record);
        joint = next;
    }
    Ok(records)
}
