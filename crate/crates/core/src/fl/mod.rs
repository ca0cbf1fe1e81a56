//! Federated rounds: distribute the joint model, train locally, average.

mod engine;
mod evaluate;

pub use engine::{
    fedavg_aggregate, init_server_model, prepare_clients, run_experiment, run_experiment_with,
    run_local_training, run_round, ClientState, FederatedData, FlConfig, RoundRecord,
};
pub use evaluate::{evaluate, Evaluation};
