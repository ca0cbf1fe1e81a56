//! A handful of FedAvg rounds on synthetic data with no attacker: every
//! client trains from the joint model, updates are averaged, the new joint
//! model is evaluated.
//!
//! ```text
//! cargo run --release --example fedavg_round
//! ```

use backdoor_lab::config::{DatasetConfig, ModelConfig};
use backdoor_lab::data::{PartitionScheme, SyntheticParams};
use backdoor_lab::fl::{init_server_model, prepare_clients, run_round};
use backdoor_lab::ExperimentConfig;

fn main() -> backdoor_lab::Result<()> {
    let mut cfg = ExperimentConfig {
        dataset: DatasetConfig::Synthetic(SyntheticParams::default()),
        partition: PartitionScheme::Dirichlet { beta: 1.0 },
        model: ModelConfig::default(),
        ..ExperimentConfig::default()
    };
    cfg.federation.malicious_clients.clear();
    cfg.federation.num_clients = 5;

    let fl = cfg.fl_config()?;
    let data = cfg.load_data()?;
    for (id, c) in data.clients.iter().enumerate() {
        println!(
            "client {id}: {:>4} samples, per class {:?}",
            c.len(),
            c.class_counts()
        );
    }
    let (clients, backdoor_test) = prepare_clients(&fl, &data, &cfg.backdoor)?;
    let mut joint = init_server_model(&fl, &data.server)?;
    for round in 1..=5 {
        let (next, record) = run_round(&joint, &clients, &fl, round, &data.test, &backdoor_test)?;
        println!(
            "round {round}: joint accuracy {:.3}, loss {:.4}",
            record.joint_main_accuracy, record.joint_main_loss
        );
        joint = next;
    }
    Ok(())
}
