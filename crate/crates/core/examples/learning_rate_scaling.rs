//! With one epoch of full-batch local training the deviation of every
//! parameter is the learning rate times the gradient magnitude, so the
//! per-group deviations scale linearly with the learning rate.
//!
//! ```text
//! cargo run --release --example learning_rate_scaling
//! ```

use std::collections::BTreeMap;

use backdoor_lab::anomaly::deviation_matrix;
use backdoor_lab::fl::{init_server_model, prepare_clients, run_local_training};
use backdoor_lab::ExperimentConfig;

fn main() -> backdoor_lab::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/desk.toml");
    let cfg = ExperimentConfig::load(path.as_ref())?;
    let data = cfg.load_data()?;
    let mut fl = cfg.fl_config()?;
    fl.local_epochs = 1;
    let (clients, _) = prepare_clients(&fl, &data, &cfg.backdoor)?;
    let joint = init_server_model(&fl, &data.server)?;
    let client = &clients[0];
    fl.batch_size = client.data.len();

    let mut rows = Vec::new();
    for lr in [0.1, 0.01, 0.001] {
        fl.learning_rate = lr;
        let local = run_local_training(&joint, client, &fl, 1)?;
        rows.push((lr, deviation_matrix(&BTreeMap::from([(0, local)]), &joint)?));
    }
    let (_, reference) = &rows[0];
    println!(
        "{:<16} {:>12} {:>12} {:>12}",
        "group", "lr 0.1", "lr 0.01", "lr 0.001"
    );
    for &g in reference.groups() {
        let cells: Vec<String> = rows
            .iter()
            .map(|(_, m)| format!("{:>12.4e}", m.get(0, g).unwrap_or(f64::NAN)))
            .collect();
        println!("{:<16} {}", g.to_string(), cells.join(" "));
    }
    Ok(())
}
