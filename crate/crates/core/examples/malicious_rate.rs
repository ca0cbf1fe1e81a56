//! The malicious client's final-layer bias deviation under three poisoning
//! rates. At 1/1 the client holds only poisoned samples; at 1/50 only a few.
//!
//! ```text
//! cargo run --release --example malicious_rate
//! ```

use backdoor_lab::anomaly::WeightGroup;
use backdoor_lab::data::Rate;
use backdoor_lab::fl::run_experiment;
use backdoor_lab::ExperimentConfig;

fn main() -> backdoor_lab::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/desk.toml");
    let base = ExperimentConfig::load(path.as_ref())?;
    let data = base.load_data()?;
    let mut series = Vec::new();
    for (num, den) in [(1, 50), (1, 3), (1, 1)] {
        let mut cfg = base.clone();
        cfg.backdoor.malicious_rate = Rate::new(num, den)?;
        let records = run_experiment(&cfg.fl_config()?, &data, &cfg.backdoor)?;
        let values: Vec<f64> = records
            .iter()
            .map(|r| {
                r.deviations
                    .get(0, WeightGroup::bias(r.deviations.final_layer()))
                    .unwrap_or(f64::NAN)
            })
            .collect();
        series.push((cfg.backdoor.malicious_rate, values));
    }
    println!(
        "round {}",
        series
            .iter()
            .map(|(r, _)| format!("{:>10}", r.to_string()))
            .collect::<String>()
    );
    for round in 0..series[0].1.len() {
        let cells: String = series
            .iter()
            .map(|(_, v)| format!("{:>10.5}", v[round]))
            .collect();
        println!("{:>5} {cells}", round + 1);
    }
    Ok(())
}
