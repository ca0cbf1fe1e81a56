//! The desk-scale experiment: one malicious client out of ten. Prints how the
//! weight groups rank in round 1, which clients the detector flags and how
//! the malicious client's final-layer bias deviation compares with the
//! benign median over the rounds.
//!
//! ```text
//! cargo run --release --example anomaly_localization
//! ```

use backdoor_lab::anomaly::{flag_clients, median, rank_groups, WeightGroup};
use backdoor_lab::fl::run_experiment;
use backdoor_lab::ExperimentConfig;

fn main() -> backdoor_lab::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/desk.toml");
    let cfg = ExperimentConfig::load(path.as_ref())?;
    let fl = cfg.fl_config()?;
    let records = run_experiment(&fl, &cfg.load_data()?, &cfg.backdoor)?;
    let malicious = &cfg.federation.malicious_clients;

    println!("round 1 group ranking:");
    for s in rank_groups(&records[0].deviations)? {
        println!("  {:<16} score {:.3}", s.group.to_string(), s.score);
    }
    println!("round  malicious  benign median  ratio  flagged   backdoor acc");
    for r in &records {
        let g = WeightGroup::bias(r.deviations.final_layer());
        let col = r.deviations.column(g)?;
        let ids = r.deviations.clients();
        let mal: f64 = ids
            .iter()
            .zip(&col)
            .filter(|(c, _)| malicious.contains(c))
            .map(|(_, v)| *v)
            .sum();
        let benign: Vec<f64> = ids
            .iter()
            .zip(&col)
            .filter(|(c, _)| !malicious.contains(c))
            .map(|(_, v)| *v)
            .collect();
        let med = median(&benign);
        println!(
            "{:>5}  {mal:>9.5}  {med:>13.5}  {:>5.2}  {:<8}  {:.3}",
            r.round_index,
            mal / med,
            format!("{:?}", flag_clients(&r.deviations, g, cfg.detector.k)?),
            r.joint_backdoor_accuracy
        );
    }
    Ok(())
}
