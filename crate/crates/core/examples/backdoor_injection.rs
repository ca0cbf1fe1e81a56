//! Poisoning two malicious clients: the 1/3 rate is split between them, the
//! designated source-class samples get the trigger and the target label, and
//! replicated copies fill the rest of each client's poisoned share.
//!
//! ```text
//! cargo run --example backdoor_injection
//! ```

use backdoor_lab::data::{gen_synthetic, inject_backdoor, BackdoorSpec};

fn main() -> backdoor_lab::Result<()> {
    let ds = gen_synthetic(10, 30, &[3, 8, 8], 1)?;
    let clients: Vec<_> = (0..4)
        .map(|c| ds.subset(&(c..ds.len()).step_by(4).collect::<Vec<_>>()))
        .collect();
    let spec = BackdoorSpec::default();
    let ids = [0, 1];
    println!(
        "rate {} split over {} malicious clients -> {} each",
        spec.malicious_rate,
        ids.len(),
        spec.malicious_rate.split(ids.len())
    );
    let out = inject_backdoor(&clients, &spec, &ids, 42)?;
    for (id, idx) in &out.malicious_indices {
        let poisoned = &out.datasets[*id];
        println!(
            "client {id}: {} -> {} samples, {} poisoned ({:.3}), labels now {:?}",
            clients[*id].len(),
            poisoned.len(),
            idx.len(),
            idx.len() as f64 / poisoned.len() as f64,
            poisoned.class_counts()
        );
    }
    let sample = out.datasets[0].sample(out.malicious_indices[&0][0]);
    println!("first poisoned image, channel 0, top-left 4x4:");
    for y in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|x| format!("{:.2}", sample[y * 8 + x]))
            .collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
