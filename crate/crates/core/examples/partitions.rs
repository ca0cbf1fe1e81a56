//! Class histograms of the clients under the sharded and Dirichlet
//! partitions.
//!
//! ```text
//! cargo run --example partitions
//! ```

use backdoor_lab::data::{gen_synthetic, partition, PartitionPlan, PartitionScheme};

fn main() -> backdoor_lab::Result<()> {
    let ds = gen_synthetic(10, 100, &[1, 4, 4], 0)?;
    for scheme in [
        PartitionScheme::Sharded {
            shards_per_client: 2,
        },
        PartitionScheme::Dirichlet { beta: 0.5 },
        PartitionScheme::Dirichlet { beta: 100.0 },
    ] {
        let plan = PartitionPlan {
            scheme,
            num_clients: 6,
            server_share: 0.1,
            seed: 3,
        };
        let p = partition(&ds, &plan)?;
        println!("{scheme:?}: server {} samples", p.server.len());
        for (id, c) in p.clients.iter().enumerate() {
            println!("  client {id}: {:?}", c.class_counts());
        }
    }
    Ok(())
}
