//! Non-iid splits of a training set across a server and its clients.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionScheme {
    /// Sort by label, cut into `num_clients * shards_per_client` contiguous
    /// shards and deal `shards_per_client` random shards to each client.
    Sharded { shards_per_client: usize },
    /// Per class, split its samples among clients with proportions drawn
    /// from a symmetric Dirichlet(`beta`).
    Dirichlet { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub scheme: PartitionScheme,
    pub num_clients: usize,
    /// Fraction of the data drawn uniformly at random for the server before
    /// the clients are partitioned.
    pub server_share: f64,
    pub seed: u64,
}

/// Result of [`partition`]. Index lists refer to the input dataset and are
/// ascending; each subset holds its samples in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub server: Dataset,
    pub clients: Vec<Dataset>,
    pub server_indices: Vec<usize>,
    pub client_indices: Vec<Vec<usize>>,
}

pub fn partition(dataset: &Dataset, plan: &PartitionPlan) -> Result<Partition> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset(
            "cannot partition an empty dataset".into(),
        ));
    }
    if plan.num_clients == 0 {
        return Err(Error::InvalidArgument(
            "num_clients must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&plan.server_share) {
        return Err(Error::InvalidArgument(format!(
            "server_share must lie in [0, 1), got {}",
            plan.server_share
        )));
    }
    if dataset.len() < plan.num_clients {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot cover {} clients",
            dataset.len(),
            plan.num_clients
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut perm: Vec<usize> = (0..dataset.len()).collect();
    perm.shuffle(&mut rng);
    let server_count = (plan.server_share * dataset.len() as f64).floor() as usize;
    let mut server_indices = perm[..server_count].to_vec();
    server_indices.sort_unstable();
    let mut rest = perm[server_count..].to_vec();
    rest.sort_unstable();

    let mut client_indices = match plan.scheme {
        PartitionScheme::Sharded { shards_per_client } => sharded(
            dataset.labels(),
            &rest,
            plan.num_clients,
            shards_per_client,
            &mut rng,
        )?,
        PartitionScheme::Dirichlet { beta } => dirichlet(
            dataset.labels(),
            dataset.num_classes(),
            &rest,
            plan.num_clients,
            beta,
            &mut rng,
        )?,
    };
    for c in &mut client_indices {
        c.sort_unstable();
    }

    Ok(Partition {
        server: dataset.subset(&server_indices),
        clients: client_indices.iter().map(|ix| dataset.subset(ix)).collect(),
        server_indices,
        client_indices,
    })
}

fn sharded(
    labels: &[usize],
    pool: &[usize],
    num_clients: usize,
    shards_per_client: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>> {
    let shards = num_clients * shards_per_client;
    if shards_per_client == 0 || shards > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "{num_clients} clients x {shards_per_client} shards exceeds the {} samples available",
            pool.len()
        )));
    }
    let mut by_label = pool.to_vec();
    by_label.sort_by_key(|&i| (labels[i], i));
    let m = by_label.len();
    let mut order: Vec<usize> = (0..shards).collect();
    order.shuffle(rng);
    Ok((0..num_clients)
        .map(|c| {
            order[c * shards_per_client..(c + 1) * shards_per_client]
                .iter()
                .flat_map(|&s| {
                    by_label[s * m / shards..(s + 1) * m / shards]
                        .iter()
                        .copied()
                })
                .collect()
        })
        .collect())
}

fn dirichlet(
    labels: &[usize],
    num_classes: usize,
    pool: &[usize],
    num_clients: usize,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dirichlet beta must be positive, got {beta}"
        )));
    }
    let gamma = Gamma::new(beta, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut clients = vec![Vec::new(); num_clients];
    for class in 0..num_classes {
        let mut members: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|&i| labels[i] == class)
            .collect();
        if members.is_empty() {
            continue;
        }
        members.shuffle(rng);
        let draws: Vec<f64> = (0..num_clients).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        let n = members.len();
        let mut start = 0;
        let mut acc = 0.0;
        for (c, d) in draws.iter().enumerate() {
            acc += d;
            let end = if c + 1 == num_clients {
                n
            } else {
                ((acc / total) * n as f64).round() as usize
            }
            .clamp(start, n);
            clients[c].extend_from_slice(&members[start..end]);
            start = end;
        }
    }
    Ok(clients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_synthetic;
    use std::collections::BTreeSet;

    #[test]
    fn sharded_two_labels_per_client() {
        let ds = gen_synthetic(10, 20, &[1, 2, 2], 3).unwrap();
        let plan = PartitionPlan {
            scheme: PartitionScheme::Sharded {
                shards_per_client: 2,
            },
            num_clients: 10,
            server_share: 0.0,
            seed: 5,
        };
        let p = partition(&ds, &plan).unwrap();
        for c in &p.clients {
            let labels: BTreeSet<_> = c.labels().iter().collect();
            assert!(labels.len() <= 2, "{labels:?}");
            assert_eq!(c.len(), 20);
        }
    }

    #[test]
    fn too_many_shards() {
        let ds = gen_synthetic(2, 5, &[1, 1, 1], 0).unwrap();
        let plan = PartitionPlan {
            scheme: PartitionScheme::Sharded {
                shards_per_client: 2,
            },
            num_clients: 6,
            server_share: 0.0,
            seed: 0,
        };
        assert!(partition(&ds, &plan).is_err());
    }

    #[test]
    fn empty_dataset() {
        let ds = Dataset::empty(&[1], 2);
        let plan = PartitionPlan {
            scheme: PartitionScheme::Dirichlet { beta: 0.5 },
            num_clients: 2,
            server_share: 0.1,
            seed: 0,
        };
        assert!(matches!(partition(&ds, &plan), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn server_share_size() {
        let ds = gen_synthetic(10, 10, &[1, 1, 1], 0).unwrap();
        let plan = PartitionPlan {
            scheme: PartitionScheme::Dirichlet { beta: 1.0 },
            num_clients: 4,
            server_share: 0.1,
            seed: 2,
        };
        let p = partition(&ds, &plan).unwrap();
        assert_eq!(p.server.len(), 10);
        assert_eq!(p.clients.iter().map(Dataset::len).sum::<usize>(), 90);
    }
}
