//! Localizing anomalous weight groups in client updates.
//!
//! The deviation of a client in a weight group is the largest elementwise
//! absolute difference between its local update and the joint model it was
//! trained from. Groups are ranked by how far the largest client deviation
//! stands above the median client, and clients are flagged when their
//! deviation exceeds `k` times the median of their column.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ModelParams;
pub use crate::nn::{GroupKind, WeightGroup};

/// Added to the median in score denominators.
pub const SCORE_EPSILON: f64 = 1e-12;

pub const DEFAULT_FLAG_FACTOR: f64 = 3.0;

/// `max |local − joint|` over the elements of `group`.
pub fn max_abs_deviation(
    local: &ModelParams,
    joint: &ModelParams,
    group: WeightGroup,
) -> Result<f64> {
    local.same_shape(&joint.layers, "max_abs_deviation")?;
    let a = group.select(&local.layers)?;
    let b = group.select(&joint.layers)?;
    a.max_abs_diff(b)
}

/// Client × group table of maximum deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationMatrix {
    clients: Vec<usize>,
    groups: Vec<WeightGroup>,
    /// Row-major `[client][group]`.
    values: Vec<f64>,
}

impl DeviationMatrix {
    /// Builds a matrix from explicit rows, one per client, each ordered like
    /// `groups`.
    pub fn from_rows(
        clients: Vec<usize>,
        groups: Vec<WeightGroup>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != clients.len() || rows.iter().any(|r| r.len() != groups.len()) {
            return Err(Error::InvalidArgument(format!(
                "deviation rows do not form a {}x{} matrix",
                clients.len(),
                groups.len()
            )));
        }
        if rows.iter().flatten().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "deviations must be non-negative".into(),
            ));
        }
        let unique: BTreeSet<_> = clients.iter().collect();
        if unique.len() != clients.len() {
            return Err(Error::InvalidArgument("duplicate client ids".into()));
        }
        Ok(Self {
            clients,
            groups,
            values: rows.concat(),
        })
    }

    pub fn clients(&self) -> &[usize] {
        &self.clients
    }

    pub fn groups(&self) -> &[WeightGroup] {
        &self.groups
    }

    pub fn get(&self, client: usize, group: WeightGroup) -> Option<f64> {
        let r = self.clients.iter().position(|&c| c == client)?;
        let g = self.groups.iter().position(|&x| x == group)?;
        Some(self.values[r * self.groups.len() + g])
    }

    /// Values of `group` for every client, in client order.
    pub fn column(&self, group: WeightGroup) -> Result<Vec<f64>> {
        let g = self
            .groups
            .iter()
            .position(|&x| x == group)
            .ok_or(Error::UnknownGroup {
                layer_index: group.layer_index,
                kind: group.kind.to_string(),
            })?;
        Ok((0..self.clients.len())
            .map(|r| self.values[r * self.groups.len() + g])
            .collect())
    }

    /// `(client, group, value)` cells in client-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, WeightGroup, f64)> + '_ {
        self.clients.iter().enumerate().flat_map(move |(r, &c)| {
            self.groups
                .iter()
                .enumerate()
                .map(move |(g, &grp)| (c, grp, self.values[r * self.groups.len() + g]))
        })
    }

    /// Returns a copy with every value multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// Final trainable layer index.
    pub fn final_layer(&self) -> usize {
        self.groups.iter().map(|g| g.layer_index).max().unwrap_or(0)
    }
}

/// Deviation of every client against `joint` over every weight group.
pub fn deviation_matrix(
    locals: &BTreeMap<usize, ModelParams>,
    joint: &ModelParams,
) -> Result<DeviationMatrix> {
    let groups = WeightGroup::all(joint.layers.len());
    let mut clients = Vec::with_capacity(locals.len());
    let mut rows = Vec::with_capacity(locals.len());
    for (&id, local) in locals {
        let row = groups
            .iter()
            .map(|&g| max_abs_deviation(local, joint, g))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::Shape {
                    context,
                    expected,
                    actual,
                } => Error::Shape {
                    context: format!("client {id}: {context}"),
                    expected,
                    actual,
                },
                other => other,
            })?;
        clients.push(id);
        rows.push(row);
    }
    DeviationMatrix::from_rows(clients, groups, rows)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub group: WeightGroup,
    pub score: f64,
}

/// Groups ordered by `(max − median) / (median + ε)` over clients,
/// descending; equal scores keep `(layer_index, kind)` order.
pub fn rank_groups(matrix: &DeviationMatrix) -> Result<Vec<GroupScore>> {
    if matrix.clients().len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "ranking needs at least 2 clients, got {}",
            matrix.clients().len()
        )));
    }
    let mut scores = matrix
        .groups()
        .iter()
        .map(|&group| {
            let col = matrix.column(group)?;
            let med = median(&col);
            let max = col.iter().copied().fold(0.0_f64, f64::max);
            Ok(GroupScore {
                group,
                score: (max - med) / (med + SCORE_EPSILON),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.group.cmp(&b.group)));
    Ok(scores)
}

/// Clients whose deviation in `group` exceeds `k` × the column median.
pub fn flag_clients(
    matrix: &DeviationMatrix,
    group: WeightGroup,
    k: f64,
) -> Result<BTreeSet<usize>> {
    Ok(flag_scores(matrix, group, k)?.into_keys().collect())
}

/// Flagged clients with their deviation-to-median ratios.
pub fn flag_scores(
    matrix: &DeviationMatrix,
    group: WeightGroup,
    k: f64,
) -> Result<BTreeMap<usize, f64>> {
    if matrix.clients().len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "flagging needs at least 3 clients, got {}",
            matrix.clients().len()
        )));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "threshold factor must be non-negative, got {k}"
        )));
    }
    let col = matrix.column(group)?;
    let med = median(&col);
    Ok(matrix
        .clients()
        .iter()
        .zip(&col)
        .filter(|(_, &v)| v > k * med)
        .map(|(&c, &v)| (c, v / (med + SCORE_EPSILON)))
        .collect())
}

/// Anomaly summary of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub round_index: usize,
    pub matrix: DeviationMatrix,
    pub group_ranking: Vec<GroupScore>,
    /// Group the detector watched.
    pub flag_group: WeightGroup,
    pub flag_factor: f64,
    /// Flagged client → deviation / median.
    pub flagged_clients: BTreeMap<usize, f64>,
}

/// Ranks groups and flags clients on the final layer's bias.
pub fn analyze_round(
    round_index: usize,
    matrix: &DeviationMatrix,
    k: f64,
) -> Result<DeviationReport> {
    let flag_group = WeightGroup::bias(matrix.final_layer());
    Ok(DeviationReport {
        round_index,
        matrix: matrix.clone(),
        group_ranking: rank_groups(matrix)?,
        flag_group,
        flag_factor: k,
        flagged_clients: flag_scores(matrix, flag_group, k)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerParams;
    use crate::tensor::Tensor;

    fn model(bias: Vec<f64>) -> ModelParams {
        let n = bias.len();
        ModelParams {
            layers: vec![LayerParams {
                weights: Tensor::zeros(&[2, n]),
                bias: Tensor::new(vec![n], bias).unwrap(),
            }],
        }
    }

    fn single_column(values: &[f64]) -> DeviationMatrix {
        DeviationMatrix::from_rows(
            (0..values.len()).collect(),
            vec![WeightGroup::bias(1)],
            values.iter().map(|&v| vec![v]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn deviation_by_hand() {
        let joint = model(vec![0.0, 0.0]);
        let local = model(vec![0.3, -0.5]);
        assert_eq!(
            max_abs_deviation(&local, &joint, WeightGroup::bias(1)).unwrap(),
            0.5
        );
        assert_eq!(
            max_abs_deviation(&joint, &joint, WeightGroup::bias(1)).unwrap(),
            0.0
        );
        assert_eq!(
            max_abs_deviation(&local, &joint, WeightGroup::weights(1)).unwrap(),
            0.0
        );
    }

    #[test]
    fn unknown_group_and_shape_mismatch() {
        let joint = model(vec![0.0, 0.0]);
        assert!(matches!(
            max_abs_deviation(&joint, &joint, WeightGroup::bias(2)),
            Err(Error::UnknownGroup { .. })
        ));
        assert!(max_abs_deviation(&model(vec![0.0]), &joint, WeightGroup::bias(1)).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn uniform_column_flags_nobody() {
        let m = single_column(&[0.2; 6]);
        assert!(flag_clients(&m, WeightGroup::bias(1), 3.0)
            .unwrap()
            .is_empty());
        let zeros = single_column(&[0.0; 6]);
        assert!(flag_clients(&zeros, WeightGroup::bias(1), 3.0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn single_outlier_flagged() {
        let mut col = vec![1.0; 9];
        col.push(10.0);
        let m = single_column(&col);
        let flagged = flag_clients(&m, WeightGroup::bias(1), 3.0).unwrap();
        assert_eq!(flagged.into_iter().collect::<Vec<_>>(), vec![9]);
    }

    #[test]
    fn too_few_clients() {
        let m = single_column(&[1.0, 2.0]);
        assert!(flag_clients(&m, WeightGroup::bias(1), 3.0).is_err());
        assert!(rank_groups(&single_column(&[1.0])).is_err());
    }

    #[test]
    fn identical_clients_rank_in_group_order() {
        let groups = WeightGroup::all(2);
        let m = DeviationMatrix::from_rows(vec![0, 1, 2], groups.clone(), vec![vec![0.5; 4]; 3])
            .unwrap();
        let ranking = rank_groups(&m).unwrap();
        assert!(ranking.iter().all(|s| s.score == 0.0));
        assert_eq!(ranking.iter().map(|s| s.group).collect::<Vec<_>>(), groups);
    }

    #[test]
    fn dominant_final_bias_ranks_first() {
        let groups = WeightGroup::all(2);
        let mut rows = vec![vec![1.0; 4]; 5];
        rows[3][2] = 10.0; // client 3, layer 2 bias
        let m = DeviationMatrix::from_rows((0..5).collect(), groups, rows).unwrap();
        assert_eq!(rank_groups(&m).unwrap()[0].group, WeightGroup::bias(2));
    }
}
