//! Minibatch SGD.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backward::backward;
use super::forward::forward;
use super::layer::Architecture;
use super::loss::{compute_loss, LossKind};
use super::params::{Gradients, LayerParams, ModelParams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 2,
            loss: LossKind::CrossEntropy,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "batch_size must be at least 1".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// `w ← w − α·g` and `b ← b − α·g` for every parameter.
pub fn sgd_step(model: &ModelParams, grads: &Gradients, learning_rate: f64) -> Result<ModelParams> {
    model.same_shape(&grads.layers, "sgd_step")?;
    let step = |p: &Tensor, g: &Tensor| {
        let data = p
            .data()
            .iter()
            .zip(g.data())
            .map(|(w, g)| w - learning_rate * g)
            .collect();
        Tensor::from_parts(p.shape().to_vec(), data)
    };
    Ok(ModelParams {
        layers: model
            .layers
            .iter()
            .zip(&grads.layers)
            .map(|(p, g)| LayerParams {
                weights: step(&p.weights, &g.weights),
                bias: step(&p.bias, &g.bias),
            })
            .collect(),
    })
}

/// Forward + backward on one batch; returns the batch loss and gradients.
pub fn batch_gradient(
    model: &ModelParams,
    arch: &Architecture,
    inputs: &Tensor,
    targets: &Tensor,
    loss: LossKind,
) -> Result<(f64, Gradients)> {
    let (out, cache) = forward(model, arch, inputs)?;
    let value = compute_loss(&out, targets, loss)?;
    let grads = backward(model, arch, &cache, targets, loss)?;
    Ok((value, grads))
}

/// Trains for `hyper.epochs` passes of shuffled minibatches.
///
/// Each epoch draws a permutation from a ChaCha8 stream seeded with
/// `hyper.seed` and cuts it into `ceil(n / batch_size)` batches; indices
/// inside a batch are visited in ascending order, so a single full batch
/// reproduces a plain `backward` on the dataset. Returns the trained model
/// and the sample-weighted mean batch loss of the last epoch (measured
/// before each step).
pub fn train_epochs(
    model: &ModelParams,
    arch: &Architecture,
    dataset: &Dataset,
    hyper: &Hyperparams,
) -> Result<(ModelParams, f64)> {
    hyper.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset(
            "train_epochs needs at least one sample".into(),
        ));
    }
    let targets = dataset.one_hot(arch.output_width())?;
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut current = model.clone();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut epoch_loss = 0.0;

    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            let mut batch = chunk.to_vec();
            batch.sort_unstable();
            let x = dataset.images().select_rows(&batch);
            let y = targets.select_rows(&batch);
            let (value, grads) = batch_gradient(&current, arch, &x, &y, hyper.loss)?;
            total += value * batch.len() as f64;
            current = sgd_step(&current, &grads, hyper.learning_rate)?;
        }
        epoch_loss = total / dataset.len() as f64;
    }
    Ok((current, epoch_loss))
}

/// Index of the largest output per sample, lowest index on ties.
pub fn argmax_rows(output: &Tensor) -> Vec<usize> {
    (0..output.rows())
        .map(|d| {
            let row = output.row(d);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

pub fn predict(model: &ModelParams, arch: &Architecture, inputs: &Tensor) -> Result<Vec<usize>> {
    let (out, _) = forward(model, arch, inputs)?;
    Ok(argmax_rows(&out))
}
