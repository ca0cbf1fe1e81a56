//! Trainable parameters and their gradients.

use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::Architecture;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Weight and bias tensors of one trainable layer.
///
/// Dense weights have shape `[inputs, units]` so that `weights[i][j]` is the
/// connection from input `i` to unit `j`. Convolution weights have shape
/// `[filters, channels, kernel_h, kernel_w]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Parameters of every trainable layer, in network order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layers: Vec<LayerParams>,
}

/// Loss gradients with the same layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
}

impl ModelParams {
    /// Glorot-uniform weights (`limit = sqrt(6 / (fan_in + fan_out))`) and
    /// zero biases.
    pub fn init(arch: &Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = arch
            .param_shapes()
            .iter()
            .map(|p| {
                let limit = (6.0 / (p.fan_in + p.fan_out) as f64).sqrt();
                let n: usize = p.weights.iter().product();
                let w = (0..n).map(|_| rng.random_range(-limit..=limit)).collect();
                LayerParams {
                    weights: Tensor::from_parts(p.weights.clone(), w),
                    bias: Tensor::zeros(&p.bias),
                }
            })
            .collect();
        Self { layers }
    }

    /// All-zero parameters for `arch`.
    pub fn zeros(arch: &Architecture) -> Self {
        Self {
            layers: zero_layers(arch),
        }
    }

    /// Checks every tensor shape against `arch`.
    pub fn check(&self, arch: &Architecture) -> Result<()> {
        check_layers(&self.layers, arch, "model")
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Flat view in canonical order: each layer's weights then its bias.
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    /// Hash of the exact bit patterns of every parameter.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for l in &self.layers {
            l.weights.shape().hash(&mut h);
            for v in l.weights.data().iter().chain(l.bias.data()) {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    /// Returns a copy with every parameter multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: l.weights.map(|v| v * s),
                    bias: l.bias.map(|v| v * s),
                })
                .collect(),
        }
    }

    pub(crate) fn same_shape(&self, other_layers: &[LayerParams], context: &str) -> Result<()> {
        same_layout(&self.layers, other_layers, context)
    }
}

impl Gradients {
    pub fn zeros(arch: &Architecture) -> Self {
        Self {
            layers: zero_layers(arch),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    /// Largest absolute gradient element across all layers.
    pub fn max_abs(&self) -> f64 {
        self.flatten().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.flatten().iter().all(|&v| v == 0.0)
    }
}

fn zero_layers(arch: &Architecture) -> Vec<LayerParams> {
    arch.param_shapes()
        .iter()
        .map(|p| LayerParams {
            weights: Tensor::zeros(&p.weights),
            bias: Tensor::zeros(&p.bias),
        })
        .collect()
}

fn flatten_layers(layers: &[LayerParams]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend_from_slice(l.weights.data());
        out.extend_from_slice(l.bias.data());
    }
    out
}

fn check_layers(layers: &[LayerParams], arch: &Architecture, what: &str) -> Result<()> {
    let shapes = arch.param_shapes();
    if layers.len() != shapes.len() {
        return Err(Error::shape(
            format!("{what}: trainable layer count"),
            &[shapes.len()],
            &[layers.len()],
        ));
    }
    for (k, (l, p)) in layers.iter().zip(shapes).enumerate() {
        if l.weights.shape() != p.weights.as_slice() {
            return Err(Error::shape(
                format!("{what}: weights of trainable layer {}", k + 1),
                &p.weights,
                l.weights.shape(),
            ));
        }
        if l.bias.shape() != p.bias.as_slice() {
            return Err(Error::shape(
                format!("{what}: bias of trainable layer {}", k + 1),
                &p.bias,
                l.bias.shape(),
            ));
        }
    }
    Ok(())
}

pub(crate) fn same_layout(a: &[LayerParams], b: &[LayerParams], context: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(
            format!("{context}: layer count"),
            &[a.len()],
            &[b.len()],
        ));
    }
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        if x.weights.shape() != y.weights.shape() {
            return Err(Error::shape(
                format!("{context}: weights of trainable layer {}", k + 1),
                x.weights.shape(),
                y.weights.shape(),
            ));
        }
        if x.bias.shape() != y.bias.shape() {
            return Err(Error::shape(
                format!("{context}: bias of trainable layer {}", k + 1),
                x.bias.shape(),
                y.bias.shape(),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    #[test]
    fn glorot_limits_respected() {
        let arch = Architecture::mlp(vec![20], &[10], Activation::Sigmoid, 5, Activation::Softmax)
            .unwrap();
        let m = ModelParams::init(&arch, 7);
        m.check(&arch).unwrap();
        let limit = (6.0_f64 / 30.0).sqrt();
        assert!(m.layers[0].weights.data().iter().all(|w| w.abs() <= limit));
        assert!(m.layers[0].bias.data().iter().all(|&b| b == 0.0));
        assert_eq!(m, ModelParams::init(&arch, 7));
        assert_ne!(m, ModelParams::init(&arch, 8));
    }
}

/// Which tensor of a trainable layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Bias,
    Weights,
}

impl std::fmt::Display for GroupKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GroupKind::Bias => "bias",
            GroupKind::Weights => "weights",
        })
    }
}

/// One trainable tensor: `layer_index` counts trainable layers from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WeightGroup {
    pub layer_index: usize,
    pub kind: GroupKind,
}

impl WeightGroup {
    pub fn bias(layer_index: usize) -> Self {
        Self {
            layer_index,
            kind: GroupKind::Bias,
        }
    }

    pub fn weights(layer_index: usize) -> Self {
        Self {
            layer_index,
            kind: GroupKind::Weights,
        }
    }

    /// Every group of a model with `num_trainable` layers, in
    /// `(layer_index, kind)` order.
    pub fn all(num_trainable: usize) -> Vec<Self> {
        (1..=num_trainable)
            .flat_map(|k| [Self::bias(k), Self::weights(k)])
            .collect()
    }

    /// The tensor this group names inside a layer list.
    pub fn select<'a>(&self, layers: &'a [LayerParams]) -> Result<&'a Tensor> {
        let layer = self
            .layer_index
            .checked_sub(1)
            .and_then(|i| layers.get(i))
            .ok_or(Error::UnknownGroup {
                layer_index: self.layer_index,
                kind: self.kind.to_string(),
            })?;
        Ok(match self.kind {
            GroupKind::Bias => &layer.bias,
            GroupKind::Weights => &layer.weights,
        })
    }
}

impl std::fmt::Display for WeightGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "layer {} {}", self.layer_index, self.kind)
    }
}
