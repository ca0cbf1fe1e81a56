//! Layer descriptions and shape planning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    #[serde(rename = "relu")]
    ReLU,
    Softmax,
    Linear,
}

impl Activation {
    pub fn is_elementwise(self) -> bool {
        !matches!(self, Activation::Softmax)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    Dense {
        units: usize,
    },
    /// Stride 1, no padding.
    Conv2D {
        filters: usize,
        kernel_h: usize,
        kernel_w: usize,
    },
    /// Stride equals the pool size; trailing rows/columns that do not fill a
    /// whole window are dropped.
    MaxPool2D {
        pool_h: usize,
        pool_w: usize,
    },
    Flatten,
}

impl LayerKind {
    pub fn is_trainable(&self) -> bool {
        matches!(self, LayerKind::Dense { .. } | LayerKind::Conv2D { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn dense(units: usize, activation: Activation) -> Self {
        Self {
            kind: LayerKind::Dense { units },
            activation,
        }
    }

    pub fn conv2d(
        filters: usize,
        kernel_h: usize,
        kernel_w: usize,
        activation: Activation,
    ) -> Self {
        Self {
            kind: LayerKind::Conv2D {
                filters,
                kernel_h,
                kernel_w,
            },
            activation,
        }
    }

    pub fn max_pool(pool_h: usize, pool_w: usize) -> Self {
        Self {
            kind: LayerKind::MaxPool2D { pool_h, pool_w },
            activation: Activation::Linear,
        }
    }

    pub fn flatten() -> Self {
        Self {
            kind: LayerKind::Flatten,
            activation: Activation::Linear,
        }
    }
}

/// Shapes of one trainable layer's parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamShape {
    pub weights: Vec<usize>,
    pub bias: Vec<usize>,
    pub fan_in: usize,
    pub fan_out: usize,
}

/// A validated layer chain bound to a per-sample input shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    /// Per-sample output shape of every layer.
    out_shapes: Vec<Vec<usize>>,
    /// Parameter shapes, one per trainable layer in order.
    param_shapes: Vec<ParamShape>,
    /// For every layer, its position among trainable layers.
    trainable_slot: Vec<Option<usize>>,
}

impl Architecture {
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::Architecture(format!(
                "input shape must be non-empty and positive, got {input_shape:?}"
            )));
        }
        if layers.is_empty() {
            return Err(Error::Architecture("no layers".into()));
        }
        let last = layers.len() - 1;
        let mut shape = input_shape.clone();
        let mut out_shapes = Vec::with_capacity(layers.len());
        let mut param_shapes = Vec::new();
        let mut trainable_slot = Vec::with_capacity(layers.len());

        for (idx, spec) in layers.iter().enumerate() {
            if spec.activation == Activation::Softmax && idx != last {
                return Err(Error::Architecture(format!(
                    "softmax is only permitted on the final layer (found on layer {idx})"
                )));
            }
            if !spec.kind.is_trainable() && spec.activation != Activation::Linear {
                return Err(Error::Architecture(format!(
                    "layer {idx} has no parameters and must use a linear activation"
                )));
            }
            let (next, params) = match spec.kind {
                LayerKind::Dense { units } => {
                    if shape.len() != 1 {
                        return Err(Error::Architecture(format!(
                            "dense layer {idx} needs a flat input, got {shape:?} (insert a Flatten layer)"
                        )));
                    }
                    if units == 0 {
                        return Err(Error::Architecture(format!(
                            "dense layer {idx} has zero units"
                        )));
                    }
                    let params = ParamShape {
                        weights: vec![shape[0], units],
                        bias: vec![units],
                        fan_in: shape[0],
                        fan_out: units,
                    };
                    (vec![units], Some(params))
                }
                LayerKind::Conv2D {
                    filters,
                    kernel_h,
                    kernel_w,
                } => {
                    let [c, h, w] = image_dims(&shape, idx)?;
                    if filters == 0
                        || kernel_h == 0
                        || kernel_w == 0
                        || kernel_h > h
                        || kernel_w > w
                    {
                        return Err(Error::Architecture(format!(
                            "conv layer {idx}: kernel {kernel_h}x{kernel_w} with {filters} filters does not fit input {shape:?}"
                        )));
                    }
                    let params = ParamShape {
                        weights: vec![filters, c, kernel_h, kernel_w],
                        bias: vec![filters],
                        fan_in: c * kernel_h * kernel_w,
                        fan_out: filters * kernel_h * kernel_w,
                    };
                    (
                        vec![filters, h - kernel_h + 1, w - kernel_w + 1],
                        Some(params),
                    )
                }
                LayerKind::MaxPool2D { pool_h, pool_w } => {
                    let [c, h, w] = image_dims(&shape, idx)?;
                    if pool_h == 0 || pool_w == 0 || pool_h > h || pool_w > w {
                        return Err(Error::Architecture(format!(
                            "pool layer {idx}: window {pool_h}x{pool_w} does not fit input {shape:?}"
                        )));
                    }
                    (vec![c, h / pool_h, w / pool_w], None)
                }
                LayerKind::Flatten => (vec![shape.iter().product()], None),
            };
            match params {
                Some(p) => {
                    trainable_slot.push(Some(param_shapes.len()));
                    param_shapes.push(p);
                }
                None => trainable_slot.push(None),
            }
            out_shapes.push(next.clone());
            shape = next;
        }
        if shape.len() != 1 {
            return Err(Error::Architecture(format!(
                "final layer must produce a flat vector, got {shape:?}"
            )));
        }
        Ok(Self {
            input_shape,
            layers,
            out_shapes,
            param_shapes,
            trainable_slot,
        })
    }

    /// `Flatten → Dense(h, hidden)… → Dense(classes, output)`.
    pub fn mlp(
        input_shape: Vec<usize>,
        hidden: &[usize],
        hidden_activation: Activation,
        classes: usize,
        output_activation: Activation,
    ) -> Result<Self> {
        let mut layers = vec![LayerSpec::flatten()];
        layers.extend(
            hidden
                .iter()
                .map(|&h| LayerSpec::dense(h, hidden_activation)),
        );
        layers.push(LayerSpec::dense(classes, output_activation));
        Self::new(input_shape, layers)
    }

    /// `Flatten → Dense(units, activation)… → Dense(classes, output)` with a
    /// separate activation per hidden layer.
    pub fn mlp_layers(
        input_shape: Vec<usize>,
        hidden: &[(usize, Activation)],
        classes: usize,
        output_activation: Activation,
    ) -> Result<Self> {
        let mut layers = vec![LayerSpec::flatten()];
        layers.extend(hidden.iter().map(|&(h, a)| LayerSpec::dense(h, a)));
        layers.push(LayerSpec::dense(classes, output_activation));
        Self::new(input_shape, layers)
    }

    /// Two 3×3 convolutions, a 2×2 max-pool, a hidden dense layer and a
    /// softmax classifier. `cnn(input, 32, 128, 10)` is the reference
    /// CIFAR-10 network.
    pub fn cnn(
        input_shape: Vec<usize>,
        filters: usize,
        dense_units: usize,
        classes: usize,
    ) -> Result<Self> {
        Self::new(
            input_shape,
            vec![
                LayerSpec::conv2d(filters, 3, 3, Activation::ReLU),
                LayerSpec::conv2d(filters, 3, 3, Activation::ReLU),
                LayerSpec::max_pool(2, 2),
                LayerSpec::flatten(),
                LayerSpec::dense(dense_units, Activation::ReLU),
                LayerSpec::dense(classes, Activation::Softmax),
            ],
        )
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn out_shape(&self, layer: usize) -> &[usize] {
        &self.out_shapes[layer]
    }

    pub fn output_width(&self) -> usize {
        self.out_shapes.last().map(|s| s[0]).unwrap_or(0)
    }

    pub fn param_shapes(&self) -> &[ParamShape] {
        &self.param_shapes
    }

    pub fn num_trainable(&self) -> usize {
        self.param_shapes.len()
    }

    pub(crate) fn trainable_slot(&self, layer: usize) -> Option<usize> {
        self.trainable_slot[layer]
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    pub fn num_params(&self) -> usize {
        self.param_shapes
            .iter()
            .map(|p| p.weights.iter().product::<usize>() + p.bias.iter().product::<usize>())
            .sum()
    }
}

fn image_dims(shape: &[usize], idx: usize) -> Result<[usize; 3]> {
    match shape {
        &[c, h, w] => Ok([c, h, w]),
        _ => Err(Error::Architecture(format!(
            "layer {idx} needs a [channels, height, width] input, got {shape:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cnn_shapes() {
        let arch = Architecture::cnn(vec![3, 32, 32], 32, 128, 10).unwrap();
        assert_eq!(arch.out_shape(0), &[32, 30, 30]);
        assert_eq!(arch.out_shape(1), &[32, 28, 28]);
        assert_eq!(arch.out_shape(2), &[32, 14, 14]);
        assert_eq!(arch.out_shape(3), &[6272]);
        assert_eq!(arch.num_trainable(), 4);
        assert_eq!(arch.param_shapes()[2].weights, vec![6272, 128]);
        assert_eq!(arch.output_width(), 10);
    }

    #[test]
    fn softmax_only_on_final_layer() {
        let err = Architecture::new(
            vec![4],
            vec![
                LayerSpec::dense(3, Activation::Softmax),
                LayerSpec::dense(2, Activation::Linear),
            ],
        );
        assert!(matches!(err, Err(Error::Architecture(_))));
    }

    #[test]
    fn parameterless_layers_must_be_linear() {
        let spec = LayerSpec {
            kind: LayerKind::Flatten,
            activation: Activation::ReLU,
        };
        assert!(Architecture::new(
            vec![2, 2, 2],
            vec![spec, LayerSpec::dense(2, Activation::Linear)]
        )
        .is_err());
    }

    #[test]
    fn dense_requires_flat_input() {
        assert!(
            Architecture::new(vec![1, 4, 4], vec![LayerSpec::dense(2, Activation::Linear)])
                .is_err()
        );
    }
}
