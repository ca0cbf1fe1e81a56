//! Backpropagation.
//!
//! For every sample the output-layer error term `δ = ∂E/∂a` is formed first,
//! then carried backwards: a layer with error `δ_j` contributes `δ_j` to its
//! bias gradient and `δ_j · o_i` to the weight joining input `i` to unit `j`,
//! and hands `Σ_j w_ij δ_j` back to the layer below, which multiplies it by
//! its own `g'(a)`. Per-sample contributions are summed and divided by the
//! batch size at the end.

use super::forward::{activation_derivative, pool_argmax, ForwardCache};
use super::layer::{Activation, Architecture, LayerKind};
use super::loss::LossKind;
use super::params::{Gradients, ModelParams};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Batch-mean gradients of `loss` with respect to every parameter.
pub fn backward(
    model: &ModelParams,
    arch: &Architecture,
    cache: &ForwardCache,
    target: &Tensor,
    loss: LossKind,
) -> Result<Gradients> {
    model.check(arch)?;
    let layers = arch.layers();
    if cache.pre.len() != layers.len() || cache.out.len() != layers.len() {
        return Err(Error::StaleCache(format!(
            "cache holds {} layers, architecture has {}",
            cache.pre.len(),
            layers.len()
        )));
    }
    for (idx, t) in cache.out.iter().enumerate() {
        if &t.shape()[1..] != arch.out_shape(idx) {
            return Err(Error::StaleCache(format!(
                "layer {idx} output shape {:?}",
                t.shape()
            )));
        }
    }
    if cache.fingerprint != model.fingerprint() {
        return Err(Error::StaleCache(
            "model parameters changed since forward".into(),
        ));
    }
    let n = cache.batch_size();
    let width = arch.output_width();
    if target.shape() != [n, width] {
        return Err(Error::shape("backward target", &[n, width], target.shape()));
    }
    let out_act = arch.output_activation();
    if loss == LossKind::CrossEntropy && out_act != Activation::Softmax {
        return Err(Error::InvalidArgument(
            "cross-entropy backward requires a softmax output layer".into(),
        ));
    }

    let mut grads = Gradients::zeros(arch);
    let last = layers.len() - 1;

    for d in 0..n {
        let o = cache.out[last].row(d);
        let a = cache.pre[last].row(d);
        let y = target.row(d);
        let mut delta = output_delta(out_act, loss, a, o, y);

        for idx in (0..layers.len()).rev() {
            let input = if idx == 0 {
                cache.input.row(d)
            } else {
                cache.out[idx - 1].row(d)
            };
            let in_shape: &[usize] = if idx == 0 {
                arch.input_shape()
            } else {
                arch.out_shape(idx - 1)
            };
            let need_input_grad = idx > 0;
            let upstream = match layers[idx].kind {
                LayerKind::Dense { units } => {
                    let slot = arch.trainable_slot(idx).expect("dense is trainable");
                    let g = &mut grads.layers[slot];
                    let gb = g.bias.data_mut();
                    for (b, &dj) in gb.iter_mut().zip(&delta) {
                        *b += dj;
                    }
                    let gw = g.weights.data_mut();
                    for (i, &oi) in input.iter().enumerate() {
                        let row = &mut gw[i * units..(i + 1) * units];
                        for (w, &dj) in row.iter_mut().zip(&delta) {
                            *w += dj * oi;
                        }
                    }
                    need_input_grad.then(|| {
                        let w = model.layers[slot].weights.data();
                        (0..input.len())
                            .map(|i| {
                                w[i * units..(i + 1) * units]
                                    .iter()
                                    .zip(&delta)
                                    .map(|(wij, dj)| wij * dj)
                                    .sum()
                            })
                            .collect::<Vec<f64>>()
                    })
                }
                LayerKind::Conv2D {
                    filters,
                    kernel_h,
                    kernel_w,
                } => {
                    let slot = arch.trainable_slot(idx).expect("conv is trainable");
                    conv_backward(
                        model.layers[slot].weights.data(),
                        &mut grads.layers[slot],
                        in_shape,
                        [filters, kernel_h, kernel_w],
                        input,
                        &delta,
                        need_input_grad,
                    )
                }
                LayerKind::MaxPool2D { pool_h, pool_w } => need_input_grad.then(|| {
                    let (c, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
                    let out_shape = arch.out_shape(idx);
                    let (oh, ow) = (out_shape[1], out_shape[2]);
                    let mut up = vec![0.0; input.len()];
                    for ch in 0..c {
                        for y in 0..oh {
                            for x in 0..ow {
                                let src = pool_argmax(input, ch, h, w, y, x, [pool_h, pool_w]);
                                up[src] += delta[(ch * oh + y) * ow + x];
                            }
                        }
                    }
                    up
                }),
                LayerKind::Flatten => need_input_grad.then(|| delta.clone()),
            };

            if let Some(mut up) = upstream {
                let below = idx - 1;
                let act = layers[below].activation;
                if act != Activation::Linear {
                    let a = cache.pre[below].row(d);
                    let o = cache.out[below].row(d);
                    for ((u, &aj), &oj) in up.iter_mut().zip(a).zip(o) {
                        *u *= activation_derivative(act, aj, oj);
                    }
                }
                delta = up;
            }
        }
    }

    let scale = n as f64;
    for l in &mut grads.layers {
        l.weights.data_mut().iter_mut().for_each(|g| *g /= scale);
        l.bias.data_mut().iter_mut().for_each(|g| *g /= scale);
    }
    Ok(grads)
}

/// `∂E/∂a` at the output layer for one sample.
fn output_delta(act: Activation, loss: LossKind, a: &[f64], o: &[f64], y: &[f64]) -> Vec<f64> {
    match (loss, act) {
        // fused softmax + cross-entropy
        (LossKind::CrossEntropy, _) => o.iter().zip(y).map(|(p, t)| p - t).collect(),
        (LossKind::Mse, Activation::Softmax) => {
            let err: Vec<f64> = o.iter().zip(y).map(|(p, t)| p - t).collect();
            let dot: f64 = err.iter().zip(o).map(|(e, p)| e * p).sum();
            o.iter().zip(&err).map(|(p, e)| p * (e - dot)).collect()
        }
        (LossKind::Mse, _) => o
            .iter()
            .zip(y)
            .zip(a)
            .map(|((&p, &t), &aj)| (p - t) * activation_derivative(act, aj, p))
            .collect(),
    }
}

fn conv_backward(
    w: &[f64],
    g: &mut super::params::LayerParams,
    in_shape: &[usize],
    kernel: [usize; 3],
    x: &[f64],
    delta: &[f64],
    need_input_grad: bool,
) -> Option<Vec<f64>> {
    let (c, h, wd) = (in_shape[0], in_shape[1], in_shape[2]);
    let [filters, kh, kw] = kernel;
    let (oh, ow) = (h - kh + 1, wd - kw + 1);
    let mut up = need_input_grad.then(|| vec![0.0; x.len()]);
    for f in 0..filters {
        let df = &delta[f * oh * ow..(f + 1) * oh * ow];
        g.bias.data_mut()[f] += df.iter().sum::<f64>();
        for ch in 0..c {
            let plane = &x[ch * h * wd..(ch + 1) * h * wd];
            for u in 0..kh {
                for v in 0..kw {
                    let wi = ((f * c + ch) * kh + u) * kw + v;
                    let mut acc = 0.0;
                    for y in 0..oh {
                        let src = &plane[(y + u) * wd + v..(y + u) * wd + v + ow];
                        let dr = &df[y * ow..(y + 1) * ow];
                        for (s, dv) in src.iter().zip(dr) {
                            acc += dv * s;
                        }
                    }
                    g.weights.data_mut()[wi] += acc;
                    if let Some(up) = up.as_mut() {
                        let wv = w[wi];
                        for y in 0..oh {
                            let base = ch * h * wd + (y + u) * wd + v;
                            let dst = &mut up[base..base + ow];
                            let dr = &df[y * ow..(y + 1) * ow];
                            for (o, dv) in dst.iter_mut().zip(dr) {
                                *o += wv * dv;
                            }
                        }
                    }
                }
            }
        }
    }
    up
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{forward, LayerParams, LayerSpec};

    #[test]
    fn zero_init_sigmoid_output_bias_gradient() {
        // one hidden sigmoid layer feeding a single sigmoid output, all zeros
        let arch = Architecture::new(
            vec![2],
            vec![
                LayerSpec::dense(3, Activation::Sigmoid),
                LayerSpec::dense(1, Activation::Sigmoid),
            ],
        )
        .unwrap();
        let model = ModelParams::zeros(&arch);
        let x = Tensor::new(vec![1, 2], vec![0.7, -0.2]).unwrap();
        let (yhat, cache) = forward(&model, &arch, &x).unwrap();
        assert_eq!(yhat.data(), &[0.5]);
        let target = Tensor::new(vec![1, 1], vec![1.0]).unwrap();
        let g = backward(&model, &arch, &cache, &target, LossKind::Mse).unwrap();
        assert_eq!(g.layers[1].bias.data(), &[-0.125]);
        // hidden outputs are all sigmoid(0) = 0.5
        assert!(g.layers[1]
            .weights
            .data()
            .iter()
            .all(|&w| w == -0.125 * 0.5));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let arch =
            Architecture::new(vec![2], vec![LayerSpec::dense(1, Activation::Sigmoid)]).unwrap();
        let model = ModelParams::zeros(&arch);
        let x = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let (_, cache) = forward(&model, &arch, &x).unwrap();
        let moved = ModelParams {
            layers: vec![LayerParams {
                weights: Tensor::filled(&[2, 1], 0.1),
                bias: Tensor::zeros(&[1]),
            }],
        };
        let t = Tensor::new(vec![1, 1], vec![1.0]).unwrap();
        assert!(matches!(
            backward(&moved, &arch, &cache, &t, LossKind::Mse),
            Err(Error::StaleCache(_))
        ));
        let t2 = Tensor::new(vec![2, 1], vec![1.0, 0.0]).unwrap();
        assert!(backward(&model, &arch, &cache, &t2, LossKind::Mse).is_err());
    }

    #[test]
    fn cross_entropy_requires_softmax() {
        let arch =
            Architecture::new(vec![2], vec![LayerSpec::dense(2, Activation::Sigmoid)]).unwrap();
        let model = ModelParams::zeros(&arch);
        let x = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let (_, cache) = forward(&model, &arch, &x).unwrap();
        let t = Tensor::new(vec![1, 2], vec![1.0, 0.0]).unwrap();
        assert!(backward(&model, &arch, &cache, &t, LossKind::CrossEntropy).is_err());
    }
}
