//! Forward pass.

use super::layer::{Activation, Architecture, LayerKind};
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Everything `backward` needs from a forward pass: the batch input and,
/// for every layer, the pre-activations `a` and outputs `o`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub(crate) fingerprint: u64,
    pub(crate) input: Tensor,
    pub(crate) pre: Vec<Tensor>,
    pub(crate) out: Vec<Tensor>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.input.rows()
    }

    pub fn input(&self) -> &Tensor {
        &self.input
    }

    /// Pre-activation of layer `layer` (0-based over all layers).
    pub fn pre_activation(&self, layer: usize) -> &Tensor {
        &self.pre[layer]
    }

    /// Output of layer `layer` (0-based over all layers).
    pub fn output(&self, layer: usize) -> &Tensor {
        &self.out[layer]
    }
}

/// Runs `input` (`[batch, ...input_shape]`) through the network.
pub fn forward(
    model: &ModelParams,
    arch: &Architecture,
    input: &Tensor,
) -> Result<(Tensor, ForwardCache)> {
    model.check(arch)?;
    check_input(arch, input)?;
    let n = input.rows();
    let mut pre = Vec::with_capacity(arch.layers().len());
    let mut out: Vec<Tensor> = Vec::with_capacity(arch.layers().len());

    for (idx, spec) in arch.layers().iter().enumerate() {
        let prev = if idx == 0 { input } else { &out[idx - 1] };
        let in_shape: &[usize] = if idx == 0 {
            arch.input_shape()
        } else {
            arch.out_shape(idx - 1)
        };
        let out_shape = arch.out_shape(idx);
        let width: usize = out_shape.iter().product();
        let mut a = vec![0.0; n * width];

        for d in 0..n {
            let x = prev.row(d);
            let y = &mut a[d * width..(d + 1) * width];
            match spec.kind {
                LayerKind::Dense { units } => {
                    let p = &model.layers[arch.trainable_slot(idx).expect("dense is trainable")];
                    dense_forward(p.weights.data(), p.bias.data(), units, x, y);
                }
                LayerKind::Conv2D {
                    filters,
                    kernel_h,
                    kernel_w,
                } => {
                    let p = &model.layers[arch.trainable_slot(idx).expect("conv is trainable")];
                    conv_forward(
                        p.weights.data(),
                        p.bias.data(),
                        in_shape,
                        [filters, kernel_h, kernel_w],
                        x,
                        y,
                    );
                }
                LayerKind::MaxPool2D { pool_h, pool_w } => {
                    pool_forward(in_shape, out_shape, [pool_h, pool_w], x, y);
                }
                LayerKind::Flatten => y.copy_from_slice(x),
            }
        }

        let mut full_shape = vec![n];
        full_shape.extend_from_slice(out_shape);
        let mut o = a.clone();
        for d in 0..n {
            activate(spec.activation, &mut o[d * width..(d + 1) * width]);
        }
        pre.push(Tensor::from_parts(full_shape.clone(), a));
        out.push(Tensor::from_parts(full_shape, o));
    }

    let output = out.last().expect("architecture has layers").clone();
    if !output.is_finite() {
        return Err(Error::InvalidArgument(
            "forward produced non-finite activations".into(),
        ));
    }
    let cache = ForwardCache {
        fingerprint: model.fingerprint(),
        input: input.clone(),
        pre,
        out,
    };
    Ok((output, cache))
}

pub(crate) fn check_input(arch: &Architecture, input: &Tensor) -> Result<()> {
    let shape = input.shape();
    if shape.len() != arch.input_shape().len() + 1
        || &shape[1..] != arch.input_shape()
        || shape[0] == 0
    {
        let mut expected = vec![shape.first().copied().unwrap_or(1).max(1)];
        expected.extend_from_slice(arch.input_shape());
        return Err(Error::shape("forward input", &expected, shape));
    }
    Ok(())
}

/// `a_j = b_j + Σ_i o_i w_ij` with `w` laid out `[inputs, units]`.
fn dense_forward(w: &[f64], b: &[f64], units: usize, x: &[f64], a: &mut [f64]) {
    a.copy_from_slice(b);
    for (i, &xi) in x.iter().enumerate() {
        let row = &w[i * units..(i + 1) * units];
        for (aj, &wij) in a.iter_mut().zip(row) {
            *aj += xi * wij;
        }
    }
}

fn conv_forward(
    w: &[f64],
    b: &[f64],
    in_shape: &[usize],
    kernel: [usize; 3],
    x: &[f64],
    a: &mut [f64],
) {
    let (c, h, wd) = (in_shape[0], in_shape[1], in_shape[2]);
    let [filters, kh, kw] = kernel;
    let (oh, ow) = (h - kh + 1, wd - kw + 1);
    for f in 0..filters {
        let out = &mut a[f * oh * ow..(f + 1) * oh * ow];
        out.fill(b[f]);
        for ch in 0..c {
            let plane = &x[ch * h * wd..(ch + 1) * h * wd];
            for u in 0..kh {
                for v in 0..kw {
                    let wv = w[((f * c + ch) * kh + u) * kw + v];
                    for y in 0..oh {
                        let src = &plane[(y + u) * wd + v..(y + u) * wd + v + ow];
                        let dst = &mut out[y * ow..(y + 1) * ow];
                        for (o, &s) in dst.iter_mut().zip(src) {
                            *o += wv * s;
                        }
                    }
                }
            }
        }
    }
}

fn pool_forward(
    in_shape: &[usize],
    out_shape: &[usize],
    pool: [usize; 2],
    x: &[f64],
    a: &mut [f64],
) {
    let (c, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
    let (oh, ow) = (out_shape[1], out_shape[2]);
    for ch in 0..c {
        for y in 0..oh {
            for xo in 0..ow {
                let idx = pool_argmax(x, ch, h, w, y, xo, pool);
                a[(ch * oh + y) * ow + xo] = x[idx];
            }
        }
    }
}

/// Flat index of the first maximum inside a pooling window.
pub(crate) fn pool_argmax(
    x: &[f64],
    ch: usize,
    h: usize,
    w: usize,
    y: usize,
    xo: usize,
    pool: [usize; 2],
) -> usize {
    let [ph, pw] = pool;
    let mut best = ch * h * w + (y * ph) * w + xo * pw;
    for u in 0..ph {
        for v in 0..pw {
            let i = ch * h * w + (y * ph + u) * w + xo * pw + v;
            if x[i] > x[best] {
                best = i;
            }
        }
    }
    best
}

pub(crate) fn activate(act: Activation, v: &mut [f64]) {
    match act {
        Activation::Linear => {}
        Activation::ReLU => v.iter_mut().for_each(|x| *x = x.max(0.0)),
        Activation::Sigmoid => v.iter_mut().for_each(|x| *x = sigmoid(*x)),
        Activation::Softmax => {
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for x in v.iter_mut() {
                *x = (*x - max).exp();
                sum += *x;
            }
            v.iter_mut().for_each(|x| *x /= sum);
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `g'(a)` for elementwise activations, using the cached output `o = g(a)`.
pub(crate) fn activation_derivative(act: Activation, a: f64, o: f64) -> f64 {
    match act {
        Activation::Linear => 1.0,
        Activation::ReLU => {
            if a > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Sigmoid => o * (1.0 - o),
        Activation::Softmax => unreachable!("softmax has no elementwise derivative"),
    }
}
