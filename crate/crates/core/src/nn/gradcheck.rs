//! Central finite-difference gradients and comparison against `backward`.

use super::forward::forward;
use super::layer::Architecture;
use super::loss::{compute_loss, LossKind};
use super::params::{Gradients, ModelParams, WeightGroup};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Magnitude below which relative error is measured against this floor
/// instead of the gradient itself.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// `(E(w + h) - E(w - h)) / 2h` for every parameter, where `E` is the batch
/// loss, so the estimate is batch-averaged exactly as `backward` is.
pub fn finite_diff_gradient(
    model: &ModelParams,
    arch: &Architecture,
    inputs: &Tensor,
    targets: &Tensor,
    loss: LossKind,
    h: f64,
) -> Result<Gradients> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    model.check(arch)?;
    let eval = |m: &ModelParams| -> Result<f64> {
        let (out, _) = forward(m, arch, inputs)?;
        compute_loss(&out, targets, loss)
    };
    let mut probe = model.clone();
    let mut grads = Gradients::zeros(arch);
    for k in 0..model.layers.len() {
        for bias in [false, true] {
            let len = if bias {
                model.layers[k].bias.len()
            } else {
                model.layers[k].weights.len()
            };
            for i in 0..len {
                let original = param(&probe, k, bias)[i];
                param_mut(&mut probe, k, bias)[i] = original + h;
                let plus = eval(&probe)?;
                param_mut(&mut probe, k, bias)[i] = original - h;
                let minus = eval(&probe)?;
                param_mut(&mut probe, k, bias)[i] = original;
                let g = &mut grads.layers[k];
                let slot = if bias {
                    g.bias.data_mut()
                } else {
                    g.weights.data_mut()
                };
                slot[i] = (plus - minus) / (2.0 * h);
            }
        }
    }
    Ok(grads)
}

fn param(m: &ModelParams, k: usize, bias: bool) -> &[f64] {
    if bias {
        m.layers[k].bias.data()
    } else {
        m.layers[k].weights.data()
    }
}

fn param_mut(m: &mut ModelParams, k: usize, bias: bool) -> &mut [f64] {
    if bias {
        m.layers[k].bias.data_mut()
    } else {
        m.layers[k].weights.data_mut()
    }
}

/// `|a - n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupError {
    pub group: WeightGroup,
    pub max_relative_error: f64,
    /// Flat index of the worst element within the group.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Per-group worst relative error between two gradient sets.
pub fn compare_gradients(analytic: &Gradients, numeric: &Gradients) -> Result<Vec<GroupError>> {
    super::params::same_layout(&analytic.layers, &numeric.layers, "gradient comparison")?;
    let mut out = Vec::new();
    for group in WeightGroup::all(analytic.layers.len()) {
        let a = group.select(&analytic.layers)?.data();
        let n = group.select(&numeric.layers)?.data();
        let mut worst = GroupError {
            group,
            max_relative_error: 0.0,
            worst_index: 0,
            analytic: a[0],
            numeric: n[0],
        };
        for (i, (&x, &y)) in a.iter().zip(n).enumerate() {
            let e = relative_error(x, y);
            if e > worst.max_relative_error {
                worst = GroupError {
                    group,
                    max_relative_error: e,
                    worst_index: i,
                    analytic: x,
                    numeric: y,
                };
            }
        }
        out.push(worst);
    }
    Ok(out)
}
