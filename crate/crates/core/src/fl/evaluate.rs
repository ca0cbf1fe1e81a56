use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{argmax_rows, compute_loss, forward, Architecture, LossKind, ModelParams};

/// Samples per forward pass during evaluation.
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub main_loss: f64,
    pub main_accuracy: f64,
    pub backdoor_loss: f64,
    /// Share of triggered source-class samples classified as the target.
    pub backdoor_accuracy: f64,
}

/// Main-task metrics on `clean_test`, backdoor metrics on `backdoor_test`
/// (whose labels are all the target class).
pub fn evaluate(
    model: &ModelParams,
    arch: &Architecture,
    loss: LossKind,
    clean_test: &Dataset,
    backdoor_test: &Dataset,
) -> Result<Evaluation> {
    let (main_loss, main_accuracy) =
        loss_and_accuracy(model, arch, loss, clean_test, "clean test set")?;
    let (backdoor_loss, backdoor_accuracy) =
        loss_and_accuracy(model, arch, loss, backdoor_test, "backdoor test set")?;
    Ok(Evaluation {
        main_loss,
        main_accuracy,
        backdoor_loss,
        backdoor_accuracy,
    })
}

fn loss_and_accuracy(
    model: &ModelParams,
    arch: &Architecture,
    loss: LossKind,
    ds: &Dataset,
    what: &str,
) -> Result<(f64, f64)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset(format!("{what} is empty")));
    }
    let mut total_loss = 0.0;
    let mut correct = 0usize;
    let all: Vec<usize> = (0..ds.len()).collect();
    for chunk in all.chunks(EVAL_CHUNK) {
        let part = ds.subset(chunk);
        let (out, _) = forward(model, arch, part.images())?;
        let targets = part.one_hot(arch.output_width())?;
        total_loss += compute_loss(&out, &targets, loss)? * chunk.len() as f64;
        correct += argmax_rows(&out)
            .iter()
            .zip(part.labels())
            .filter(|(p, l)| p == l)
            .count();
    }
    let n = ds.len() as f64;
    Ok((total_loss / n, correct as f64 / n))
}
