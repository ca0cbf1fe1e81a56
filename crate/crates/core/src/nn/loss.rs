use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `1/(2N) Σ_d Σ_j (ŷ - y)²`
    Mse,
    /// Mean negative log-likelihood of the target class.
    CrossEntropy,
}

const NORMALIZATION_TOL: f64 = 1e-9;

/// Batch loss of `predicted` against `target`, both `[batch, outputs]`.
pub fn compute_loss(predicted: &Tensor, target: &Tensor, loss: LossKind) -> Result<f64> {
    if predicted.shape() != target.shape() {
        return Err(Error::shape(
            "loss target",
            predicted.shape(),
            target.shape(),
        ));
    }
    let n = predicted.rows();
    if n == 0 {
        return Err(Error::EmptyDataset("loss over an empty batch".into()));
    }
    match loss {
        LossKind::Mse => {
            let sum: f64 = predicted
                .data()
                .iter()
                .zip(target.data())
                .map(|(p, t)| (p - t) * (p - t))
                .sum();
            Ok(sum / (2.0 * n as f64))
        }
        LossKind::CrossEntropy => {
            let mut total = 0.0;
            for d in 0..n {
                let p = predicted.row(d);
                let t = target.row(d);
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOL
                    || p.iter().any(|&v| !(0.0..=1.0).contains(&v))
                {
                    return Err(Error::NotNormalized(format!(
                        "sample {d} sums to {sum} (predicted must be a probability vector)"
                    )));
                }
                if t.iter().any(|&v| v != 0.0 && v != 1.0) || t.iter().sum::<f64>() != 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "target of sample {d} is not one-hot"
                    )));
                }
                total -= p
                    .iter()
                    .zip(t)
                    .filter(|(_, &y)| y == 1.0)
                    .map(|(&q, _)| q.max(f64::MIN_POSITIVE).ln())
                    .sum::<f64>();
            }
            Ok(total / n as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_zero() {
        let t = Tensor::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(compute_loss(&t, &t, LossKind::Mse).unwrap(), 0.0);
        assert_eq!(compute_loss(&t, &t, LossKind::CrossEntropy).unwrap(), 0.0);
    }

    #[test]
    fn single_sample_mse() {
        let p = Tensor::new(vec![1, 1], vec![1.0]).unwrap();
        let t = Tensor::new(vec![1, 1], vec![0.0]).unwrap();
        assert_eq!(compute_loss(&p, &t, LossKind::Mse).unwrap(), 0.5);
    }

    #[test]
    fn cross_entropy_rejects_unnormalized() {
        let p = Tensor::from_rows(&[vec![0.5, 0.6]]).unwrap();
        let t = Tensor::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            compute_loss(&p, &t, LossKind::CrossEntropy),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn shape_mismatch() {
        let p = Tensor::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let t = Tensor::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(compute_loss(&p, &t, LossKind::Mse).is_err());
    }

    #[test]
    fn cross_entropy_value() {
        let p = Tensor::from_rows(&[vec![0.25, 0.75], vec![0.5, 0.5]]).unwrap();
        let t = Tensor::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let expected = -(0.75_f64.ln() + 0.5_f64.ln()) / 2.0;
        assert!((compute_loss(&p, &t, LossKind::CrossEntropy).unwrap() - expected).abs() < 1e-15);
    }
}
