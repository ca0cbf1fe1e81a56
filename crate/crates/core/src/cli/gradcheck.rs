//! `gradcheck`: backpropagation against central finite differences.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::{
    backward, compare_gradients, finite_diff_gradient, forward, Activation, Architecture,
    Gradients, GroupError, LossKind, ModelParams, DEFAULT_STEP,
};
use crate::tensor::Tensor;

/// Largest accepted relative error.
pub const TOLERANCE: f64 = 1e-4;

const INPUT_SHAPE: [usize; 3] = [3, 8, 8];
const CLASSES: usize = 3;
const BATCH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Mlp,
    Cnn,
}

/// One network/loss pairing checked.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub name: String,
    pub groups: Vec<GroupError>,
}

impl CaseResult {
    pub fn worst(&self) -> Option<&GroupError> {
        self.groups
            .iter()
            .max_by(|a, b| a.max_relative_error.total_cmp(&b.max_relative_error))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub cases: Vec<CaseResult>,
}

impl GradcheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.cases
            .iter()
            .flat_map(|c| &c.groups)
            .map(|g| g.max_relative_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_relative_error() < TOLERANCE
    }

    /// The case and group holding the largest error.
    pub fn worst(&self) -> Option<(&CaseResult, &GroupError)> {
        self.cases
            .iter()
            .filter_map(|c| c.worst().map(|g| (c, g)))
            .max_by(|a, b| a.1.max_relative_error.total_cmp(&b.1.max_relative_error))
    }
}

impl fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for case in &self.cases {
            writeln!(f, "{}", case.name)?;
            for g in &case.groups {
                writeln!(
                    f,
                    "  {:<12} max relative error {:.3e}",
                    g.group.to_string(),
                    g.max_relative_error
                )?;
            }
        }
        Ok(())
    }
}

/// Networks and losses exercised for `preset`.
pub fn cases(preset: Preset) -> Result<Vec<(String, Architecture, LossKind)>> {
    let input = INPUT_SHAPE.to_vec();
    Ok(match preset {
        Preset::Mlp => vec![
            (
                "mlp sigmoid/softmax, cross-entropy".into(),
                Architecture::mlp(
                    input.clone(),
                    &[16, 8],
                    Activation::Sigmoid,
                    CLASSES,
                    Activation::Softmax,
                )?,
                LossKind::CrossEntropy,
            ),
            (
                "mlp sigmoid/softmax, mse".into(),
                Architecture::mlp(
                    input.clone(),
                    &[16],
                    Activation::Sigmoid,
                    CLASSES,
                    Activation::Softmax,
                )?,
                LossKind::Mse,
            ),
            (
                "mlp relu/sigmoid, mse".into(),
                Architecture::mlp(
                    input.clone(),
                    &[16],
                    Activation::ReLU,
                    CLASSES,
                    Activation::Sigmoid,
                )?,
                LossKind::Mse,
            ),
            (
                "mlp linear/linear, mse".into(),
                Architecture::mlp(input, &[8], Activation::Linear, CLASSES, Activation::Linear)?,
                LossKind::Mse,
            ),
        ],
        Preset::Cnn => vec![
            (
                "cnn, cross-entropy".into(),
                Architecture::cnn(input.clone(), 4, 16, CLASSES)?,
                LossKind::CrossEntropy,
            ),
            (
                "cnn, mse".into(),
                Architecture::cnn(input, 4, 16, CLASSES)?,
                LossKind::Mse,
            ),
        ],
    })
}

/// Random inputs in `[0, 1)` with random one-hot targets.
pub fn random_batch(arch: &Architecture, batch: usize, seed: u64) -> (Tensor, Tensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape = vec![batch];
    shape.extend_from_slice(arch.input_shape());
    let width: usize = arch.input_shape().iter().product();
    let inputs = (0..batch * width).map(|_| rng.random::<f64>()).collect();
    let classes = arch.output_width();
    let mut targets = vec![0.0; batch * classes];
    for row in targets.chunks_mut(classes) {
        row[rng.random_range(0..classes)] = 1.0;
    }
    (
        Tensor::new(shape, inputs).expect("valid input shape"),
        Tensor::new(vec![batch, classes], targets).expect("valid target shape"),
    )
}

/// Checks every case of `preset` at `seed`. `corrupt`, when given, is
/// applied to each backpropagated gradient before comparison.
pub fn run_gradcheck(
    preset: Preset,
    seed: u64,
    corrupt: Option<&dyn Fn(&mut Gradients)>,
) -> Result<GradcheckReport> {
    let mut out = Vec::new();
    for (i, (name, arch, loss)) in cases(preset)?.into_iter().enumerate() {
        let model = ModelParams::init(&arch, seed.wrapping_add(i as u64));
        let (x, y) = random_batch(&arch, BATCH, seed.wrapping_mul(31).wrapping_add(i as u64));
        let (_, cache) = forward(&model, &arch, &x)?;
        let mut analytic = backward(&model, &arch, &cache, &y, loss)?;
        if let Some(f) = corrupt {
            f(&mut analytic);
        }
        let numeric = finite_diff_gradient(&model, &arch, &x, &y, loss, DEFAULT_STEP)?;
        out.push(CaseResult {
            name,
            groups: compare_gradients(&analytic, &numeric)?,
        });
    }
    Ok(GradcheckReport { cases: out })
}
