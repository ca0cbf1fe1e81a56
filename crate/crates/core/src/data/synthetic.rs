//! Seeded synthetic image classes.
//!
//! Class `c` has a fixed prototype image: a class-specific mean intensity
//! plus a seeded per-pixel pattern. Samples are the prototype plus Gaussian
//! pixel noise, clamped to `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticParams {
    #[serde(default = "default_classes")]
    pub num_classes: usize,
    #[serde(default = "default_train")]
    pub train_per_class: usize,
    #[serde(default = "default_test")]
    pub test_per_class: usize,
    #[serde(default = "default_shape")]
    pub image_shape: Vec<usize>,
    /// Amplitude of the per-pixel prototype pattern.
    #[serde(default = "default_pattern")]
    pub pattern: f64,
    /// Standard deviation of the per-sample pixel noise.
    #[serde(default = "default_noise")]
    pub noise: f64,
}

fn default_classes() -> usize {
    10
}
fn default_train() -> usize {
    150
}
fn default_test() -> usize {
    50
}
fn default_shape() -> Vec<usize> {
    vec![3, 8, 8]
}
fn default_pattern() -> f64 {
    0.3
}
fn default_noise() -> f64 {
    0.15
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            num_classes: default_classes(),
            train_per_class: default_train(),
            test_per_class: default_test(),
            image_shape: default_shape(),
            pattern: default_pattern(),
            noise: default_noise(),
        }
    }
}

/// `samples_per_class` samples of each of `num_classes` classes, grouped by
/// class in ascending order.
pub fn gen_synthetic(
    num_classes: usize,
    samples_per_class: usize,
    image_shape: &[usize],
    seed: u64,
) -> Result<Dataset> {
    let p = SyntheticParams {
        num_classes,
        image_shape: image_shape.to_vec(),
        ..SyntheticParams::default()
    };
    generate(&p, samples_per_class, seed)
}

/// Generates `train_per_class + test_per_class` samples per class from one
/// stream and splits each class: the first `train_per_class` go to train.
pub fn synthetic_train_test(p: &SyntheticParams, seed: u64) -> Result<(Dataset, Dataset)> {
    let all = generate(p, p.train_per_class + p.test_per_class, seed)?;
    let per = p.train_per_class + p.test_per_class;
    let mut train = Vec::with_capacity(p.num_classes * p.train_per_class);
    let mut test = Vec::with_capacity(p.num_classes * p.test_per_class);
    for c in 0..p.num_classes {
        train.extend(c * per..c * per + p.train_per_class);
        test.extend(c * per + p.train_per_class..(c + 1) * per);
    }
    Ok((all.subset(&train), all.subset(&test)))
}

fn generate(p: &SyntheticParams, samples_per_class: usize, seed: u64) -> Result<Dataset> {
    if p.num_classes == 0
        || samples_per_class == 0
        || p.image_shape.is_empty()
        || p.image_shape.contains(&0)
    {
        return Err(Error::InvalidArgument(format!(
            "synthetic data needs positive sizes (classes {}, per class {samples_per_class}, shape {:?})",
            p.num_classes, p.image_shape
        )));
    }
    if !(p.noise >= 0.0 && p.pattern >= 0.0) {
        return Err(Error::InvalidArgument(
            "noise and pattern must be non-negative".into(),
        ));
    }
    let width: usize = p.image_shape.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prototypes: Vec<Vec<f64>> = (0..p.num_classes)
        .map(|c| {
            let mean = if p.num_classes == 1 {
                0.5
            } else {
                0.15 + 0.7 * c as f64 / (p.num_classes - 1) as f64
            };
            (0..width)
                .map(|_| (mean + p.pattern * rng.random_range(-1.0..=1.0)).clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    let noise = Normal::new(0.0, p.noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut samples = Vec::with_capacity(p.num_classes * samples_per_class);
    for (c, proto) in prototypes.iter().enumerate() {
        for _ in 0..samples_per_class {
            let px = proto
                .iter()
                .map(|&v| (v + noise.sample(&mut rng)).clamp(0.0, 1.0))
                .collect();
            samples.push((px, c));
        }
    }
    Dataset::from_samples(&p.image_shape, samples, p.num_classes)
}
