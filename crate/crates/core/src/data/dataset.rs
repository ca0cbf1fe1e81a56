use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Labelled samples. `images` has shape `[n, ...sample_shape]`, normally
/// `[n, channels, height, width]` with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: Tensor,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(images: Tensor, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if images.shape().len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "dataset images need a leading sample dimension, got shape {:?}",
                images.shape()
            )));
        }
        if images.rows() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} images but {} labels",
                images.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            images,
            labels,
            num_classes,
        })
    }

    /// A dataset with no samples but a known sample shape.
    pub fn empty(sample_shape: &[usize], num_classes: usize) -> Self {
        let mut shape = vec![0];
        shape.extend_from_slice(sample_shape);
        Self {
            images: Tensor::from_parts(shape, Vec::new()),
            labels: Vec::new(),
            num_classes,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn images(&self) -> &Tensor {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn sample_shape(&self) -> &[usize] {
        &self.images.shape()[1..]
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        self.images.row(i)
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let w = self.images.row_len();
        let mut data = Vec::with_capacity(indices.len() * w);
        for &i in indices {
            data.extend_from_slice(self.images.row(i));
        }
        let mut shape = self.images.shape().to_vec();
        shape[0] = indices.len();
        Self {
            images: Tensor::from_parts(shape, data),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// Builds a dataset from per-sample pixel rows.
    pub fn from_samples(
        sample_shape: &[usize],
        samples: Vec<(Vec<f64>, usize)>,
        num_classes: usize,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Ok(Self::empty(sample_shape, num_classes));
        }
        let w: usize = sample_shape.iter().product();
        let mut data = Vec::with_capacity(samples.len() * w);
        let mut labels = Vec::with_capacity(samples.len());
        for (px, label) in samples {
            if px.len() != w {
                return Err(Error::shape("sample", sample_shape, &[px.len()]));
            }
            data.extend(px);
            labels.push(label);
        }
        let mut shape = vec![labels.len()];
        shape.extend_from_slice(sample_shape);
        Self::new(Tensor::new(shape, data)?, labels, num_classes)
    }

    /// Per-sample pixel rows paired with labels.
    pub fn to_samples(&self) -> Vec<(Vec<f64>, usize)> {
        (0..self.len())
            .map(|i| (self.sample(i).to_vec(), self.labels[i]))
            .collect()
    }

    /// One-hot targets of width `width` (`[n, width]`).
    pub fn one_hot(&self, width: usize) -> Result<Tensor> {
        one_hot(&self.labels, width)
    }

    /// Number of samples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

pub fn one_hot(labels: &[usize], width: usize) -> Result<Tensor> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset("no labels to encode".into()));
    }
    let mut data = vec![0.0; labels.len() * width];
    for (i, &l) in labels.iter().enumerate() {
        if l >= width {
            return Err(Error::InvalidArgument(format!(
                "label {l} does not fit a {width}-wide output"
            )));
        }
        data[i * width + l] = 1.0;
    }
    Ok(Tensor::from_parts(vec![labels.len(), width], data))
}
