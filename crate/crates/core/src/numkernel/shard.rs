use super::NumError;
use crate::scalar::Scalar;

/// One client's local data: an `n x dim` row-major feature matrix and `n` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetShard<T> {
    features: Vec<T>,
    dim: usize,
    labels: Vec<usize>,
}

impl<T: Scalar> DatasetShard<T> {
    pub fn new(features: Vec<T>, dim: usize, labels: Vec<usize>) -> Result<Self, NumError> {
        if dim == 0 {
            return Err(NumError::InvalidShard("feature dimension must be positive".into()));
        }
        if labels.is_empty() {
            return Err(NumError::InvalidShard("shard must hold at least one sample".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(NumError::InvalidShard(format!(
                "{} feature values for {} samples of dimension {}",
                features.len(),
                labels.len(),
                dim
            )));
        }
        Ok(DatasetShard {
            features,
            dim,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> &[T] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[T], usize)> {
        self.features.chunks_exact(self.dim).zip(self.labels.iter().copied())
    }

    /// New shard holding the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self, NumError> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        DatasetShard::new(features, self.dim, labels)
    }

    /// Concatenation of `self` followed by `other`.
    pub fn concat(&self, other: &Self) -> Result<Self, NumError> {
        if other.dim != self.dim {
            return Err(NumError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut features = self.features.clone();
        features.extend_from_slice(&other.features);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        DatasetShard::new(features, self.dim, labels)
    }

    pub(crate) fn check_against(&self, input_dim: usize, num_classes: usize) -> Result<(), NumError> {
        if self.dim != input_dim {
            return Err(NumError::DimensionMismatch {
                expected: input_dim,
                found: self.dim,
            });
        }
        if let Some((row, &label)) = self.labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(NumError::LabelOutOfRange {
                row,
                label,
                num_classes,
            });
        }
        Ok(())
    }
}
