use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::DataError;
use crate::numkernel::DatasetShard;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

/// A labelled pool of samples that partitions draw clients from.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseDataset<T> {
    data: DatasetShard<T>,
    num_classes: usize,
}

impl<T: Scalar> BaseDataset<T> {
    /// Requires at least one sample of every class.
    pub fn new(data: DatasetShard<T>, num_classes: usize) -> Result<Self, DataError> {
        if num_classes < 2 {
            return Err(DataError::InvalidParams("need at least two classes".into()));
        }
        let mut seen = vec![false; num_classes];
        for &y in data.labels() {
            if y >= num_classes {
                return Err(DataError::InvalidParams(format!(
                    "label {y} outside [0, {num_classes})"
                )));
            }
            seen[y] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(DataError::InvalidParams(format!("class {c} has no samples")));
        }
        Ok(BaseDataset { data, num_classes })
    }

    pub fn data(&self) -> &DatasetShard<T> {
        &self.data
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }
}

/// Gaussian class prototypes on the sphere of radius `class_separation`,
/// samples = prototype + standard normal noise. Labels are balanced to
/// within one sample per class and appear in shuffled order.
pub fn make_base_dataset<T: Scalar>(
    seed: u64,
    n: usize,
    d: usize,
    num_classes: usize,
    class_separation: f64,
) -> Result<BaseDataset<T>, DataError> {
    if num_classes < 2 || n < num_classes {
        return Err(DataError::InvalidParams(format!(
            "need n >= num_classes >= 2, got n={n}, num_classes={num_classes}"
        )));
    }
    if d < 2 {
        return Err(DataError::InvalidParams(format!("need d >= 2, got {d}")));
    }
    if !(class_separation > 0.0 && class_separation.is_finite()) {
        return Err(DataError::InvalidParams(format!(
            "class_separation must be positive, got {class_separation}"
        )));
    }

    let mut proto_rng = stream_rng(seed, Stream::Prototypes, &[]);
    let prototypes: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| {
            let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut proto_rng)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            g.into_iter().map(|v| class_separation * v / norm).collect()
        })
        .collect();

    let mut rng = stream_rng(seed, Stream::Samples, &[]);
    let mut labels: Vec<usize> = (0..n).map(|i| i % num_classes).collect();
    labels.shuffle(&mut rng);
    let mut features = Vec::with_capacity(n * d);
    for &y in &labels {
        for &mu in &prototypes[y] {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features.push(T::of(mu + noise));
        }
    }
    BaseDataset::new(DatasetShard::new(features, d, labels)?, num_classes)
}
