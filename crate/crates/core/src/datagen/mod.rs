//! Synthetic multi-class data, the four Non-IID partition scenarios with
//! ground-truth cluster labels, IDX loading, and per-client train/test splits.

mod idx;
mod partition;
mod scenario;
mod synthetic;

pub use idx::{load_idx, parse_idx_images, parse_idx_labels, IdxImages, IMAGES_MAGIC, LABELS_MAGIC};
pub use partition::{
    partition_hybrid, partition_iid, partition_pathological, partition_rotated, partition_shifted,
    random_orthogonal, rotation_matrices,
};
pub use scenario::{train_test_split, split_shard, FederatedScenario, ScenarioKind};
pub use synthetic::{make_base_dataset, BaseDataset};

use thiserror::Error;

use crate::numkernel::NumError;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid dataset parameters: {0}")]
    InvalidParams(String),
    #[error("label group {0} has no samples")]
    EmptyGroup(usize),
    #[error("client {client} would receive no samples")]
    EmptyClient { client: usize },
    #[error("class count mismatch: {0} vs {1}")]
    ClassMismatch(usize, usize),
    #[error("feature dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("bad magic: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated IDX file: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("count mismatch: {images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("client {client} has {samples} sample(s), too few to split")]
    ClientTooSmall { client: usize, samples: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Splits `items` into `parts` contiguous chunks whose sizes differ by at most one.
/// The first `items.len() % parts` chunks get the extra element.
pub(crate) fn split_even<I: Clone>(items: &[I], parts: usize) -> Vec<Vec<I>> {
    let base = items.len() / parts;
    let extra = items.len() % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(items[start..start + len].to_vec());
        start += len;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_even_sizes() {
        let items: Vec<usize> = (0..10).collect();
        let parts = split_even(&items, 3);
        assert_eq!(parts.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 3, 3]);
        assert_eq!(parts.concat(), items);
    }
}
