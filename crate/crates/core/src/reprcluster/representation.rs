use super::{ClientId, ClusterError};
use crate::numkernel::{gradient, DatasetShard, ModelParams};
use crate::scalar::{dot, norm, Scalar};

/// Gradients with L2 norm at or below this are treated as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Unit-norm loss gradient of a dataset at the anchor model.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation<T> {
    vector: Vec<T>,
}

impl<T: Scalar> Representation<T> {
    /// Normalises `v` to unit length. Rejects vectors with norm `<= DEGENERATE_NORM`.
    pub fn normalize(v: Vec<T>) -> Result<Self, ClusterError> {
        let n = norm(&v);
        if !(n.as_f64() > DEGENERATE_NORM) {
            return Err(ClusterError::DegenerateShard {
                client: None,
                norm: n.as_f64(),
            });
        }
        Ok(Representation {
            vector: v.into_iter().map(|x| x / n).collect(),
        })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.vector
    }

    pub fn len(&self) -> usize {
        self.vector.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vector.is_empty()
    }
}

/// Normalised gradient of the mean loss of `shard` at `anchor`.
pub fn extract_representation<T: Scalar>(
    anchor: &ModelParams<T>,
    shard: &DatasetShard<T>,
) -> Result<Representation<T>, ClusterError> {
    Representation::normalize(gradient(anchor, shard)?)
}

pub(crate) fn extract_for_client<T: Scalar>(
    client: ClientId,
    anchor: &ModelParams<T>,
    shard: &DatasetShard<T>,
) -> Result<Representation<T>, ClusterError> {
    let grad = gradient(anchor, shard).map_err(|source| ClusterError::Client { client, source })?;
    Representation::normalize(grad).map_err(|e| match e {
        ClusterError::DegenerateShard { norm, .. } => ClusterError::DegenerateShard {
            client: Some(client),
            norm,
        },
        other => other,
    })
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Result<T, ClusterError> {
    if a.len() != b.len() {
        return Err(ClusterError::LengthMismatch(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == T::zero() || nb == T::zero() {
        return Err(ClusterError::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).max(-T::one()).min(T::one()))
}
