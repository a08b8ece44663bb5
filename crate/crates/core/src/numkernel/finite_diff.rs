use super::{forward_loss, DatasetShard, ModelParams, NumError};
use crate::scalar::Scalar;

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate of `x`.
pub fn central_difference<T, F>(x: &[T], step: T, mut f: F) -> Vec<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    assert!(step > T::zero(), "finite-difference step must be positive");
    let mut probe = x.to_vec();
    let two_h = step + step;
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / two_h
        })
        .collect()
}

/// Finite-difference gradient of the mean cross-entropy loss.
pub fn finite_diff_gradient<T: Scalar>(
    params: &ModelParams<T>,
    shard: &DatasetShard<T>,
    step: T,
) -> Result<Vec<T>, NumError> {
    // surface dimension errors before probing
    forward_loss(params, shard)?;
    let mut probe = params.clone();
    Ok(central_difference(params.values(), step, |x| {
        probe.values_mut().copy_from_slice(x);
        forward_loss(&probe, shard).expect("validated above")
    }))
}
