use rand::Rng;

use super::NumError;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
}

/// Architecture of a fully connected softmax classifier.
///
/// An empty `hidden_dims` gives multinomial logistic regression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub num_classes: usize,
    pub activation: Activation,
}

/// Location of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Offset of the `fan_out x fan_in` row-major weight block.
    pub weight_offset: usize,
    /// Offset of the `fan_out` bias block, directly after the weights.
    pub bias_offset: usize,
}

impl ModelSpec {
    pub fn logistic(input_dim: usize, num_classes: usize) -> Self {
        ModelSpec {
            input_dim,
            hidden_dims: Vec::new(),
            num_classes,
            activation: Activation::Relu,
        }
    }

    pub fn mlp(input_dim: usize, hidden_dims: Vec<usize>, num_classes: usize) -> Self {
        ModelSpec {
            input_dim,
            hidden_dims,
            num_classes,
            activation: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<(), NumError> {
        if self.input_dim == 0 {
            return Err(NumError::InvalidSpec("input_dim must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(NumError::InvalidSpec("num_classes must be at least 2".into()));
        }
        if self.hidden_dims.contains(&0) {
            return Err(NumError::InvalidSpec("hidden layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.num_classes);
        let mut offset = 0;
        dims.windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let shape = LayerShape {
                    fan_in,
                    fan_out,
                    weight_offset: offset,
                    bias_offset: offset + fan_in * fan_out,
                };
                offset += (fan_in + 1) * fan_out;
                shape
            })
            .collect()
    }

    /// Σ over layers of (fan_in + 1) * fan_out.
    pub fn param_count(&self) -> usize {
        let mut prev = self.input_dim;
        let mut total = 0;
        for &width in self.hidden_dims.iter().chain(std::iter::once(&self.num_classes)) {
            total += (prev + 1) * width;
            prev = width;
        }
        total
    }
}

/// Model parameters in the fixed flat layout
/// `[W0 (row-major, fan_out x fan_in), b0, W1, b1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    spec: ModelSpec,
    values: Vec<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(spec: ModelSpec) -> Self {
        let n = spec.param_count();
        ModelParams {
            spec,
            values: vec![T::zero(); n],
        }
    }

    pub fn from_values(spec: ModelSpec, values: Vec<T>) -> Result<Self, NumError> {
        spec.validate()?;
        let expected = spec.param_count();
        if values.len() != expected {
            return Err(NumError::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(NumError::NonFinite(i));
        }
        Ok(ModelParams { spec, values })
    }

    /// Glorot-uniform weights, zero biases. Deterministic in `(spec, seed)`.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self, NumError> {
        spec.validate()?;
        let mut rng = stream_rng(seed, Stream::ModelInit, &[]);
        let mut values = vec![T::zero(); spec.param_count()];
        for layer in spec.layers() {
            let bound = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            for w in &mut values[layer.weight_offset..layer.bias_offset] {
                *w = T::of(rng.random_range(-bound..=bound));
            }
        }
        Ok(ModelParams { spec, values })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Replaces the values, keeping the spec. Rejects wrong length or non-finite entries.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self, NumError> {
        ModelParams::from_values(self.spec.clone(), values)
    }

    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}
