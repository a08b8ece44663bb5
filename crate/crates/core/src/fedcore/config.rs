use super::FedError;
use crate::scalar::Scalar;

/// How many clients take part in a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// Fraction of all clients, rounded to the nearest integer and at least one.
    Rate(f64),
    Count(usize),
}

impl Sampling {
    pub fn size(&self, num_clients: usize) -> usize {
        match *self {
            Sampling::Rate(r) => ((r * num_clients as f64).round() as usize).max(1),
            Sampling::Count(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    Full,
    Size(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    SampleCount,
    Equal,
}

/// Model the distribution representations are computed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnchorChoice {
    /// The initial global model.
    #[default]
    InitialGlobal,
    /// An independently initialised model.
    Seed(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub eta: T,
    pub lambda: T,
    pub tau: T,
    pub rounds: usize,
    pub sampling: Sampling,
    pub local_epochs: usize,
    pub batch: BatchSize,
    pub seed: u64,
    pub weighting: Weighting,
    pub anchor: AnchorChoice,
    /// Number of hypotheses broadcast by IFCA.
    pub ifca_models: usize,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        TrainConfig {
            eta: T::of(0.1),
            lambda: T::of(0.05),
            tau: T::of(0.5),
            rounds: 50,
            sampling: Sampling::Rate(0.1),
            local_epochs: 5,
            batch: BatchSize::Full,
            seed: 0,
            weighting: Weighting::SampleCount,
            anchor: AnchorChoice::InitialGlobal,
            ifca_models: 4,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<(), FedError> {
        let bad = |msg: String| Err(FedError::InvalidConfig(msg));
        if !(self.eta > T::zero() && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.lambda >= T::zero() && self.lambda.is_finite()) {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !self.tau.is_finite() {
            return bad(format!("tau must be finite, got {}", self.tau));
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.local_epochs == 0 {
            return bad("local_epochs must be at least 1".into());
        }
        if self.batch == BatchSize::Size(0) {
            return bad("batch size must be positive".into());
        }
        match self.sampling {
            Sampling::Rate(r) if !(r > 0.0 && r <= 1.0) => {
                return bad(format!("sample rate must lie in (0, 1], got {r}"));
            }
            Sampling::Count(0) => return bad("sample size must be positive".into()),
            _ => {}
        }
        if self.ifca_models == 0 {
            return bad("ifca_models must be at least 1".into());
        }
        Ok(())
    }
}
