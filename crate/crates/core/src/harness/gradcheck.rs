use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numkernel::{finite_diff_gradient, gradient, DatasetShard, ModelParams, ModelSpec, NumError};
use crate::rng::{stream_rng, Stream};

pub const DEFAULT_STEP: f64 = 1e-5;
const CASES: usize = 20;
const SUITE_SEED: u64 = 0x6772_6164;
/// Denominator floor, so coordinates whose true derivative is ~0 are
/// judged by absolute error instead of blowing up.
const REL_FLOOR: f64 = 1e-6;

/// Acceptance bound for a given finite-difference step: `1e-4` at the
/// default step, growing with the `O(h^2)` truncation error for coarser steps.
pub fn gradcheck_bound(step: f64) -> f64 {
    (step * step * 1e4).max(1e-4)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub cases: usize,
    pub coordinates: usize,
    pub max_rel_err: f64,
    pub worst_case: usize,
    pub step: f64,
    pub bound: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.bound
    }
}

/// Smallest |pre-activation| allowed at a hidden unit. Central differences
/// with steps up to 1e-2 never straddle a ReLU kink beyond this margin.
const KINK_MARGIN: f64 = 0.05;

fn min_hidden_preactivation(params: &ModelParams<f64>, shard: &DatasetShard<f64>) -> f64 {
    let layers = params.spec().layers();
    let w = params.values();
    let mut min = f64::INFINITY;
    for (x, _) in shard.rows() {
        let mut input = x.to_vec();
        for l in &layers[..layers.len() - 1] {
            let z: Vec<f64> = (0..l.fan_out)
                .map(|o| {
                    let row = &w[l.weight_offset + o * l.fan_in..][..l.fan_in];
                    w[l.bias_offset + o] + row.iter().zip(&input).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            min = z.iter().fold(min, |m, v| m.min(v.abs()));
            input = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    min
}

/// The `i`-th seeded problem of the suite. Draws are repeated until every
/// hidden pre-activation clears [`KINK_MARGIN`].
pub fn gradcheck_case(i: usize) -> Result<(ModelParams<f64>, DatasetShard<f64>), NumError> {
    let d = 2 + i % 9;
    let n = 4 + (5 * i) % 13;
    let classes = 2 + i % 4;
    let spec = if i.is_multiple_of(2) {
        ModelSpec::logistic(d, classes)
    } else {
        ModelSpec::mlp(d, vec![3 + i % 5], classes)
    };
    for attempt in 0u64.. {
        let mut rng = stream_rng(SUITE_SEED, Stream::Samples, &[i as u64, attempt]);
        let init = ModelParams::init(spec.clone(), rng.random())?;
        let values = init
            .values()
            .iter()
            .map(|&w: &f64| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                w + 0.1 * noise
            })
            .collect();
        let params = init.with_values(values)?;
        let features = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let shard = DatasetShard::new(features, d, labels)?;
        if min_hidden_preactivation(&params, &shard) >= KINK_MARGIN {
            return Ok((params, shard));
        }
    }
    unreachable!("attempt counter is unbounded")
}

/// Compares analytic gradients with central differences on 20 seeded
/// problems (logistic and one-hidden-layer, d <= 10, n <= 16).
///
/// `corrupt` zeroes the output-bias gradient before comparing; it exists
/// only to prove that the check can fail.
pub fn gradcheck_suite(step: f64, corrupt: bool) -> Result<GradcheckReport, NumError> {
    let mut report = GradcheckReport {
        cases: CASES,
        coordinates: 0,
        max_rel_err: 0.0,
        worst_case: 0,
        step,
        bound: gradcheck_bound(step),
    };
    for i in 0..CASES {
        let (params, shard) = gradcheck_case(i)?;
        let mut analytic = gradient(&params, &shard)?;
        if corrupt {
            let last = params.spec().layers().pop().expect("model has a layer");
            for g in &mut analytic[last.bias_offset..last.bias_offset + last.fan_out] {
                *g = 0.0;
            }
        }
        let numeric = finite_diff_gradient(&params, &shard, step)?;
        for (a, f) in analytic.iter().zip(&numeric) {
            let rel = (a - f).abs() / a.abs().max(f.abs()).max(REL_FLOOR);
            if rel > report.max_rel_err || rel.is_nan() {
                report.max_rel_err = if rel.is_nan() { f64::INFINITY } else { rel };
                report.worst_case = i;
            }
        }
        report.coordinates += analytic.len();
    }
    Ok(report)
}
