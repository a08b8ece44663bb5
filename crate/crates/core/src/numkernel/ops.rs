use super::{DatasetShard, LayerShape, ModelParams, NumError};
use crate::scalar::Scalar;

/// Per-sample scratch space: pre-activations of every layer and the
/// post-activation outputs of every hidden layer.
struct Trace<T> {
    pre: Vec<Vec<T>>,
    hidden: Vec<Vec<T>>,
}

impl<T: Scalar> Trace<T> {
    fn new(layers: &[LayerShape]) -> Self {
        Trace {
            pre: layers.iter().map(|l| vec![T::zero(); l.fan_out]).collect(),
            hidden: layers[..layers.len() - 1]
                .iter()
                .map(|l| vec![T::zero(); l.fan_out])
                .collect(),
        }
    }

    fn logits(&self) -> &[T] {
        self.pre.last().expect("at least one layer")
    }
}

fn dense<T: Scalar>(values: &[T], layer: &LayerShape, input: &[T], out: &mut [T]) {
    let weights = &values[layer.weight_offset..layer.bias_offset];
    let biases = &values[layer.bias_offset..layer.bias_offset + layer.fan_out];
    for (o, slot) in out.iter_mut().enumerate() {
        let row = &weights[o * layer.fan_in..(o + 1) * layer.fan_in];
        *slot = row
            .iter()
            .zip(input)
            .fold(biases[o], |acc, (&w, &x)| acc + w * x);
    }
}

fn forward_sample<T: Scalar>(values: &[T], layers: &[LayerShape], x: &[T], trace: &mut Trace<T>) {
    for (l, layer) in layers.iter().enumerate() {
        let input: &[T] = if l == 0 { x } else { &trace.hidden[l - 1] };
        // split borrow: `pre[l]` is written, `hidden[l-1]` is read
        let mut out = std::mem::take(&mut trace.pre[l]);
        dense(values, layer, input, &mut out);
        if l + 1 < layers.len() {
            for (h, &z) in trace.hidden[l].iter_mut().zip(&out) {
                *h = z.max(T::zero());
            }
        }
        trace.pre[l] = out;
    }
}

/// log Σ exp(z), with the maximum subtracted first.
fn log_sum_exp<T: Scalar>(z: &[T]) -> T {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let s: T = z.iter().map(|&v| (v - m).exp()).sum();
    m + s.ln()
}

fn argmax<T: Scalar>(z: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}

fn check<T: Scalar>(params: &ModelParams<T>, shard: &DatasetShard<T>) -> Result<(), NumError> {
    let spec = params.spec();
    shard.check_against(spec.input_dim, spec.num_classes)
}

/// Output logits for every row of `shard`, row-major `n x num_classes`.
pub fn logits<T: Scalar>(params: &ModelParams<T>, shard: &DatasetShard<T>) -> Result<Vec<T>, NumError> {
    check(params, shard)?;
    let layers = params.spec().layers();
    let mut trace = Trace::new(&layers);
    let mut out = Vec::with_capacity(shard.len() * params.spec().num_classes);
    for (x, _) in shard.rows() {
        forward_sample(params.values(), &layers, x, &mut trace);
        out.extend_from_slice(trace.logits());
    }
    Ok(out)
}

/// Mean softmax cross-entropy over the shard.
pub fn forward_loss<T: Scalar>(params: &ModelParams<T>, shard: &DatasetShard<T>) -> Result<T, NumError> {
    check(params, shard)?;
    let layers = params.spec().layers();
    let mut trace = Trace::new(&layers);
    let mut total = T::zero();
    for (x, y) in shard.rows() {
        forward_sample(params.values(), &layers, x, &mut trace);
        let z = trace.logits();
        total += log_sum_exp(z) - z[y];
    }
    Ok(total / T::of_usize(shard.len()))
}

/// Analytic gradient of [`forward_loss`] in the flat parameter layout.
pub fn gradient<T: Scalar>(params: &ModelParams<T>, shard: &DatasetShard<T>) -> Result<Vec<T>, NumError> {
    check(params, shard)?;
    let values = params.values();
    let layers = params.spec().layers();
    let mut trace = Trace::new(&layers);
    let mut grad = vec![T::zero(); values.len()];
    let widest = layers.iter().map(|l| l.fan_in.max(l.fan_out)).max().unwrap_or(0);
    let mut delta = vec![T::zero(); widest];
    let mut delta_prev = vec![T::zero(); widest];

    for (x, y) in shard.rows() {
        forward_sample(values, &layers, x, &mut trace);

        // d loss / d logits = softmax(z) - onehot(y)
        let z = trace.logits();
        let lse = log_sum_exp(z);
        let out = layers.last().expect("at least one layer").fan_out;
        for (c, d) in delta[..out].iter_mut().enumerate() {
            *d = (z[c] - lse).exp();
        }
        delta[y] -= T::one();

        for l in (0..layers.len()).rev() {
            let layer = &layers[l];
            let input: &[T] = if l == 0 { x } else { &trace.hidden[l - 1] };
            let d = &delta[..layer.fan_out];
            for (o, &d_o) in d.iter().enumerate() {
                let row = &mut grad[layer.weight_offset + o * layer.fan_in..][..layer.fan_in];
                for (g, &a) in row.iter_mut().zip(input) {
                    *g += d_o * a;
                }
                grad[layer.bias_offset + o] += d_o;
            }
            if l > 0 {
                let weights = &values[layer.weight_offset..layer.bias_offset];
                let pre = &trace.pre[l - 1];
                for i in 0..layer.fan_in {
                    let mut acc = T::zero();
                    for (o, &d_o) in d.iter().enumerate() {
                        acc += weights[o * layer.fan_in + i] * d_o;
                    }
                    delta_prev[i] = if pre[i] > T::zero() { acc } else { T::zero() };
                }
                std::mem::swap(&mut delta, &mut delta_prev);
            }
        }
    }

    let n = T::of_usize(shard.len());
    for g in &mut grad {
        *g /= n;
    }
    Ok(grad)
}

/// `values - eta * direction`.
pub fn sgd_step<T: Scalar>(params: &ModelParams<T>, direction: &[T], eta: T) -> Result<ModelParams<T>, NumError> {
    if direction.len() != params.len() {
        return Err(NumError::LengthMismatch {
            expected: params.len(),
            found: direction.len(),
        });
    }
    let mut next = params.clone();
    for (v, &d) in next.values_mut().iter_mut().zip(direction) {
        *v -= eta * d;
    }
    if let Some(i) = next.values().iter().position(|v| !v.is_finite()) {
        return Err(NumError::NonFinite(i));
    }
    Ok(next)
}

/// Fraction of rows whose argmax logit equals the label. Ties go to the lowest class.
pub fn accuracy<T: Scalar>(params: &ModelParams<T>, shard: &DatasetShard<T>) -> Result<T, NumError> {
    Ok(T::of_usize(correct_count(params, shard)?) / T::of_usize(shard.len()))
}

pub(crate) fn correct_count<T: Scalar>(params: &ModelParams<T>, shard: &DatasetShard<T>) -> Result<usize, NumError> {
    check(params, shard)?;
    let layers = params.spec().layers();
    let mut trace = Trace::new(&layers);
    let mut correct = 0;
    for (x, y) in shard.rows() {
        forward_sample(params.values(), &layers, x, &mut trace);
        if argmax(trace.logits()) == y {
            correct += 1;
        }
    }
    Ok(correct)
}
