//! A small fully connected ReLU network trained by hand-written backprop.

mod adam;
mod replay;

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use adam::{Adam, AdamConfig};
pub use replay::ReplayMemory;

#[inline]
pub fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Eight-lane dot product; the independent accumulators let the compiler
/// vectorize without reassociating a single running sum.
#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Affine layer `y = W x + b`, `W` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![T::zero(); inputs * outputs], bias: vec![T::zero(); outputs] }
    }

    /// Weights and biases uniform in `±1/sqrt(inputs)`.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = || T::of(rng.gen_range(-bound..bound));
        let weights = (0..inputs * outputs).map(|_| draw()).collect();
        let bias = (0..outputs).map(|_| draw()).collect();
        Self { inputs, outputs, weights, bias }
    }

    pub fn row(&self, o: usize) -> &[T] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn apply(&self, x: &[T], out: &mut Vec<T>) {
        out.clear();
        out.extend((0..self.outputs).map(|o| self.bias[o] + dot(self.row(o), x)));
    }
}

/// Post-activation outputs of every layer for one input, kept for backprop.
#[derive(Debug, Clone)]
pub struct Activations<T> {
    /// `layers[0]` is the input, `layers[L]` the (linear) network output.
    pub layers: Vec<Vec<T>>,
}

impl<T> Activations<T> {
    pub fn output(&self) -> &[T] {
        self.layers.last().expect("at least the input layer")
    }
}

/// ReLU hidden layers, linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Mlp<T> {
    /// `sizes = [input, hidden.., output]`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self { layers: sizes.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect() })
    }

    pub fn from_layers(layers: Vec<Dense<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Shape { expected: l.inputs * l.outputs, actual: l.weights.len() });
            }
        }
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::Shape { expected: w[0].outputs, actual: w[1].inputs });
            }
        }
        Ok(Self { layers })
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_size() {
            return Err(Error::Shape { expected: self.input_size(), actual: x.len() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.forward_cached(x)?.layers.pop().unwrap_or_default())
    }

    pub fn forward_cached(&self, x: &[T]) -> Result<Activations<T>> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut layers = Vec::with_capacity(self.layers.len() + 1);
        layers.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.apply(layers.last().unwrap(), &mut out);
            if i < last {
                out.iter_mut().for_each(|v| *v = relu(*v));
            }
            layers.push(out);
        }
        Ok(Activations { layers })
    }

    /// Accumulates into `grads` the parameter gradient for one input given
    /// `grad_out = dL/d(output)`.
    pub fn backward(&self, acts: &Activations<T>, grad_out: &[T], grads: &mut Gradients<T>) {
        let mut delta = grad_out.to_vec();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts.layers[li];
            let g = &mut grads.layers[li];
            let mut dx = if li > 0 { vec![T::zero(); layer.inputs] } else { Vec::new() };
            for (o, &d) in delta.iter().enumerate() {
                if d == T::zero() {
                    continue;
                }
                g.bias[o] += d;
                axpy(d, input, &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs]);
                if li > 0 {
                    axpy(d, layer.row(o), &mut dx);
                }
            }
            if li == 0 {
                break;
            }
            // ReLU subgradient: zero wherever the unit was not strictly active.
            for (v, a) in dx.iter_mut().zip(input) {
                if *a <= T::zero() {
                    *v = T::zero();
                }
            }
            delta = dx;
        }
    }

    /// Checkpoint record with parameters widened to `f64`.
    pub fn to_record(&self) -> MlpRecord {
        MlpRecord {
            format: MLP_FORMAT.into(),
            version: MLP_VERSION,
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: l.weights.iter().map(|v| v.as_f64()).collect(),
                    bias: l.bias.iter().map(|v| v.as_f64()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_record(record: &MlpRecord) -> Result<Self> {
        if record.format != MLP_FORMAT || record.version != MLP_VERSION {
            return Err(Error::Checkpoint(format!(
                "expected {MLP_FORMAT} v{MLP_VERSION}, got {} v{}",
                record.format, record.version
            )));
        }
        let layers = record
            .layers
            .iter()
            .map(|l| Dense {
                inputs: l.inputs,
                outputs: l.outputs,
                weights: l.weights.iter().map(|v| T::of(*v)).collect(),
                bias: l.bias.iter().map(|v| T::of(*v)).collect(),
            })
            .collect();
        Self::from_layers(layers).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, &self.to_record())?;
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let record: MlpRecord = serde_json::from_reader(r)?;
        Self::from_record(&record)
    }
}

pub const MLP_FORMAT: &str = "noma-urllc-mlp";
pub const MLP_VERSION: u32 = 1;

/// JSON weight checkpoint: `{format, version, layers: [{inputs, outputs,
/// weights (row-major, outputs x inputs), bias}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpRecord {
    pub format: String,
    pub version: u32,
    pub layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Parameter-shaped buffer for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &Mlp<T>) -> Self {
        Self { layers: net.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn max_abs(&self) -> T {
        self.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Mean squared error between predictions and targets.
pub fn mse_loss<T: Scalar>(predicted: &[T], targets: &[T]) -> Result<T> {
    if predicted.is_empty() {
        return Err(Error::Domain("mse_loss of an empty batch".into()));
    }
    if predicted.len() != targets.len() {
        return Err(Error::Shape { expected: predicted.len(), actual: targets.len() });
    }
    let sum: T = predicted.iter().zip(targets).map(|(p, t)| (*p - *t) * (*p - *t)).sum();
    Ok(sum / T::of_usize(predicted.len()))
}

/// Regression target `r + gamma max_a Q_target(s', a)`.
pub fn dqn_target<T: Scalar>(reward: T, gamma: T, target: &Mlp<T>, next_state: &[T]) -> Result<T> {
    let q = target.forward(next_state)?;
    let best = q.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(reward + gamma * best)
}

/// Frozen copy of the primary network.
pub fn sync_target<T: Scalar>(primary: &Mlp<T>) -> Mlp<T> {
    primary.clone()
}

/// Loss and exact gradient of the batch MSE taken at each sample's action.
///
/// Samples with bit-identical inputs share one forward/backward pass; the
/// per-sample output gradients are summed first, which is exact because the
/// loss is a sum over samples.
pub fn backprop<T: Scalar>(net: &Mlp<T>, inputs: &[&[T]], actions: &[usize], targets: &[T]) -> Result<(T, Gradients<T>)> {
    let b = inputs.len();
    if b == 0 {
        return Err(Error::Domain("backprop on an empty batch".into()));
    }
    if actions.len() != b || targets.len() != b {
        return Err(Error::Shape { expected: b, actual: actions.len().min(targets.len()) });
    }
    let n_out = net.output_size();
    let mut groups: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut order: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, x) in inputs.iter().enumerate() {
        if let Some(&a) = actions.get(i) {
            if a >= n_out {
                return Err(Error::Shape { expected: n_out, actual: a + 1 });
            }
        }
        let key: Vec<u64> = x.iter().map(|v| v.as_f64().to_bits()).collect();
        let g = *groups.entry(key).or_insert_with(|| {
            order.push((i, Vec::new()));
            order.len() - 1
        });
        order[g].1.push(i);
    }

    let scale = T::of(2.0) / T::of_usize(b);
    let mut grads = Gradients::zeros_like(net);
    let mut sq = T::zero();
    for (first, members) in &order {
        let acts = net.forward_cached(inputs[*first])?;
        let out = acts.output();
        let mut grad_out = vec![T::zero(); n_out];
        for &i in members {
            let err = out[actions[i]] - targets[i];
            sq += err * err;
            grad_out[actions[i]] += scale * err;
        }
        net.backward(&acts, &grad_out, &mut grads);
    }
    Ok((sq / T::of_usize(b), grads))
}
