//! Dense feed-forward networks `x -> act(W x + b)` trained by mini-batch SGD
//! on mean squared error.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::{relu, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => relu(z),
            Activation::Identity => z,
        }
    }

    /// Derivative with the convention `ReLU'(0) = 0`.
    pub fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu if z > T::zero() => T::one(),
            Activation::Relu => T::zero(),
            Activation::Identity => T::one(),
        }
    }
}

/// `rows x cols` weights stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer<T> {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(rows: usize, cols: usize, activation: Activation) -> Self {
        Self {
            rows,
            cols,
            weights: vec![T::zero(); rows * cols],
            bias: vec![T::zero(); rows],
            activation,
        }
    }

    pub fn new(rows: usize, cols: usize, weights: Vec<T>, bias: Vec<T>, activation: Activation) -> Result<Self> {
        let layer = Self {
            rows,
            cols,
            weights,
            bias,
            activation,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn identity(width: usize, activation: Activation) -> Self {
        let mut layer = Self::zeros(width, width, activation);
        for i in 0..width {
            layer.weights[i * width + i] = T::one();
        }
        layer
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidNetwork("layer with zero width".into()));
        }
        if self.weights.len() != self.rows * self.cols {
            return Err(Error::InvalidNetwork(format!(
                "weights hold {} entries for a {}x{} layer",
                self.weights.len(),
                self.rows,
                self.cols
            )));
        }
        if self.bias.len() != self.rows {
            return Err(Error::InvalidNetwork(format!(
                "bias length {} differs from {} rows",
                self.bias.len(),
                self.rows
            )));
        }
        if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidNetwork("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn weight(&self, r: usize, c: usize) -> T {
        self.weights[r * self.cols + c]
    }

    pub fn weight_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.weights[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.weights[r * self.cols..(r + 1) * self.cols]
    }

    /// `W x + b` into `z`, then the activation into `a`.
    fn forward_into(&self, x: &[T], z: &mut [T], a: &mut [T]) {
        for r in 0..self.rows {
            let s = self.row(r).iter().zip(x).fold(self.bias[r], |acc, (&w, &v)| acc + w * v);
            z[r] = s;
            a[r] = self.activation.apply(s);
        }
    }

    pub fn cast<U: Scalar>(&self) -> Layer<U> {
        Layer {
            rows: self.rows,
            cols: self.cols,
            weights: self.weights.iter().map(|&v| U::lit(v.as_f64())).collect(),
            bias: self.bias.iter().map(|&v| U::lit(v.as_f64())).collect(),
            activation: self.activation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseNetwork<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> DenseNetwork<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        let net = Self { layers };
        net.validate()?;
        Ok(net)
    }

    /// Layers chain, every layer is well formed and the head is linear.
    pub fn validate(&self) -> Result<()> {
        let last = self
            .layers
            .last()
            .ok_or_else(|| Error::InvalidNetwork("network has no layers".into()))?;
        for (k, layer) in self.layers.iter().enumerate() {
            layer
                .validate()
                .map_err(|e| Error::InvalidNetwork(format!("layer {k}: {e}")))?;
            if k > 0 && layer.cols != self.layers[k - 1].rows {
                return Err(Error::InvalidNetwork(format!(
                    "layer {k} expects {} inputs but layer {} produces {}",
                    layer.cols,
                    k - 1,
                    self.layers[k - 1].rows
                )));
            }
        }
        if last.activation != Activation::Identity {
            return Err(Error::InvalidNetwork("output layer must be linear".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows
    }

    /// Number of affine layers.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `[a_1, ..., a_l]`: input width followed by every layer's output width.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.rows))
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[T]) -> Vec<T> {
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let mut z = vec![T::zero(); layer.rows];
            let mut a = vec![T::zero(); layer.rows];
            layer.forward_into(&cur, &mut z, &mut a);
            cur = a;
        }
        cur
    }

    /// First output for every row of `data`.
    pub fn predict(&self, data: &Dataset<T>) -> Result<Vec<T>> {
        if data.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: data.dim(),
            });
        }
        let mut ws = Workspace::new(self);
        Ok(data
            .rows()
            .map(|x| {
                ws.forward(self, x);
                ws.output()[0]
            })
            .collect())
    }

    /// Mean squared error against the scalar targets of `data`.
    pub fn mse(&self, data: &Dataset<T>) -> Result<T> {
        if self.output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: self.output_dim(),
            });
        }
        let pred = self.predict(data)?;
        mse_loss_scalar(&pred, data.targets())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(s)?;
        net.validate()?;
        Ok(net)
    }

    pub fn cast<U: Scalar>(&self) -> DenseNetwork<U> {
        DenseNetwork {
            layers: self.layers.iter().map(Layer::cast).collect(),
        }
    }

    fn check_dims(&self, x: &[T], y: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        if y.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                found: y.len(),
            });
        }
        Ok(())
    }
}

/// Mean over samples of the squared error averaged over outputs.
pub fn mse_loss<T: Scalar>(predictions: &[Vec<T>], targets: &[Vec<T>]) -> Result<T> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: predictions.len(),
            found: targets.len(),
        });
    }
    let mut total = T::zero();
    for (p, y) in predictions.iter().zip(targets) {
        if p.len() != y.len() || p.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: y.len(),
            });
        }
        let se: T = p.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
        total += se / T::lit(p.len() as f64);
    }
    Ok(total / T::lit(predictions.len() as f64))
}

pub(crate) fn mse_loss_scalar<T: Scalar>(predictions: &[T], targets: &[T]) -> Result<T> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: predictions.len(),
            found: targets.len(),
        });
    }
    let se: T = predictions.iter().zip(targets).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(se / T::lit(predictions.len() as f64))
}

/// Per-layer gradients shaped like the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &DenseNetwork<T>) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![T::zero(); l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![T::zero(); l.bias.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        for v in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            v.iter_mut().for_each(|g| *g = T::zero());
        }
    }

    pub fn max_abs(&self) -> T {
        self.weights
            .iter()
            .chain(&self.bias)
            .flatten()
            .fold(T::zero(), |m, &g| m.max(g.abs()))
    }
}

/// Activations and backpropagated errors for one sample.
struct Workspace<T> {
    inputs: Vec<T>,
    pre: Vec<Vec<T>>,
    post: Vec<Vec<T>>,
    delta: Vec<Vec<T>>,
}

impl<T: Scalar> Workspace<T> {
    fn new(net: &DenseNetwork<T>) -> Self {
        let widths: Vec<usize> = net.layers.iter().map(|l| l.rows).collect();
        Self {
            inputs: vec![T::zero(); net.input_dim()],
            pre: widths.iter().map(|&w| vec![T::zero(); w]).collect(),
            post: widths.iter().map(|&w| vec![T::zero(); w]).collect(),
            delta: widths.iter().map(|&w| vec![T::zero(); w]).collect(),
        }
    }

    fn forward(&mut self, net: &DenseNetwork<T>, x: &[T]) {
        self.inputs.copy_from_slice(x);
        for (k, layer) in net.layers.iter().enumerate() {
            let (done, rest) = self.post.split_at_mut(k);
            let input = if k == 0 { &self.inputs } else { &done[k - 1] };
            layer.forward_into(input, &mut self.pre[k], &mut rest[0]);
        }
    }

    fn output(&self) -> &[T] {
        &self.post[self.post.len() - 1]
    }

    /// Adds `scale * d(||out - y||^2)/d(params)` into `grads`.
    fn backward(&mut self, net: &DenseNetwork<T>, y: &[T], scale: T, grads: &mut Gradients<T>) {
        let last = net.layers.len() - 1;
        for (k, layer) in net.layers.iter().enumerate().rev() {
            if k == last {
                for r in 0..layer.rows {
                    let g = T::lit(2.0) * (self.post[k][r] - y[r]) * scale;
                    self.delta[k][r] = g * layer.activation.derivative(self.pre[k][r]);
                }
            } else {
                let (head, tail) = self.delta.split_at_mut(k + 1);
                let above = &net.layers[k + 1];
                let next = &tail[0];
                for r in 0..layer.rows {
                    let mut s = T::zero();
                    for (q, &dq) in next.iter().enumerate() {
                        s += above.weights[q * above.cols + r] * dq;
                    }
                    head[k][r] = s * layer.activation.derivative(self.pre[k][r]);
                }
            }
            let input = if k == 0 { &self.inputs } else { &self.post[k - 1] };
            let gw = &mut grads.weights[k];
            let gb = &mut grads.bias[k];
            for r in 0..layer.rows {
                let dr = self.delta[k][r];
                if dr == T::zero() {
                    continue;
                }
                gb[r] += dr;
                for (g, &v) in gw[r * layer.cols..(r + 1) * layer.cols].iter_mut().zip(input) {
                    *g += dr * v;
                }
            }
        }
    }
}

/// Exact gradients of the batch MSE (as in [`mse_loss`]) by backpropagation.
pub fn gradients<T: Scalar>(net: &DenseNetwork<T>, inputs: &[Vec<T>], targets: &[Vec<T>]) -> Result<Gradients<T>> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            found: targets.len(),
        });
    }
    let mut ws = Workspace::new(net);
    let mut grads = Gradients::zeros_like(net);
    let scale = T::one() / T::lit((inputs.len() * net.output_dim()) as f64);
    for (x, y) in inputs.iter().zip(targets) {
        net.check_dims(x, y)?;
        ws.forward(net, x);
        ws.backward(net, y, scale, &mut grads);
    }
    Ok(grads)
}

/// `param -= lr * grad` for every weight and bias.
pub fn sgd_step<T: Scalar>(net: &mut DenseNetwork<T>, grads: &Gradients<T>, lr: T) -> Result<()> {
    let shapes_match = grads.weights.len() == net.layers.len()
        && net
            .layers
            .iter()
            .zip(grads.weights.iter().zip(&grads.bias))
            .all(|(l, (w, b))| l.weights.len() == w.len() && l.bias.len() == b.len());
    if !shapes_match {
        return Err(Error::InvalidNetwork("gradient shapes differ from the network".into()));
    }
    for (layer, (gw, gb)) in net.layers.iter_mut().zip(grads.weights.iter().zip(&grads.bias)) {
        for (p, &g) in layer.weights.iter_mut().zip(gw) {
            *p -= lr * g;
        }
        for (p, &g) in layer.bias.iter_mut().zip(gb) {
            *p -= lr * g;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Reshuffle the sample order every epoch.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 100,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be finite and > 0".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory<T> {
    /// Full training-set MSE after each epoch.
    pub losses: Vec<T>,
    /// Seconds spent on each epoch's parameter updates.
    pub epoch_seconds: Vec<f64>,
    pub total_seconds: f64,
}

impl<T: Scalar> TrainHistory<T> {
    pub fn epochs(&self) -> usize {
        self.losses.len()
    }

    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epoch_seconds.is_empty() {
            0.0
        } else {
            self.epoch_seconds.iter().sum::<f64>() / self.epoch_seconds.len() as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,seconds\n");
        for (e, (l, s)) in self.losses.iter().zip(&self.epoch_seconds).enumerate() {
            out.push_str(&format!("{},{},{}\n", e + 1, l, s));
        }
        out
    }
}

/// Mini-batch SGD that can be paused between epochs and resumed on the same
/// random stream, so checkpointed runs match uninterrupted ones.
pub struct Trainer<T> {
    net: DenseNetwork<T>,
    config: TrainConfig,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    history: TrainHistory<T>,
    workspace: Workspace<T>,
    grads: Gradients<T>,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(net: DenseNetwork<T>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        net.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            workspace: Workspace::new(&net),
            grads: Gradients::zeros_like(&net),
            net,
            config,
            order: Vec::new(),
            history: TrainHistory::default(),
        })
    }

    pub fn network(&self) -> &DenseNetwork<T> {
        &self.net
    }

    pub fn history(&self) -> &TrainHistory<T> {
        &self.history
    }

    pub fn into_parts(self) -> (DenseNetwork<T>, TrainHistory<T>) {
        (self.net, self.history)
    }

    /// Runs `epochs` more passes over `data`.
    pub fn run(&mut self, data: &Dataset<T>, epochs: usize) -> Result<()> {
        if data.dim() != self.net.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.net.input_dim(),
                found: data.dim(),
            });
        }
        if self.net.output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: self.net.output_dim(),
            });
        }
        if data.n_samples() == 0 {
            return Err(Error::EmptyInput);
        }
        if self.order.len() != data.n_samples() {
            self.order = (0..data.n_samples()).collect();
        }
        let lr = T::lit(self.config.learning_rate);
        for _ in 0..epochs {
            let start = Instant::now();
            if self.config.shuffle {
                self.order.shuffle(&mut self.rng);
            }
            for batch in self.order.chunks(self.config.batch_size) {
                self.grads.clear();
                let scale = T::one() / T::lit(batch.len() as f64);
                for &i in batch {
                    self.workspace.forward(&self.net, data.row(i));
                    let y = [data.target(i)];
                    self.workspace.backward(&self.net, &y, scale, &mut self.grads);
                }
                sgd_step(&mut self.net, &self.grads, lr)?;
            }
            let seconds = start.elapsed().as_secs_f64();

            let loss = self.net.mse(data)?;
            let epoch = self.history.epochs() + 1;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: loss.as_f64(),
                });
            }
            self.history.losses.push(loss);
            self.history.epoch_seconds.push(seconds);
            self.history.total_seconds += seconds;
        }
        Ok(())
    }
}

/// Trains a copy of `net` for `config.epochs` epochs.
pub fn train<T: Scalar>(
    net: &DenseNetwork<T>,
    data: &Dataset<T>,
    config: &TrainConfig,
) -> Result<(DenseNetwork<T>, TrainHistory<T>)> {
    let mut trainer = Trainer::new(net.clone(), config.clone())?;
    trainer.run(data, config.epochs)?;
    Ok(trainer.into_parts())
}

/// He-style uniform initialization: weights `U(-s, s)` with
/// `s = sqrt(6 / a_in)`, i.e. standard deviation `sqrt(2 / a_in)`; zero biases.
/// Hidden layers are ReLU and the last layer is linear.
pub fn random_init<T: Scalar>(widths: &[usize], seed: u64) -> Result<DenseNetwork<T>> {
    if widths.len() < 2 {
        return Err(Error::InvalidNetwork("need at least input and output widths".into()));
    }
    if widths.contains(&0) {
        return Err(Error::InvalidNetwork("widths must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_layers = widths.len() - 1;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let activation = if k + 1 == n_layers {
                Activation::Identity
            } else {
                Activation::Relu
            };
            let mut layer = Layer::zeros(fan_out, fan_in, activation);
            for v in &mut layer.weights {
                *v = T::lit(rng.gen_range(-bound..bound));
            }
            layer
        })
        .collect();
    DenseNetwork::new(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single(w: f64, b: f64, act: Activation) -> Layer<f64> {
        Layer::new(1, 1, vec![w], vec![b], act).unwrap()
    }

    #[test]
    fn identity_network_passes_input() {
        let net = DenseNetwork::new(vec![Layer::<f64>::identity(3, Activation::Identity)]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn single_ramp() {
        let net = DenseNetwork::new(vec![
            single(1.0, -0.5, Activation::Relu),
            single(1.0, 0.0, Activation::Identity),
        ])
        .unwrap();
        assert_eq!(net.forward(&[1.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = DenseNetwork::new(vec![
            Layer::<f64>::zeros(4, 2, Activation::Relu),
            Layer::zeros(1, 4, Activation::Identity),
        ])
        .unwrap();
        assert_eq!(net.forward(&[3.0, -7.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DenseNetwork::new(vec![
            Layer::<f64>::zeros(4, 2, Activation::Relu),
            Layer::zeros(1, 3, Activation::Identity),
        ])
        .is_err());
        assert!(DenseNetwork::new(vec![Layer::<f64>::zeros(1, 2, Activation::Relu)]).is_err());
        assert!(Layer::new(2, 2, vec![1.0; 3], vec![0.0; 2], Activation::Relu).is_err());
        let net = DenseNetwork::new(vec![Layer::<f64>::zeros(1, 2, Activation::Identity)]).unwrap();
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn loss_examples() {
        assert_eq!(mse_loss(&[vec![1.0]], &[vec![1.0]]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[vec![0.0]], &[vec![2.0]]).unwrap(), 4.0);
        assert_eq!(mse_loss(&[vec![0.0], vec![0.0]], &[vec![1.0], vec![-1.0]]).unwrap(), 1.0);
        assert!(mse_loss::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn linear_layer_gradient_closed_form() {
        let net = DenseNetwork::new(vec![
            Layer::new(2, 3, vec![0.1, -0.2, 0.3, 0.5, 0.0, -1.0], vec![0.2, -0.1], Activation::Identity).unwrap(),
        ])
        .unwrap();
        let x = vec![1.0, 2.0, -1.0];
        let y = vec![0.5, 0.25];
        let out = net.forward(&x).unwrap();
        let g = gradients(&net, &[x.clone()], &[y.clone()]).unwrap();
        for r in 0..2 {
            let e = 2.0 * (out[r] - y[r]) / 2.0;
            assert_abs_diff_eq!(g.bias[0][r], e, epsilon = 1e-15);
            for c in 0..3 {
                assert_abs_diff_eq!(g.weights[0][r * 3 + c], e * x[c], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn zero_error_zero_gradient() {
        let net = random_init::<f64>(&[2, 3, 1], 4).unwrap();
        let x = vec![0.3, 0.9];
        let y = net.forward(&x).unwrap();
        assert_eq!(gradients(&net, &[x], &[y]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn sgd_arithmetic() {
        let mut net = DenseNetwork::new(vec![single(1.0, 0.0, Activation::Identity)]).unwrap();
        let g = Gradients {
            weights: vec![vec![2.0]],
            bias: vec![vec![0.0]],
        };
        sgd_step(&mut net, &g, 0.1).unwrap();
        assert_abs_diff_eq!(net.layers[0].weights[0], 0.8, epsilon = 1e-15);
        let before = net.clone();
        sgd_step(&mut net, &g, 0.0).unwrap();
        assert_eq!(net, before);
        sgd_step(&mut net, &Gradients::zeros_like(&before), 0.5).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn init_is_seeded_and_bias_free() {
        let a = random_init::<f64>(&[3, 5, 1], 11).unwrap();
        assert_eq!(a, random_init(&[3, 5, 1], 11).unwrap());
        assert_ne!(a, random_init(&[3, 5, 1], 12).unwrap());
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(a.layers[0].activation, Activation::Relu);
        assert_eq!(a.layers[1].activation, Activation::Identity);
    }

    #[test]
    fn zero_epochs_leaves_network() {
        let data = Dataset::from_rows(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0]).unwrap();
        let net = random_init::<f64>(&[1, 1], 0).unwrap();
        let (out, hist) = train(
            &net,
            &data,
            &TrainConfig {
                epochs: 0,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert_eq!(out, net);
        assert_eq!(hist.epochs(), 0);
    }

    #[test]
    fn history_csv_layout() {
        let h = TrainHistory {
            losses: vec![0.5f64, 0.25],
            epoch_seconds: vec![0.1, 0.2],
            total_seconds: 0.3,
        };
        assert_eq!(h.to_csv(), "epoch,train_loss,seconds\n1,0.5,0.1\n2,0.25,0.2\n");
    }
}
