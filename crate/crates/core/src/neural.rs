//! Dense feedforward networks trained by plain mini-batch gradient descent.
//!
//! [`Network`] is the shared machinery (forward pass with cached
//! activations, backpropagation, parameter updates). [`MlpModel`] puts a
//! single sigmoid unit on top and trains with binary cross-entropy;
//! [`AutoencoderModel`] mirrors an encoder into a decoder and trains on mean
//! squared reconstruction error.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::{sigmoid, Label, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative at pre-activation `z`, given `a = apply(z)`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One affine map followed by an elementwise activation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    /// `d_out x d_in`.
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl LayerParams {
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::DimensionMismatch { expected: weights.rows(), actual: biases.len() });
        }
        Ok(LayerParams { weights, biases, activation })
    }

    /// Uniform in `±sqrt(6 / (d_in + d_out))`, biases zero.
    pub fn init<R: Rng>(d_in: usize, d_out: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (d_in + d_out) as f64).sqrt();
        let data = (0..d_in * d_out).map(|_| rng.gen_range(-limit..=limit)).collect();
        LayerParams {
            weights: Matrix::from_vec(d_out, d_in, data).expect("sized"),
            biases: vec![0.0; d_out],
            activation,
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut w = Matrix::zeros(d, d);
        for i in 0..d {
            w.row_mut(i)[i] = 1.0;
        }
        LayerParams { weights: w, biases: vec![0.0; d], activation: Activation::Identity }
    }

    pub fn d_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn d_out(&self) -> usize {
        self.weights.rows()
    }

    fn num_params(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.biases.len()
    }
}

/// Activations and pre-activations recorded by a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l + 1]` is layer `l`'s output.
    pub activations: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("input is always cached")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    /// Mean over the batch of `-(y ln p + (1 - y) ln(1 - p))`. Requires a
    /// sigmoid output layer.
    BinaryCrossEntropy,
    /// Mean over batch and output units of `(y_hat - y)^2`.
    MeanSquaredError,
}

/// Gradients for one layer, laid out like [`LayerParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    /// Flattened in parameter order: per layer, weights row-major then biases.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(&g.biases).copied())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<LayerParams>,
}

impl Network {
    pub fn new(layers: Vec<LayerParams>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[1].d_in() != pair[0].d_out() {
                return Err(Error::DimensionMismatch { expected: pair[0].d_out(), actual: pair[1].d_in() });
            }
        }
        Ok(Network { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].d_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").d_out()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(LayerParams::num_params).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), actual: x.len() });
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        for layer in &self.layers {
            let input = activations.last().expect("non-empty");
            let z: Vec<f64> = layer
                .weights
                .iter_rows()
                .zip(&layer.biases)
                .map(|(w, b)| w.iter().zip(input).map(|(w, a)| w * a).sum::<f64>() + b)
                .collect();
            activations.push(z.iter().map(|&z| layer.activation.apply(z)).collect());
            pre_activations.push(z);
        }
        Ok(ForwardCache { activations, pre_activations })
    }

    /// Output only, without keeping the cache.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = self.forward(x)?;
        Ok(cache.activations.pop().expect("non-empty"))
    }

    fn check_batch(&self, x: &Matrix, targets: &Matrix, loss: Loss) -> Result<()> {
        if x.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        if x.rows() != targets.rows() {
            return Err(Error::DimensionMismatch { expected: x.rows(), actual: targets.rows() });
        }
        if targets.cols() != self.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), actual: targets.cols() });
        }
        if loss == Loss::BinaryCrossEntropy
            && self.layers.last().expect("non-empty").activation != Activation::Sigmoid
        {
            return Err(Error::InvalidConfig("cross-entropy loss needs a sigmoid output layer".into()));
        }
        Ok(())
    }

    /// Mean batch loss.
    pub fn loss(&self, x: &Matrix, targets: &Matrix, loss: Loss) -> Result<f64> {
        self.check_batch(x, targets, loss)?;
        let mut total = 0.0;
        for (xi, yi) in x.iter_rows().zip(targets.iter_rows()) {
            let cache = self.forward(xi)?;
            total += match loss {
                Loss::BinaryCrossEntropy => {
                    let z = cache.pre_activations.last().expect("non-empty");
                    z.iter().zip(yi).map(|(&z, &y)| y * softplus(-z) + (1.0 - y) * softplus(z)).sum::<f64>()
                }
                Loss::MeanSquaredError => {
                    cache.output().iter().zip(yi).map(|(p, y)| (p - y).powi(2)).sum::<f64>()
                        / yi.len() as f64
                }
            };
        }
        Ok(total / x.rows() as f64)
    }

    /// Gradient of the mean batch loss with respect to every weight and bias.
    pub fn gradients(&self, x: &Matrix, targets: &Matrix, loss: Loss) -> Result<Gradients> {
        self.check_batch(x, targets, loss)?;
        let batch = x.rows() as f64;
        let mut grads: Vec<LayerGradient> = self
            .layers
            .iter()
            .map(|l| LayerGradient { weights: vec![0.0; l.d_in() * l.d_out()], biases: vec![0.0; l.d_out()] })
            .collect();

        for (xi, yi) in x.iter_rows().zip(targets.iter_rows()) {
            let cache = self.forward(xi)?;
            let last = self.layers.len() - 1;
            let out = cache.output();
            let mut delta: Vec<f64> = match loss {
                // sigmoid + cross-entropy collapses to (p - y) at the pre-activation
                Loss::BinaryCrossEntropy => out.iter().zip(yi).map(|(p, y)| (p - y) / batch).collect(),
                Loss::MeanSquaredError => {
                    let scale = 2.0 / (batch * yi.len() as f64);
                    let act = self.layers[last].activation;
                    out.iter()
                        .zip(yi)
                        .zip(&cache.pre_activations[last])
                        .map(|((a, y), &z)| scale * (a - y) * act.derivative(z, *a))
                        .collect()
                }
            };

            for l in (0..=last).rev() {
                let input = &cache.activations[l];
                let g = &mut grads[l];
                let d_in = input.len();
                for (o, &d) in delta.iter().enumerate() {
                    g.biases[o] += d;
                    for (gw, a) in g.weights[o * d_in..(o + 1) * d_in].iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if l > 0 {
                    let layer = &self.layers[l];
                    let below = self.layers[l - 1].activation;
                    delta = (0..d_in)
                        .map(|i| {
                            let back: f64 = delta.iter().enumerate().map(|(o, d)| d * layer.weights.get(o, i)).sum();
                            back * below.derivative(cache.pre_activations[l - 1][i], input[i])
                        })
                        .collect();
                }
            }
        }
        Ok(Gradients { layers: grads })
    }

    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (i, gw) in g.weights.iter().enumerate() {
                let (r, c) = (i / layer.d_in(), i % layer.d_in());
                layer.weights.row_mut(r)[c] -= learning_rate * gw;
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= learning_rate * gb;
            }
        }
    }

    /// Parameters in [`Gradients::flatten`] order.
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(&l.biases).copied())
            .collect()
    }

    /// Overwrites parameter `index` (in [`Network::flat_params`] order).
    pub fn set_param(&mut self, mut index: usize, value: f64) {
        for layer in &mut self.layers {
            let nw = layer.d_in() * layer.d_out();
            if index < nw {
                let (r, c) = (index / layer.d_in(), index % layer.d_in());
                layer.weights.row_mut(r)[c] = value;
                return;
            }
            index -= nw;
            if index < layer.biases.len() {
                layer.biases[index] = value;
                return;
            }
            index -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    fn run_sgd(&mut self, x: &Matrix, targets: &Matrix, loss: Loss, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<()> {
        let batch = cfg.batch_size.min(x.rows()).max(1);
        let mut order: Vec<usize> = (0..x.rows()).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(batch) {
                let bx = x.select_rows(chunk);
                let by = targets.select_rows(chunk);
                let g = self.gradients(&bx, &by, loss)?;
                self.apply_gradients(&g, cfg.learning_rate);
            }
        }
        Ok(())
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Clamped to the training-set size.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_sizes: Vec<usize>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn mlp_default() -> Self {
        TrainConfig { epochs: 50, batch_size: 32, learning_rate: 0.05, hidden_sizes: vec![32], seed: 42 }
    }

    /// `hidden_sizes` lists the encoder widths; the last one is the latent
    /// width.
    pub fn autoencoder_default() -> Self {
        TrainConfig { epochs: 30, batch_size: 16, learning_rate: 0.5, hidden_sizes: vec![8], seed: 42 }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::InvalidConfig("hidden layer widths must be positive".into()));
        }
        Ok(())
    }
}

/// Binary classifier: relu hidden layers, one sigmoid output unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub network: Network,
}

impl MlpModel {
    pub fn new(network: Network) -> Result<Self> {
        let last = network.layers.last().expect("non-empty");
        if last.d_out() != 1 || last.activation != Activation::Sigmoid {
            return Err(Error::InvalidConfig("MLP head must be a single sigmoid unit".into()));
        }
        Ok(MlpModel { network })
    }

    /// Seeded initialization; what `train_mlp` returns for zero epochs.
    pub fn init(input_dim: usize, hidden_sizes: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(input_dim, hidden_sizes, &mut rng)
    }

    fn init_with(input_dim: usize, hidden_sizes: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut layers = Vec::new();
        let mut d_in = input_dim;
        for &h in hidden_sizes {
            layers.push(LayerParams::init(d_in, h, Activation::Relu, rng));
            d_in = h;
        }
        layers.push(LayerParams::init(d_in, 1, Activation::Sigmoid, rng));
        MlpModel { network: Network { layers } }
    }

    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache> {
        self.network.forward(x)
    }

    /// Probability of the malicious class.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(self.network.predict(x)?[0])
    }

    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        let p = self.predict_proba(x)?;
        Ok((Label::from(p >= 0.5), p))
    }
}

pub fn predict_proba_mlp(model: &MlpModel, x: &[f64]) -> Result<f64> {
    model.predict_proba(x)
}

fn label_targets(labels: &[Label]) -> Matrix {
    Matrix::from_vec(labels.len(), 1, labels.iter().map(|&l| f64::from(l)).collect()).expect("sized")
}

pub fn train_mlp(train: &Dataset, cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClassTrainingSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::init_with(train.dim(), &cfg.hidden_sizes, &mut rng);
    let targets = label_targets(&train.labels);
    model.network.run_sgd(&train.features, &targets, Loss::BinaryCrossEntropy, cfg, &mut rng)?;
    Ok(model)
}

/// Encoder and mirrored decoder. Encoder layers are sigmoid; decoder hidden
/// layers are sigmoid and its output layer is identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    pub encoder: Network,
    pub decoder: Network,
}

impl AutoencoderModel {
    pub fn new(encoder: Network, decoder: Network) -> Result<Self> {
        if decoder.input_dim() != encoder.output_dim() {
            return Err(Error::DimensionMismatch { expected: encoder.output_dim(), actual: decoder.input_dim() });
        }
        if decoder.output_dim() != encoder.input_dim() {
            return Err(Error::DimensionMismatch { expected: encoder.input_dim(), actual: decoder.output_dim() });
        }
        Ok(AutoencoderModel { encoder, decoder })
    }

    /// Linear identity encoder and decoder of width `d`.
    pub fn identity(d: usize) -> Self {
        AutoencoderModel {
            encoder: Network { layers: vec![LayerParams::identity(d)] },
            decoder: Network { layers: vec![LayerParams::identity(d)] },
        }
    }

    pub fn init(input_dim: usize, encoder_sizes: &[usize], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(input_dim, encoder_sizes, &mut rng)
    }

    fn init_with(input_dim: usize, encoder_sizes: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        let latent = *encoder_sizes
            .last()
            .ok_or_else(|| Error::InvalidConfig("autoencoder needs at least one hidden width".into()))?;
        if latent > input_dim {
            return Err(Error::LatentTooLarge { latent, input: input_dim });
        }
        let mut widths = vec![input_dim];
        widths.extend_from_slice(encoder_sizes);
        let encoder = widths
            .windows(2)
            .map(|w| LayerParams::init(w[0], w[1], Activation::Sigmoid, rng))
            .collect();
        let n = widths.len();
        let decoder = (1..n)
            .rev()
            .map(|i| {
                let act = if i == 1 { Activation::Identity } else { Activation::Sigmoid };
                LayerParams::init(widths[i], widths[i - 1], act, rng)
            })
            .collect();
        Ok(AutoencoderModel { encoder: Network { layers: encoder }, decoder: Network { layers: decoder } })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    /// Encoder followed by decoder as a single network.
    pub fn stacked(&self) -> Network {
        let mut layers = self.encoder.layers.clone();
        layers.extend(self.decoder.layers.iter().cloned());
        Network { layers }
    }

    fn from_stacked(net: Network, encoder_depth: usize) -> Self {
        let mut layers = net.layers;
        let decoder = layers.split_off(encoder_depth);
        AutoencoderModel { encoder: Network { layers }, decoder: Network { layers: decoder } }
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache> {
        self.stacked().forward(x)
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.encoder.predict(x)
    }

    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.decoder.predict(&self.encode(x)?)
    }

    /// Latent representation of every row.
    pub fn encode_matrix(&self, m: &Matrix) -> Result<Matrix> {
        let rows = m.iter_rows().map(|r| self.encode(r)).collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(self.latent_dim(), rows)
    }

    /// Mean over rows and columns of the squared reconstruction error.
    pub fn reconstruction_mse(&self, m: &Matrix) -> Result<f64> {
        self.stacked().loss(m, m, Loss::MeanSquaredError)
    }
}

pub fn encode(ae: &AutoencoderModel, x: &[f64]) -> Result<Vec<f64>> {
    ae.encode(x)
}

pub fn train_autoencoder(features: &Matrix, cfg: &TrainConfig) -> Result<AutoencoderModel> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = AutoencoderModel::init_with(features.cols(), &cfg.hidden_sizes, &mut rng)?;
    let depth = init.encoder.layers.len();
    let mut net = init.stacked();
    net.run_sgd(features, features, Loss::MeanSquaredError, cfg, &mut rng)?;
    Ok(AutoencoderModel::from_stacked(net, depth))
}
