//! Full-batch gradient descent with cross-validation early stopping.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Target};
use crate::error::{Error, Result};
use crate::network::{Activation, InputEncoding, Layer, Matrix, Network, SkipConnection, Task};

/// Losses are summed over output units and averaged over the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    CrossEntropy,
    MeanSquareError,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::CrossEntropy => "cross_entropy",
            Loss::MeanSquareError => "mse",
        }
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross_entropy" | "ce" => Ok(Loss::CrossEntropy),
            "mse" | "mean_square_error" => Ok(Loss::MeanSquareError),
            _ => Err(Error::Config(format!(
                "unknown loss `{s}` (expected cross_entropy or mse)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
}

/// Hidden layers, output activation and skips. Input and output widths come
/// from the training data. Skip indices count layers from 1 with 0 standing
/// for the input, as in [`SkipConnection`].
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySpec {
    pub hidden: Vec<LayerSpec>,
    pub output_activation: Activation,
    pub skips: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub topology: TopologySpec,
    pub loss: Loss,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a new best CV error tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Training loss after each epoch's update.
    pub train_error: Vec<f64>,
    pub cv_error: Vec<f64>,
    pub stopping_epoch: usize,
    pub stop_reason: StopReason,
    /// Epoch whose weights were returned; 0 is the initial network.
    pub best_epoch: usize,
}

impl TrainReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_error,cv_error\n");
        for (i, (t, c)) in self.train_error.iter().zip(&self.cv_error).enumerate() {
            writeln!(out, "{},{t:?},{c:?}", i + 1).expect("writing to a String");
        }
        out
    }
}

/// Outcome of feeding one CV error to [`EarlyStopping`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Improved,
    Waiting,
    Stop,
}

/// Tracks the best CV error seen and how long ago it was.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, cv_error: f64) -> Progress {
        if cv_error < self.best {
            self.best = cv_error;
            self.best_epoch = epoch;
            self.since_best = 0;
            return Progress::Improved;
        }
        self.since_best += 1;
        if self.since_best >= self.patience {
            Progress::Stop
        } else {
            Progress::Waiting
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// An encoded input with its training target vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

/// Encodes `data` for `net`: one-hot targets for multi-output classifiers,
/// the class index (0 or 1) for single-output ones, the raw value for
/// regression.
pub fn encode_examples(net: &Network, data: &Dataset) -> Result<Vec<Example>> {
    let width = net.output_dim();
    data.instances()
        .iter()
        .map(|inst| {
            let target = match (net.task(), inst.target) {
                (Task::Classification { .. }, Target::Label(k)) if width == 1 => vec![k as f64],
                (Task::Classification { .. }, Target::Label(k)) => {
                    (0..width).map(|j| if j == k { 1.0 } else { 0.0 }).collect()
                }
                (Task::Regression { .. }, Target::Real(v)) => vec![v],
                _ => return Err(Error::Config("data target does not match the network task".into())),
            };
            Ok(Example {
                input: net.encode(&inst.values)?,
                target,
            })
        })
        .collect()
}

const PROB_FLOOR: f64 = 1e-15;

fn clamp_prob(y: f64) -> f64 {
    y.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

fn example_loss(loss: Loss, y: &[f64], t: &[f64]) -> f64 {
    match loss {
        Loss::MeanSquareError => y.iter().zip(t).map(|(y, t)| (y - t) * (y - t)).sum(),
        Loss::CrossEntropy if y.len() == 1 => {
            let (p, t) = (clamp_prob(y[0]), t[0]);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        }
        Loss::CrossEntropy => -y.iter().zip(t).map(|(y, t)| t * clamp_prob(*y).ln()).sum::<f64>(),
    }
}

fn loss_derivative(loss: Loss, y: &[f64], t: &[f64]) -> Vec<f64> {
    match loss {
        Loss::MeanSquareError => y.iter().zip(t).map(|(y, t)| 2.0 * (y - t)).collect(),
        Loss::CrossEntropy if y.len() == 1 => {
            let (p, t) = (clamp_prob(y[0]), t[0]);
            vec![(p - t) / (p * (1.0 - p))]
        }
        Loss::CrossEntropy => y.iter().zip(t).map(|(y, t)| -t / clamp_prob(*y)).collect(),
    }
}

/// Mean loss of `net` over `batch`.
pub fn batch_loss(net: &Network, batch: &[Example], loss: Loss) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Data("loss over an empty batch".into()));
    }
    let mut total = 0.0;
    for ex in batch {
        total += example_loss(loss, &net.forward(&ex.input)?, &ex.target);
    }
    Ok(total / batch.len() as f64)
}

/// Derivatives of the mean batch loss, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub skips: Vec<Matrix>,
}

impl Gradient {
    fn zeros_like(net: &Network) -> Self {
        Gradient {
            weights: net
                .layers()
                .iter()
                .map(|l| Matrix::zeros(l.out_dim(), l.in_dim()))
                .collect(),
            biases: net.layers().iter().map(|l| vec![0.0; l.out_dim()]).collect(),
            skips: net
                .skips()
                .iter()
                .map(|s| Matrix::zeros(s.weights.rows(), s.weights.cols()))
                .collect(),
        }
    }

    /// Flattened in the order of [`Network::parameters`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        for s in &self.skips {
            out.extend_from_slice(s.as_slice());
        }
        out
    }

    fn scale(&mut self, k: f64) {
        let all = self
            .weights
            .iter_mut()
            .chain(self.skips.iter_mut())
            .flat_map(|m| m.as_mut_slice().iter_mut())
            .chain(self.biases.iter_mut().flatten());
        for v in all {
            *v *= k;
        }
    }
}

/// Backpropagated gradient of the mean `loss` over `batch`.
pub fn loss_gradient(net: &Network, batch: &[Example], loss: Loss) -> Result<Gradient> {
    if let Some(i) = net.layers().iter().position(|l| l.activation == Activation::Step) {
        return Err(Error::Unsupported(format!(
            "layer {} uses the step activation, which has no gradient",
            i + 1
        )));
    }
    if batch.is_empty() {
        return Err(Error::Data("gradient over an empty batch".into()));
    }
    let mut grad = Gradient::zeros_like(net);
    let depth = net.layers().len();
    for ex in batch {
        let trace = net.trace(&ex.input)?;
        // d loss / d activation, per activation index (0 = input).
        let mut grad_a: Vec<Vec<f64>> = (0..=depth).map(|k| vec![0.0; net.layer_width(k)]).collect();
        grad_a[depth] = loss_derivative(loss, &trace.activations[depth], &ex.target);
        for k in (1..=depth).rev() {
            let layer = &net.layers()[k - 1];
            let delta = layer
                .activation
                .backward(&trace.pre_activations[k - 1], &trace.activations[k], &grad_a[k])?;
            grad.weights[k - 1].outer_acc(&delta, &trace.activations[k - 1]);
            for (b, d) in grad.biases[k - 1].iter_mut().zip(&delta) {
                *b += d;
            }
            let (below, _) = grad_a.split_at_mut(k);
            layer.weights.transpose_mul_acc(&delta, &mut below[k - 1]);
            for (s, skip) in net.skips().iter().enumerate().filter(|(_, s)| s.to == k) {
                grad.skips[s].outer_acc(&delta, &trace.activations[skip.from]);
                skip.weights.transpose_mul_acc(&delta, &mut below[skip.from]);
            }
        }
    }
    grad.scale(1.0 / batch.len() as f64);
    Ok(grad)
}

/// Builds a network shaped by `topology` for `train`, with weights drawn
/// uniformly from [-0.5, 0.5].
pub fn initialize(train: &Dataset, topology: &TopologySpec, seed: u64) -> Result<Network> {
    let schema = train.schema();
    let encoding = InputEncoding::fit(train);
    let input_dim = encoding.width();
    let (task, out_dim) = match schema.class_labels() {
        Some(labels) => {
            let width = if labels.len() == 2 && !topology.output_activation.is_vector() {
                1
            } else {
                labels.len()
            };
            (
                Task::Classification {
                    labels: labels.to_vec(),
                },
                width,
            )
        }
        None => (Task::Regression { binning: None }, 1),
    };
    let mut widths = vec![input_dim];
    widths.extend(topology.hidden.iter().map(|l| l.units));
    widths.push(out_dim);
    let activations = topology
        .hidden
        .iter()
        .map(|l| l.activation)
        .chain([topology.output_activation]);
    let layers = activations
        .enumerate()
        .map(|(i, act)| Layer::new(Matrix::zeros(widths[i + 1], widths[i]), vec![0.0; widths[i + 1]], act))
        .collect();
    let mut skips = Vec::with_capacity(topology.skips.len());
    for &(from, to) in &topology.skips {
        if to >= widths.len() || from >= widths.len() {
            return Err(Error::Config(format!("skip {from} -> {to} names a missing layer")));
        }
        skips.push(SkipConnection {
            from,
            to,
            weights: Matrix::zeros(widths[to], widths[from]),
        });
    }
    let mut net = Network::new(input_dim, layers, skips, task, encoding)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<f64> = (0..net.parameter_count())
        .map(|_| rng.random_range(-0.5..=0.5))
        .collect();
    net.set_parameters(&params)?;
    Ok(net)
}

/// Trains by full-batch gradient descent and returns the snapshot with the
/// lowest CV error (the untrained network counts as epoch 0).
pub fn train(train_set: &Dataset, cv_set: &Dataset, cfg: &TrainConfig) -> Result<(Network, TrainReport)> {
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Config(format!(
            "learning rate must be positive, got {}",
            cfg.learning_rate
        )));
    }
    if train_set.is_empty() || cv_set.is_empty() {
        return Err(Error::Config("training and CV sets must both be non-empty".into()));
    }
    if train_set.schema() != cv_set.schema() {
        return Err(Error::Config("training and CV sets use different schemas".into()));
    }
    if cfg.loss == Loss::CrossEntropy && !train_set.schema().is_classification() {
        return Err(Error::Config("cross_entropy needs a classification target".into()));
    }
    let mut net = initialize(train_set, &cfg.topology, cfg.seed)?;
    if net.layers().iter().any(|l| l.activation == Activation::Step) {
        return Err(Error::Unsupported("step activation cannot be trained".into()));
    }
    let train_batch = encode_examples(&net, train_set)?;
    let cv_batch = encode_examples(&net, cv_set)?;

    let diverged = |epoch: usize, e: Error| Error::Training {
        epoch,
        message: e.to_string(),
    };
    let mut stopper = EarlyStopping::new(cfg.patience);
    let initial_cv = batch_loss(&net, &cv_batch, cfg.loss).map_err(|e| diverged(0, e))?;
    stopper.observe(0, initial_cv);
    let mut best = net.clone();
    let mut report = TrainReport {
        train_error: Vec::new(),
        cv_error: Vec::new(),
        stopping_epoch: 0,
        stop_reason: StopReason::MaxEpochs,
        best_epoch: 0,
    };
    let mut params = net.parameters();
    for epoch in 1..=cfg.max_epochs {
        let grad = loss_gradient(&net, &train_batch, cfg.loss).map_err(|e| diverged(epoch, e))?;
        for (p, g) in params.iter_mut().zip(grad.to_flat()) {
            *p -= cfg.learning_rate * g;
        }
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(diverged(epoch, Error::Domain(format!("parameter became {bad}"))));
        }
        net.set_parameters(&params)?;
        let train_err = batch_loss(&net, &train_batch, cfg.loss).map_err(|e| diverged(epoch, e))?;
        let cv_err = batch_loss(&net, &cv_batch, cfg.loss).map_err(|e| diverged(epoch, e))?;
        if !train_err.is_finite() || !cv_err.is_finite() {
            return Err(diverged(epoch, Error::Domain("loss is not finite".into())));
        }
        report.train_error.push(train_err);
        report.cv_error.push(cv_err);
        report.stopping_epoch = epoch;
        match stopper.observe(epoch, cv_err) {
            Progress::Improved => best = net.clone(),
            Progress::Waiting => {}
            Progress::Stop => {
                report.stop_reason = StopReason::EarlyStop;
                break;
            }
        }
    }
    report.best_epoch = stopper.best_epoch();
    Ok((best, report))
}
