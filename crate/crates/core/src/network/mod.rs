//! Feed-forward networks, including generalized feed-forward networks whose
//! skip connections jump over one or more layers.
//!
//! Layers are numbered from 1; index 0 denotes the encoded input vector.
//! The pre-activation of layer `k` is
//! `W_k · a_{k-1} + b_k + Σ S · a_from` over every skip `S` targeting `k`.

mod activation;
mod encoding;
mod format;

use std::fmt;

pub use activation::{apply_activation, Activation};
pub use encoding::{FeatureEncoding, InputEncoding};
pub use format::{load_network, save_network};

use crate::dataset::{BinningSpec, DatasetSchema, Instance, Value};
use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Structural("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `out += self · x`
    pub(crate) fn mul_acc(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o += self.row(r).iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// `out += selfᵀ · d`
    pub(crate) fn transpose_mul_acc(&self, d: &[f64], out: &mut [f64]) {
        for (r, &dr) in d.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(self.row(r)) {
                *o += w * dr;
            }
        }
    }

    /// `self += d ⊗ x`
    pub(crate) fn outer_acc(&mut self, d: &[f64], x: &[f64]) {
        let cols = self.cols;
        for (r, &dr) in d.iter().enumerate() {
            for (w, v) in self.data[r * cols..(r + 1) * cols].iter_mut().zip(x) {
                *w += dr * v;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// out_dim × in_dim
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Self {
        Layer {
            weights,
            bias,
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// Extra weights feeding the activations of layer `from` (0 = input) into
/// the pre-activation of layer `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipConnection {
    pub from: usize,
    pub to: usize,
    pub weights: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Classification {
        labels: Vec<String>,
    },
    /// A regression network; with a binning it can also answer with labels.
    Regression {
        binning: Option<BinningSpec>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
    skips: Vec<SkipConnection>,
    task: Task,
    encoding: InputEncoding,
}

/// Pre-activations and activations of every layer for one input.
/// `activations[0]` is the input itself.
#[derive(Debug, Clone)]
pub struct Trace {
    pub pre_activations: Vec<Vec<f64>>,
    pub activations: Vec<Vec<f64>>,
}

impl Network {
    pub fn new(
        input_dim: usize,
        layers: Vec<Layer>,
        skips: Vec<SkipConnection>,
        task: Task,
        encoding: InputEncoding,
    ) -> Result<Self> {
        let net = Network {
            input_dim,
            layers,
            skips,
            task,
            encoding,
        };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |location: String, message: String| Err(Error::validation(location, message));
        if self.layers.is_empty() {
            return invalid("layers".into(), "network needs at least one layer".into());
        }
        if self.encoding.width() != self.input_dim {
            return invalid(
                "encoding".into(),
                format!(
                    "encodes {} inputs but input_dim is {}",
                    self.encoding.width(),
                    self.input_dim
                ),
            );
        }
        let names = self.encoding.features().iter().map(FeatureEncoding::name);
        let labels = self.labels().into_iter().flatten().map(String::as_str);
        if let Some(bad) = names.chain(labels).find(|s| !is_plain_token(s)) {
            return invalid(
                "names".into(),
                format!("`{bad}` must be non-empty without whitespace or `|`"),
            );
        }
        let mut prev = self.input_dim;
        for (i, layer) in self.layers.iter().enumerate() {
            let loc = format!("layer {}", i + 1);
            if layer.out_dim() == 0 {
                return invalid(loc, "layer has no units".into());
            }
            if layer.in_dim() != prev {
                return invalid(
                    loc,
                    format!("expects {} inputs, previous layer gives {prev}", layer.in_dim()),
                );
            }
            if layer.bias.len() != layer.out_dim() {
                return invalid(
                    loc,
                    format!("{} biases for {} units", layer.bias.len(), layer.out_dim()),
                );
            }
            if layer
                .weights
                .as_slice()
                .iter()
                .chain(&layer.bias)
                .any(|v| !v.is_finite())
            {
                return invalid(loc, "non-finite parameter".into());
            }
            if layer.activation.is_vector() && layer.out_dim() < 2 {
                return invalid(loc, format!("{} needs at least two units", layer.activation));
            }
            prev = layer.out_dim();
        }
        for (i, skip) in self.skips.iter().enumerate() {
            let loc = format!("skip {}", i + 1);
            if skip.to > self.layers.len() || skip.to == 0 {
                return invalid(loc, format!("target layer {} does not exist", skip.to));
            }
            if skip.from + 1 >= skip.to {
                return invalid(
                    loc,
                    format!("skip {} -> {} does not jump over a layer", skip.from, skip.to),
                );
            }
            let rows = self.layers[skip.to - 1].out_dim();
            let cols = self.layer_width(skip.from);
            if skip.weights.rows() != rows || skip.weights.cols() != cols {
                return invalid(
                    loc,
                    format!(
                        "weights are {}x{}, expected {rows}x{cols}",
                        skip.weights.rows(),
                        skip.weights.cols()
                    ),
                );
            }
            if skip.weights.as_slice().iter().any(|v| !v.is_finite()) {
                return invalid(loc, "non-finite parameter".into());
            }
        }
        let out = self.output_dim();
        match &self.task {
            Task::Classification { labels } => {
                if labels.len() < 2 {
                    return invalid("task".into(), "classification needs at least two labels".into());
                }
                if out != labels.len() && !(out == 1 && labels.len() == 2) {
                    return invalid(
                        "task".into(),
                        format!("{} outputs for {} class labels", out, labels.len()),
                    );
                }
            }
            Task::Regression { .. } => {
                if out != 1 {
                    return invalid("task".into(), format!("regression needs 1 output, found {out}"));
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::out_dim)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn skips(&self) -> &[SkipConnection] {
        &self.skips
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn encoding(&self) -> &InputEncoding {
        &self.encoding
    }

    /// Width of the activation vector at index `k` (0 = input).
    pub fn layer_width(&self, k: usize) -> usize {
        if k == 0 {
            self.input_dim
        } else {
            self.layers[k - 1].out_dim()
        }
    }

    /// Labels this network answers with, if it can answer with labels.
    pub fn labels(&self) -> Option<&[String]> {
        match &self.task {
            Task::Classification { labels } => Some(labels),
            Task::Regression { binning } => binning.as_ref().map(BinningSpec::labels),
        }
    }

    /// Attaches (or replaces) the binning of a regression network.
    pub fn with_binning(mut self, binning: BinningSpec) -> Result<Self> {
        match &mut self.task {
            Task::Regression { binning: slot } => {
                *slot = Some(binning);
                Ok(self)
            }
            Task::Classification { .. } => Err(Error::Config("only regression networks take a binning".into())),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.trace(x)?;
        Ok(trace.activations.pop().expect("at least one layer"))
    }

    /// Forward pass keeping every intermediate vector.
    pub fn trace(&self, x: &[f64]) -> Result<Trace> {
        if x.len() != self.input_dim {
            return Err(Error::Structural(format!(
                "input has {} components, network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let k = i + 1;
            let mut z = layer.bias.clone();
            layer.weights.mul_acc(&activations[k - 1], &mut z);
            for skip in self.skips.iter().filter(|s| s.to == k) {
                skip.weights.mul_acc(&activations[skip.from], &mut z);
            }
            let a = layer.activation.apply(&z)?;
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(Trace {
            pre_activations,
            activations,
        })
    }

    pub fn encode(&self, values: &[Value]) -> Result<Vec<f64>> {
        self.encoding.encode(values)
    }

    /// Index into [`Network::labels`] of the network's answer for `values`.
    ///
    /// Multi-output classifiers answer with the argmax (lowest index wins
    /// ties); single-output binary classifiers answer with the first label
    /// below 0.5; regression networks bin their scalar output.
    pub fn predict_class(&self, values: &[Value]) -> Result<usize> {
        let out = self.forward(&self.encode(values)?)?;
        match &self.task {
            Task::Classification { .. } => Ok(class_from_outputs(&out)),
            Task::Regression { binning: Some(b) } => b.bin(out[0]),
            Task::Regression { binning: None } => Err(Error::Config(
                "regression network has no binning; cannot answer with a label".into(),
            )),
        }
    }

    pub fn predict_label(&self, inst: &Instance) -> Result<&str> {
        let class = self.predict_class(&inst.values)?;
        Ok(&self.labels().expect("predict_class succeeded")[class])
    }

    /// Checks that the input encoding matches `schema` and, when the schema
    /// is a classification schema, that the labels agree.
    pub fn check_schema(&self, schema: &DatasetSchema) -> Result<()> {
        self.encoding.check_schema(schema)?;
        if let (Some(ours), Some(theirs)) = (self.labels(), schema.class_labels()) {
            if ours != theirs {
                return Err(Error::validation(
                    "task",
                    format!("network labels {ours:?} differ from data labels {theirs:?}"),
                ));
            }
        }
        Ok(())
    }

    /// Flat view of all trainable parameters: per layer the weights
    /// (row-major) then biases, followed by every skip's weights.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.as_slice());
            out.extend_from_slice(&layer.bias);
        }
        for skip in &self.skips {
            out.extend_from_slice(skip.weights.as_slice());
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .chain(self.skips.iter().map(|s| s.weights.as_slice().len()))
            .sum()
    }

    /// Inverse of [`Network::parameters`].
    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::Structural(format!(
                "{} parameters given, network has {}",
                params.len(),
                self.parameter_count()
            )));
        }
        let mut rest = params;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        for layer in &mut self.layers {
            take(layer.weights.as_mut_slice());
            take(&mut layer.bias);
        }
        for skip in &mut self.skips {
            take(skip.weights.as_mut_slice());
        }
        Ok(())
    }
}

fn is_plain_token(s: &str) -> bool {
    !s.is_empty() && s != "|" && !s.chars().any(char::is_whitespace)
}

fn class_from_outputs(out: &[f64]) -> usize {
    if out.len() == 1 {
        return usize::from(out[0] >= 0.5);
    }
    let mut best = 0;
    for (i, &v) in out.iter().enumerate().skip(1) {
        if v > out[best] {
            best = i;
        }
    }
    best
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.input_dim)?;
        for layer in &self.layers {
            write!(f, "-{}", layer.out_dim())?;
        }
        if !self.skips.is_empty() {
            write!(f, " (+{} skips)", self.skips.len())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn identity_encoding(n: usize) -> InputEncoding {
        InputEncoding::new(
            (0..n)
                .map(|i| FeatureEncoding::scaled(&format!("x{}", i + 1), 0.0, 1.0))
                .collect(),
        )
    }

    fn regression() -> Task {
        Task::Regression { binning: None }
    }

    fn single(w: Vec<f64>, activation: Activation) -> Network {
        let n = w.len();
        Network::new(
            n,
            vec![Layer::new(Matrix::from_rows(vec![w]).unwrap(), vec![0.0], activation)],
            vec![],
            regression(),
            identity_encoding(n),
        )
        .unwrap()
    }

    #[test]
    fn single_neuron_examples() {
        assert_eq!(
            single(vec![1.0, 1.0], Activation::Identity)
                .forward(&[2.0, 3.0])
                .unwrap(),
            vec![5.0]
        );
        assert_eq!(
            single(vec![0.0, 0.0], Activation::Logistic)
                .forward(&[-4.0, 9.0])
                .unwrap(),
            vec![0.5]
        );
    }

    #[test]
    fn skip_connection_adds_into_target_layer() {
        let net = Network::new(
            2,
            vec![
                Layer::new(
                    Matrix::from_rows(vec![vec![1.0, 0.0]]).unwrap(),
                    vec![0.0],
                    Activation::Identity,
                ),
                Layer::new(
                    Matrix::from_rows(vec![vec![1.0]]).unwrap(),
                    vec![0.0],
                    Activation::Identity,
                ),
            ],
            vec![SkipConnection {
                from: 0,
                to: 2,
                weights: Matrix::from_rows(vec![vec![0.0, 1.0]]).unwrap(),
            }],
            regression(),
            identity_encoding(2),
        )
        .unwrap();
        // hand evaluation: hidden = 3, output = 1*3 + (0*3 + 1*4) = 7
        assert_eq!(net.forward(&[3.0, 4.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn adjacent_skip_is_rejected() {
        let err = Network::new(
            1,
            vec![
                Layer::new(
                    Matrix::from_rows(vec![vec![1.0]]).unwrap(),
                    vec![0.0],
                    Activation::Identity,
                ),
                Layer::new(
                    Matrix::from_rows(vec![vec![1.0]]).unwrap(),
                    vec![0.0],
                    Activation::Identity,
                ),
            ],
            vec![SkipConnection {
                from: 1,
                to: 2,
                weights: Matrix::from_rows(vec![vec![1.0]]).unwrap(),
            }],
            regression(),
            identity_encoding(1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let net = single(vec![1.0, 1.0], Activation::Identity);
        assert!(matches!(net.forward(&[1.0]), Err(Error::Structural(_))));
    }

    #[test]
    fn class_from_outputs_rules() {
        assert_eq!(class_from_outputs(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(class_from_outputs(&[0.5, 0.5]), 0);
        assert_eq!(class_from_outputs(&[0.49]), 0);
        assert_eq!(class_from_outputs(&[0.5]), 1);
    }

    #[test]
    fn regression_prediction_uses_binning() {
        let net = single(vec![1.0], Activation::Identity);
        assert!(matches!(net.predict_class(&[Value::Real(15.0)]), Err(Error::Config(_))));
        let binning = BinningSpec::parse("10,20,30:A,B,C,D").unwrap();
        let net = net.with_binning(binning).unwrap();
        assert_eq!(net.predict_class(&[Value::Real(15.0)]).unwrap(), 1);
        let inst = Instance {
            values: vec![Value::Real(15.0)],
            target: crate::dataset::Target::Real(0.0),
        };
        assert_eq!(net.predict_label(&inst).unwrap(), "B");
    }

    #[test]
    fn parameter_round_trip() {
        let mut net = single(vec![1.0, 2.0], Activation::Identity);
        let mut p = net.parameters();
        assert_eq!(p, vec![1.0, 2.0, 0.0]);
        p[2] = 5.0;
        net.set_parameters(&p).unwrap();
        assert_eq!(net.forward(&[0.0, 0.0]).unwrap(), vec![5.0]);
    }

    fn linear_gff(params: &[f64]) -> Network {
        // 3 -> 2 -> 2 with a 0 -> 2 skip, identity everywhere, zero biases
        let w1 = Matrix::from_fn(2, 3, |r, c| params[r * 3 + c]);
        let w2 = Matrix::from_fn(2, 2, |r, c| params[6 + r * 2 + c]);
        let s = Matrix::from_fn(2, 3, |r, c| params[10 + r * 3 + c]);
        Network::new(
            3,
            vec![
                Layer::new(w1, vec![0.0; 2], Activation::Identity),
                Layer::new(w2, vec![0.0; 2], Activation::Identity),
            ],
            vec![SkipConnection {
                from: 0,
                to: 2,
                weights: s,
            }],
            Task::Classification {
                labels: vec!["a".into(), "b".into()],
            },
            identity_encoding(3),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn identity_network_is_linear(
            params in prop::collection::vec(-2.0f64..2.0, 16),
            x in prop::collection::vec(-3.0f64..3.0, 3),
            y in prop::collection::vec(-3.0f64..3.0, 3),
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
        ) {
            let net = linear_gff(&params);
            let mix: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = net.forward(&mix).unwrap();
            let fx = net.forward(&x).unwrap();
            let fy = net.forward(&y).unwrap();
            for k in 0..2 {
                prop_assert!((lhs[k] - (alpha * fx[k] + beta * fy[k])).abs() < 1e-9);
            }
        }

        #[test]
        fn zero_skip_changes_nothing(
            params in prop::collection::vec(-2.0f64..2.0, 10),
            x in prop::collection::vec(-3.0f64..3.0, 3),
        ) {
            let w1 = Matrix::from_fn(2, 3, |r, c| params[r * 3 + c]);
            let w2 = Matrix::from_fn(2, 2, |r, c| params[6 + r * 2 + c]);
            let layers = vec![
                Layer::new(w1, vec![0.1, -0.2], Activation::Hyperbolic),
                Layer::new(w2, vec![0.3, 0.0], Activation::Softmax),
            ];
            let task = Task::Classification { labels: vec!["a".into(), "b".into()] };
            let plain = Network::new(3, layers.clone(), vec![], task.clone(), identity_encoding(3)).unwrap();
            let skipped = Network::new(
                3,
                layers,
                vec![SkipConnection { from: 0, to: 2, weights: Matrix::zeros(2, 3) }],
                task,
                identity_encoding(3),
            )
            .unwrap();
            prop_assert_eq!(plain.forward(&x).unwrap(), skipped.forward(&x).unwrap());
        }

        #[test]
        fn argmax_survives_monotone_transforms(out in prop::collection::vec(-5.0f64..5.0, 2..6)) {
            let transformed: Vec<f64> = out.iter().map(|v| (2.0 * v).exp() + 3.0).collect();
            prop_assert_eq!(class_from_outputs(&out), class_from_outputs(&transformed));
        }
    }
}
