//! Membership-query oracle: marginal feature models for drawing synthetic
//! instances under path constraints, labeled by the network.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{format_value, AttributeKind, Dataset, DatasetSchema, Value};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::tree::MofNTest;

pub const DEFAULT_REJECTION_CAP: usize = 10_000;
const MIN_BANDWIDTH: f64 = 1e-6;

/// Sampling distribution of one input attribute.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureModel {
    /// Relative token frequencies, indexed like the schema's token list.
    Nominal { frequencies: Vec<f64> },
    /// Gaussian kernels of width `bandwidth` centred on each training value.
    Continuous { values: Vec<f64>, bandwidth: f64 },
}

impl FeatureModel {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self {
            FeatureModel::Nominal { frequencies } => {
                let dist = WeightedIndex::new(frequencies).expect("frequencies sum to one");
                Value::Token(dist.sample(rng))
            }
            FeatureModel::Continuous { values, bandwidth } => {
                let centre = values[rng.random_range(0..values.len())];
                let noise = Normal::new(0.0, *bandwidth).expect("bandwidth is positive");
                Value::Real(centre + noise.sample(rng))
            }
        }
    }
}

/// Kernel bandwidth for continuous attributes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BandwidthRule {
    /// Population standard deviation divided by √n.
    #[default]
    StdDevOverRootN,
    Fixed(f64),
}

/// Fits one model per input attribute. Bandwidths never drop below 1e-6.
pub fn fit_feature_models(train: &Dataset, rule: BandwidthRule) -> Result<Vec<FeatureModel>> {
    if train.is_empty() {
        return Err(Error::Fit("cannot fit feature models to an empty dataset".into()));
    }
    let n = train.len() as f64;
    let schema = train.schema();
    schema
        .inputs()
        .enumerate()
        .map(|(i, attr)| {
            let column = train.instances().iter().map(move |inst| inst.values[i]);
            Ok(match &attr.kind {
                AttributeKind::Nominal(tokens) => {
                    let mut counts = vec![0usize; tokens.len()];
                    for v in column {
                        counts[v.as_token().expect("validated dataset")] += 1;
                    }
                    FeatureModel::Nominal {
                        frequencies: counts.iter().map(|&c| c as f64 / n).collect(),
                    }
                }
                AttributeKind::Continuous => {
                    let values: Vec<f64> = column.map(|v| v.as_real().expect("validated dataset")).collect();
                    let bandwidth = match rule {
                        BandwidthRule::StdDevOverRootN => {
                            let mean = values.iter().sum::<f64>() / n;
                            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                            var.sqrt() / n.sqrt()
                        }
                        BandwidthRule::Fixed(b) => b,
                    };
                    if !bandwidth.is_finite() {
                        return Err(Error::Fit(format!("bandwidth for `{}` is not finite", attr.name)));
                    }
                    FeatureModel::Continuous {
                        values,
                        bandwidth: bandwidth.max(MIN_BANDWIDTH),
                    }
                }
            })
        })
        .collect()
}

/// One test on the path to a node, with the branch that was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub test: MofNTest,
    pub satisfied: bool,
}

impl Constraint {
    pub fn holds(&self, values: &[Value]) -> Result<bool> {
        Ok(self.test.evaluate(values)? == self.satisfied)
    }

    pub fn display<'a>(&'a self, schema: &'a DatasetSchema) -> impl fmt::Display + 'a {
        DisplayConstraint(self, schema)
    }
}

struct DisplayConstraint<'a>(&'a Constraint, &'a DatasetSchema);

impl fmt::Display for DisplayConstraint<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let polarity = if self.0.satisfied { "satisfied" } else { "violated" };
        write!(f, "{} {polarity}", self.0.test.display(self.1))
    }
}

/// Input values with the class index the oracle (or the data) assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub values: Vec<Value>,
    pub label: usize,
}

/// The network plus feature models, answering membership queries.
///
/// Every call that draws takes a `stream` number; together with the seed it
/// fixes the random sequence, so results do not depend on call order.
#[derive(Debug)]
pub struct Oracle<'a> {
    network: &'a Network,
    schema: Arc<DatasetSchema>,
    models: Vec<FeatureModel>,
    seed: u64,
    rejection_cap: usize,
    queries: AtomicUsize,
}

impl<'a> Oracle<'a> {
    pub fn new(network: &'a Network, schema: Arc<DatasetSchema>, models: Vec<FeatureModel>, seed: u64) -> Result<Self> {
        if network.labels().is_none() {
            return Err(Error::Config("the oracle network must answer with class labels".into()));
        }
        if models.len() != schema.input_count() {
            return Err(Error::Config(format!(
                "{} feature models for {} inputs",
                models.len(),
                schema.input_count()
            )));
        }
        Ok(Oracle {
            network,
            schema,
            models,
            seed,
            rejection_cap: DEFAULT_REJECTION_CAP,
            queries: AtomicUsize::new(0),
        })
    }

    pub fn with_rejection_cap(mut self, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Config("rejection cap must be at least 1".into()));
        }
        self.rejection_cap = cap;
        Ok(self)
    }

    pub fn network(&self) -> &Network {
        self.network
    }

    pub fn schema(&self) -> &Arc<DatasetSchema> {
        &self.schema
    }

    pub fn models(&self) -> &[FeatureModel] {
        &self.models
    }

    /// Number of network queries answered so far.
    pub fn query_count(&self) -> usize {
        self.queries.load(Ordering::Relaxed)
    }

    /// Asks the network for the class of `values`.
    pub fn query(&self, values: &[Value]) -> Result<usize> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.network.predict_class(values)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Draws `n` unlabeled instances satisfying every constraint.
    pub fn draw_instances(&self, constraints: &[Constraint], n: usize, stream: u64) -> Result<Vec<Vec<Value>>> {
        let mut rng = self.rng(stream);
        let mut rejections = vec![0usize; constraints.len()];
        let mut out = Vec::with_capacity(n);
        'instance: for _ in 0..n {
            for _ in 0..self.rejection_cap {
                let values: Vec<Value> = self.models.iter().map(|m| m.sample(&mut rng)).collect();
                let mut failed = None;
                for (i, c) in constraints.iter().enumerate() {
                    if !c.holds(&values)? {
                        failed = Some(i);
                        break;
                    }
                }
                match failed {
                    None => {
                        out.push(values);
                        continue 'instance;
                    }
                    Some(i) => rejections[i] += 1,
                }
            }
            let worst = (0..constraints.len())
                .max_by_key(|&i| (rejections[i], std::cmp::Reverse(i)))
                .expect("a rejection implies a constraint");
            return Err(Error::Unsatisfiable {
                constraint: constraints[worst].display(&self.schema).to_string(),
                attempts: self.rejection_cap,
            });
        }
        Ok(out)
    }
}

/// Tops `examples` up to `min_sample` with oracle-labeled draws. Exactly
/// `min_sample - examples.len()` queries are made when that is positive.
pub fn ensure_min_sample(
    mut examples: Vec<LabeledSample>,
    min_sample: usize,
    oracle: &Oracle<'_>,
    constraints: &[Constraint],
    stream: u64,
) -> Result<Vec<LabeledSample>> {
    let missing = min_sample.saturating_sub(examples.len());
    if missing == 0 {
        return Ok(examples);
    }
    for values in oracle.draw_instances(constraints, missing, stream)? {
        let label = oracle.query(&values)?;
        examples.push(LabeledSample { values, label });
    }
    Ok(examples)
}

/// CSV of samples: the input columns then the label.
pub fn samples_to_csv(schema: &DatasetSchema, labels: &[String], samples: &[LabeledSample]) -> String {
    let mut out = String::new();
    for attr in schema.inputs() {
        out.push_str(&attr.name);
        out.push(',');
    }
    out.push_str(&schema.target().name);
    out.push('\n');
    for s in samples {
        for (attr, v) in schema.inputs().zip(&s.values) {
            out.push_str(&format_value(&attr.kind, *v));
            out.push(',');
        }
        out.push_str(&labels[s.label]);
        out.push('\n');
    }
    out
}
