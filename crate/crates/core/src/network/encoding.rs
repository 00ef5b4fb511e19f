use crate::dataset::{AttributeKind, Dataset, DatasetSchema, Value};
use crate::error::{Error, Result};

/// How one input attribute becomes network inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureEncoding {
    /// One indicator per token.
    OneHot { name: String, tokens: usize },
    /// `(v - min) / (max - min)`; a zero range divides by one instead.
    Scaled { name: String, min: f64, max: f64 },
}

impl FeatureEncoding {
    pub fn one_hot(name: &str, tokens: usize) -> Self {
        FeatureEncoding::OneHot {
            name: name.to_string(),
            tokens,
        }
    }

    pub fn scaled(name: &str, min: f64, max: f64) -> Self {
        FeatureEncoding::Scaled {
            name: name.to_string(),
            min,
            max,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            FeatureEncoding::OneHot { name, .. } | FeatureEncoding::Scaled { name, .. } => name,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            FeatureEncoding::OneHot { tokens, .. } => *tokens,
            FeatureEncoding::Scaled { .. } => 1,
        }
    }
}

/// Per-attribute encodings, in schema input order.
#[derive(Debug, Clone, PartialEq)]
pub struct InputEncoding {
    features: Vec<FeatureEncoding>,
}

impl InputEncoding {
    pub fn new(features: Vec<FeatureEncoding>) -> Self {
        InputEncoding { features }
    }

    /// One-hot for nominal attributes, min-max scaling (fit on `train`) for
    /// continuous ones.
    pub fn fit(train: &Dataset) -> Self {
        let schema = train.schema();
        let features = schema
            .inputs()
            .enumerate()
            .map(|(i, attr)| match &attr.kind {
                AttributeKind::Nominal(tokens) => FeatureEncoding::one_hot(&attr.name, tokens.len()),
                AttributeKind::Continuous => {
                    let (min, max) = train
                        .instances()
                        .iter()
                        .filter_map(|inst| inst.values[i].as_real())
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    if min.is_finite() {
                        FeatureEncoding::scaled(&attr.name, min, max)
                    } else {
                        FeatureEncoding::scaled(&attr.name, 0.0, 1.0)
                    }
                }
            })
            .collect();
        InputEncoding { features }
    }

    pub fn features(&self) -> &[FeatureEncoding] {
        &self.features
    }

    pub fn width(&self) -> usize {
        self.features.iter().map(FeatureEncoding::width).sum()
    }

    pub fn encode(&self, values: &[Value]) -> Result<Vec<f64>> {
        if values.len() != self.features.len() {
            return Err(Error::Structural(format!(
                "{} values for {} encoded attributes",
                values.len(),
                self.features.len()
            )));
        }
        let mut out = Vec::with_capacity(self.width());
        for (feature, value) in self.features.iter().zip(values) {
            match (feature, *value) {
                (FeatureEncoding::OneHot { tokens, .. }, Value::Token(t)) if t < *tokens => {
                    out.extend((0..*tokens).map(|k| if k == t { 1.0 } else { 0.0 }));
                }
                (FeatureEncoding::Scaled { min, max, .. }, Value::Real(v)) => {
                    let range = if max > min { max - min } else { 1.0 };
                    out.push((v - min) / range);
                }
                (feature, value) => {
                    return Err(Error::Structural(format!(
                        "value {value:?} does not match encoding of `{}`",
                        feature.name()
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Attribute names and kinds must line up with the schema's inputs.
    pub fn check_schema(&self, schema: &DatasetSchema) -> Result<()> {
        if self.features.len() != schema.input_count() {
            return Err(Error::validation(
                "encoding",
                format!(
                    "network encodes {} attributes, data has {} inputs",
                    self.features.len(),
                    schema.input_count()
                ),
            ));
        }
        for (i, (feature, attr)) in self.features.iter().zip(schema.inputs()).enumerate() {
            let ok = feature.name() == attr.name
                && match (feature, &attr.kind) {
                    (FeatureEncoding::OneHot { tokens, .. }, AttributeKind::Nominal(t)) => *tokens == t.len(),
                    (FeatureEncoding::Scaled { .. }, AttributeKind::Continuous) => true,
                    _ => false,
                };
            if !ok {
                return Err(Error::validation(
                    format!("encoding feature {}", i + 1),
                    format!("`{}` does not match data attribute `{}`", feature.name(), attr.name),
                ));
            }
        }
        Ok(())
    }
}
