//! Typed tabular data: schema-checked CSV ingestion, target binning and
//! seeded train/cross-validation/test partitioning.

mod schema;
mod transform;

use std::fmt;
use std::sync::Arc;

pub(crate) use schema::SchemaFile;
pub use schema::{AttributeKind, AttributeSpec, DatasetSchema, Role};
pub use transform::{bin_target, split_dataset, BinningSpec, SplitSpec};

use crate::error::{Error, Result};

/// One input attribute value. Nominal values are indices into the
/// attribute's token list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Token(usize),
    Real(f64),
}

impl Value {
    pub fn as_real(self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(v),
            Value::Token(_) => None,
        }
    }

    pub fn as_token(self) -> Option<usize> {
        match self {
            Value::Token(t) => Some(t),
            Value::Real(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Index into the schema's class labels.
    Label(usize),
    Real(f64),
}

impl Target {
    pub fn label(self) -> Option<usize> {
        match self {
            Target::Label(l) => Some(l),
            Target::Real(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// One value per input attribute, in schema input order.
    pub values: Vec<Value>,
    pub target: Target,
}

/// An immutable collection of instances conforming to one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<DatasetSchema>,
    instances: Vec<Instance>,
}

impl Dataset {
    /// Builds a dataset, checking every instance against the schema.
    pub fn new(schema: Arc<DatasetSchema>, instances: Vec<Instance>) -> Result<Self> {
        for (i, inst) in instances.iter().enumerate() {
            check_instance(&schema, inst).map_err(|message| Error::Row { row: i + 1, message })?;
        }
        Ok(Dataset { schema, instances })
    }

    pub fn schema(&self) -> &Arc<DatasetSchema> {
        &self.schema
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Class label indices of every instance. Fails on regression data.
    pub fn labels(&self) -> Result<Vec<usize>> {
        self.instances
            .iter()
            .map(|inst| {
                inst.target
                    .label()
                    .ok_or_else(|| Error::Data("dataset target is continuous, not a class label".into()))
            })
            .collect()
    }

    pub(crate) fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: Arc::clone(&self.schema),
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
        }
    }

    /// Renders the dataset as CSV with a header row, columns in schema order.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        let header: Vec<&str> = self.schema.attributes().iter().map(|a| a.name.as_str()).collect();
        writer.write_record(&header).expect("in-memory write");
        let target_col = self.schema.target_column();
        for inst in &self.instances {
            let mut row = Vec::with_capacity(header.len());
            let mut values = inst.values.iter();
            for (col, attr) in self.schema.attributes().iter().enumerate() {
                let field = if col == target_col {
                    match inst.target {
                        Target::Label(l) => self.schema.class_labels().expect("classification")[l].clone(),
                        Target::Real(v) => v.to_string(),
                    }
                } else {
                    format_value(&attr.kind, *values.next().expect("arity checked"))
                };
                row.push(field);
            }
            writer.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Display helper that renders instance values by name.
pub struct DisplayValues<'a>(pub &'a DatasetSchema, pub &'a [Value]);

impl fmt::Display for DisplayValues<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.1.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let attr = self.0.input(i);
            write!(f, "{}={}", attr.name, format_value(&attr.kind, *v))?;
        }
        Ok(())
    }
}

pub(crate) fn format_value(kind: &AttributeKind, value: Value) -> String {
    match (kind, value) {
        (AttributeKind::Nominal(tokens), Value::Token(t)) => tokens[t].clone(),
        (_, Value::Real(v)) => v.to_string(),
        (AttributeKind::Continuous, Value::Token(t)) => format!("#{t}"),
    }
}

fn check_instance(schema: &DatasetSchema, inst: &Instance) -> std::result::Result<(), String> {
    if inst.values.len() != schema.input_count() {
        return Err(format!(
            "expected {} input values, found {}",
            schema.input_count(),
            inst.values.len()
        ));
    }
    for (attr, value) in schema.inputs().zip(&inst.values) {
        match (&attr.kind, value) {
            (AttributeKind::Nominal(tokens), Value::Token(t)) if *t < tokens.len() => {}
            (AttributeKind::Continuous, Value::Real(v)) if v.is_finite() => {}
            _ => return Err(format!("value {value:?} does not fit attribute `{}`", attr.name)),
        }
    }
    match (&schema.target().kind, inst.target) {
        (AttributeKind::Nominal(tokens), Target::Label(l)) if l < tokens.len() => Ok(()),
        (AttributeKind::Continuous, Target::Real(v)) if v.is_finite() => Ok(()),
        (_, target) => Err(format!(
            "target {target:?} does not fit attribute `{}`",
            schema.target().name
        )),
    }
}

/// Parses CSV text whose header names the schema's attributes in order.
///
/// Rows are numbered from 1, counting data rows only. Missing values (an
/// empty field or `?`) are rejected.
pub fn parse_dataset(csv_text: &str, schema: &Arc<DatasetSchema>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| Error::parse("header", e))?,
        None => return Err(Error::parse("header", "missing header row")),
    };
    let expected: Vec<&str> = schema.attributes().iter().map(|a| a.name.as_str()).collect();
    let found: Vec<&str> = header.iter().collect();
    if found != expected {
        return Err(Error::parse(
            "header",
            format!("expected columns {expected:?}, found {found:?}"),
        ));
    }

    let target_col = schema.target_column();
    let mut instances = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        if rec.len() != expected.len() {
            return Err(Error::Row {
                row,
                message: format!("expected {} fields, found {}", expected.len(), rec.len()),
            });
        }
        let mut values = Vec::with_capacity(schema.input_count());
        let mut target = None;
        for (col, (field, attr)) in rec.iter().zip(schema.attributes()).enumerate() {
            let violation = |message: String| Error::SchemaViolation {
                row,
                column: attr.name.clone(),
                message,
            };
            if field.is_empty() || field == "?" {
                return Err(violation("missing value".into()));
            }
            let parsed = match &attr.kind {
                AttributeKind::Nominal(_) => {
                    let t = attr
                        .kind
                        .token_index(field)
                        .ok_or_else(|| violation(format!("unknown token `{field}`")))?;
                    Value::Token(t)
                }
                AttributeKind::Continuous => {
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        location: format!("row {row}, column `{}`", attr.name),
                        message: format!("`{field}` is not a number"),
                    })?;
                    if !v.is_finite() {
                        return Err(violation(format!("non-finite value `{field}`")));
                    }
                    Value::Real(v)
                }
            };
            if col == target_col {
                target = Some(match parsed {
                    Value::Token(t) => Target::Label(t),
                    Value::Real(v) => Target::Real(v),
                });
            } else {
                values.push(parsed);
            }
        }
        instances.push(Instance {
            values,
            target: target.expect("schema has a target column"),
        });
    }
    Ok(Dataset {
        schema: Arc::clone(schema),
        instances,
    })
}
