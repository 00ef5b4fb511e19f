use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AttributeKind, Dataset, Instance, Target};
use crate::error::{Error, Result};

/// Cut points that turn a continuous target into ordered classes.
///
/// Intervals are left-open and right-closed: `v` falls in bin `i` when
/// `edges[i-1] < v <= edges[i]`. Values below the first edge take the first
/// label, values above the last edge take the last.
#[derive(Debug, Clone, PartialEq)]
pub struct BinningSpec {
    edges: Vec<f64>,
    labels: Vec<String>,
}

impl BinningSpec {
    pub fn new(edges: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Config("bin edges must be finite".into()));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("bin edges must be strictly increasing".into()));
        }
        if labels.len() != edges.len() + 1 {
            return Err(Error::Config(format!(
                "{} edges need {} labels, got {}",
                edges.len(),
                edges.len() + 1,
                labels.len()
            )));
        }
        let uniq: HashSet<&str> = labels.iter().map(String::as_str).collect();
        if uniq.len() != labels.len() || labels.iter().any(String::is_empty) {
            return Err(Error::Config("bin labels must be non-empty and distinct".into()));
        }
        Ok(BinningSpec { edges, labels })
    }

    /// Parses `10,20,30:A,B,C,D`.
    pub fn parse(text: &str) -> Result<Self> {
        let (edges, labels) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("bins `{text}`: expected EDGES:LABELS")))?;
        let edges = if edges.trim().is_empty() {
            Vec::new()
        } else {
            edges
                .split(',')
                .map(|e| {
                    e.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bins: `{e}` is not a number")))
                })
                .collect::<Result<_>>()?
        };
        let labels = labels.split(',').map(|l| l.trim().to_string()).collect();
        BinningSpec::new(edges, labels)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Bin index of a finite value.
    pub fn bin(&self, v: f64) -> Result<usize> {
        if !v.is_finite() {
            return Err(Error::Data(format!("cannot bin non-finite value {v}")));
        }
        Ok(self.edges.partition_point(|&e| e < v))
    }
}

/// Replaces a continuous target by its bin label.
pub fn bin_target(dataset: &Dataset, spec: &BinningSpec) -> Result<Dataset> {
    if dataset.schema().is_classification() {
        return Err(Error::Config("bin_target needs a continuous target".into()));
    }
    let schema = dataset
        .schema()
        .with_target_kind(AttributeKind::Nominal(spec.labels.clone()))?;
    let instances = dataset
        .instances()
        .iter()
        .map(|inst| {
            let v = match inst.target {
                Target::Real(v) => v,
                Target::Label(_) => unreachable!("continuous target checked above"),
            };
            Ok(Instance {
                values: inst.values.clone(),
                target: Target::Label(spec.bin(v)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        schema: Arc::new(schema),
        instances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub cv_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, cv_fraction: f64, test_fraction: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_fraction,
            cv_fraction,
            test_fraction,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses `0.6,0.2,0.2`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let parts = text
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("split: `{p}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        match parts.as_slice() {
            [a, b, c] => SplitSpec::new(*a, *b, *c, seed),
            _ => Err(Error::Config(format!("split `{text}`: expected TRAIN,CV,TEST"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [self.train_fraction, self.cv_fraction, self.test_fraction];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Config("split fractions must lie in [0, 1]".into()));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Seeded shuffle-and-cut into (train, cv, test). Partitions keep the
/// original row order; rounding remainders go to train.
pub fn split_dataset(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("cannot split an empty dataset".into()));
    }
    let n = dataset.len();
    let cv = ((n as f64) * spec.cv_fraction).round() as usize;
    let cv = cv.min(n);
    let test = (((n as f64) * spec.test_fraction).round() as usize).min(n - cv);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut cv_idx = order[..cv].to_vec();
    let mut test_idx = order[cv..cv + test].to_vec();
    let mut train_idx = order[cv + test..].to_vec();
    cv_idx.sort_unstable();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((
        dataset.subset(&train_idx),
        dataset.subset(&cv_idx),
        dataset.subset(&test_idx),
    ))
}
