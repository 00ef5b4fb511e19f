//! C4.5-style induction from labeled data: entropy, information gain, gain
//! ratio and binary thresholds for continuous attributes. No pruning.

use std::sync::Arc;

use crate::dataset::{AttributeKind, Dataset, DatasetSchema, Instance};
use crate::error::{Error, Result};
use crate::tree::{DecisionTree, Literal, MofNTest, Node, Provenance};

/// Shannon entropy in bits of a class-count vector.
pub fn entropy(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Domain("entropy of an empty set".into()));
    }
    Ok(entropy_of(counts, total))
}

pub(crate) fn entropy_of(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Entropy of the parent minus the size-weighted entropy of the branches.
/// Empty branches contribute nothing.
pub fn split_gain(branches: &[Vec<usize>]) -> Result<f64> {
    let k = branches.first().map_or(0, Vec::len);
    let mut parent = vec![0usize; k];
    for b in branches {
        for (p, c) in parent.iter_mut().zip(b) {
            *p += c;
        }
    }
    let total: usize = parent.iter().sum();
    let before = entropy(&parent)?;
    let after: f64 = branches
        .iter()
        .map(|b| {
            let size: usize = b.iter().sum();
            if size == 0 {
                0.0
            } else {
                size as f64 / total as f64 * entropy_of(b, size)
            }
        })
        .sum();
    // Rounding can leave a tiny negative difference on useless splits.
    Ok((before - after).max(0.0))
}

/// Entropy of the branch proportions themselves.
pub fn split_info(branch_sizes: &[usize]) -> f64 {
    let total: usize = branch_sizes.iter().sum();
    if total == 0 {
        return 0.0;
    }
    entropy_of(branch_sizes, total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct C45Params {
    /// Nodes with fewer instances become leaves.
    pub min_instances_per_leaf: usize,
    pub use_gain_ratio: bool,
    pub max_depth: Option<usize>,
}

impl Default for C45Params {
    fn default() -> Self {
        C45Params {
            min_instances_per_leaf: 2,
            use_gain_ratio: true,
            max_depth: None,
        }
    }
}

impl C45Params {
    pub fn digest(&self) -> String {
        let depth = self.max_depth.map_or("none".to_string(), |d| d.to_string());
        format!(
            "c45 min_leaf={} gain_ratio={} max_depth={depth}",
            self.min_instances_per_leaf, self.use_gain_ratio
        )
    }
}

fn class_count(schema: &DatasetSchema) -> Result<usize> {
    schema
        .class_labels()
        .map(<[String]>::len)
        .ok_or_else(|| Error::Config("induction needs a classification target".into()))
}

fn label(inst: &Instance) -> usize {
    inst.target.label().expect("classification dataset")
}

fn counts(rows: &[&Instance], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for r in rows {
        c[label(r)] += 1;
    }
    c
}

/// Per-token class counts of a nominal attribute.
fn nominal_branches(rows: &[&Instance], attribute: usize, tokens: usize, k: usize) -> Vec<Vec<usize>> {
    let mut branches = vec![vec![0; k]; tokens];
    for r in rows {
        let t = r.values[attribute].as_token().expect("nominal attribute");
        branches[t][label(r)] += 1;
    }
    branches
}

/// Best `x <= threshold` cut over midpoints of consecutive distinct values:
/// `(threshold, gain, [low, high] class counts)`. `None` when fewer than two
/// distinct values exist or every cut has zero gain.
fn threshold_scan(rows: &[&Instance], attribute: usize, k: usize) -> Option<(f64, f64, [Vec<usize>; 2])> {
    let mut pairs: Vec<(f64, usize)> = rows
        .iter()
        .map(|r| (r.values[attribute].as_real().expect("continuous attribute"), label(r)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut low = vec![0usize; k];
    let mut high = counts(rows, k);
    let mut best: Option<(f64, f64, [Vec<usize>; 2])> = None;
    for i in 0..pairs.len().saturating_sub(1) {
        low[pairs[i].1] += 1;
        high[pairs[i].1] -= 1;
        if pairs[i].0 == pairs[i + 1].0 {
            continue;
        }
        let gain = split_gain(&[low.clone(), high.clone()]).expect("non-empty rows");
        // strict comparison keeps the smallest threshold on ties
        if best.as_ref().is_none_or(|b| gain > b.1) {
            let threshold = pairs[i].0 + (pairs[i + 1].0 - pairs[i].0) / 2.0;
            best = Some((threshold, gain, [low.clone(), high.clone()]));
        }
    }
    best.filter(|b| b.1 > 0.0)
}

fn check_attribute(data: &Dataset, attribute: usize) -> Result<usize> {
    if attribute >= data.schema().input_count() {
        return Err(Error::Config(format!("no input attribute #{attribute}")));
    }
    if data.is_empty() {
        return Err(Error::Data("gain over an empty dataset".into()));
    }
    class_count(data.schema())
}

fn rows(data: &Dataset) -> Vec<&Instance> {
    data.instances().iter().collect()
}

/// Information gain of `attribute` (input index). Nominal attributes split
/// on every token; continuous ones at their best threshold (0 when no cut
/// has positive gain).
pub fn info_gain(data: &Dataset, attribute: usize) -> Result<f64> {
    let k = check_attribute(data, attribute)?;
    let rows = rows(data);
    match &data.schema().input(attribute).kind {
        AttributeKind::Nominal(tokens) => split_gain(&nominal_branches(&rows, attribute, tokens.len(), k)),
        AttributeKind::Continuous => Ok(threshold_scan(&rows, attribute, k).map_or(0.0, |b| b.1)),
    }
}

/// Gain divided by split information; `None` when the split information is
/// zero (or a continuous attribute has no usable cut).
pub fn gain_ratio(data: &Dataset, attribute: usize) -> Result<Option<f64>> {
    let k = check_attribute(data, attribute)?;
    let rows = rows(data);
    Ok(score(&rows, attribute, &data.schema().input(attribute).kind, k, true).map(|c| c.score))
}

/// Gain-maximizing cut of a continuous attribute as `(threshold, gain)`, with
/// instances at or below the threshold on one side. `None` marks the
/// attribute inadmissible.
pub fn best_threshold(data: &Dataset, attribute: usize) -> Result<Option<(f64, f64)>> {
    let k = check_attribute(data, attribute)?;
    if data.schema().input(attribute).kind.is_nominal() {
        return Err(Error::Config("best_threshold needs a continuous attribute".into()));
    }
    Ok(threshold_scan(&rows(data), attribute, k).map(|(t, g, _)| (t, g)))
}

struct Candidate {
    attribute: usize,
    threshold: Option<f64>,
    score: f64,
}

fn score(rows: &[&Instance], attribute: usize, kind: &AttributeKind, k: usize, ratio: bool) -> Option<Candidate> {
    let (threshold, branches) = match kind {
        AttributeKind::Nominal(tokens) => (None, nominal_branches(rows, attribute, tokens.len(), k)),
        AttributeKind::Continuous => {
            let (t, _, [low, high]) = threshold_scan(rows, attribute, k)?;
            (Some(t), vec![low, high])
        }
    };
    let gain = split_gain(&branches).ok()?;
    let sizes: Vec<usize> = branches.iter().map(|b| b.iter().sum()).collect();
    let info = split_info(&sizes);
    if info == 0.0 {
        return None;
    }
    Some(Candidate {
        attribute,
        threshold,
        score: if ratio { gain / info } else { gain },
    })
}

/// Scores closer than this count as tied, so schema order decides rather
/// than rounding noise.
const SCORE_EPS: f64 = 1e-12;

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Inducer<'a> {
    schema: &'a DatasetSchema,
    params: &'a C45Params,
    k: usize,
}

impl Inducer<'_> {
    fn grow(&self, rows: &[&Instance], consumed: &mut Vec<bool>, depth: usize, fallback: usize) -> Node {
        if rows.is_empty() {
            return Node::leaf(fallback);
        }
        let counts = counts(rows, self.k);
        let label = majority(&counts);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < self.params.min_instances_per_leaf || self.params.max_depth.is_some_and(|d| depth >= d)
        {
            return Node::leaf(label);
        }
        let mut best: Option<Candidate> = None;
        for (a, attr) in self.schema.inputs().enumerate() {
            if consumed[a] {
                continue;
            }
            if let Some(c) = score(rows, a, &attr.kind, self.k, self.params.use_gain_ratio) {
                if c.score > SCORE_EPS && best.as_ref().is_none_or(|b| c.score > b.score + SCORE_EPS) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best else {
            return Node::leaf(label);
        };
        match best.threshold {
            Some(t) => {
                let (low, high): (Vec<&Instance>, Vec<&Instance>) = rows
                    .iter()
                    .partition(|r| r.values[best.attribute].as_real().expect("continuous") <= t);
                Node::internal(
                    MofNTest::single(Literal::less_equal(best.attribute, t)),
                    self.grow(&low, consumed, depth + 1, label),
                    self.grow(&high, consumed, depth + 1, label),
                )
            }
            None => {
                let tokens = self.schema.input(best.attribute).kind.tokens().expect("nominal").len();
                consumed[best.attribute] = true;
                let children: Vec<Node> = (0..tokens)
                    .map(|t| {
                        let part: Vec<&Instance> = rows
                            .iter()
                            .copied()
                            .filter(|r| r.values[best.attribute] == crate::dataset::Value::Token(t))
                            .collect();
                        self.grow(&part, consumed, depth + 1, label)
                    })
                    .collect();
                consumed[best.attribute] = false;
                compile_multiway(best.attribute, children)
            }
        }
    }
}

/// `attr = t0 ? c0 : (attr = t1 ? c1 : ... c_last)`; the last token needs no
/// test of its own.
fn compile_multiway(attribute: usize, mut children: Vec<Node>) -> Node {
    let mut node = children.pop().expect("nominal attributes have tokens");
    for (t, child) in children.into_iter().enumerate().rev() {
        let mut next = Node::internal(MofNTest::single(Literal::equals(attribute, t)), child, node);
        if t > 0 {
            if let Node::Internal { continues_split, .. } = &mut next {
                *continues_split = true;
            }
        }
        node = next;
    }
    node
}

/// Grows an unpruned tree on `train`.
///
/// Nominal splits are multiway (compiled to a chain of equality tests) and
/// consume their attribute along the path; continuous splits are binary and
/// may recur. Attribute ties go to the earlier attribute.
pub fn induce_c45(train: &Dataset, params: &C45Params) -> Result<DecisionTree> {
    if params.min_instances_per_leaf == 0 {
        return Err(Error::Config("min_instances_per_leaf must be at least 1".into()));
    }
    if train.is_empty() {
        return Err(Error::Data("cannot induce a tree from an empty dataset".into()));
    }
    let schema = train.schema();
    let k = class_count(schema)?;
    let inducer = Inducer { schema, params, k };
    let rows = rows(train);
    let mut consumed = vec![false; schema.input_count()];
    let root = inducer.grow(&rows, &mut consumed, 0, 0);
    DecisionTree::new(
        root,
        Arc::clone(schema),
        Provenance::Induced {
            params: params.digest(),
        },
    )
}
