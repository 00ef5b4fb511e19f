//! Oracle-guided tree extraction.
//!
//! Leaves are expanded best first. A popped leaf is topped up with
//! network-labeled samples, then split with the best m-of-n test a beam
//! search can find. Growth stops at the internal-node budget or when no leaf
//! is worth expanding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::c45::{entropy_of, split_gain};
use crate::dataset::{AttributeKind, Dataset, DatasetSchema, Value};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::oracle::{
    ensure_min_sample, fit_feature_models, BandwidthRule, Constraint, LabeledSample, Oracle, DEFAULT_REJECTION_CAP,
};
use crate::tree::{DecisionTree, Literal, MofNTest, Node, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Full m-of-n beam search.
    MofN,
    /// One literal per node.
    SingleTest,
    /// 1-of-n tests only.
    Disjunctive,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::MofN => "mofn",
            Variant::SingleTest => "single",
            Variant::Disjunctive => "disjunctive",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mofn" => Ok(Variant::MofN),
            "single" | "single_test" => Ok(Variant::SingleTest),
            "disjunctive" => Ok(Variant::Disjunctive),
            _ => Err(Error::Config(format!(
                "unknown variant `{s}` (expected mofn, single or disjunctive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrepanParams {
    pub min_sample: usize,
    pub max_internal_nodes: usize,
    pub beam_width: usize,
    pub variant: Variant,
    /// A leaf whose majority fraction reaches this is final.
    pub purity_stop: f64,
    pub seed: u64,
    pub rejection_cap: usize,
}

impl Default for TrepanParams {
    fn default() -> Self {
        TrepanParams {
            min_sample: 1000,
            max_internal_nodes: 50,
            beam_width: 2,
            variant: Variant::MofN,
            purity_stop: 0.99,
            seed: 0,
            rejection_cap: DEFAULT_REJECTION_CAP,
        }
    }
}

impl TrepanParams {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::Config("beam width must be at least 1".into()));
        }
        if !(self.purity_stop > 0.5 && self.purity_stop <= 1.0) {
            return Err(Error::Config(format!(
                "purity_stop {} is outside (0.5, 1]",
                self.purity_stop
            )));
        }
        if self.rejection_cap == 0 {
            return Err(Error::Config("rejection cap must be at least 1".into()));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        format!(
            "trepan variant={} min_sample={} max_nodes={} beam={} purity={} seed={}",
            self.variant, self.min_sample, self.max_internal_nodes, self.beam_width, self.purity_stop, self.seed
        )
    }
}

/// A leaf waiting in the expansion queue.
#[derive(Debug, Clone)]
pub struct LeafRecord {
    pub id: usize,
    pub constraints: Vec<Constraint>,
    pub examples: Vec<LabeledSample>,
    /// Estimated share of the input distribution reaching the leaf.
    pub reach: f64,
    /// Share of the leaf's examples that agree with its majority label.
    pub fidelity: f64,
}

pub fn node_priority(r: &LeafRecord) -> f64 {
    r.reach * (1.0 - r.fidelity)
}

/// Equality literals for every observed token, and `>` literals at the
/// midpoints between neighbouring distinct values whose labels differ.
pub fn candidate_literals(samples: &[LabeledSample], schema: &DatasetSchema) -> Vec<Literal> {
    let mut out = Vec::new();
    for (a, attr) in schema.inputs().enumerate() {
        match &attr.kind {
            AttributeKind::Nominal(tokens) => {
                let mut seen = vec![false; tokens.len()];
                for s in samples {
                    seen[s.values[a].as_token().expect("nominal value")] = true;
                }
                let observed: Vec<usize> = (0..tokens.len()).filter(|&t| seen[t]).collect();
                if observed.len() > 1 {
                    out.extend(observed.into_iter().map(|t| Literal::equals(a, t)));
                }
            }
            AttributeKind::Continuous => {
                let mut pairs: Vec<(f64, usize)> = samples
                    .iter()
                    .map(|s| (s.values[a].as_real().expect("continuous value"), s.label))
                    .collect();
                pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                // group equal values; a boundary exists where the label sets
                // of neighbouring groups are not the same single label
                let mut groups: Vec<(f64, usize, bool)> = Vec::new();
                for (v, l) in pairs {
                    match groups.last_mut() {
                        Some(g) if g.0 == v => g.2 |= g.1 != l,
                        _ => groups.push((v, l, false)),
                    }
                }
                for w in groups.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    if lo.2 || hi.2 || lo.1 != hi.1 {
                        out.push(Literal::greater_than(a, lo.0 + (hi.0 - lo.0) / 2.0));
                    }
                }
            }
        }
    }
    out
}

fn class_counts(samples: &[LabeledSample], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for s in samples {
        c[s.label] += 1;
    }
    c
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Information gain of the pass/fail partition induced by `test`.
pub fn test_gain(test: &MofNTest, samples: &[LabeledSample], classes: usize) -> Result<f64> {
    let mut branches = vec![vec![0usize; classes]; 2];
    for s in samples {
        let side = usize::from(!test.evaluate(&s.values)?);
        branches[side][s.label] += 1;
    }
    split_gain(&branches)
}

/// The winning test of a split search.
#[derive(Debug, Clone)]
pub struct SplitChoice {
    pub test: MofNTest,
    pub gain: f64,
    /// How many tests the search scored on the way.
    pub scored: usize,
}

/// Improvements smaller than this do not count, so rounding noise cannot
/// keep the search going or reorder ties.
const GAIN_EPS: f64 = 1e-12;

struct Scorer<'a> {
    samples: &'a [LabeledSample],
    totals: Vec<usize>,
    parent: f64,
    /// truth[c][s]: does candidate c hold for sample s.
    truth: Vec<Vec<bool>>,
}

impl Scorer<'_> {
    fn gain(&self, pass: &[usize]) -> f64 {
        let n = self.samples.len();
        let n_pass: usize = pass.iter().sum();
        let fail: Vec<usize> = self.totals.iter().zip(pass).map(|(t, p)| t - p).collect();
        let n_fail = n - n_pass;
        let child = (n_pass as f64 * entropy_of(pass, n_pass) + n_fail as f64 * entropy_of(&fail, n_fail)) / n as f64;
        (self.parent - child).max(0.0)
    }

    /// Gains of `at least m` and `at least m + 1` after adding candidate
    /// `c` to a test whose per-sample hit counts are `hits`.
    fn extend(&self, hits: &[u16], c: usize, m: usize) -> (f64, f64) {
        let k = self.totals.len();
        let mut pass = vec![0usize; 2 * k];
        for ((s, &h), &t) in self.samples.iter().zip(hits).zip(&self.truth[c]) {
            let h = usize::from(h) + usize::from(t);
            if h >= m {
                pass[s.label] += 1;
                if h > m {
                    pass[k + s.label] += 1;
                }
            }
        }
        (self.gain(&pass[..k]), self.gain(&pass[k..]))
    }
}

struct BeamEntry {
    m: usize,
    /// Candidate indices, ascending.
    members: Vec<usize>,
    /// Per sample, how many of the test's literals hold.
    hits: Vec<u16>,
    gain: f64,
}

impl BeamEntry {
    fn test(&self, candidates: &[Literal]) -> MofNTest {
        let literals = self.members.iter().map(|&i| candidates[i]).collect();
        MofNTest::new(self.m, literals)
            .expect("1 <= m <= n by construction")
            .canonical()
    }
}

/// Finds a split test for `samples` according to `params.variant`.
/// `None` means no literal separates anything (the caller makes a leaf).
pub fn search_split(
    samples: &[LabeledSample],
    schema: &DatasetSchema,
    params: &TrepanParams,
) -> Result<Option<SplitChoice>> {
    let classes = schema
        .class_labels()
        .ok_or_else(|| Error::Extraction("split search needs class labels".into()))?
        .len();
    if samples.is_empty() {
        return Ok(None);
    }
    let candidates = candidate_literals(samples, schema);
    if candidates.is_empty() {
        return Ok(None);
    }
    let truth = candidates
        .iter()
        .map(|lit| samples.iter().map(|s| lit.holds(&s.values)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let totals = class_counts(samples, classes);
    let scorer = Scorer {
        samples,
        parent: entropy_of(&totals, samples.len()),
        totals,
        truth,
    };
    let zeros = vec![0u16; samples.len()];
    let mut scored = 0usize;

    let mut seed: Option<(usize, f64)> = None;
    for c in 0..candidates.len() {
        let (gain, _) = scorer.extend(&zeros, c, 1);
        scored += 1;
        if seed.is_none_or(|(_, g)| gain > g + GAIN_EPS) {
            seed = Some((c, gain));
        }
    }
    let (c, gain) = seed.expect("at least one candidate");
    let seed = BeamEntry {
        m: 1,
        members: vec![c],
        hits: scorer.truth[c].iter().map(|&b| u16::from(b)).collect(),
        gain,
    };
    if params.variant == Variant::SingleTest {
        return Ok(Some(SplitChoice {
            test: seed.test(&candidates),
            gain,
            scored,
        }));
    }

    let bumps: &[usize] = if params.variant == Variant::MofN { &[0, 1] } else { &[0] };
    let mut best = seed.test(&candidates);
    let mut best_gain = gain;
    let mut beam = vec![seed];
    loop {
        // (gain, beam entry, candidate, bump), in construction order
        let mut moves: Vec<(f64, usize, usize, usize)> = Vec::new();
        for (e, entry) in beam.iter().enumerate() {
            for c in 0..candidates.len() {
                if entry.members.binary_search(&c).is_ok() {
                    continue;
                }
                let gains = scorer.extend(&entry.hits, c, entry.m);
                for &bump in bumps {
                    moves.push((if bump == 0 { gains.0 } else { gains.1 }, e, c, bump));
                }
            }
        }
        scored += moves.len();
        // stable: equal gains keep construction order
        moves.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut next: Vec<BeamEntry> = Vec::new();
        for &(gain, e, c, bump) in &moves {
            if next.len() == params.beam_width {
                break;
            }
            let parent = &beam[e];
            let mut members = parent.members.clone();
            let at = members.binary_search(&c).unwrap_err();
            members.insert(at, c);
            let m = parent.m + bump;
            // the same test can be reached from two beam entries
            if next.iter().any(|n| n.m == m && n.members == members) {
                continue;
            }
            let hits = parent
                .hits
                .iter()
                .zip(&scorer.truth[c])
                .map(|(&h, &t)| h + u16::from(t))
                .collect();
            next.push(BeamEntry { m, members, hits, gain });
        }
        match next.first() {
            Some(top) if top.gain > best_gain + GAIN_EPS => {
                best = top.test(&candidates);
                best_gain = top.gain;
                beam = next;
            }
            _ => break,
        }
    }
    Ok(Some(SplitChoice {
        test: best,
        gain: best_gain,
        scored,
    }))
}

/// What happened when a leaf was taken off the queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Split,
    Pure,
    NoSplit,
    /// The rejection cap ran out while topping the leaf up.
    Unsampleable,
}

impl Outcome {
    fn name(self) -> &'static str {
        match self {
            Outcome::Split => "split",
            Outcome::Pure => "pure",
            Outcome::NoSplit => "no_split",
            Outcome::Unsampleable => "unsampleable",
        }
    }
}

/// One line of the expansion log.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub node: usize,
    pub priority: f64,
    pub reach: f64,
    pub fidelity: f64,
    /// Examples the leaf arrived with.
    pub examples: usize,
    /// Oracle queries made to top it up.
    pub queries: usize,
    pub outcome: Outcome,
    /// The chosen test, as text.
    pub test: Option<String>,
    pub gain: Option<f64>,
    pub candidates_scored: usize,
}

pub const AUDIT_HEADER: [&str; 10] = [
    "node",
    "priority",
    "reach",
    "fidelity",
    "examples",
    "queries",
    "outcome",
    "test",
    "gain",
    "candidates_scored",
];

pub fn audit_csv(rows: &[AuditRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(AUDIT_HEADER).expect("in-memory CSV");
    for r in rows {
        w.write_record([
            r.node.to_string(),
            format!("{:?}", r.priority),
            format!("{:?}", r.reach),
            format!("{:?}", r.fidelity),
            r.examples.to_string(),
            r.queries.to_string(),
            r.outcome.name().to_string(),
            r.test.clone().unwrap_or_default(),
            r.gain.map_or(String::new(), |g| format!("{g:?}")),
            r.candidates_scored.to_string(),
        ])
        .expect("in-memory CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV of UTF-8 fields")
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub tree: DecisionTree,
    pub audit: Vec<AuditRow>,
    /// Network queries, including labeling the training data.
    pub queries: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Queued {
    priority: f64,
    id: usize,
}

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum Slot {
    Leaf(usize),
    Internal { test: MofNTest, pass: usize, fail: usize },
}

const REACH_STREAM: u64 = u64::MAX;

pub fn extract_tree(net: &Network, train: &Dataset, params: &TrepanParams) -> Result<DecisionTree> {
    Ok(extract_with_audit(net, train, params)?.tree)
}

/// Like [`extract_tree`], also returning the expansion log.
pub fn extract_with_audit(net: &Network, train: &Dataset, params: &TrepanParams) -> Result<Extraction> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::Extraction("cannot extract from an empty training set".into()));
    }
    let labels = net
        .labels()
        .ok_or_else(|| Error::Config("regression network needs a binning to be extracted".into()))?
        .to_vec();
    net.check_schema(train.schema())?;
    let schema = Arc::new(
        train
            .schema()
            .with_target_kind(AttributeKind::Nominal(labels.clone()))?,
    );
    let classes = labels.len();
    let models = fit_feature_models(train, BandwidthRule::default())?;
    let oracle =
        Oracle::new(net, Arc::clone(&schema), models, params.seed)?.with_rejection_cap(params.rejection_cap)?;

    let root_examples = train
        .instances()
        .iter()
        .map(|inst| {
            Ok(LabeledSample {
                values: inst.values.clone(),
                label: oracle.query(&inst.values)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reach_sample: Vec<Vec<Value>> = if params.min_sample > 0 {
        oracle.draw_instances(&[], params.min_sample, REACH_STREAM)?
    } else {
        train.instances().iter().map(|i| i.values.clone()).collect()
    };
    let reach_of = |constraints: &[Constraint]| -> Result<f64> {
        let mut inside = 0usize;
        'sample: for v in &reach_sample {
            for c in constraints {
                if !c.holds(v)? {
                    continue 'sample;
                }
            }
            inside += 1;
        }
        Ok(inside as f64 / reach_sample.len() as f64)
    };

    let root_counts = class_counts(&root_examples, classes);
    let mut slots = vec![Slot::Leaf(majority(&root_counts))];
    let mut pending: Vec<Option<LeafRecord>> = vec![Some(leaf_record(0, Vec::new(), root_examples, 1.0, classes))];
    let mut fallback = vec![majority(&root_counts)];
    let mut heap = BinaryHeap::new();
    heap.push(Queued {
        priority: node_priority(pending[0].as_ref().expect("root")),
        id: 0,
    });
    let mut audit = Vec::new();
    let mut internal = 0usize;

    while internal < params.max_internal_nodes {
        let Some(Queued { priority, id }) = heap.pop() else {
            break;
        };
        // Nothing left to gain once the best leaf has zero priority. The
        // root is always examined because its estimate comes from the
        // training rows alone.
        if priority <= 0.0 && id != 0 {
            break;
        }
        let record = pending[id].take().expect("queued leaves are pending");
        let arrived = record.examples.len();
        let before = oracle.query_count();
        // A region too thin to sample is finalized with what reached it.
        let (examples, sampled) = match ensure_min_sample(
            record.examples.clone(),
            params.min_sample,
            &oracle,
            &record.constraints,
            id as u64,
        ) {
            Ok(examples) => (examples, true),
            Err(Error::Unsatisfiable { .. }) => (record.examples, false),
            Err(e) => return Err(e),
        };
        let queries = oracle.query_count() - before;
        let counts = class_counts(&examples, classes);
        let label = if examples.is_empty() {
            fallback[id]
        } else {
            majority(&counts)
        };
        slots[id] = Slot::Leaf(label);
        let mut row = AuditRow {
            node: id,
            priority,
            reach: record.reach,
            fidelity: record.fidelity,
            examples: arrived,
            queries,
            outcome: if sampled { Outcome::Pure } else { Outcome::Unsampleable },
            test: None,
            gain: None,
            candidates_scored: 0,
        };
        if !sampled {
            audit.push(row);
            continue;
        }
        let purity = if examples.is_empty() {
            1.0
        } else {
            counts[label] as f64 / examples.len() as f64
        };
        if purity >= params.purity_stop {
            audit.push(row);
            continue;
        }
        let choice = search_split(&examples, &schema, params)?;
        row.candidates_scored = choice.as_ref().map_or(0, |c| c.scored);
        let Some(choice) = choice.filter(|c| c.gain > 0.0) else {
            row.outcome = Outcome::NoSplit;
            audit.push(row);
            continue;
        };
        row.outcome = Outcome::Split;
        row.test = Some(choice.test.display(&schema).to_string());
        row.gain = Some(choice.gain);
        audit.push(row);

        let (mut pass, mut fail) = (Vec::new(), Vec::new());
        for s in examples {
            if choice.test.evaluate(&s.values)? {
                pass.push(s);
            } else {
                fail.push(s);
            }
        }
        let mut children = [0usize; 2];
        for (side, (satisfied, part)) in [(true, pass), (false, fail)].into_iter().enumerate() {
            let child = slots.len();
            children[side] = child;
            let mut constraints = record.constraints.clone();
            constraints.push(Constraint {
                test: choice.test.clone(),
                satisfied,
            });
            let child_counts = class_counts(&part, classes);
            let child_label = if part.is_empty() {
                label
            } else {
                majority(&child_counts)
            };
            slots.push(Slot::Leaf(child_label));
            fallback.push(label);
            let reach = reach_of(&constraints)?;
            let rec = leaf_record(child, constraints, part, reach, classes);
            heap.push(Queued {
                priority: node_priority(&rec),
                id: child,
            });
            pending.push(Some(rec));
        }
        slots[id] = Slot::Internal {
            test: choice.test,
            pass: children[0],
            fail: children[1],
        };
        internal += 1;
    }

    let root = build(&slots, 0);
    let tree = DecisionTree::new(
        root,
        schema,
        Provenance::Extracted {
            params: params.digest(),
        },
    )?;
    Ok(Extraction {
        tree,
        audit,
        queries: oracle.query_count(),
    })
}

fn leaf_record(
    id: usize,
    constraints: Vec<Constraint>,
    examples: Vec<LabeledSample>,
    reach: f64,
    classes: usize,
) -> LeafRecord {
    let fidelity = if examples.is_empty() {
        0.0
    } else {
        let counts = class_counts(&examples, classes);
        counts[majority(&counts)] as f64 / examples.len() as f64
    };
    LeafRecord {
        id,
        constraints,
        examples,
        reach,
        fidelity,
    }
}

fn build(slots: &[Slot], id: usize) -> Node {
    match &slots[id] {
        Slot::Leaf(label) => Node::leaf(*label),
        Slot::Internal { test, pass, fail } => Node::internal(test.clone(), build(slots, *pass), build(slots, *fail)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::c45::info_gain;
    use crate::dataset::{parse_dataset, AttributeSpec, Role};
    use crate::network::{Activation, FeatureEncoding, InputEncoding, Layer, Matrix, Task};
    use crate::tree::Relation;

    fn record(reach: f64, fidelity: f64) -> LeafRecord {
        LeafRecord {
            id: 0,
            constraints: vec![],
            examples: vec![],
            reach,
            fidelity,
        }
    }

    #[test]
    fn priority_examples() {
        assert_eq!(node_priority(&record(0.7, 1.0)), 0.0);
        assert_eq!(node_priority(&record(0.0, 0.3)), 0.0);
        assert!((node_priority(&record(0.5, 0.8)) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn queue_prefers_older_nodes_on_ties() {
        let mut heap = BinaryHeap::new();
        heap.push(Queued { priority: 0.2, id: 5 });
        heap.push(Queued { priority: 0.2, id: 2 });
        heap.push(Queued { priority: 0.1, id: 1 });
        assert_eq!(heap.pop().unwrap().id, 2);
        assert_eq!(heap.pop().unwrap().id, 5);
    }

    fn sample(values: Vec<Value>, label: usize) -> LabeledSample {
        LabeledSample { values, label }
    }

    fn xy_schema(x: AttributeSpec) -> DatasetSchema {
        DatasetSchema::new(vec![x, AttributeSpec::nominal("y", ["A", "B"], Role::Target)]).unwrap()
    }

    #[test]
    fn candidate_examples() {
        let nominal = xy_schema(AttributeSpec::nominal("x", ["Sunny", "Overcast", "Rain"], Role::Input));
        let s = [sample(vec![Value::Token(0)], 0), sample(vec![Value::Token(2)], 1)];
        assert_eq!(
            candidate_literals(&s, &nominal),
            vec![Literal::equals(0, 0), Literal::equals(0, 2)]
        );
        let cont = xy_schema(AttributeSpec::continuous("x", Role::Input));
        let s = [sample(vec![Value::Real(1.0)], 0), sample(vec![Value::Real(2.0)], 1)];
        assert_eq!(candidate_literals(&s, &cont), vec![Literal::greater_than(0, 1.5)]);
        let s = [sample(vec![Value::Real(3.0)], 0), sample(vec![Value::Real(3.0)], 1)];
        assert!(candidate_literals(&s, &cont).is_empty());
        // same-label neighbours are not boundaries
        let s = [
            sample(vec![Value::Real(1.0)], 0),
            sample(vec![Value::Real(2.0)], 0),
            sample(vec![Value::Real(3.0)], 1),
        ];
        assert_eq!(candidate_literals(&s, &cont), vec![Literal::greater_than(0, 2.5)]);
    }

    #[test]
    fn one_candidate_is_returned_as_one_of_one() {
        let cont = xy_schema(AttributeSpec::continuous("x", Role::Input));
        let s = [sample(vec![Value::Real(1.0)], 0), sample(vec![Value::Real(2.0)], 1)];
        let params = TrepanParams {
            beam_width: 1,
            ..Default::default()
        };
        let choice = search_split(&s, &cont, &params).unwrap().unwrap();
        assert_eq!(choice.test, MofNTest::single(Literal::greater_than(0, 1.5)));
    }

    fn boolean_schema() -> DatasetSchema {
        DatasetSchema::new(vec![
            AttributeSpec::nominal("a", ["F", "T"], Role::Input),
            AttributeSpec::nominal("b", ["F", "T"], Role::Input),
            AttributeSpec::nominal("c", ["F", "T"], Role::Input),
            AttributeSpec::nominal("y", ["0", "1"], Role::Target),
        ])
        .unwrap()
    }

    fn two_of_three_rows() -> Vec<LabeledSample> {
        (0..8u8)
            .map(|bits| {
                let values: Vec<Value> = (0..3).map(|i| Value::Token(usize::from(bits >> i & 1 == 1))).collect();
                let ones = bits.count_ones() as usize;
                sample(values, usize::from(ones >= 2))
            })
            .collect()
    }

    /// Truth table of `test` over the eight boolean rows.
    fn truth_table(test: &MofNTest, rows: &[LabeledSample]) -> Vec<bool> {
        rows.iter().map(|r| test.evaluate(&r.values).unwrap()).collect()
    }

    /// Every m-of-n test over the six equality literals with n <= 3.
    fn all_small_tests() -> Vec<MofNTest> {
        let lits: Vec<Literal> = (0..3)
            .flat_map(|a| (0..2).map(move |t| Literal::equals(a, t)))
            .collect();
        let mut out = Vec::new();
        for mask in 1u32..(1 << lits.len()) {
            let chosen: Vec<Literal> = (0..lits.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| lits[i])
                .collect();
            if chosen.len() > 3 {
                continue;
            }
            for m in 1..=chosen.len() {
                out.push(MofNTest::new(m, chosen.clone()).unwrap());
            }
        }
        out
    }

    #[test]
    fn two_of_three_is_the_unique_gain_maximizer() {
        let rows = two_of_three_rows();
        let schema = boolean_schema();
        let choice = search_split(&rows, &schema, &TrepanParams::default()).unwrap().unwrap();
        let target: Vec<bool> = rows.iter().map(|r| r.label == 1).collect();
        let table = truth_table(&choice.test, &rows);
        // the chosen test separates the classes exactly, in either orientation
        let inverted: Vec<bool> = target.iter().map(|b| !b).collect();
        assert!(table == target || table == inverted, "{:?}", choice.test);

        // brute force: only the two majority tests reach the full entropy
        let best = all_small_tests()
            .into_iter()
            .map(|t| (test_gain(&t, &rows, 2).unwrap(), t))
            .filter(|(g, _)| (g - 1.0).abs() < 1e-12)
            .map(|(_, t)| truth_table(&t, &rows))
            .collect::<Vec<_>>();
        assert!(!best.is_empty());
        assert!(best.iter().all(|t| *t == target || *t == inverted));
        assert!((choice.gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_test_on_play_tennis_picks_outlook() {
        let data = bundled::play_tennis();
        let rows: Vec<LabeledSample> = data
            .instances()
            .iter()
            .map(|i| sample(i.values.clone(), i.target.label().unwrap()))
            .collect();
        let params = TrepanParams {
            variant: Variant::SingleTest,
            ..Default::default()
        };
        let choice = search_split(&rows, data.schema(), &params).unwrap().unwrap();
        assert_eq!(choice.test.n(), 1);
        let attr = choice.test.literals()[0].attribute;
        let best_attr = (0..4)
            .max_by(|&a, &b| info_gain(&data, a).unwrap().total_cmp(&info_gain(&data, b).unwrap()))
            .unwrap();
        assert_eq!(attr, best_attr);
        assert_eq!(data.schema().input(attr).name, "Outlook");
        // no single equality literal does better
        let best_literal = (0..4)
            .flat_map(|a| (0..data.schema().input(a).kind.tokens().unwrap().len()).map(move |t| Literal::equals(a, t)))
            .map(|lit| test_gain(&MofNTest::single(lit), &rows, 2).unwrap())
            .fold(f64::MIN, f64::max);
        assert!((choice.gain - best_literal).abs() < 1e-12);
    }

    #[test]
    fn disjunctive_tests_keep_m_at_one() {
        let rows = two_of_three_rows();
        let params = TrepanParams {
            variant: Variant::Disjunctive,
            ..Default::default()
        };
        let choice = search_split(&rows, &boolean_schema(), &params).unwrap().unwrap();
        assert_eq!(choice.test.m(), 1);
        let single = search_split(
            &rows,
            &boolean_schema(),
            &TrepanParams {
                variant: Variant::SingleTest,
                ..params
            },
        )
        .unwrap()
        .unwrap();
        assert!(choice.gain >= single.gain);
    }

    #[test]
    fn chosen_test_rescores_to_its_gain() {
        let rows = two_of_three_rows();
        let choice = search_split(&rows, &boolean_schema(), &TrepanParams::default())
            .unwrap()
            .unwrap();
        assert!((test_gain(&choice.test, &rows, 2).unwrap() - choice.gain).abs() < 1e-12);
        for t in all_small_tests() {
            assert!(test_gain(&t, &rows, 2).unwrap() <= choice.gain + 1e-12);
        }
    }

    /// A net answering "1" when x > 0.5 (step unit on x - 0.5).
    fn threshold_net() -> Network {
        Network::new(
            1,
            vec![Layer::new(
                Matrix::from_rows(vec![vec![1.0]]).unwrap(),
                vec![-0.5],
                Activation::Step,
            )],
            vec![],
            Task::Classification {
                labels: vec!["0".into(), "1".into()],
            },
            InputEncoding::new(vec![FeatureEncoding::scaled("x", 0.0, 1.0)]),
        )
        .unwrap()
    }

    fn grid() -> Dataset {
        let schema = Arc::new(
            DatasetSchema::new(vec![
                AttributeSpec::continuous("x", Role::Input),
                AttributeSpec::nominal("y", ["0", "1"], Role::Target),
            ])
            .unwrap(),
        );
        let rows: String = (0..=1000)
            .map(|i| format!("{},{}\n", i as f64 / 1000.0, usize::from(i >= 500)))
            .collect();
        parse_dataset(&format!("x,y\n{rows}"), &schema).unwrap()
    }

    #[test]
    fn recovers_a_threshold() {
        let net = threshold_net();
        let data = grid();
        let tree = extract_tree(&net, &data, &TrepanParams::default()).unwrap();
        assert_eq!(tree.complexity().internal_nodes, 1);
        let Node::Internal { test, .. } = tree.root() else {
            panic!("expected a split")
        };
        match test.literals()[0].relation {
            Relation::GreaterThan(t) => assert!((t - 0.5).abs() <= 0.05, "{t}"),
            other => panic!("{other:?}"),
        }
        for inst in data.instances() {
            assert_eq!(tree.classify_label(inst).unwrap(), net.predict_label(inst).unwrap());
        }
    }

    #[test]
    fn zero_budget_gives_a_single_leaf() {
        let net = threshold_net();
        let params = TrepanParams {
            max_internal_nodes: 0,
            ..Default::default()
        };
        let tree = extract_tree(&net, &grid(), &params).unwrap();
        assert_eq!(tree.complexity().internal_nodes, 0);
        assert_eq!(tree.complexity().leaves, 1);
    }

    #[test]
    fn constant_network_gives_one_leaf() {
        let mut net = threshold_net();
        net.set_parameters(&[0.0, 1.0]).unwrap();
        let ex = extract_with_audit(&net, &grid(), &TrepanParams::default()).unwrap();
        assert_eq!(ex.tree.root(), &Node::leaf(1));
        assert_eq!(ex.audit.len(), 1);
        assert_eq!(ex.audit[0].outcome, Outcome::Pure);
    }

    #[test]
    fn extraction_is_deterministic_and_audited() {
        let net = threshold_net();
        let params = TrepanParams {
            min_sample: 300,
            ..Default::default()
        };
        let a = extract_with_audit(&net, &grid(), &params).unwrap();
        let b = extract_with_audit(&net, &grid(), &params).unwrap();
        assert_eq!(a.tree.serialize(), b.tree.serialize());
        let csv = audit_csv(&a.audit);
        assert_eq!(csv, audit_csv(&b.audit));
        assert!(csv.starts_with("node,priority,reach,fidelity,examples,queries,outcome,test,gain,candidates_scored\n"));
        assert_eq!(csv.lines().count(), a.audit.len() + 1);
    }

    #[test]
    fn parameter_validation() {
        let bad = [
            TrepanParams {
                beam_width: 0,
                ..Default::default()
            },
            TrepanParams {
                purity_stop: 0.5,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(matches!(
                extract_tree(&threshold_net(), &grid(), &p),
                Err(Error::Config(_))
            ));
        }
        let empty = grid().subset(&[]);
        assert!(matches!(
            extract_tree(&threshold_net(), &empty, &TrepanParams::default()),
            Err(Error::Extraction(_))
        ));
        assert_eq!("single".parse::<Variant>().unwrap(), Variant::SingleTest);
        assert!("best".parse::<Variant>().is_err());
    }
}
