//! The symbolic model shared by extraction and induction: literals, m-of-n
//! tests and binary pass/fail decision trees.

mod serial;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::dataset::{AttributeKind, DatasetSchema, Instance, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relation {
    /// Nominal attribute equals the token with this index.
    Equals(usize),
    GreaterThan(f64),
    LessEqual(f64),
}

/// An atomic condition on one input attribute (by input index).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Literal {
    pub attribute: usize,
    pub relation: Relation,
}

impl Literal {
    pub fn equals(attribute: usize, token: usize) -> Self {
        Literal {
            attribute,
            relation: Relation::Equals(token),
        }
    }

    pub fn greater_than(attribute: usize, threshold: f64) -> Self {
        Literal {
            attribute,
            relation: Relation::GreaterThan(threshold),
        }
    }

    pub fn less_equal(attribute: usize, threshold: f64) -> Self {
        Literal {
            attribute,
            relation: Relation::LessEqual(threshold),
        }
    }

    pub fn holds(&self, values: &[Value]) -> Result<bool> {
        let value = values.get(self.attribute).ok_or_else(|| {
            Error::Structural(format!(
                "literal refers to input {} but the instance has {}",
                self.attribute,
                values.len()
            ))
        })?;
        match (self.relation, *value) {
            (Relation::Equals(t), Value::Token(v)) => Ok(v == t),
            (Relation::GreaterThan(th), Value::Real(v)) => Ok(v > th),
            (Relation::LessEqual(th), Value::Real(v)) => Ok(v <= th),
            (relation, value) => Err(Error::Structural(format!(
                "literal {relation:?} cannot be applied to {value:?}"
            ))),
        }
    }

    /// Checks the literal against the schema's input attributes.
    pub fn check(&self, schema: &DatasetSchema) -> Result<()> {
        if self.attribute >= schema.input_count() {
            return Err(Error::Structural(format!(
                "literal refers to input {}, schema has {}",
                self.attribute,
                schema.input_count()
            )));
        }
        let attr = schema.input(self.attribute);
        let ok = match (&attr.kind, self.relation) {
            (AttributeKind::Nominal(tokens), Relation::Equals(t)) => t < tokens.len(),
            (AttributeKind::Continuous, Relation::GreaterThan(th) | Relation::LessEqual(th)) => th.is_finite(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "literal {:?} does not fit attribute `{}`",
                self.relation, attr.name
            )))
        }
    }

    /// Total order used to canonicalize tests: attribute, then relation.
    pub fn canonical_cmp(&self, other: &Literal) -> Ordering {
        fn rank(r: Relation) -> (u8, f64) {
            match r {
                Relation::Equals(t) => (0, t as f64),
                Relation::GreaterThan(th) => (1, th),
                Relation::LessEqual(th) => (2, th),
            }
        }
        let (ra, va) = rank(self.relation);
        let (rb, vb) = rank(other.relation);
        self.attribute
            .cmp(&other.attribute)
            .then(ra.cmp(&rb))
            .then(va.total_cmp(&vb))
    }

    pub fn display<'a>(&'a self, schema: &'a DatasetSchema) -> impl fmt::Display + 'a {
        DisplayLiteral(self, schema)
    }
}

struct DisplayLiteral<'a>(&'a Literal, &'a DatasetSchema);

impl fmt::Display for DisplayLiteral<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let attr = self.1.input(self.0.attribute);
        match self.0.relation {
            Relation::Equals(t) => {
                let token = attr.kind.tokens().and_then(|ts| ts.get(t)).map_or("?", String::as_str);
                write!(f, "{} = {}", attr.name, token)
            }
            Relation::GreaterThan(th) => write!(f, "{} > {}", attr.name, th),
            Relation::LessEqual(th) => write!(f, "{} <= {}", attr.name, th),
        }
    }
}

/// Satisfied when at least `m` of its literals hold.
#[derive(Debug, Clone, PartialEq)]
pub struct MofNTest {
    m: usize,
    literals: Vec<Literal>,
}

impl MofNTest {
    pub fn new(m: usize, literals: Vec<Literal>) -> Result<Self> {
        if m == 0 || m > literals.len() {
            return Err(Error::Structural(format!(
                "m-of-n test needs 1 <= m <= n, got m={m}, n={}",
                literals.len()
            )));
        }
        for (i, a) in literals.iter().enumerate() {
            if literals[..i].contains(a) {
                return Err(Error::Structural(format!("duplicate literal {a:?} in m-of-n test")));
            }
        }
        Ok(MofNTest { m, literals })
    }

    pub fn single(literal: Literal) -> Self {
        MofNTest {
            m: 1,
            literals: vec![literal],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.literals.len()
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn evaluate(&self, values: &[Value]) -> Result<bool> {
        let mut satisfied = 0;
        for lit in &self.literals {
            if lit.holds(values)? {
                satisfied += 1;
                if satisfied >= self.m {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Same test with literals in canonical order.
    pub fn canonical(mut self) -> Self {
        self.literals.sort_by(Literal::canonical_cmp);
        self
    }

    pub fn check(&self, schema: &DatasetSchema) -> Result<()> {
        self.literals.iter().try_for_each(|l| l.check(schema))
    }

    /// Renders as `m-of-{lit, lit, ...}`.
    pub fn display<'a>(&'a self, schema: &'a DatasetSchema) -> impl fmt::Display + 'a {
        DisplayTest(self, schema)
    }
}

/// Whether `test` holds on `inst`.
pub fn evaluate_test(test: &MofNTest, inst: &Instance) -> Result<bool> {
    test.evaluate(&inst.values)
}

struct DisplayTest<'a>(&'a MofNTest, &'a DatasetSchema);

impl fmt::Display for DisplayTest<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-of-{{", self.0.m)?;
        for (i, lit) in self.0.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", lit.display(self.1))?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        /// Index into the schema's class labels.
        label: usize,
    },
    Internal {
        test: MofNTest,
        pass: Box<Node>,
        fail: Box<Node>,
        /// Set on the nodes after the first when a multiway split was
        /// compiled into a chain of binary tests.
        continues_split: bool,
    },
}

impl Node {
    pub fn leaf(label: usize) -> Self {
        Node::Leaf { label }
    }

    pub fn internal(test: MofNTest, pass: Node, fail: Node) -> Self {
        Node::Internal {
            test,
            pass: Box::new(pass),
            fail: Box::new(fail),
            continues_split: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Extracted { params: String },
    Induced { params: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Complexity {
    pub internal_nodes: usize,
    pub leaves: usize,
    pub total_literals: usize,
    /// Internal nodes counting each compiled multiway split once.
    pub original_splits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    root: Node,
    schema: Arc<DatasetSchema>,
    provenance: Provenance,
}

impl DecisionTree {
    pub fn new(root: Node, schema: Arc<DatasetSchema>, provenance: Provenance) -> Result<Self> {
        let classes = schema
            .class_labels()
            .ok_or_else(|| Error::Structural("decision trees need a classification schema".into()))?
            .len();
        let mut stack = vec![&root];
        while let Some(node) = stack.pop() {
            match node {
                Node::Leaf { label } => {
                    if *label >= classes {
                        return Err(Error::Structural(format!("leaf label {label} out of range")));
                    }
                }
                Node::Internal { test, pass, fail, .. } => {
                    test.check(&schema)?;
                    stack.push(fail);
                    stack.push(pass);
                }
            }
        }
        Ok(DecisionTree {
            root,
            schema,
            provenance,
        })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn schema(&self) -> &Arc<DatasetSchema> {
        &self.schema
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn class_labels(&self) -> &[String] {
        self.schema.class_labels().expect("checked in new")
    }

    /// Follows pass/fail edges from the root to a leaf.
    pub fn classify(&self, values: &[Value]) -> Result<usize> {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label } => return Ok(*label),
                Node::Internal { test, pass, fail, .. } => {
                    node = if test.evaluate(values)? { pass } else { fail };
                }
            }
        }
    }

    pub fn classify_label(&self, inst: &Instance) -> Result<&str> {
        Ok(&self.class_labels()[self.classify(&inst.values)?])
    }

    pub fn complexity(&self) -> Complexity {
        let mut c = Complexity {
            internal_nodes: 0,
            leaves: 0,
            total_literals: 0,
            original_splits: 0,
        };
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match node {
                Node::Leaf { .. } => c.leaves += 1,
                Node::Internal {
                    test,
                    pass,
                    fail,
                    continues_split,
                } => {
                    c.internal_nodes += 1;
                    c.total_literals += test.n();
                    if !continues_split {
                        c.original_splits += 1;
                    }
                    stack.push(fail);
                    stack.push(pass);
                }
            }
        }
        c
    }

    /// Re-expresses the tree over another schema, matching attributes,
    /// tokens and class labels by name.
    pub fn rebind(&self, schema: &Arc<DatasetSchema>) -> Result<DecisionTree> {
        let theirs = schema
            .class_labels()
            .ok_or_else(|| Error::validation("schema", "data target is not a class attribute"))?;
        let label_map = self
            .class_labels()
            .iter()
            .map(|l| {
                theirs
                    .iter()
                    .position(|t| t == l)
                    .ok_or_else(|| Error::validation("tree", format!("class label `{l}` is absent from the data")))
            })
            .collect::<Result<Vec<_>>>()?;
        let root = self.rebind_node(&self.root, schema, &label_map)?;
        DecisionTree::new(root, Arc::clone(schema), self.provenance.clone())
    }

    fn rebind_node(&self, node: &Node, schema: &DatasetSchema, label_map: &[usize]) -> Result<Node> {
        Ok(match node {
            Node::Leaf { label } => Node::leaf(label_map[*label]),
            Node::Internal {
                test,
                pass,
                fail,
                continues_split,
            } => {
                let literals = test
                    .literals()
                    .iter()
                    .map(|lit| {
                        let ours = self.schema.input(lit.attribute);
                        let attribute = schema.input_index(&ours.name).ok_or_else(|| {
                            Error::validation("tree", format!("attribute `{}` is absent from the data", ours.name))
                        })?;
                        let relation = match lit.relation {
                            Relation::Equals(t) => {
                                let token = &ours.kind.tokens().expect("checked")[t];
                                let idx = schema.input(attribute).kind.token_index(token).ok_or_else(|| {
                                    Error::validation(
                                        "tree",
                                        format!("token `{token}` of `{}` is absent from the data", ours.name),
                                    )
                                })?;
                                Relation::Equals(idx)
                            }
                            other => other,
                        };
                        let lit = Literal { attribute, relation };
                        lit.check(schema).map_err(|e| Error::validation("tree", e))?;
                        Ok(lit)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Node::Internal {
                    test: MofNTest::new(test.m(), literals)?,
                    pass: Box::new(self.rebind_node(pass, schema, label_map)?),
                    fail: Box::new(self.rebind_node(fail, schema, label_map)?),
                    continues_split: *continues_split,
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttributeSpec, Role};
    use proptest::prelude::*;

    fn bool_schema() -> Arc<DatasetSchema> {
        Arc::new(
            DatasetSchema::new(vec![
                AttributeSpec::nominal("a", ["F", "T"], Role::Input),
                AttributeSpec::continuous("b", Role::Input),
                AttributeSpec::nominal("c", ["F", "T"], Role::Input),
                AttributeSpec::nominal("d", ["F", "T"], Role::Input),
                AttributeSpec::nominal("class", ["A", "B"], Role::Target),
            ])
            .unwrap(),
        )
    }

    fn three_of_four() -> MofNTest {
        MofNTest::new(
            3,
            vec![
                Literal::equals(0, 1),
                Literal::greater_than(1, 3.3),
                Literal::equals(2, 1),
                Literal::equals(3, 1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn three_of_four_passes_with_three() {
        let values = [Value::Token(1), Value::Real(1.0), Value::Token(1), Value::Token(1)];
        assert!(three_of_four().evaluate(&values).unwrap());
        let values = [Value::Token(0), Value::Real(1.0), Value::Token(1), Value::Token(1)];
        assert!(!three_of_four().evaluate(&values).unwrap());
        assert_eq!(
            three_of_four().display(&bool_schema()).to_string(),
            "3-of-{a = T, b > 3.3, c = T, d = T}"
        );
    }

    #[test]
    fn degenerate_m_values() {
        let values = [Value::Token(1), Value::Real(5.0), Value::Token(0), Value::Token(1)];
        assert!(MofNTest::single(Literal::equals(0, 1)).evaluate(&values).unwrap());
        let all = MofNTest::new(4, three_of_four().literals().to_vec()).unwrap();
        assert!(!all.evaluate(&values).unwrap());
    }

    #[test]
    fn malformed_tests_and_literals() {
        assert!(MofNTest::new(0, vec![Literal::equals(0, 1)]).is_err());
        assert!(MofNTest::new(2, vec![Literal::equals(0, 1)]).is_err());
        assert!(MofNTest::new(1, vec![Literal::equals(0, 1), Literal::equals(0, 1)]).is_err());
        let lit = Literal::equals(7, 0);
        assert!(matches!(lit.holds(&[Value::Token(0)]), Err(Error::Structural(_))));
        assert!(Literal::greater_than(0, 1.0).check(&bool_schema()).is_err());
    }

    pub(crate) fn depth_two(schema: &Arc<DatasetSchema>) -> DecisionTree {
        // a = T ? (b > 2 ? A : B) : (c = T ? B : A)
        let root = Node::internal(
            MofNTest::single(Literal::equals(0, 1)),
            Node::internal(
                MofNTest::single(Literal::greater_than(1, 2.0)),
                Node::leaf(0),
                Node::leaf(1),
            ),
            Node::internal(MofNTest::single(Literal::equals(2, 1)), Node::leaf(1), Node::leaf(0)),
        );
        DecisionTree::new(
            root,
            Arc::clone(schema),
            Provenance::Induced {
                params: "fixture".into(),
            },
        )
        .unwrap()
    }

    #[test]
    fn classify_examples() {
        let schema = bool_schema();
        let leaf = DecisionTree::new(
            Node::leaf(0),
            Arc::clone(&schema),
            Provenance::Induced { params: String::new() },
        )
        .unwrap();
        let x = [Value::Token(0), Value::Real(9.0), Value::Token(1), Value::Token(0)];
        assert_eq!(leaf.classify(&x).unwrap(), 0);

        // hand walk: a = F -> fail branch; c = T -> pass -> B
        let tree = depth_two(&schema);
        assert_eq!(tree.classify(&x).unwrap(), 1);
        // a = T, b = 2.5 > 2 -> A
        let y = [Value::Token(1), Value::Real(2.5), Value::Token(0), Value::Token(0)];
        assert_eq!(tree.classify(&y).unwrap(), 0);
    }

    #[test]
    fn single_threshold_tree() {
        let schema = Arc::new(
            DatasetSchema::new(vec![
                AttributeSpec::continuous("x", Role::Input),
                AttributeSpec::nominal("y", ["A", "B"], Role::Target),
            ])
            .unwrap(),
        );
        let tree = DecisionTree::new(
            Node::internal(
                MofNTest::single(Literal::greater_than(0, 0.5)),
                Node::leaf(0),
                Node::leaf(1),
            ),
            schema,
            Provenance::Induced { params: String::new() },
        )
        .unwrap();
        assert_eq!(tree.classify(&[Value::Real(0.7)]).unwrap(), 0);
        assert_eq!(tree.classify(&[Value::Real(0.5)]).unwrap(), 1);
    }

    #[test]
    fn complexity_examples() {
        let schema = bool_schema();
        let p = || Provenance::Induced { params: String::new() };
        let leaf = DecisionTree::new(Node::leaf(1), Arc::clone(&schema), p()).unwrap();
        let c = leaf.complexity();
        assert_eq!((c.internal_nodes, c.leaves, c.total_literals), (0, 1, 0));

        let one = DecisionTree::new(
            Node::internal(three_of_four(), Node::leaf(0), Node::leaf(1)),
            Arc::clone(&schema),
            p(),
        )
        .unwrap();
        let c = one.complexity();
        assert_eq!((c.internal_nodes, c.leaves, c.total_literals), (1, 2, 4));

        let c = depth_two(&schema).complexity();
        assert_eq!((c.internal_nodes, c.leaves, c.total_literals), (3, 4, 3));
    }

    #[test]
    fn leaf_label_out_of_range_rejected() {
        assert!(DecisionTree::new(
            Node::leaf(5),
            bool_schema(),
            Provenance::Induced { params: String::new() }
        )
        .is_err());
    }

    #[test]
    fn rebind_reorders_attributes_and_rejects_missing() {
        let schema = bool_schema();
        let tree = depth_two(&schema);
        let reordered = Arc::new(
            DatasetSchema::new(vec![
                AttributeSpec::nominal("class", ["B", "A"], Role::Target),
                AttributeSpec::nominal("c", ["T", "F"], Role::Input),
                AttributeSpec::continuous("b", Role::Input),
                AttributeSpec::nominal("a", ["F", "T"], Role::Input),
            ])
            .unwrap(),
        );
        let moved = tree.rebind(&reordered).unwrap();
        let x = [Value::Token(0), Value::Real(9.0), Value::Token(1), Value::Token(0)];
        // same instance in the new layout: c=T is token 0, b, a=F
        let x2 = [Value::Token(0), Value::Real(9.0), Value::Token(0)];
        assert_eq!(
            tree.class_labels()[tree.classify(&x).unwrap()],
            moved.class_labels()[moved.classify(&x2).unwrap()]
        );
        let missing = Arc::new(
            DatasetSchema::new(vec![
                AttributeSpec::nominal("a", ["F", "T"], Role::Input),
                AttributeSpec::nominal("class", ["A", "B"], Role::Target),
            ])
            .unwrap(),
        );
        assert!(matches!(tree.rebind(&missing), Err(Error::Validation { .. })));
    }

    proptest! {
        #[test]
        fn lowering_m_never_turns_a_pass_into_a_fail(
            bits in prop::collection::vec(any::<bool>(), 5),
            m1 in 1usize..=5,
            m2 in 1usize..=5,
        ) {
            let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            let literals: Vec<Literal> = (0..5).map(|i| Literal::equals(i, 1)).collect();
            let values: Vec<Value> = bits.iter().map(|&b| Value::Token(usize::from(b))).collect();
            let strict = MofNTest::new(hi, literals.clone()).unwrap().evaluate(&values).unwrap();
            let loose = MofNTest::new(lo, literals).unwrap().evaluate(&values).unwrap();
            prop_assert!(!strict || loose);
        }
    }
}
