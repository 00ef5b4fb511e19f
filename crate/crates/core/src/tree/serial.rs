//! JSON tree files and Graphviz DOT export.
//!
//! A tree file carries its schema so it can be read back on its own. Nodes
//! are listed in pre-order and `id` equals the position in the list:
//!
//! ```json
//! {
//!   "format": "xtrepan-tree/1",
//!   "provenance": { "kind": "induced", "params": "..." },
//!   "schema": { "class_labels": [...], "attribute": [...] },
//!   "nodes": [
//!     { "id": 0, "test": { "m": 1, "literals": [
//!         { "attribute": "Outlook", "op": "=", "token": "Sunny" } ] },
//!       "pass": 1, "fail": 2 },
//!     { "id": 1, "leaf": "No" },
//!     { "id": 2, "leaf": "Yes" }
//!   ]
//! }
//! ```
//!
//! Continuous literals use `"op": ">"` or `"op": "<="` with a `threshold`.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DecisionTree, Literal, MofNTest, Node, Provenance, Relation};
use crate::dataset::{DatasetSchema, SchemaFile};
use crate::error::{Error, Result};

const FORMAT: &str = "xtrepan-tree/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    format: String,
    provenance: ProvenanceDto,
    schema: SchemaFile,
    nodes: Vec<NodeDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProvenanceDto {
    kind: String,
    params: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDto {
    id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leaf: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    test: Option<TestDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pass: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fail: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    continues_split: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestDto {
    m: usize,
    literals: Vec<LiteralDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiteralDto {
    attribute: String,
    op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    token: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
}

impl DecisionTree {
    /// Pretty-printed JSON tree file, terminated by a newline.
    pub fn serialize(&self) -> String {
        let mut nodes = Vec::new();
        flatten(&self.root, &self.schema, &mut nodes);
        let (kind, params) = match &self.provenance {
            Provenance::Extracted { params } => ("extracted", params),
            Provenance::Induced { params } => ("induced", params),
        };
        let file = TreeFile {
            format: FORMAT.to_string(),
            provenance: ProvenanceDto {
                kind: kind.to_string(),
                params: params.clone(),
            },
            schema: self.schema.to_file(),
            nodes,
        };
        let mut text = serde_json::to_string_pretty(&file).expect("tree serializes");
        text.push('\n');
        text
    }

    pub fn deserialize(text: &str) -> Result<DecisionTree> {
        let file: TreeFile = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("tree line {} column {}", e.line(), e.column()), e))?;
        if file.format != FORMAT {
            return Err(Error::parse(
                "format",
                format!("expected `{FORMAT}`, found `{}`", file.format),
            ));
        }
        let provenance = match file.provenance.kind.as_str() {
            "extracted" => Provenance::Extracted {
                params: file.provenance.params,
            },
            "induced" => Provenance::Induced {
                params: file.provenance.params,
            },
            other => return Err(Error::parse("provenance", format!("unknown kind `{other}`"))),
        };
        let schema = Arc::new(DatasetSchema::from_file(file.schema).map_err(|e| Error::parse("schema", e))?);
        if file.nodes.is_empty() {
            return Err(Error::parse("nodes", "tree has no nodes"));
        }
        let mut used = vec![false; file.nodes.len()];
        let root = build(&file.nodes, 0, &schema, &mut used)?;
        if let Some(orphan) = used.iter().position(|u| !u) {
            return Err(Error::parse(
                format!("node {orphan}"),
                "node is not reachable from the root",
            ));
        }
        DecisionTree::new(root, schema, provenance).map_err(|e| Error::parse("nodes", e))
    }

    /// Graphviz digraph; internal nodes are boxes labelled with their test,
    /// leaves are ellipses labelled with their class.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tree {\n");
        let mut next = 0;
        dot_node(&self.root, &self.schema, &mut next, &mut out);
        out.push_str("}\n");
        out
    }
}

fn flatten(node: &Node, schema: &DatasetSchema, out: &mut Vec<NodeDto>) -> usize {
    let id = out.len();
    match node {
        Node::Leaf { label } => out.push(NodeDto {
            id,
            leaf: Some(schema.class_labels().expect("classification")[*label].clone()),
            test: None,
            pass: None,
            fail: None,
            continues_split: false,
        }),
        Node::Internal {
            test,
            pass,
            fail,
            continues_split,
        } => {
            out.push(NodeDto {
                id,
                leaf: None,
                test: Some(TestDto {
                    m: test.m(),
                    literals: test.literals().iter().map(|l| literal_dto(l, schema)).collect(),
                }),
                pass: None,
                fail: None,
                continues_split: *continues_split,
            });
            let p = flatten(pass, schema, out);
            let f = flatten(fail, schema, out);
            out[id].pass = Some(p);
            out[id].fail = Some(f);
        }
    }
    id
}

fn literal_dto(lit: &Literal, schema: &DatasetSchema) -> LiteralDto {
    let attr = schema.input(lit.attribute);
    let (op, token, threshold) = match lit.relation {
        Relation::Equals(t) => ("=", Some(attr.kind.tokens().expect("nominal")[t].clone()), None),
        Relation::GreaterThan(th) => (">", None, Some(th)),
        Relation::LessEqual(th) => ("<=", None, Some(th)),
    };
    LiteralDto {
        attribute: attr.name.clone(),
        op: op.to_string(),
        token,
        threshold,
    }
}

fn build(nodes: &[NodeDto], id: usize, schema: &DatasetSchema, used: &mut [bool]) -> Result<Node> {
    let err = |message: String| Error::parse(format!("node {id}"), message);
    let dto = nodes
        .get(id)
        .ok_or_else(|| err("referenced node does not exist".into()))?;
    if dto.id != id {
        return Err(err(format!("node listed at position {id} has id {}", dto.id)));
    }
    if std::mem::replace(&mut used[id], true) {
        return Err(err("node is referenced twice".into()));
    }
    match (&dto.leaf, &dto.test, dto.pass, dto.fail) {
        (Some(label), None, None, None) => {
            let label = schema
                .class_index(label)
                .ok_or_else(|| err(format!("unknown class label `{label}`")))?;
            Ok(Node::leaf(label))
        }
        (None, Some(test), Some(pass), Some(fail)) => {
            if pass <= id || fail <= id {
                return Err(err("children must follow their parent".into()));
            }
            let literals = test
                .literals
                .iter()
                .map(|l| parse_literal(l, schema).map_err(&err))
                .collect::<Result<Vec<_>>>()?;
            let test = MofNTest::new(test.m, literals).map_err(|e| err(e.to_string()))?;
            Ok(Node::Internal {
                test,
                pass: Box::new(build(nodes, pass, schema, used)?),
                fail: Box::new(build(nodes, fail, schema, used)?),
                continues_split: dto.continues_split,
            })
        }
        _ => Err(err("a node is either a leaf or has test, pass and fail".into())),
    }
}

fn parse_literal(dto: &LiteralDto, schema: &DatasetSchema) -> std::result::Result<Literal, String> {
    let attribute = schema
        .input_index(&dto.attribute)
        .ok_or_else(|| format!("unknown attribute `{}`", dto.attribute))?;
    let relation = match (dto.op.as_str(), &dto.token, dto.threshold) {
        ("=", Some(token), None) => Relation::Equals(
            schema
                .input(attribute)
                .kind
                .token_index(token)
                .ok_or_else(|| format!("unknown token `{token}` for `{}`", dto.attribute))?,
        ),
        (">", None, Some(th)) => Relation::GreaterThan(th),
        ("<=", None, Some(th)) => Relation::LessEqual(th),
        (op, _, _) => return Err(format!("malformed literal with op `{op}` on `{}`", dto.attribute)),
    };
    let lit = Literal { attribute, relation };
    lit.check(schema).map_err(|e| e.to_string())?;
    Ok(lit)
}

fn dot_node(node: &Node, schema: &DatasetSchema, next: &mut usize, out: &mut String) -> usize {
    let id = *next;
    *next += 1;
    match node {
        Node::Leaf { label } => {
            let text = &schema.class_labels().expect("classification")[*label];
            writeln!(out, "  n{id} [label=\"{}\", shape=ellipse];", escape(text)).unwrap();
        }
        Node::Internal { test, pass, fail, .. } => {
            writeln!(
                out,
                "  n{id} [label=\"{}\", shape=box];",
                escape(&test.display(schema).to_string())
            )
            .unwrap();
            let p = dot_node(pass, schema, next, out);
            writeln!(out, "  n{id} -> n{p} [label=\"pass\"];").unwrap();
            let f = dot_node(fail, schema, next, out);
            writeln!(out, "  n{id} -> n{f} [label=\"fail\"];").unwrap();
        }
    }
    id
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
