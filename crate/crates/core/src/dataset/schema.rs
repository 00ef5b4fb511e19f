//! Attribute declarations and the schema file format.
//!
//! A schema file is TOML. `class_labels` is optional; when present it must
//! repeat the target's token list exactly. Each attribute is one
//! `[[attribute]]` table, in column order:
//!
//! ```toml
//! class_labels = ["Yes", "No"]
//!
//! [[attribute]]
//! name = "Outlook"
//! kind = "nominal"
//! tokens = ["Sunny", "Overcast", "Rain"]
//! role = "input"
//!
//! [[attribute]]
//! name = "Humidity"
//! kind = "continuous"
//! role = "input"
//!
//! [[attribute]]
//! name = "PlayTennis"
//! kind = "nominal"
//! tokens = ["Yes", "No"]
//! role = "target"
//! ```

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeKind {
    /// Ordered list of admissible tokens.
    Nominal(Vec<String>),
    Continuous,
}

impl AttributeKind {
    pub fn is_nominal(&self) -> bool {
        matches!(self, AttributeKind::Nominal(_))
    }

    pub fn tokens(&self) -> Option<&[String]> {
        match self {
            AttributeKind::Nominal(tokens) => Some(tokens),
            AttributeKind::Continuous => None,
        }
    }

    pub fn token_index(&self, token: &str) -> Option<usize> {
        self.tokens()?.iter().position(|t| t == token)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    pub role: Role,
}

impl AttributeSpec {
    pub fn nominal<S: Into<String>>(name: &str, tokens: impl IntoIterator<Item = S>, role: Role) -> Self {
        AttributeSpec {
            name: name.to_string(),
            kind: AttributeKind::Nominal(tokens.into_iter().map(Into::into).collect()),
            role,
        }
    }

    pub fn continuous(name: &str, role: Role) -> Self {
        AttributeSpec {
            name: name.to_string(),
            kind: AttributeKind::Continuous,
            role,
        }
    }
}

/// Ordered attribute declarations with exactly one target.
///
/// Inputs are addressed by their position among the input attributes, which
/// is how instances store their values.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSchema {
    attributes: Vec<AttributeSpec>,
    target: usize,
    inputs: Vec<usize>,
}

impl DatasetSchema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for attr in &attributes {
            if attr.name.is_empty() {
                return Err(Error::Schema("attribute with empty name".into()));
            }
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", attr.name)));
            }
            if let AttributeKind::Nominal(tokens) = &attr.kind {
                if tokens.is_empty() {
                    return Err(Error::Schema(format!("attribute `{}` has no tokens", attr.name)));
                }
                let mut uniq = HashSet::new();
                for t in tokens {
                    if t.is_empty() {
                        return Err(Error::Schema(format!("attribute `{}` has an empty token", attr.name)));
                    }
                    if !uniq.insert(t.as_str()) {
                        return Err(Error::Schema(format!(
                            "attribute `{}` lists token `{t}` twice",
                            attr.name
                        )));
                    }
                }
            }
        }
        let targets: Vec<usize> = attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == Role::Target)
            .map(|(i, _)| i)
            .collect();
        if targets.len() != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one target attribute, found {}",
                targets.len()
            )));
        }
        let inputs = attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == Role::Input)
            .map(|(i, _)| i)
            .collect();
        Ok(DatasetSchema {
            attributes,
            target: targets[0],
            inputs,
        })
    }

    /// All attributes in column order, target included.
    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn input(&self, i: usize) -> &AttributeSpec {
        &self.attributes[self.inputs[i]]
    }

    pub fn inputs(&self) -> impl ExactSizeIterator<Item = &AttributeSpec> + '_ {
        self.inputs.iter().map(move |&i| &self.attributes[i])
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs().position(|a| a.name == name)
    }

    pub fn target(&self) -> &AttributeSpec {
        &self.attributes[self.target]
    }

    /// Column position of the target attribute.
    pub fn target_column(&self) -> usize {
        self.target
    }

    pub fn is_classification(&self) -> bool {
        self.target().kind.is_nominal()
    }

    pub fn class_labels(&self) -> Option<&[String]> {
        self.target().kind.tokens()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.target().kind.token_index(label)
    }

    /// Copy of this schema with the target's kind replaced.
    pub fn with_target_kind(&self, kind: AttributeKind) -> Result<Self> {
        let mut attributes = self.attributes.clone();
        attributes[self.target].kind = kind;
        DatasetSchema::new(attributes)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SchemaFile =
            toml::from_str(text).map_err(|e| Error::parse(schema_location(&e, text), e.message()))?;
        DatasetSchema::from_file(file)
    }

    pub(crate) fn from_file(file: SchemaFile) -> Result<Self> {
        let mut attributes = Vec::with_capacity(file.attribute.len());
        for (i, entry) in file.attribute.into_iter().enumerate() {
            let kind = match entry.kind {
                KindName::Nominal => AttributeKind::Nominal(entry.tokens),
                KindName::Continuous => {
                    if !entry.tokens.is_empty() {
                        return Err(Error::Schema(format!(
                            "attribute #{} `{}` is continuous but lists tokens",
                            i + 1,
                            entry.name
                        )));
                    }
                    AttributeKind::Continuous
                }
            };
            attributes.push(AttributeSpec {
                name: entry.name,
                kind,
                role: entry.role,
            });
        }
        let schema = DatasetSchema::new(attributes)?;
        if let Some(labels) = file.class_labels {
            match schema.class_labels() {
                Some(declared) if declared == labels.as_slice() => {}
                Some(_) => {
                    return Err(Error::Schema(
                        "class_labels must equal the target attribute's tokens".into(),
                    ))
                }
                None => {
                    return Err(Error::Schema(
                        "class_labels given but the target attribute is continuous".into(),
                    ))
                }
            }
        }
        Ok(schema)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("schema serializes to TOML")
    }

    pub(crate) fn to_file(&self) -> SchemaFile {
        SchemaFile {
            class_labels: self.class_labels().map(<[String]>::to_vec),
            attribute: self
                .attributes
                .iter()
                .map(|a| AttributeEntry {
                    name: a.name.clone(),
                    kind: if a.kind.is_nominal() {
                        KindName::Nominal
                    } else {
                        KindName::Continuous
                    },
                    tokens: a.kind.tokens().map(<[String]>::to_vec).unwrap_or_default(),
                    role: a.role,
                })
                .collect(),
        }
    }
}

fn schema_location(err: &toml::de::Error, text: &str) -> String {
    match err.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("schema line {line}")
        }
        None => "schema".to_string(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SchemaFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_labels: Option<Vec<String>>,
    attribute: Vec<AttributeEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeEntry {
    name: String,
    kind: KindName,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    tokens: Vec<String>,
    role: Role,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindName {
    Nominal,
    Continuous,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tennis_like() -> DatasetSchema {
        DatasetSchema::new(vec![
            AttributeSpec::nominal("Outlook", ["Sunny", "Overcast", "Rain"], Role::Input),
            AttributeSpec::continuous("Humidity", Role::Input),
            AttributeSpec::nominal("Play", ["Yes", "No"], Role::Target),
        ])
        .unwrap()
    }

    #[test]
    fn toml_round_trip() {
        let schema = tennis_like();
        let text = schema.to_toml();
        assert_eq!(DatasetSchema::from_toml(&text).unwrap(), schema);
        assert!(text.contains("class_labels"));
    }

    #[test]
    fn rejects_two_targets() {
        let err = DatasetSchema::new(vec![
            AttributeSpec::continuous("a", Role::Target),
            AttributeSpec::continuous("b", Role::Target),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn rejects_duplicate_tokens_and_names() {
        assert!(DatasetSchema::new(vec![
            AttributeSpec::nominal("a", ["x", "x"], Role::Input),
            AttributeSpec::continuous("t", Role::Target),
        ])
        .is_err());
        assert!(DatasetSchema::new(vec![
            AttributeSpec::continuous("a", Role::Input),
            AttributeSpec::continuous("a", Role::Target),
        ])
        .is_err());
        assert!(DatasetSchema::new(vec![
            AttributeSpec::nominal::<&str>("a", [], Role::Input),
            AttributeSpec::continuous("t", Role::Target),
        ])
        .is_err());
    }

    #[test]
    fn mismatched_class_labels_rejected() {
        let text = r#"
class_labels = ["No", "Yes"]

[[attribute]]
name = "x"
kind = "continuous"
role = "input"

[[attribute]]
name = "y"
kind = "nominal"
tokens = ["Yes", "No"]
role = "target"
"#;
        assert!(matches!(DatasetSchema::from_toml(text), Err(Error::Schema(_))));
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "[[attribute]]\nname = \"x\"\nkind = \"continuous\"\nrole = \"input\"\ncolour = 3\n";
        match DatasetSchema::from_toml(text) {
            Err(Error::Parse { location, .. }) => assert!(location.contains("line"), "{location}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn input_indexing_skips_target() {
        let schema = DatasetSchema::new(vec![
            AttributeSpec::continuous("a", Role::Input),
            AttributeSpec::nominal("t", ["p", "q"], Role::Target),
            AttributeSpec::continuous("b", Role::Input),
        ])
        .unwrap();
        assert_eq!(schema.input_count(), 2);
        assert_eq!(schema.input(1).name, "b");
        assert_eq!(schema.input_index("b"), Some(1));
        assert_eq!(schema.target_column(), 1);
        assert_eq!(schema.class_index("q"), Some(1));
    }
}
