use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A single field value. Missing data is a first-class variant so imputation
/// operators have a stable contract instead of guessing at absent keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Cat(String),
    Missing,
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            Value::Cat(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Cat(s.to_string())
    }
}

/// The unit flowing on every stream: a timestamped, keyed record of field
/// values with an optional label.
///
/// `values` is a key-ordered map, so two events with the same content are
/// structurally equal and serialize identically regardless of how they were
/// built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Event {
    /// Milliseconds since epoch; never negative on a valid event.
    pub ts: i64,
    /// Routing key.
    pub key: String,
    pub values: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Unique id for delayed-label matching; required when the event
    /// participates in a delayed-label join without a label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

impl Event {
    pub fn new(ts: i64, key: impl Into<String>) -> Self {
        Event {
            ts,
            key: key.into(),
            ..Event::default()
        }
    }

    pub fn with(mut self, field: impl Into<String>, value: impl Into<Value>) -> Self {
        self.values.insert(field.into(), value.into());
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_instance_id(mut self, id: impl Into<String>) -> Self {
        self.instance_id = Some(id.into());
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn num(&self, field: &str) -> Option<f64> {
        self.values.get(field).and_then(Value::as_num)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
    /// Allowed categories; required for categorical fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

/// Declares the fields events carry and, optionally, which field holds the
/// class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub fields: Vec<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_field: Option<String>,
}

impl Schema {
    pub fn numeric(names: &[&str]) -> Self {
        Schema {
            fields: names
                .iter()
                .map(|n| FieldSpec {
                    name: n.to_string(),
                    kind: FieldKind::Numeric,
                    categories: None,
                })
                .collect(),
            label_field: None,
        }
    }

    pub fn with_label(mut self, field: &str, categories: &[&str]) -> Self {
        self.fields.push(FieldSpec {
            name: field.to_string(),
            kind: FieldKind::Categorical,
            categories: Some(categories.iter().map(|s| s.to_string()).collect()),
        });
        self.label_field = Some(field.to_string());
        self
    }

    pub fn field(&self, name: &str) -> Option<&FieldSpec> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Classes of the label field, in declaration order.
    pub fn label_classes(&self) -> Vec<String> {
        self.label_field
            .as_deref()
            .and_then(|lf| self.field(lf))
            .and_then(|f| f.categories.clone())
            .unwrap_or_default()
    }

    /// Stable 64-bit fingerprint of the schema, used to guard model loading.
    pub fn fingerprint(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("schema serializes");
        let digest = Sha256::digest(&bytes);
        u64::from_be_bytes(digest[..8].try_into().unwrap())
    }

    pub fn validate(&self) -> Vec<super::Violation> {
        let mut out = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.fields {
            if !seen.insert(&f.name) {
                out.push(super::Violation::new(
                    &f.name,
                    "duplicate-field",
                    "field name declared twice",
                ));
            }
            if f.kind == FieldKind::Categorical && f.categories.is_none() {
                out.push(super::Violation::new(
                    &f.name,
                    "missing-categories",
                    "categorical field must list its categories",
                ));
            }
        }
        if let Some(lf) = &self.label_field {
            if self.field(lf).is_none() {
                out.push(super::Violation::new(
                    lf,
                    "unknown-label-field",
                    "label_field does not name a declared field",
                ));
            }
        }
        out
    }
}
