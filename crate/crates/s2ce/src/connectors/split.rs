use crate::model::{Event, Value};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Comparison {
    fn eval(self, x: f64, y: f64) -> bool {
        match self {
            Comparison::Lt => x < y,
            Comparison::Le => x <= y,
            Comparison::Gt => x > y,
            Comparison::Ge => x >= y,
            Comparison::Eq => x == y,
        }
    }
}

/// Predicates a split rule can test. A comparison on a missing or
/// non-numeric field is simply false, never an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SplitPredicate {
    KeyPrefix { key_prefix: String },
    LabelPresent { label_present: bool },
    FieldCmp { field: String, cmp: Comparison, value: f64 },
    FieldIs { field: String, category: String },
}

impl SplitPredicate {
    pub fn matches(&self, e: &Event) -> bool {
        match self {
            SplitPredicate::KeyPrefix { key_prefix } => e.key.starts_with(key_prefix),
            SplitPredicate::LabelPresent { label_present } => e.label.is_some() == *label_present,
            SplitPredicate::FieldCmp { field, cmp, value } => match e.values.get(field) {
                Some(Value::Num(x)) => cmp.eval(*x, *value),
                _ => false,
            },
            SplitPredicate::FieldIs { field, category } => match e.values.get(field) {
                Some(Value::Cat(c)) => c == category,
                _ => false,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRule {
    pub when: SplitPredicate,
    pub target: String,
}

/// Ordered first-match-wins rules with a mandatory default target, so the
/// splitter is total: every event maps to exactly one sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRuleSet {
    #[serde(default)]
    pub rules: Vec<SplitRule>,
    pub default_target: String,
}

/// Sink id of the first matching rule, else the default.
pub fn split<'a>(e: &Event, rules: &'a SplitRuleSet) -> &'a str {
    for rule in &rules.rules {
        if rule.when.matches(e) {
            return &rule.target;
        }
    }
    &rules.default_target
}
