//! The platform's config document: one JSON file holding any of the
//! `pipeline`, `cluster` and `generator` sections. Parsing is strict —
//! unknown keys anywhere are errors naming the key — and parse→serialize
//! round-trips preserve every field.

use crate::generate::GeneratorSpec;
use crate::model::{ClusterSpec, PipelineSpec, Violation};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("validation failed:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(vs: &[Violation]) -> String {
    vs.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n")
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// All structural violations across the sections present.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Some(p) = &self.pipeline {
            out.extend(crate::model::validate_pipeline(p));
        }
        if let Some(c) = &self.cluster {
            out.extend(crate::model::validate_cluster(c));
        }
        if let Some(g) = &self.generator {
            if let Err(e) = g.validate() {
                out.push(Violation::new("generator", "invalid-generator", e.to_string()));
            }
        }
        out
    }

    /// Validates and rejects on any violation.
    pub fn validated(self) -> Result<Self, ConfigError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError::Invalid(violations))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EdgeSpec, NodeSpec, OpKind, OperatorSpec, SlaSpec};

    fn sample() -> ConfigDoc {
        ConfigDoc {
            pipeline: Some(PipelineSpec {
                operators: vec![
                    OperatorSpec::new("src", OpKind::Source).with_param("count", 100),
                    OperatorSpec::new("out", OpKind::Sink),
                ],
                edges: vec![EdgeSpec::new("src", "out")],
                sla: SlaSpec::default(),
                seed: 9,
                schema: None,
            }),
            cluster: Some(ClusterSpec {
                nodes: vec![NodeSpec::cloud("c1", 4.0, 4096.0, 0.5)],
                links: vec![],
            }),
            generator: None,
        }
    }

    #[test]
    fn round_trip_preserves_every_field() {
        let doc = sample();
        let text = doc.to_json();
        let back = ConfigDoc::parse(&text).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = ConfigDoc::parse(r#"{"pipeline": null, "surprise": 1}"#).unwrap_err();
        assert!(err.to_string().contains("surprise"), "{err}");
    }

    #[test]
    fn unknown_nested_keys_are_rejected_too() {
        let text = r#"{"cluster": {"nodes": [{"id":"a","tier":"cloud","cpu_capacity":1,"mem_capacity":1,"bogus":3}], "links": []}}"#;
        let err = ConfigDoc::parse(text).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn validation_aggregates_violations_across_sections() {
        let mut doc = sample();
        doc.pipeline.as_mut().unwrap().edges.push(EdgeSpec::new("out", "src"));
        doc.cluster.as_mut().unwrap().nodes.push(NodeSpec::cloud("c1", 1.0, 1.0, 0.1));
        let violations = doc.validate();
        assert!(violations.iter().any(|v| v.rule == "cycle"));
        assert!(violations.iter().any(|v| v.rule == "duplicate-id"));
    }
}
