use super::RuntimeError;
use crate::generate::{build_generator, fit_generator, GenKind, GeneratorSpec, StreamGenerator};
use crate::model::{Event, OpKind, PipelineSpec, Value};
use std::collections::BTreeMap;

/// Events to feed each source operator, keyed by operator id.
pub type InputsMap = BTreeMap<String, Vec<Event>>;

/// Resolves every source operator's feed from its parameters:
///
/// * `path` — newline-delimited record file; with `raw: true` each line is
///   wrapped unparsed into a `raw` field for a downstream `parse` operator.
/// * `generator` — an inline [`GeneratorSpec`]; `count` bounds the stream.
///
/// Library callers can bypass this and hand any `InputsMap` to the run
/// functions directly.
pub fn materialize_inputs(p: &PipelineSpec) -> Result<InputsMap, RuntimeError> {
    let mut inputs = InputsMap::new();
    for op in p.operators.iter().filter(|o| o.kind == OpKind::Source) {
        let events = if let Some(path) = op.param_str("path") {
            let raw = op.params.get("raw").and_then(|v| v.as_bool()).unwrap_or(false);
            if raw {
                let text = std::fs::read_to_string(path)?;
                text.lines()
                    .filter(|l| !l.trim().is_empty())
                    .enumerate()
                    .map(|(i, l)| {
                        Event::new(i as i64, "")
                            .with("raw", Value::Cat(l.to_string()))
                            .with_source(&op.id)
                    })
                    .collect()
            } else {
                crate::connectors::read_events(path)
                    .map_err(|e| RuntimeError::op(&op.id, e))?
            }
        } else if let Some(spec_value) = op.params.get("generator") {
            let spec: GeneratorSpec = serde_json::from_value(spec_value.clone())
                .map_err(|e| RuntimeError::BadParam {
                    op: op.id.clone(),
                    param: "generator".into(),
                    detail: e.to_string(),
                })?;
            let count = op.param_u64("count").unwrap_or(1000);
            let generator = build_source_generator(&op.id, &spec)?;
            generator.take(count as usize).collect()
        } else {
            // No feed declared: an empty source (tests often inject inputs
            // programmatically instead).
            Vec::new()
        };
        inputs.insert(op.id.clone(), events);
    }
    Ok(inputs)
}

fn build_source_generator(
    op: &str,
    spec: &GeneratorSpec,
) -> Result<StreamGenerator, RuntimeError> {
    if spec.kind == GenKind::Fitted {
        let path = spec.fit_from.as_deref().ok_or_else(|| RuntimeError::BadParam {
            op: op.to_string(),
            param: "generator.fit_from".into(),
            detail: "fitted generator needs a sample file".into(),
        })?;
        let sample = crate::connectors::read_events(path).map_err(|e| RuntimeError::op(op, e))?;
        let model = fit_generator(&sample, spec.bins).map_err(|e| RuntimeError::op(op, e))?;
        StreamGenerator::from_fitted(model, spec).map_err(|e| RuntimeError::op(op, e))
    } else {
        build_generator(spec).map_err(|e| RuntimeError::op(op, e))
    }
}
