use crate::model::{Event, FieldKind, Schema, Value};
use serde_json::Value as Json;
use std::collections::BTreeMap;

/// Records larger than this are rejected on both encodings.
pub const MAX_RECORD_BYTES: usize = 16 * 1024 * 1024;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CodecError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("schema mismatch on field {field}: {detail}")]
    SchemaMismatch { field: String, detail: String },
    #[error("record of {0} bytes exceeds the 16 MiB frame limit")]
    OversizeRecord(usize),
}

/// Encodes an event as its canonical one-line JSON record.
///
/// Optional fields are omitted entirely when absent, so a minimal event
/// carries exactly `ts`, `key` and `values`.
pub fn encode_event(e: &Event) -> Vec<u8> {
    serde_json::to_vec(e).expect("events always serialize")
}

/// Strict inverse of [`encode_event`]. No coercion: a value of an unknown
/// JSON kind is a [`CodecError::SchemaMismatch`], any structural problem a
/// [`CodecError::MalformedRecord`].
pub fn decode_event(bytes: &[u8]) -> Result<Event, CodecError> {
    if bytes.len() > MAX_RECORD_BYTES {
        return Err(CodecError::OversizeRecord(bytes.len()));
    }
    let root: Json = serde_json::from_slice(bytes)
        .map_err(|e| CodecError::MalformedRecord(e.to_string()))?;
    let Json::Object(map) = root else {
        return Err(CodecError::MalformedRecord("record is not a JSON object".into()));
    };

    let mut ts = None;
    let mut key = None;
    let mut values: Option<BTreeMap<String, Value>> = None;
    let mut label = None;
    let mut instance_id = None;
    let mut source = String::new();

    for (k, v) in map {
        match k.as_str() {
            "ts" => {
                let n = v
                    .as_i64()
                    .ok_or_else(|| CodecError::MalformedRecord("ts must be an integer".into()))?;
                if n < 0 {
                    return Err(CodecError::MalformedRecord("ts must be >= 0".into()));
                }
                ts = Some(n);
            }
            "key" => {
                key = Some(
                    v.as_str()
                        .ok_or_else(|| CodecError::MalformedRecord("key must be a string".into()))?
                        .to_string(),
                );
            }
            "values" => {
                let Json::Object(obj) = v else {
                    return Err(CodecError::MalformedRecord("values must be an object".into()));
                };
                let mut fields = BTreeMap::new();
                for (name, fv) in obj {
                    let value = match fv {
                        Json::Null => Value::Missing,
                        Json::Number(n) => Value::Num(n.as_f64().ok_or_else(|| {
                            CodecError::MalformedRecord(format!("field {name} is not an f64"))
                        })?),
                        Json::String(s) => Value::Cat(s),
                        other => {
                            return Err(CodecError::SchemaMismatch {
                                field: name,
                                detail: format!("unknown field kind: {other}"),
                            })
                        }
                    };
                    fields.insert(name, value);
                }
                values = Some(fields);
            }
            "label" => {
                label = Some(
                    v.as_str()
                        .ok_or_else(|| CodecError::MalformedRecord("label must be a string".into()))?
                        .to_string(),
                );
            }
            "instance_id" => {
                instance_id = Some(
                    v.as_str()
                        .ok_or_else(|| {
                            CodecError::MalformedRecord("instance_id must be a string".into())
                        })?
                        .to_string(),
                );
            }
            "source" => {
                source = v
                    .as_str()
                    .ok_or_else(|| CodecError::MalformedRecord("source must be a string".into()))?
                    .to_string();
            }
            other => {
                return Err(CodecError::MalformedRecord(format!("unknown record key: {other}")));
            }
        }
    }

    Ok(Event {
        ts: ts.ok_or_else(|| CodecError::MalformedRecord("missing ts".into()))?,
        key: key.ok_or_else(|| CodecError::MalformedRecord("missing key".into()))?,
        values: values.ok_or_else(|| CodecError::MalformedRecord("missing values".into()))?,
        label,
        instance_id,
        source,
    })
}

/// Decodes and additionally checks field kinds against a schema: numeric
/// fields must carry numbers, categorical fields must carry declared
/// categories, and no undeclared field may appear.
pub fn decode_event_checked(bytes: &[u8], schema: &Schema) -> Result<Event, CodecError> {
    let e = decode_event(bytes)?;
    for (name, value) in &e.values {
        let Some(spec) = schema.field(name) else {
            return Err(CodecError::SchemaMismatch {
                field: name.clone(),
                detail: "field not declared in schema".into(),
            });
        };
        match (spec.kind, value) {
            (_, Value::Missing) => {}
            (FieldKind::Numeric, Value::Num(x)) => {
                if !x.is_finite() {
                    return Err(CodecError::SchemaMismatch {
                        field: name.clone(),
                        detail: "numeric value must be finite".into(),
                    });
                }
            }
            (FieldKind::Categorical, Value::Cat(c)) => {
                if let Some(cats) = &spec.categories {
                    if !cats.contains(c) {
                        return Err(CodecError::SchemaMismatch {
                            field: name.clone(),
                            detail: format!("category {c:?} not declared"),
                        });
                    }
                }
            }
            (FieldKind::Numeric, Value::Cat(_)) => {
                return Err(CodecError::SchemaMismatch {
                    field: name.clone(),
                    detail: "numeric field carries text".into(),
                })
            }
            (FieldKind::Categorical, Value::Num(_)) => {
                return Err(CodecError::SchemaMismatch {
                    field: name.clone(),
                    detail: "categorical field carries a number".into(),
                })
            }
        }
    }
    Ok(e)
}
