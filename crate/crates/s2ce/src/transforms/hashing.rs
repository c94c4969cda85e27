use crate::model::{Event, Value};

// FNV-1a, 64-bit: tiny, portable, and stable across runs and platforms,
// which `std::hash` deliberately is not.
fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Feature hashing (the "hashing trick") with sign hashing.
///
/// Each token — a numeric field name, or `name#category` with weight 1 for
/// categoricals — lands in bucket `hash(salt, name) mod d` with a sign drawn
/// from an independent hash bit, and contributes `sign * x` there. The sign
/// makes the inner-product estimator unbiased. Missing values contribute
/// nothing. Deterministic given the salt.
pub fn hash_project(e: &Event, d: usize, salt: u64) -> Event {
    assert!(d >= 1, "projection needs at least one dimension");
    let mut h = vec![0.0f64; d];
    for (name, value) in &e.values {
        let (token, x): (String, f64) = match value {
            Value::Num(x) => (name.clone(), *x),
            Value::Cat(c) => (format!("{name}#{c}"), 1.0),
            Value::Missing => continue,
        };
        let salt_bytes = salt.to_le_bytes();
        let idx = fnv1a(&[&[0x01], &salt_bytes, token.as_bytes()]) as usize % d;
        let sign = if fnv1a(&[&[0x02], &salt_bytes, token.as_bytes()]) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        h[idx] += sign * x;
    }
    let mut out = Event::new(e.ts, e.key.clone());
    out.label = e.label.clone();
    out.instance_id = e.instance_id.clone();
    out.source = e.source.clone();
    for (i, hi) in h.into_iter().enumerate() {
        out.values.insert(format!("h{i}"), Value::Num(hi));
    }
    out
}
