//! Helpers shared by unit tests across modules.

use crate::model::{Event, Value};
use rand::prelude::*;

/// Schema-free random event covering numeric, categorical and missing
/// values, optional labels and instance ids.
pub fn random_event(rng: &mut impl Rng, id: u64) -> Event {
    let mut e = Event::new(
        rng.random_range(0..10_000_000),
        format!("k{}", rng.random_range(0..100)),
    )
    .with_source("test");
    for f in 0..rng.random_range(1..6usize) {
        let name = format!("f{f}");
        match rng.random_range(0..3u8) {
            0 => {
                e.values
                    .insert(name, Value::Num(rng.random_range(-1e6..1e6)));
            }
            1 => {
                e.values
                    .insert(name, Value::Cat(format!("c{}", rng.random_range(0..10))));
            }
            _ => {
                e.values.insert(name, Value::Missing);
            }
        }
    }
    if rng.random_bool(0.3) {
        e.label = Some(format!("L{}", rng.random_range(0..3)));
    }
    if rng.random_bool(0.3) {
        e.instance_id = Some(format!("i{id}"));
    }
    e
}
