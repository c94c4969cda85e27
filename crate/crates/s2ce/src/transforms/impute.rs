use super::stats::RunningStats;
use crate::model::{Event, Value};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ImputePolicy {
    /// Running mean for numeric fields; falls back to the mode for
    /// categorical ones.
    #[default]
    Mean,
    LastValue,
    /// Modal category for categorical fields; falls back to the mean for
    /// numeric ones.
    Mode,
}

/// Replaces missing markers from running statistics of the history.
///
/// Statistics are updated with the original, non-missing values only, so an
/// imputed value never feeds back into its own estimate. A missing field
/// with no history yet is a cold start: the marker stays and a counter
/// ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub policy: ImputePolicy,
    pub stats: RunningStats,
    pub cold_starts: u64,
}

impl Imputer {
    pub fn new(policy: ImputePolicy) -> Self {
        Imputer {
            policy,
            stats: RunningStats::new(),
            cold_starts: 0,
        }
    }

    fn fill(&self, field: &str) -> Option<Value> {
        let num = self.stats.numeric(field);
        let cat = self.stats.categorical(field);
        match self.policy {
            ImputePolicy::LastValue => num
                .and_then(|s| s.last.map(Value::Num))
                .or_else(|| cat.and_then(|s| s.last.clone().map(Value::Cat))),
            ImputePolicy::Mean | ImputePolicy::Mode => num
                .filter(|s| s.n > 0)
                .map(|s| Value::Num(s.mean))
                .or_else(|| cat.and_then(|s| s.mode().map(|c| Value::Cat(c.to_string())))),
        }
    }

    pub fn process(&mut self, mut e: Event) -> Event {
        let mut filled = Vec::new();
        for (name, value) in &e.values {
            if value.is_missing() {
                match self.fill(name) {
                    Some(v) => filled.push((name.clone(), v)),
                    None => self.cold_starts += 1,
                }
            }
        }
        // Update with the pre-imputation values only.
        self.stats.observe_event(&e);
        for (name, v) in filled {
            e.values.insert(name, v);
        }
        e
    }
}

/// Online z-scoring: each numeric value becomes `(x - mean) / std` using the
/// statistics accumulated *before* the current event, so the operator is
/// causal. Emits 0 while a field has fewer than two observations or zero
/// spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Normalizer {
    pub stats: RunningStats,
}

impl Normalizer {
    pub fn new() -> Self {
        Normalizer::default()
    }

    pub fn process(&mut self, mut e: Event) -> Event {
        let mut updates = Vec::new();
        for (name, value) in &e.values {
            if let Value::Num(x) = value {
                let z = match self.stats.numeric(name).and_then(|s| s.std().map(|sd| (s.mean, sd))) {
                    Some((mean, sd)) if sd > 0.0 => (x - mean) / sd,
                    _ => 0.0,
                };
                updates.push((name.clone(), *x, z));
            }
        }
        for (name, x, z) in updates {
            self.stats.observe(&name, &Value::Num(x));
            e.values.insert(name, Value::Num(z));
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_without_missing_fields_is_unchanged() {
        let mut imp = Imputer::new(ImputePolicy::Mean);
        let e = Event::new(0, "k").with("x", 3.0).with("c", "a");
        assert_eq!(imp.process(e.clone()), e);
        assert_eq!(imp.cold_starts, 0);
    }

    #[test]
    fn mean_imputation_uses_batch_mean_of_history() {
        let mut imp = Imputer::new(ImputePolicy::Mean);
        // History 3, 6: batch mean 4.5.
        imp.process(Event::new(0, "k").with("x", 3.0));
        imp.process(Event::new(1, "k").with("x", 6.0));
        let out = imp.process(Event::new(2, "k").with("x", Value::Missing));
        assert_eq!(out.num("x"), Some(4.5));
        // The imputed value must not have fed the stats.
        assert_eq!(imp.stats.numeric("x").unwrap().n, 2);
    }

    #[test]
    fn first_ever_missing_value_is_a_cold_start() {
        let mut imp = Imputer::new(ImputePolicy::Mean);
        let out = imp.process(Event::new(0, "k").with("x", Value::Missing));
        assert!(out.values["x"].is_missing());
        assert_eq!(imp.cold_starts, 1);
    }

    #[test]
    fn last_value_policy_repeats_the_previous_observation() {
        let mut imp = Imputer::new(ImputePolicy::LastValue);
        imp.process(Event::new(0, "k").with("c", "red"));
        imp.process(Event::new(1, "k").with("c", "blue"));
        let out = imp.process(Event::new(2, "k").with("c", Value::Missing));
        assert_eq!(out.values["c"], Value::Cat("blue".into()));
    }

    #[test]
    fn mode_policy_picks_most_frequent_category() {
        let mut imp = Imputer::new(ImputePolicy::Mode);
        for c in ["a", "b", "b"] {
            imp.process(Event::new(0, "k").with("c", c));
        }
        let out = imp.process(Event::new(1, "k").with("c", Value::Missing));
        assert_eq!(out.values["c"], Value::Cat("b".into()));
    }

    #[test]
    fn first_event_normalizes_to_zero() {
        let mut norm = Normalizer::new();
        let out = norm.process(Event::new(0, "k").with("x", 42.0));
        assert_eq!(out.num("x"), Some(0.0));
    }

    #[test]
    fn fourth_of_1_2_3_4_normalizes_to_two() {
        // After 1,2,3: two-pass mean 2, std 1, so (4-2)/1 = 2.
        let mut norm = Normalizer::new();
        for x in [1.0, 2.0, 3.0] {
            norm.process(Event::new(0, "k").with("x", x));
        }
        let out = norm.process(Event::new(3, "k").with("x", 4.0));
        assert!((out.num("x").unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_stream_stays_at_zero() {
        let mut norm = Normalizer::new();
        for i in 0..20 {
            let out = norm.process(Event::new(i, "k").with("x", 7.0));
            assert_eq!(out.num("x"), Some(0.0));
        }
    }

    #[test]
    fn missing_values_pass_through_normalization() {
        let mut norm = Normalizer::new();
        norm.process(Event::new(0, "k").with("x", 1.0));
        let out = norm.process(Event::new(1, "k").with("x", Value::Missing));
        assert!(out.values["x"].is_missing());
    }
}
