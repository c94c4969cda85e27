use crate::model::{Event, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Welford accumulator: count, mean and the sum of squared deviations, so
/// variance never suffers catastrophic cancellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct NumericStats {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
    pub last: Option<f64>,
}

impl NumericStats {
    pub fn observe(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
        self.last = Some(x);
    }

    /// Sample variance, `None` below two observations.
    pub fn variance(&self) -> Option<f64> {
        if self.n >= 2 {
            Some(self.m2 / (self.n - 1) as f64)
        } else {
            None
        }
    }

    pub fn std(&self) -> Option<f64> {
        self.variance().map(f64::sqrt)
    }

    /// Chan et al. parallel merge; exact for n and mean up to rounding.
    pub fn merge(&mut self, other: &NumericStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let n = (self.n + other.n) as f64;
        let delta = other.mean - self.mean;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n;
        self.mean += delta * other.n as f64 / n;
        self.n += other.n;
        self.last = other.last.or(self.last);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CategoricalStats {
    pub counts: BTreeMap<String, u64>,
    pub last: Option<String>,
}

impl CategoricalStats {
    pub fn observe(&mut self, c: &str) {
        *self.counts.entry(c.to_string()).or_insert(0) += 1;
        self.last = Some(c.to_string());
    }

    /// Most frequent category, ties broken lexicographically.
    pub fn mode(&self) -> Option<&str> {
        self.counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(c, _)| c.as_str())
    }

    pub fn n(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn merge(&mut self, other: &CategoricalStats) {
        for (c, n) in &other.counts {
            *self.counts.entry(c.clone()).or_insert(0) += n;
        }
        self.last = other.last.clone().or(self.last.take());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldStats {
    Numeric(NumericStats),
    Categorical(CategoricalStats),
}

/// Per-field running statistics over the non-missing values seen so far.
/// Fields are typed lazily from the first non-missing value observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunningStats {
    pub fields: BTreeMap<String, FieldStats>,
}

impl RunningStats {
    pub fn new() -> Self {
        RunningStats::default()
    }

    /// Folds every non-missing value of the event in.
    pub fn observe_event(&mut self, e: &Event) {
        for (name, value) in &e.values {
            self.observe(name, value);
        }
    }

    pub fn observe(&mut self, field: &str, value: &Value) {
        match value {
            Value::Num(x) => {
                let entry = self
                    .fields
                    .entry(field.to_string())
                    .or_insert_with(|| FieldStats::Numeric(NumericStats::default()));
                if let FieldStats::Numeric(s) = entry {
                    s.observe(*x);
                }
            }
            Value::Cat(c) => {
                let entry = self
                    .fields
                    .entry(field.to_string())
                    .or_insert_with(|| FieldStats::Categorical(CategoricalStats::default()));
                if let FieldStats::Categorical(s) = entry {
                    s.observe(c);
                }
            }
            Value::Missing => {}
        }
    }

    pub fn numeric(&self, field: &str) -> Option<&NumericStats> {
        match self.fields.get(field) {
            Some(FieldStats::Numeric(s)) => Some(s),
            _ => None,
        }
    }

    pub fn categorical(&self, field: &str) -> Option<&CategoricalStats> {
        match self.fields.get(field) {
            Some(FieldStats::Categorical(s)) => Some(s),
            _ => None,
        }
    }

    pub fn merge(&mut self, other: &RunningStats) {
        for (name, fs) in &other.fields {
            match (self.fields.get_mut(name), fs) {
                (Some(FieldStats::Numeric(a)), FieldStats::Numeric(b)) => a.merge(b),
                (Some(FieldStats::Categorical(a)), FieldStats::Categorical(b)) => a.merge(b),
                (None, _) => {
                    self.fields.insert(name.clone(), fs.clone());
                }
                // Mixed-kind fields only arise from schema-violating input.
                (Some(_), _) => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
        (mean, m2)
    }

    #[test]
    fn welford_matches_two_pass_batch_on_random_data() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random_range(-1e3..1e3)).collect();
        let mut s = NumericStats::default();
        for &x in &xs {
            s.observe(x);
        }
        let (mean, m2) = two_pass(&xs);
        assert!((s.mean - mean).abs() / mean.abs().max(1.0) < 1e-9);
        assert!((s.m2 - m2).abs() / m2.abs().max(1.0) < 1e-9);
    }

    #[test]
    fn merged_stats_equal_concatenated_stream() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random_range(-50.0..50.0)).collect();
        let (left, right) = xs.split_at(1700);

        let mut a = NumericStats::default();
        left.iter().for_each(|&x| a.observe(x));
        let mut b = NumericStats::default();
        right.iter().for_each(|&x| b.observe(x));
        a.merge(&b);

        let mut whole = NumericStats::default();
        xs.iter().for_each(|&x| whole.observe(x));

        assert_eq!(a.n, whole.n);
        assert!((a.mean - whole.mean).abs() / whole.mean.abs().max(1.0) < 1e-12);
        assert!((a.m2 - whole.m2).abs() / whole.m2.abs().max(1.0) < 1e-9);
    }

    #[test]
    fn variance_is_undefined_below_two_and_nonnegative_after() {
        let mut s = NumericStats::default();
        s.observe(4.2);
        assert_eq!(s.variance(), None);
        s.observe(4.2);
        assert!(s.variance().unwrap() >= 0.0);
    }

    #[test]
    fn mode_breaks_ties_lexicographically() {
        let mut s = CategoricalStats::default();
        s.observe("b");
        s.observe("a");
        assert_eq!(s.mode(), Some("a"));
        s.observe("b");
        assert_eq!(s.mode(), Some("b"));
    }
}
