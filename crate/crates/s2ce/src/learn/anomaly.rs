use crate::model::Event;
use crate::transforms::RunningStats;
use serde::{Deserialize, Serialize};

/// Running z-score anomaly scorer: the score of an event is the largest
/// `|x - mean| / std` over its numeric fields, computed against the
/// statistics accumulated *before* the event. A field contributes nothing
/// until it has 30 observations and positive spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AnomalyScorer {
    pub stats: RunningStats,
    pub warmup: u64,
}

impl AnomalyScorer {
    pub fn new() -> Self {
        AnomalyScorer {
            stats: RunningStats::new(),
            warmup: 30,
        }
    }

    /// Score without mutating state.
    pub fn score(&self, e: &Event) -> f64 {
        let mut worst: f64 = 0.0;
        for (name, value) in &e.values {
            let Some(x) = value.as_num() else { continue };
            let Some(s) = self.stats.numeric(name) else { continue };
            if s.n < self.warmup {
                continue;
            }
            match s.std() {
                Some(sd) if sd > 0.0 => worst = worst.max((x - s.mean).abs() / sd),
                _ => {}
            }
        }
        worst
    }

    /// Test-then-train step: score against history, then absorb the event.
    pub fn score_and_update(&mut self, e: &Event) -> f64 {
        let score = self.score(e);
        self.stats.observe_event(e);
        score
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn first_29_events_score_zero() {
        let mut a = AnomalyScorer::new();
        let mut rng = ChaCha12Rng::seed_from_u64(60);
        for i in 0..29 {
            let e = Event::new(i, "k").with("x", rng.random_range(-5.0..5.0));
            assert_eq!(a.score_and_update(&e), 0.0);
        }
    }

    #[test]
    fn value_at_the_mean_contributes_zero() {
        let mut a = AnomalyScorer::new();
        for i in 0..50 {
            // Alternating around 10: mean exactly 10.
            let x = if i % 2 == 0 { 9.0 } else { 11.0 };
            a.score_and_update(&Event::new(i, "k").with("x", x));
        }
        assert_eq!(a.score(&Event::new(99, "k").with("x", 10.0)), 0.0);
    }

    #[test]
    fn eight_sigma_outlier_scores_about_eight() {
        let mut a = AnomalyScorer::new();
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        let normal = Normal::new(0.0, 1.0).unwrap();
        for i in 0..5000 {
            a.score_and_update(&Event::new(i, "k").with("x", normal.sample(&mut rng)));
        }
        let score = a.score(&Event::new(5000, "k").with("x", 8.0));
        assert!((score - 8.0).abs() < 0.5, "score {score}");
    }
}
