use super::LearnError;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// One exponential bucket: exact sum and sum of squares over `size`
/// elements, so the window statistics stay exact under compression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub sum: f64,
    pub sum_sq: f64,
    pub size: u64,
}

/// Adaptive windowing over a `[0, 1]` stream.
///
/// The window is a deque of buckets, oldest first, with power-of-two sizes
/// and at most `max_per_size + 1` buckets per size; overflow merges the two
/// oldest buckets of that size. After each insertion every bucket-boundary
/// split `(w0, w1)` is tested and, while any split shows
/// `|mean0 - mean1| >= eps_cut`, the oldest bucket is dropped and the scan
/// restarts. `update` reports whether anything was dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adwin {
    pub delta: f64,
    pub max_per_size: usize,
    buckets: VecDeque<Bucket>,
}

/// Cut threshold shared by the detector and its brute-force test oracle:
/// `sqrt(ln(4/delta) / (2m))` with `m = n0*n1/(n0+n1)`.
pub fn eps_cut(n0: u64, n1: u64, delta: f64) -> f64 {
    let m = (n0 as f64 * n1 as f64) / (n0 + n1) as f64;
    ((4.0 / delta).ln() / (2.0 * m)).sqrt()
}

impl Adwin {
    pub fn new(delta: f64) -> Self {
        assert!(delta > 0.0 && delta < 1.0);
        Adwin {
            delta,
            max_per_size: 5,
            buckets: VecDeque::new(),
        }
    }

    pub fn len(&self) -> u64 {
        self.buckets.iter().map(|b| b.size).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.buckets.iter().map(|b| b.sum).sum()
    }

    pub fn mean(&self) -> f64 {
        let n = self.len();
        if n == 0 {
            0.0
        } else {
            self.sum() / n as f64
        }
    }

    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let sum: f64 = self.sum();
        let sum_sq: f64 = self.buckets.iter().map(|b| b.sum_sq).sum();
        let mean = sum / n as f64;
        (sum_sq - sum * mean) / (n - 1) as f64
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    /// Inserts an element and shrinks the window while any bucket-boundary
    /// split violates the cut condition. Returns `true` iff data was
    /// dropped (drift).
    pub fn update(&mut self, x: f64) -> Result<bool, LearnError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(LearnError::OutOfRange(x));
        }
        self.buckets.push_back(Bucket { sum: x, sum_sq: x * x, size: 1 });
        self.compress();

        let mut dropped = false;
        while self.has_cut() {
            self.buckets.pop_front();
            dropped = true;
        }
        Ok(dropped)
    }

    /// Merges the two oldest buckets of any size that exceeds the
    /// multiplicity cap, cascading upward.
    fn compress(&mut self) {
        loop {
            let mut merged = false;
            let mut size = 1u64;
            loop {
                let count = self.buckets.iter().filter(|b| b.size == size).count();
                if count > self.max_per_size + 1 {
                    let first = self.buckets.iter().position(|b| b.size == size).unwrap();
                    // Buckets are size-ordered (large to small), so the two
                    // oldest of a size are adjacent.
                    let b2 = self.buckets.remove(first + 1).unwrap();
                    let b1 = &mut self.buckets[first];
                    b1.sum += b2.sum;
                    b1.sum_sq += b2.sum_sq;
                    b1.size += b2.size;
                    merged = true;
                    break;
                }
                let Some(next) = self.buckets.iter().map(|b| b.size).filter(|s| *s > size).min()
                else {
                    break;
                };
                size = next;
            }
            if !merged {
                return;
            }
        }
    }

    /// Tests every boundary split of the current window.
    fn has_cut(&self) -> bool {
        let total_n = self.len();
        if self.buckets.len() < 2 {
            return false;
        }
        let total_sum = self.sum();
        let mut n0 = 0u64;
        let mut sum0 = 0.0;
        for b in self.buckets.iter().take(self.buckets.len() - 1) {
            n0 += b.size;
            sum0 += b.sum;
            let n1 = total_n - n0;
            let mu0 = sum0 / n0 as f64;
            let mu1 = (total_sum - sum0) / n1 as f64;
            if (mu0 - mu1).abs() >= eps_cut(n0, n1, self.delta) {
                return true;
            }
        }
        false
    }

    /// Sizes oldest-first; exposed so an element-level oracle can mirror the
    /// boundary structure.
    pub fn bucket_sizes(&self) -> Vec<u64> {
        self.buckets.iter().map(|b| b.size).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::AdwinOracle;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn constant_stream_never_drifts() {
        let mut a = Adwin::new(0.002);
        for _ in 0..100_000 {
            assert!(!a.update(0.5).unwrap());
        }
        assert_eq!(a.len(), 100_000);
        assert!((a.mean() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_input_is_rejected() {
        let mut a = Adwin::new(0.002);
        assert_eq!(a.update(1.5).unwrap_err(), LearnError::OutOfRange(1.5));
    }

    #[test]
    fn bucket_sizes_are_powers_of_two_with_bounded_multiplicity() {
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        let mut a = Adwin::new(0.002);
        for _ in 0..5000 {
            a.update(if rng.random_bool(0.5) { 1.0 } else { 0.0 }).unwrap();
            let sizes = a.bucket_sizes();
            for s in &sizes {
                assert!(s.is_power_of_two());
                let count = sizes.iter().filter(|x| *x == s).count();
                assert!(count <= a.max_per_size + 1, "{count} buckets of size {s}");
            }
            // Oldest buckets are the largest.
            for w in sizes.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn abrupt_bernoulli_shift_is_caught_quickly_and_window_recenters() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let mut a = Adwin::new(0.002);
        for _ in 0..2000 {
            a.update(if rng.random_bool(0.2) { 1.0 } else { 0.0 }).unwrap();
        }
        let mut detected_at = None;
        for i in 0..1000 {
            if a.update(if rng.random_bool(0.8) { 1.0 } else { 0.0 }).unwrap() {
                detected_at = Some(i);
                break;
            }
        }
        let detected_at = detected_at.expect("shift must be detected");
        assert!(detected_at < 200, "detected after {detected_at} samples");
        // Keep feeding; the surviving window must describe the new regime.
        for _ in 0..500 {
            a.update(if rng.random_bool(0.8) { 1.0 } else { 0.0 }).unwrap();
        }
        assert!((a.mean() - 0.8).abs() < 0.1, "post-drift mean {}", a.mean());
    }

    #[test]
    fn matches_exact_window_oracle_on_drifting_and_stationary_streams() {
        for seed in 0..10u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let stream: Vec<f64> = (0..3000)
                .map(|i| {
                    let p = if i < 1500 { 0.3 } else { 0.7 };
                    if rng.random_bool(p) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut a = Adwin::new(0.002);
            let mut o = AdwinOracle::new(0.002);
            for (step, &x) in stream.iter().enumerate() {
                let da = a.update(x).unwrap();
                let doracle = o.update(x);
                assert_eq!(da, doracle, "seed {seed} step {step}: drift decision diverged");
                assert_eq!(a.len(), o.len(), "seed {seed} step {step}: window length diverged");
            }
        }
    }
}
