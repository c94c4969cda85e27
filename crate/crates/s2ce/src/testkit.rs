//! Brute-force oracles used by the test suites. Not part of the public API.
//!
//! Everything here recomputes results from first principles — full element
//! storage, exhaustive enumeration — independently of the incremental
//! implementations it is used to check.

/// Exact-window ADWIN oracle: holds every element of the window, derives
/// bucket boundaries by the same size arithmetic as the detector, and
/// recomputes both split means from the raw elements on every boundary
/// test. For 0/1-valued streams all sums are exact in f64, so the
/// compressed detector must match its decisions and window length exactly.
///
/// Elements live in a grow-only buffer with a start offset so the per-step
/// full-window summation stays a contiguous slice scan.
pub struct AdwinOracle {
    pub delta: f64,
    pub max_per_size: usize,
    elements: Vec<f64>,
    start: usize,
    sizes: std::collections::VecDeque<u64>,
}

impl AdwinOracle {
    pub fn new(delta: f64) -> Self {
        AdwinOracle {
            delta,
            max_per_size: 5,
            elements: Vec::new(),
            start: 0,
            sizes: std::collections::VecDeque::new(),
        }
    }

    pub fn len(&self) -> u64 {
        (self.elements.len() - self.start) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.elements.len() == self.start
    }

    fn window(&self) -> &[f64] {
        &self.elements[self.start..]
    }

    pub fn mean(&self) -> f64 {
        let w = self.window();
        if w.is_empty() {
            0.0
        } else {
            w.iter().sum::<f64>() / w.len() as f64
        }
    }

    pub fn update(&mut self, x: f64) -> bool {
        self.elements.push(x);
        self.sizes.push_back(1);
        self.compress();
        let mut dropped = false;
        while self.has_cut() {
            let n = self.sizes.pop_front().unwrap();
            self.start += n as usize;
            dropped = true;
        }
        // Reclaim the dead prefix once it dominates the buffer.
        if self.start > 4096 && self.start * 2 > self.elements.len() {
            self.elements.drain(..self.start);
            self.start = 0;
        }
        dropped
    }

    fn compress(&mut self) {
        loop {
            let mut merged = false;
            let mut size = 1u64;
            loop {
                let count = self.sizes.iter().filter(|s| **s == size).count();
                if count > self.max_per_size + 1 {
                    let first = self.sizes.iter().position(|s| *s == size).unwrap();
                    self.sizes.remove(first + 1);
                    self.sizes[first] = size * 2;
                    merged = true;
                    break;
                }
                let Some(next) = self.sizes.iter().copied().filter(|s| *s > size).min() else {
                    break;
                };
                size = next;
            }
            if !merged {
                return;
            }
        }
    }

    /// Single pass over the raw window: accumulate the prefix sum, testing
    /// the cut condition at every bucket boundary.
    fn has_cut(&self) -> bool {
        if self.sizes.len() < 2 {
            return false;
        }
        let w = self.window();
        let total_n = w.len() as u64;
        let total_sum: f64 = w.iter().sum();
        let mut n0 = 0u64;
        let mut sum0 = 0.0;
        for s in self.sizes.iter().take(self.sizes.len() - 1) {
            for i in n0..n0 + s {
                sum0 += w[i as usize];
            }
            n0 += s;
            let n1 = total_n - n0;
            let mu0 = sum0 / n0 as f64;
            let mu1 = (total_sum - sum0) / n1 as f64;
            if (mu0 - mu1).abs() >= crate::learn::adwin_eps_cut(n0, n1, self.delta) {
                return true;
            }
        }
        false
    }
}
