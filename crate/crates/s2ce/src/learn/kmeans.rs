use super::LearnError;
use crate::model::{Event, Value};
use serde::{Deserialize, Serialize};

/// Sequential (MacQueen) k-means: the first `k` events seed the centroids,
/// after which the nearest centroid moves toward each event at rate `1/n_c`.
/// The feature vector is the event's numeric fields in name order, fixed by
/// the first event seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansState {
    pub k: usize,
    pub feature_names: Vec<String>,
    pub centroids: Vec<Vec<f64>>,
    pub counts: Vec<u64>,
}

impl KMeansState {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1);
        KMeansState {
            k,
            feature_names: Vec::new(),
            centroids: Vec::new(),
            counts: Vec::new(),
        }
    }

    fn vector_of(&mut self, e: &Event) -> Result<Vec<f64>, LearnError> {
        if self.feature_names.is_empty() {
            self.feature_names = e
                .values
                .iter()
                .filter(|(_, v)| matches!(v, Value::Num(_)))
                .map(|(n, _)| n.clone())
                .collect();
        }
        self.project(e)
    }

    /// Projects an event onto the learned feature order without mutating
    /// state.
    pub fn project(&self, e: &Event) -> Result<Vec<f64>, LearnError> {
        let mut v = Vec::with_capacity(self.feature_names.len());
        for name in &self.feature_names {
            match e.values.get(name) {
                Some(Value::Num(x)) => v.push(*x),
                _ => {
                    return Err(LearnError::DimensionalityMismatch {
                        expected: self.feature_names.len(),
                        got: v.len(),
                    })
                }
            }
        }
        Ok(v)
    }

    pub fn update(&mut self, e: &Event) -> Result<usize, LearnError> {
        let x = self.vector_of(e)?;
        if self.centroids.len() < self.k {
            self.centroids.push(x);
            self.counts.push(1);
            return Ok(self.centroids.len() - 1);
        }
        let c = nearest(&self.centroids, &x);
        self.counts[c] += 1;
        let rate = 1.0 / self.counts[c] as f64;
        for (ci, xi) in self.centroids[c].iter_mut().zip(&x) {
            *ci += rate * (*xi - *ci);
        }
        Ok(c)
    }

    /// Nearest centroid by Euclidean distance, ties to the lowest id. Pure.
    pub fn assign(&self, e: &Event) -> Result<usize, LearnError> {
        if self.centroids.is_empty() {
            return Ok(0);
        }
        let x = self.project(e)?;
        Ok(nearest(&self.centroids, &x))
    }
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(ts: i64, x: f64) -> Event {
        Event::new(ts, "k").with("x", x)
    }

    #[test]
    fn k1_centroid_is_the_running_mean() {
        let mut km = KMeansState::new(1);
        let xs = [3.0, 5.0, 10.0, 2.0];
        for (i, &x) in xs.iter().enumerate() {
            km.update(&point(i as i64, x)).unwrap();
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((km.centroids[0][0] - mean).abs() < 1e-12);
    }

    #[test]
    fn two_well_separated_groups_recover_batch_centroids() {
        let mut km = KMeansState::new(2);
        // Interleaved so the first k events seed one centroid per group;
        // sequential k-means is initialization-sensitive by construction.
        let pts = [0.0, 10.0, 0.1, 10.1];
        for pass in 0..2 {
            for (i, &x) in pts.iter().enumerate() {
                km.update(&point((pass * 4 + i) as i64, x)).unwrap();
            }
        }
        // Batch k-means on these points settles at {0.05, 10.05}.
        let mut cs: Vec<f64> = km.centroids.iter().map(|c| c[0]).collect();
        cs.sort_by(f64::total_cmp);
        assert!((cs[0] - 0.05).abs() < 0.5, "{cs:?}");
        assert!((cs[1] - 10.05).abs() < 0.5, "{cs:?}");
    }

    #[test]
    fn assign_is_pure() {
        let mut km = KMeansState::new(2);
        for (i, &x) in [0.0, 10.0, 0.2, 9.9].iter().enumerate() {
            km.update(&point(i as i64, x)).unwrap();
        }
        let snapshot = km.clone();
        km.assign(&point(99, 5.2)).unwrap();
        assert_eq!(km, snapshot);
    }

    #[test]
    fn missing_dimension_is_rejected() {
        let mut km = KMeansState::new(1);
        km.update(&point(0, 1.0)).unwrap();
        let bad = Event::new(1, "k").with("y", 2.0);
        assert!(matches!(
            km.update(&bad),
            Err(LearnError::DimensionalityMismatch { .. })
        ));
    }
}
