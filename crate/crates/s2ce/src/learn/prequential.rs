use super::{Adwin, Ddm, DriftLevel, HoeffdingTree, LearnError};
use crate::model::Event;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io::Write;

/// Test-then-train contract shared by every classifier.
pub trait OnlineModel {
    fn predict(&self, e: &Event) -> (usize, Vec<f64>);
    fn learn(&mut self, e: &Event) -> Result<(), LearnError>;
    fn reset(&mut self);
    fn classes(&self) -> &[String];

    fn class_index(&self, label: &str) -> Result<usize, LearnError> {
        self.classes()
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| LearnError::UnknownClass(label.to_string()))
    }
}

impl OnlineModel for HoeffdingTree {
    fn predict(&self, e: &Event) -> (usize, Vec<f64>) {
        HoeffdingTree::predict(self, e)
    }

    fn learn(&mut self, e: &Event) -> Result<(), LearnError> {
        self.learn_one(e)
    }

    fn reset(&mut self) {
        *self = HoeffdingTree::from_classes(self.classes.clone(), self.params.clone());
    }

    fn classes(&self) -> &[String] {
        &self.classes
    }
}

/// Majority-class baseline: predicts the most frequent label seen so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityClass {
    pub classes: Vec<String>,
    pub counts: Vec<u64>,
}

impl MajorityClass {
    pub fn new(classes: Vec<String>) -> Self {
        let n = classes.len();
        MajorityClass {
            classes,
            counts: vec![0; n],
        }
    }
}

impl OnlineModel for MajorityClass {
    fn predict(&self, _e: &Event) -> (usize, Vec<f64>) {
        let total: u64 = self.counts.iter().sum();
        let k = self.classes.len() as f64;
        let probs: Vec<f64> = self
            .counts
            .iter()
            .map(|c| (*c as f64 + 1.0) / (total as f64 + k))
            .collect();
        let best = self
            .counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (best, probs)
    }

    fn learn(&mut self, e: &Event) -> Result<(), LearnError> {
        let label = e.label.as_deref().ok_or(LearnError::MissingLabel)?;
        let idx = self.class_index(label)?;
        self.counts[idx] += 1;
        Ok(())
    }

    fn reset(&mut self) {
        self.counts = vec![0; self.classes.len()];
    }

    fn classes(&self) -> &[String] {
        &self.classes
    }
}

/// A drift detector fed with per-event correctness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Detector {
    Ddm(Ddm),
    Adwin(Adwin),
    None,
}

impl Detector {
    pub fn update(&mut self, correct: bool) -> DriftLevel {
        match self {
            Detector::Ddm(d) => d.update(correct),
            Detector::Adwin(a) => {
                let x = if correct { 0.0 } else { 1.0 };
                match a.update(x) {
                    Ok(true) => DriftLevel::Drift,
                    _ => DriftLevel::Stable,
                }
            }
            Detector::None => DriftLevel::Stable,
        }
    }

    /// A statistic describing the detector's current view of the error
    /// rate.
    pub fn statistic(&self) -> f64 {
        match self {
            Detector::Ddm(d) => d.p() + d.s(),
            Detector::Adwin(a) => a.mean(),
            Detector::None => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub n: u64,
    pub acc_window: f64,
    pub level: DriftLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalTrace {
    pub rows: Vec<EvalRow>,
    /// Event indices (1-based) at which the detector signalled drift.
    pub drifts: Vec<u64>,
    pub total_correct: u64,
}

impl EvalTrace {
    pub fn final_accuracy(&self) -> f64 {
        self.rows.last().map(|r| r.acc_window).unwrap_or(0.0)
    }

    /// Whole-run prequential accuracy.
    pub fn overall_accuracy(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.total_correct as f64 / self.rows.len() as f64
        }
    }

    /// CSV export: `n,acc_window,detector_level`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "n,acc_window,detector_level")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.n, r.acc_window, r.level)?;
        }
        Ok(())
    }
}

/// Prequential (test-then-train) evaluation: predict, record correctness in
/// a sliding window of `window` outcomes and in the detector, then learn.
/// On drift the model is reset when `reset_on_drift` is set.
pub fn prequential_eval(
    model: &mut impl OnlineModel,
    stream: impl IntoIterator<Item = Event>,
    detector: &mut Detector,
    window: usize,
    reset_on_drift: bool,
) -> Result<EvalTrace, LearnError> {
    let mut trace = EvalTrace::default();
    let mut recent: VecDeque<bool> = VecDeque::with_capacity(window);
    let mut recent_correct = 0u64;
    let mut n = 0u64;
    for e in stream {
        let label = e.label.as_deref().ok_or(LearnError::MissingLabel)?;
        let truth = model.class_index(label)?;
        let (predicted, _) = model.predict(&e);
        let correct = predicted == truth;

        if recent.len() == window {
            if recent.pop_front().unwrap() {
                recent_correct -= 1;
            }
        }
        recent.push_back(correct);
        if correct {
            recent_correct += 1;
            trace.total_correct += 1;
        }

        let level = detector.update(correct);
        model.learn(&e)?;
        n += 1;
        if level == DriftLevel::Drift {
            trace.drifts.push(n);
            if reset_on_drift {
                model.reset();
            }
        }
        trace.rows.push(EvalRow {
            n,
            acc_window: recent_correct as f64 / recent.len() as f64,
            level,
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    /// Stub that always answers with the event's own label.
    struct PerfectStub {
        classes: Vec<String>,
    }

    impl OnlineModel for PerfectStub {
        fn predict(&self, e: &Event) -> (usize, Vec<f64>) {
            let idx = self
                .classes
                .iter()
                .position(|c| Some(c.as_str()) == e.label.as_deref())
                .unwrap_or(0);
            (idx, vec![0.0; self.classes.len()])
        }

        fn learn(&mut self, _e: &Event) -> Result<(), LearnError> {
            Ok(())
        }

        fn reset(&mut self) {}

        fn classes(&self) -> &[String] {
            &self.classes
        }
    }

    fn labeled_stream(n: usize, p_zero: f64, seed: u64) -> Vec<Event> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = if rng.random_bool(p_zero) { "0" } else { "1" };
                Event::new(i as i64, "k").with("x", 0.0).with_label(label)
            })
            .collect()
    }

    #[test]
    fn perfect_stub_scores_one_throughout() {
        let mut model = PerfectStub {
            classes: vec!["0".into(), "1".into()],
        };
        let mut det = Detector::None;
        let trace =
            prequential_eval(&mut model, labeled_stream(500, 0.5, 70), &mut det, 100, false)
                .unwrap();
        assert!(trace.rows.iter().all(|r| r.acc_window == 1.0));
    }

    #[test]
    fn majority_learner_converges_to_the_majority_rate() {
        let mut model = MajorityClass::new(vec!["0".into(), "1".into()]);
        let mut det = Detector::None;
        let trace =
            prequential_eval(&mut model, labeled_stream(5000, 0.9, 71), &mut det, 1000, false)
                .unwrap();
        let acc = trace.final_accuracy();
        assert!((acc - 0.9).abs() < 0.02, "windowed accuracy {acc}");
    }

    #[test]
    fn trace_has_one_row_per_event() {
        let mut model = MajorityClass::new(vec!["0".into(), "1".into()]);
        let mut det = Detector::Ddm(Ddm::default());
        let trace =
            prequential_eval(&mut model, labeled_stream(1234, 0.7, 72), &mut det, 1000, false)
                .unwrap();
        assert_eq!(trace.rows.len(), 1234);
        assert_eq!(trace.rows.last().unwrap().n, 1234);
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let mut model = MajorityClass::new(vec!["0".into(), "1".into()]);
        let mut det = Detector::None;
        let trace =
            prequential_eval(&mut model, labeled_stream(10, 0.5, 73), &mut det, 5, false).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert!(text.starts_with("n,acc_window,detector_level\n"));
    }
}
