use super::LearnError;
use crate::model::{Event, Schema, Value};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HtParams {
    /// Split confidence: 1 - delta is the probability the chosen split is
    /// the true best.
    pub delta: f64,
    /// Grace period: events per leaf between split checks.
    pub n_min: u64,
    /// Tie threshold: split anyway once the Hoeffding bound shrinks below
    /// this.
    pub tau: f64,
    /// Histogram bins per numeric feature.
    pub bins: usize,
    pub max_depth: usize,
}

impl Default for HtParams {
    fn default() -> Self {
        HtParams {
            delta: 1e-7,
            n_min: 200,
            tau: 0.05,
            bins: 10,
            max_depth: 32,
        }
    }
}

/// Hoeffding bound `sqrt(R^2 ln(1/delta) / 2n)` for a gain range `r`.
pub fn hoeffding_bound(r: f64, delta: f64, n: f64) -> f64 {
    (r * r * (1.0 / delta).ln() / (2.0 * n)).sqrt()
}

/// Equal-width histogram over an online-tracked range, one mass vector per
/// class. Range growth rebins by proportional redistribution of overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NumHist {
    lo: f64,
    hi: f64,
    /// `mass[class][bin]`
    mass: Vec<Vec<f64>>,
    bins: usize,
}

impl NumHist {
    fn new(classes: usize, bins: usize) -> Self {
        NumHist {
            lo: f64::NAN,
            hi: f64::NAN,
            mass: vec![vec![0.0; bins]; classes],
            bins,
        }
    }

    fn observe(&mut self, x: f64, class: usize) {
        if self.lo.is_nan() {
            self.lo = x;
            self.hi = x;
        } else if x < self.lo || x > self.hi {
            let new_lo = self.lo.min(x);
            let new_hi = self.hi.max(x);
            self.rebin(new_lo, new_hi);
        }
        let bin = self.bin_of(x);
        self.mass[class][bin] += 1.0;
    }

    fn bin_of(&self, x: f64) -> usize {
        if self.hi == self.lo {
            return 0;
        }
        let idx = ((x - self.lo) / (self.hi - self.lo) * self.bins as f64) as usize;
        idx.min(self.bins - 1)
    }

    /// Redistributes existing mass onto a wider range, each old bin spread
    /// over the new bins proportionally to overlap.
    fn rebin(&mut self, new_lo: f64, new_hi: f64) {
        let old_lo = self.lo;
        let old_hi = self.hi;
        let classes = self.mass.len();
        let old = std::mem::replace(&mut self.mass, vec![vec![0.0; self.bins]; classes]);
        self.lo = new_lo;
        self.hi = new_hi;
        let new_width = (new_hi - new_lo) / self.bins as f64;
        if old_hi == old_lo {
            // Point mass: everything lands in the bin holding that point.
            let bin = self.bin_of(old_lo);
            for (c, bins) in old.iter().enumerate() {
                self.mass[c][bin] = bins.iter().sum();
            }
            return;
        }
        let old_width = (old_hi - old_lo) / self.bins as f64;
        for (c, bins) in old.iter().enumerate() {
            for (b, &m) in bins.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let seg_lo = old_lo + b as f64 * old_width;
                let seg_hi = seg_lo + old_width;
                // Spread m over the new bins overlapping [seg_lo, seg_hi).
                let first = (((seg_lo - new_lo) / new_width) as usize).min(self.bins - 1);
                let last = (((seg_hi - new_lo) / new_width).ceil() as usize).min(self.bins);
                for nb in first..last.max(first + 1) {
                    let nb_lo = new_lo + nb as f64 * new_width;
                    let nb_hi = nb_lo + new_width;
                    let overlap = (seg_hi.min(nb_hi) - seg_lo.max(nb_lo)).max(0.0);
                    if overlap > 0.0 {
                        self.mass[c][nb] += m * overlap / old_width;
                    }
                }
            }
        }
    }

    fn class_totals(&self) -> Vec<f64> {
        self.mass.iter().map(|b| b.iter().sum()).collect()
    }

    /// Candidate thresholds: the interior bin boundaries of the tracked
    /// range.
    fn thresholds(&self) -> Vec<f64> {
        if self.lo.is_nan() || self.hi == self.lo {
            return Vec::new();
        }
        let width = (self.hi - self.lo) / self.bins as f64;
        (1..self.bins).map(|i| self.lo + i as f64 * width).collect()
    }

    /// Per-class mass at or below threshold `t` (a bin boundary): the mass
    /// of all bins strictly left of it.
    fn mass_le(&self, t: f64) -> Vec<f64> {
        let width = (self.hi - self.lo) / self.bins as f64;
        let split_bin = (((t - self.lo) / width).round() as usize).min(self.bins);
        self.mass
            .iter()
            .map(|bins| bins[..split_bin].iter().sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CatCounts {
    /// `counts[category][class]`
    counts: BTreeMap<String, Vec<f64>>,
    classes: usize,
}

impl CatCounts {
    fn new(classes: usize) -> Self {
        CatCounts {
            counts: BTreeMap::new(),
            classes,
        }
    }

    fn observe(&mut self, cat: &str, class: usize) {
        let classes = self.classes;
        self.counts
            .entry(cat.to_string())
            .or_insert_with(|| vec![0.0; classes])[class] += 1.0;
    }

    fn class_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.classes];
        for v in self.counts.values() {
            for (c, m) in v.iter().enumerate() {
                totals[c] += m;
            }
        }
        totals
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum FeatureObs {
    Numeric(NumHist),
    Categorical(CatCounts),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    /// Left branch when `x <= threshold` (missing values go left).
    NumericLe(f64),
    /// Left branch when the category is in the set.
    CategoryIn(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct LeafNode {
    /// Per-class event weight routed into this leaf's region, including the
    /// share inherited from its ancestors at split time. Fractional because
    /// inherited counts are partitioned by histogram mass.
    pub class_counts: Vec<f64>,
    obs: BTreeMap<String, FeatureObs>,
    n_since_check: u64,
    depth: usize,
}

impl LeafNode {
    fn new(classes: usize, depth: usize) -> Self {
        LeafNode {
            class_counts: vec![0.0; classes],
            obs: BTreeMap::new(),
            n_since_check: 0,
            depth,
        }
    }

    fn total(&self) -> f64 {
        self.class_counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum Node {
    Internal {
        field: String,
        test: SplitTest,
        left: usize,
        right: usize,
    },
    Leaf(LeafNode),
}

/// Incremental decision tree for streaming classification (VFDT lineage).
///
/// Leaves accumulate per-class, per-feature histograms; once a leaf has seen
/// `n_min` events since its last check, the best and second-best candidate
/// splits are compared under the Hoeffding bound
/// `eps = sqrt(R^2 ln(1/delta) / 2n)`, `R = log2(#classes)`, and the leaf
/// splits when `G(best) - G(second) > eps` or `eps < tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    pub params: HtParams,
    pub classes: Vec<String>,
    nodes: Vec<Node>,
    root: usize,
    pub n_seen: u64,
    n_splits: u64,
}

impl HoeffdingTree {
    pub fn new(schema: &Schema, params: HtParams) -> Result<Self, LearnError> {
        let classes = schema.label_classes();
        if classes.len() < 2 {
            return Err(LearnError::State(
                "schema must declare a label field with at least two classes".into(),
            ));
        }
        Ok(Self::from_classes(classes, params))
    }

    /// Fresh tree over a known class list; used for drift resets.
    pub fn from_classes(classes: Vec<String>, params: HtParams) -> Self {
        HoeffdingTree {
            params,
            nodes: vec![Node::Leaf(LeafNode::new(classes.len(), 0))],
            root: 0,
            classes,
            n_seen: 0,
            n_splits: 0,
        }
    }

    pub fn class_index(&self, label: &str) -> Result<usize, LearnError> {
        self.classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| LearnError::UnknownClass(label.to_string()))
    }

    fn route(&self, e: &Event) -> usize {
        let mut at = self.root;
        loop {
            match &self.nodes[at] {
                Node::Leaf(_) => return at,
                Node::Internal { field, test, left, right } => {
                    let go_left = match (test, e.values.get(field)) {
                        (SplitTest::NumericLe(t), Some(Value::Num(x))) => *x <= *t,
                        (SplitTest::CategoryIn(set), Some(Value::Cat(c))) => set.contains(c),
                        // Missing or mistyped: route left.
                        _ => true,
                    };
                    at = if go_left { *left } else { *right };
                }
            }
        }
    }

    /// One test-then-train training step (the "train" half).
    pub fn learn_one(&mut self, e: &Event) -> Result<(), LearnError> {
        let label = e.label.as_deref().ok_or(LearnError::MissingLabel)?;
        let class = self.class_index(label)?;
        let leaf_idx = self.route(e);
        let n_classes = self.classes.len();
        let bins = self.params.bins;

        let Node::Leaf(leaf) = &mut self.nodes[leaf_idx] else { unreachable!() };
        leaf.class_counts[class] += 1.0;
        leaf.n_since_check += 1;
        for (name, value) in &e.values {
            match value {
                Value::Num(x) => {
                    let obs = leaf
                        .obs
                        .entry(name.clone())
                        .or_insert_with(|| FeatureObs::Numeric(NumHist::new(n_classes, bins)));
                    if let FeatureObs::Numeric(h) = obs {
                        h.observe(*x, class);
                    }
                }
                Value::Cat(c) => {
                    let obs = leaf
                        .obs
                        .entry(name.clone())
                        .or_insert_with(|| FeatureObs::Categorical(CatCounts::new(n_classes)));
                    if let FeatureObs::Categorical(cc) = obs {
                        cc.observe(c, class);
                    }
                }
                Value::Missing => {}
            }
        }
        self.n_seen += 1;

        if leaf.n_since_check >= self.params.n_min && leaf.depth < self.params.max_depth {
            self.try_split(leaf_idx);
        }
        Ok(())
    }

    /// Laplace-smoothed class distribution and the argmax class (ties to
    /// the lower class index). Pure.
    pub fn predict(&self, e: &Event) -> (usize, Vec<f64>) {
        let leaf_idx = self.route(e);
        let Node::Leaf(leaf) = &self.nodes[leaf_idx] else { unreachable!() };
        let k = self.classes.len() as f64;
        let total = leaf.total();
        let probs: Vec<f64> = leaf
            .class_counts
            .iter()
            .map(|c| (c + 1.0) / (total + k))
            .collect();
        let best = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (best, probs)
    }

    fn try_split(&mut self, leaf_idx: usize) {
        let (gains, leaf_total, leaf_depth) = {
            let Node::Leaf(leaf) = &self.nodes[leaf_idx] else { unreachable!() };
            let mut gains: Vec<(f64, String, SplitTest, Vec<f64>, Vec<f64>)> = Vec::new();
            for (field, obs) in &leaf.obs {
                if let Some(best) = best_split_for_feature(field, obs) {
                    gains.push(best);
                }
            }
            // Highest gain first; field name breaks ties deterministically.
            gains.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            (gains, leaf.total(), leaf.depth)
        };

        let Node::Leaf(leaf) = &mut self.nodes[leaf_idx] else { unreachable!() };
        leaf.n_since_check = 0;
        if gains.is_empty() {
            return;
        }
        let g_best = gains[0].0;
        let g_second = gains.get(1).map(|g| g.0).unwrap_or(0.0);
        let r = (self.classes.len() as f64).log2();
        let eps = hoeffding_bound(r, self.params.delta, leaf_total);
        if g_best <= 0.0 || (g_best - g_second <= eps && eps >= self.params.tau) {
            return;
        }

        let (_, field, test, left_mass, right_mass) = gains.into_iter().next().unwrap();
        // Partition the leaf's class counts between the children in
        // proportion to the split feature's branch masses, so the total
        // weight is conserved exactly.
        let counts = leaf.class_counts.clone();
        let mut left_counts = vec![0.0; counts.len()];
        let mut right_counts = vec![0.0; counts.len()];
        for c in 0..counts.len() {
            let m = left_mass[c] + right_mass[c];
            let frac_left = if m > 0.0 { left_mass[c] / m } else { 0.5 };
            left_counts[c] = counts[c] * frac_left;
            right_counts[c] = counts[c] - left_counts[c];
        }

        let n_classes = self.classes.len();
        let mut left = LeafNode::new(n_classes, leaf_depth + 1);
        let mut right = LeafNode::new(n_classes, leaf_depth + 1);
        left.class_counts = left_counts;
        right.class_counts = right_counts;
        let left_idx = self.nodes.len();
        self.nodes.push(Node::Leaf(left));
        let right_idx = self.nodes.len();
        self.nodes.push(Node::Leaf(right));
        self.nodes[leaf_idx] = Node::Internal {
            field,
            test,
            left: left_idx,
            right: right_idx,
        };
        self.n_splits += 1;
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf(_) => 0,
                Node::Internal { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, self.root)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn n_splits(&self) -> u64 {
        self.n_splits
    }

    /// Total per-class weight across all leaves; equals the number of
    /// labeled events consumed (up to float rounding).
    pub fn leaf_count_sum(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(l) => Some(l.total()),
                _ => None,
            })
            .sum()
    }

    pub(crate) fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn root(&self) -> usize {
        self.root
    }
}

/// Entropy of a class-count vector, in bits.
fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Information gain of a binary partition given per-class masses on each
/// side.
fn info_gain(left: &[f64], right: &[f64]) -> f64 {
    let nl: f64 = left.iter().sum();
    let nr: f64 = right.iter().sum();
    let n = nl + nr;
    if n <= 0.0 {
        return 0.0;
    }
    let parent: Vec<f64> = left.iter().zip(right).map(|(a, b)| a + b).collect();
    entropy(&parent) - (nl / n) * entropy(left) - (nr / n) * entropy(right)
}

/// Best (gain, field, test, left-mass, right-mass) for one feature, or
/// `None` when the feature offers no candidate split.
fn best_split_for_feature(
    field: &str,
    obs: &FeatureObs,
) -> Option<(f64, String, SplitTest, Vec<f64>, Vec<f64>)> {
    match obs {
        FeatureObs::Numeric(h) => {
            let totals = h.class_totals();
            let mut best: Option<(f64, f64, Vec<f64>, Vec<f64>)> = None;
            for t in h.thresholds() {
                let left = h.mass_le(t);
                let right: Vec<f64> = totals.iter().zip(&left).map(|(a, b)| a - b).collect();
                let gain = info_gain(&left, &right);
                if best.as_ref().is_none_or(|b| gain > b.0) {
                    best = Some((gain, t, left, right));
                }
            }
            best.map(|(gain, t, left, right)| {
                (gain, field.to_string(), SplitTest::NumericLe(t), left, right)
            })
        }
        FeatureObs::Categorical(cc) => {
            let totals = cc.class_totals();
            let mut best: Option<(f64, String, Vec<f64>, Vec<f64>)> = None;
            for (cat, left) in &cc.counts {
                let right: Vec<f64> = totals.iter().zip(left).map(|(a, b)| a - b).collect();
                let gain = info_gain(left, &right);
                if best.as_ref().is_none_or(|b| gain > b.0) {
                    best = Some((gain, cat.clone(), left.clone(), right));
                }
            }
            best.map(|(gain, cat, left, right)| {
                (
                    gain,
                    field.to_string(),
                    SplitTest::CategoryIn(BTreeSet::from([cat])),
                    left,
                    right,
                )
            })
        }
    }
}
