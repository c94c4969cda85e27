use super::GenerateError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    /// Uniform features in `[0,1]^d`, label from a rotating hyperplane.
    Hyperplane,
    /// Class-conditional diagonal Gaussians with skewable priors.
    Mixture,
    /// Samples from a [`super::FittedModel`] histogram model.
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    Abrupt,
    Gradual,
}

impl std::fmt::Display for DriftKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DriftKind::Abrupt => "abrupt",
            DriftKind::Gradual => "gradual",
        })
    }
}

/// Concept parameters a drift can switch to. Variant is matched against the
/// generator kind at validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConceptSpec {
    Hyperplane { w: Vec<f64>, theta: f64 },
    Mixture { means: Vec<Vec<f64>>, vars: Vec<Vec<f64>> },
    Priors { priors: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftPoint {
    /// Event index at which the transition starts.
    pub at: u64,
    pub kind: DriftKind,
    /// Transition length in events; required > 0 for gradual drift.
    #[serde(default)]
    pub width: u64,
    pub concept: ConceptSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GenKind,
    pub dims: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
    /// Probability of flipping the label (hyperplane only).
    #[serde(default)]
    pub noise_prob: f64,
    /// Class priors; uniform when empty.
    #[serde(default)]
    pub skew: Vec<f64>,
    #[serde(default)]
    pub schedule: Vec<DriftPoint>,
    #[serde(default)]
    pub seed: u64,
    /// Target emission rate for live replay; 0 = unpaced.
    #[serde(default)]
    pub rate_eps: f64,
    /// Starting concept; derived from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept: Option<ConceptSpec>,
    /// Fitted kind only: record file to fit the histogram model on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_from: Option<String>,
    /// Fitted kind only: histogram resolution.
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_classes() -> usize {
    2
}

fn default_bins() -> usize {
    20
}

impl GeneratorSpec {
    pub fn new(kind: GenKind, dims: usize, seed: u64) -> Self {
        GeneratorSpec {
            kind,
            dims,
            classes: 2,
            noise_prob: 0.0,
            skew: Vec::new(),
            schedule: Vec::new(),
            seed,
            rate_eps: 0.0,
            concept: None,
            fit_from: None,
            bins: default_bins(),
        }
    }

    /// Priors, defaulted to uniform over `classes`.
    pub fn priors(&self) -> Vec<f64> {
        if self.skew.is_empty() {
            vec![1.0 / self.classes as f64; self.classes]
        } else {
            self.skew.clone()
        }
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        if self.dims < 1 {
            return Err(GenerateError::InvalidSpec("dims must be >= 1".into()));
        }
        if self.classes < 1 {
            return Err(GenerateError::InvalidSpec("classes must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_prob) {
            return Err(GenerateError::InvalidSpec("noise_prob must be in [0,1]".into()));
        }
        if !self.skew.is_empty() {
            if self.skew.len() != self.classes {
                return Err(GenerateError::InvalidSpec(format!(
                    "skew has {} entries for {} classes",
                    self.skew.len(),
                    self.classes
                )));
            }
            let total: f64 = self.skew.iter().sum();
            if (total - 1.0).abs() > 1e-9 || self.skew.iter().any(|p| *p < 0.0) {
                return Err(GenerateError::InvalidSpec(
                    "skew priors must be nonnegative and sum to 1".into(),
                ));
            }
        }
        let mut last: Option<(u64, u64)> = None;
        for p in &self.schedule {
            if let Some((prev_at, prev_width)) = last {
                if p.at <= prev_at {
                    return Err(GenerateError::InvalidSpec(
                        "schedule event indices must be strictly increasing".into(),
                    ));
                }
                if p.at < prev_at + prev_width {
                    return Err(GenerateError::InvalidSpec(
                        "drift windows must not overlap".into(),
                    ));
                }
            }
            last = Some((p.at, p.width));
            if p.kind == DriftKind::Gradual && p.width == 0 {
                return Err(GenerateError::InvalidSpec(
                    "gradual drift needs width > 0".into(),
                ));
            }
            let ok = matches!(
                (self.kind, &p.concept),
                (GenKind::Hyperplane, ConceptSpec::Hyperplane { .. })
                    | (GenKind::Mixture, ConceptSpec::Mixture { .. })
                    | (GenKind::Fitted, ConceptSpec::Priors { .. })
            );
            if !ok {
                return Err(GenerateError::InvalidSpec(format!(
                    "schedule concept at {} does not fit generator kind",
                    p.at
                )));
            }
        }
        if self.kind == GenKind::Fitted && self.bins < 2 {
            return Err(GenerateError::InvalidSpec("fitted bins must be >= 2".into()));
        }
        Ok(())
    }
}
