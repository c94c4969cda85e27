use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriftLevel {
    #[default]
    Stable,
    Warning,
    Drift,
}

impl std::fmt::Display for DriftLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DriftLevel::Stable => "stable",
            DriftLevel::Warning => "warning",
            DriftLevel::Drift => "drift",
        })
    }
}

/// Drift detection method over a binary error stream.
///
/// Tracks the running error rate `p_i` and its binomial deviation
/// `s_i = sqrt(p_i (1 - p_i) / i)`, remembers the minimum of `p + s`, and
/// escalates when the current value exceeds the remembered minimum by two
/// (warning) or three (drift) of the remembered deviations. A drift signal
/// resets the window. Signals are suppressed for the first `min_obs`
/// observations to avoid cold-start alarms.
///
/// The error rate is kept as an integer count so `p_i` is exact and any
/// step-by-step replay of the inequalities reproduces decisions bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ddm {
    pub i: u64,
    pub errors: u64,
    pub p_min: f64,
    pub s_min: f64,
    pub level: DriftLevel,
    pub min_obs: u64,
}

impl Default for Ddm {
    fn default() -> Self {
        Ddm::new(30)
    }
}

impl Ddm {
    pub fn new(min_obs: u64) -> Self {
        Ddm {
            i: 0,
            errors: 0,
            p_min: f64::INFINITY,
            s_min: f64::INFINITY,
            level: DriftLevel::Stable,
            min_obs,
        }
    }

    /// Running error rate.
    pub fn p(&self) -> f64 {
        if self.i == 0 {
            0.0
        } else {
            self.errors as f64 / self.i as f64
        }
    }

    /// Binomial standard deviation of the error estimate.
    pub fn s(&self) -> f64 {
        if self.i == 0 {
            return 0.0;
        }
        let p = self.p();
        (p * (1.0 - p) / self.i as f64).sqrt()
    }

    pub fn update(&mut self, correct: bool) -> DriftLevel {
        self.i += 1;
        if !correct {
            self.errors += 1;
        }

        if self.i < self.min_obs {
            self.level = DriftLevel::Stable;
            return self.level;
        }

        let p = self.p();
        let s = self.s();
        if p + s < self.p_min + self.s_min {
            self.p_min = p;
            self.s_min = s;
        }

        self.level = if p + s > self.p_min + 3.0 * self.s_min {
            DriftLevel::Drift
        } else if p + s > self.p_min + 2.0 * self.s_min {
            DriftLevel::Warning
        } else {
            DriftLevel::Stable
        };

        if self.level == DriftLevel::Drift {
            self.i = 0;
            self.errors = 0;
            self.p_min = f64::INFINITY;
            self.s_min = f64::INFINITY;
        }
        self.level
    }
}
