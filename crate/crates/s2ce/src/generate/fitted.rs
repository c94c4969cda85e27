use super::GenerateError;
use crate::model::{Event, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Histogram model of one field. Only bin edges and smoothed masses are
/// kept; no raw sample value survives fitting beyond the observed range
/// ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedField {
    Numeric {
        lo: f64,
        hi: f64,
        /// Laplace-smoothed bin masses, summing to 1; all strictly positive.
        mass: Vec<f64>,
    },
    Categorical {
        /// Smoothed category frequencies, summing to 1.
        mass: BTreeMap<String, f64>,
    },
}

/// Distribution fitted from a real sample: per-field histograms plus class
/// priors. Generating from it reproduces the marginals at any volume while
/// never replaying a source record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub fields: BTreeMap<String, FittedField>,
    /// (class, smoothed prior); empty when the sample was unlabeled.
    pub priors: Vec<(String, f64)>,
    pub fitted_on: u64,
    pub bins: usize,
}

/// Fits equal-width histograms (Laplace-smoothed, `bins >= 20` recommended)
/// and class priors on a sample.
pub fn fit_generator<'a>(
    sample: impl IntoIterator<Item = &'a Event>,
    bins: usize,
) -> Result<FittedModel, GenerateError> {
    assert!(bins >= 2);
    struct NumAcc {
        lo: f64,
        hi: f64,
        values: Vec<f64>,
    }
    let mut numeric: BTreeMap<String, NumAcc> = BTreeMap::new();
    let mut categorical: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut labels: BTreeMap<String, u64> = BTreeMap::new();
    let mut n = 0u64;

    for e in sample {
        n += 1;
        for (name, value) in &e.values {
            match value {
                Value::Num(x) => {
                    let acc = numeric.entry(name.clone()).or_insert(NumAcc {
                        lo: *x,
                        hi: *x,
                        values: Vec::new(),
                    });
                    acc.lo = acc.lo.min(*x);
                    acc.hi = acc.hi.max(*x);
                    acc.values.push(*x);
                }
                Value::Cat(c) => {
                    *categorical
                        .entry(name.clone())
                        .or_default()
                        .entry(c.clone())
                        .or_insert(0) += 1;
                }
                Value::Missing => {}
            }
        }
        if let Some(label) = &e.label {
            *labels.entry(label.clone()).or_insert(0) += 1;
        }
    }
    if n == 0 {
        return Err(GenerateError::EmptySample);
    }

    let mut fields = BTreeMap::new();
    for (name, acc) in numeric {
        let mut counts = vec![0u64; bins];
        let span = acc.hi - acc.lo;
        for x in &acc.values {
            let bin = if span == 0.0 {
                0
            } else {
                (((x - acc.lo) / span * bins as f64) as usize).min(bins - 1)
            };
            counts[bin] += 1;
        }
        let total = acc.values.len() as f64 + bins as f64;
        let mass: Vec<f64> = counts.iter().map(|c| (*c as f64 + 1.0) / total).collect();
        fields.insert(name, FittedField::Numeric { lo: acc.lo, hi: acc.hi, mass });
    }
    for (name, counts) in categorical {
        let total: u64 = counts.values().sum();
        let k = counts.len() as f64;
        let mass: BTreeMap<String, f64> = counts
            .into_iter()
            .map(|(c, m)| (c, (m as f64 + 1.0) / (total as f64 + k)))
            .collect();
        fields.insert(name, FittedField::Categorical { mass });
    }

    let label_total: u64 = labels.values().sum();
    let label_k = labels.len() as f64;
    let priors: Vec<(String, f64)> = labels
        .into_iter()
        .map(|(c, m)| (c, (m as f64 + 1.0) / (label_total as f64 + label_k)))
        .collect();

    Ok(FittedModel {
        fields,
        priors,
        fitted_on: n,
        bins,
    })
}
