use super::fitted::{FittedField, FittedModel};
use super::spec::{ConceptSpec, DriftKind, DriftPoint, GenKind, GeneratorSpec};
use super::GenerateError;
use crate::model::{Event, Schema, Value};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Ground-truth concept boundary: event index where a drift begins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriftBoundary {
    pub event_n: u64,
    pub kind: DriftKind,
}

#[derive(Debug, Clone)]
struct Segment<C> {
    at: u64,
    kind: DriftKind,
    width: u64,
    concept: C,
}

/// Piecewise concept timeline: abrupt points switch at `at`, gradual points
/// interpolate linearly from the previous target over `width` events.
#[derive(Debug, Clone)]
struct Timeline<C> {
    segments: Vec<Segment<C>>,
}

impl<C: Clone> Timeline<C> {
    fn new(initial: C, schedule: Vec<(u64, DriftKind, u64, C)>) -> Self {
        let mut segments = vec![Segment {
            at: 0,
            kind: DriftKind::Abrupt,
            width: 0,
            concept: initial,
        }];
        for (at, kind, width, concept) in schedule {
            segments.push(Segment { at, kind, width, concept });
        }
        Timeline { segments }
    }

    /// Current concept at event `n`, with the blend weight toward the
    /// incoming concept when inside a gradual window.
    fn at(&self, n: u64) -> (&C, Option<(&C, f64)>) {
        let mut idx = 0;
        for (i, seg) in self.segments.iter().enumerate() {
            if n >= seg.at {
                idx = i;
            }
        }
        let seg = &self.segments[idx];
        if idx == 0 || seg.kind == DriftKind::Abrupt || n >= seg.at + seg.width {
            return (&seg.concept, None);
        }
        let prev = &self.segments[idx - 1].concept;
        let f = (n - seg.at) as f64 / seg.width as f64;
        (prev, Some((&seg.concept, f)))
    }
}

#[derive(Debug, Clone)]
struct HyperplaneConcept {
    w: Vec<f64>,
    theta: f64,
}

#[derive(Debug, Clone)]
struct MixtureConcept {
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
enum Core {
    Hyperplane(Timeline<HyperplaneConcept>),
    Mixture(Timeline<MixtureConcept>),
    Fitted {
        model: FittedModel,
        timeline: Timeline<Vec<f64>>,
    },
}

/// Deterministic synthetic event stream; an infinite iterator, callers
/// bound it with `take`.
#[derive(Debug, Clone)]
pub struct StreamGenerator {
    core: Core,
    rng: ChaCha12Rng,
    n: u64,
    noise_prob: f64,
    priors: Vec<f64>,
    dims: usize,
    boundaries: Vec<DriftBoundary>,
}

/// Builds a hyperplane or mixture generator. Fitted generators carry a
/// histogram model and are built with [`StreamGenerator::from_fitted`].
pub fn build_generator(spec: &GeneratorSpec) -> Result<StreamGenerator, GenerateError> {
    spec.validate()?;
    // Concept derivation and event generation use decoupled RNG streams so
    // adding schedule entries never shifts the event randomness.
    let mut concept_rng = ChaCha12Rng::seed_from_u64(spec.seed ^ 0x5eed_c0de);
    let core = match spec.kind {
        GenKind::Hyperplane => {
            if spec.classes != 2 {
                return Err(GenerateError::InvalidSpec(
                    "hyperplane labels are binary; classes must be 2".into(),
                ));
            }
            let initial = match &spec.concept {
                Some(ConceptSpec::Hyperplane { w, theta }) => {
                    if w.len() != spec.dims {
                        return Err(GenerateError::InvalidSpec("w length != dims".into()));
                    }
                    HyperplaneConcept { w: w.clone(), theta: *theta }
                }
                None => {
                    let w: Vec<f64> =
                        (0..spec.dims).map(|_| concept_rng.random_range(-1.0..1.0)).collect();
                    let theta = 0.5 * w.iter().sum::<f64>();
                    HyperplaneConcept { w, theta }
                }
                Some(_) => {
                    return Err(GenerateError::InvalidSpec(
                        "initial concept does not fit hyperplane".into(),
                    ))
                }
            };
            let schedule = spec
                .schedule
                .iter()
                .map(|p| {
                    let ConceptSpec::Hyperplane { w, theta } = &p.concept else { unreachable!() };
                    (p.at, p.kind, p.width, HyperplaneConcept { w: w.clone(), theta: *theta })
                })
                .collect();
            Core::Hyperplane(Timeline::new(initial, schedule))
        }
        GenKind::Mixture => {
            let initial = match &spec.concept {
                Some(ConceptSpec::Mixture { means, vars }) => MixtureConcept {
                    means: means.clone(),
                    vars: vars.clone(),
                },
                None => MixtureConcept {
                    means: (0..spec.classes)
                        .map(|_| (0..spec.dims).map(|_| concept_rng.random_range(0.0..10.0)).collect())
                        .collect(),
                    vars: vec![vec![1.0; spec.dims]; spec.classes],
                },
                Some(_) => {
                    return Err(GenerateError::InvalidSpec(
                        "initial concept does not fit mixture".into(),
                    ))
                }
            };
            if initial.means.len() != spec.classes || initial.vars.len() != spec.classes {
                return Err(GenerateError::InvalidSpec("means/vars must have one row per class".into()));
            }
            if initial.means.iter().chain(initial.vars.iter()).any(|r| r.len() != spec.dims) {
                return Err(GenerateError::InvalidSpec("means/vars rows must have dims entries".into()));
            }
            let schedule = spec
                .schedule
                .iter()
                .map(|p| {
                    let ConceptSpec::Mixture { means, vars } = &p.concept else { unreachable!() };
                    (p.at, p.kind, p.width, MixtureConcept { means: means.clone(), vars: vars.clone() })
                })
                .collect();
            Core::Mixture(Timeline::new(initial, schedule))
        }
        GenKind::Fitted => {
            return Err(GenerateError::InvalidSpec(
                "fitted generators need a model; use StreamGenerator::from_fitted".into(),
            ))
        }
    };
    Ok(StreamGenerator {
        core,
        rng: ChaCha12Rng::seed_from_u64(spec.seed),
        n: 0,
        noise_prob: spec.noise_prob,
        priors: spec.priors(),
        dims: spec.dims,
        boundaries: boundaries_of(&spec.schedule),
    })
}

fn boundaries_of(schedule: &[DriftPoint]) -> Vec<DriftBoundary> {
    schedule
        .iter()
        .map(|p| DriftBoundary { event_n: p.at, kind: p.kind })
        .collect()
}

impl StreamGenerator {
    /// Generator sampling a fitted histogram model; the schedule may remap
    /// class priors.
    pub fn from_fitted(model: FittedModel, spec: &GeneratorSpec) -> Result<Self, GenerateError> {
        spec.validate()?;
        let initial: Vec<f64> = match &spec.concept {
            Some(ConceptSpec::Priors { priors }) => priors.clone(),
            None => model.priors.iter().map(|(_, p)| *p).collect(),
            Some(_) => {
                return Err(GenerateError::InvalidSpec(
                    "initial concept does not fit the fitted generator".into(),
                ))
            }
        };
        for p in &spec.schedule {
            let ConceptSpec::Priors { priors } = &p.concept else { unreachable!() };
            if priors.len() != model.priors.len() {
                return Err(GenerateError::InvalidSpec(
                    "prior remap length differs from fitted classes".into(),
                ));
            }
        }
        let schedule = spec
            .schedule
            .iter()
            .map(|p| {
                let ConceptSpec::Priors { priors } = &p.concept else { unreachable!() };
                (p.at, p.kind, p.width, priors.clone())
            })
            .collect();
        Ok(StreamGenerator {
            core: Core::Fitted {
                model,
                timeline: Timeline::new(initial, schedule),
            },
            rng: ChaCha12Rng::seed_from_u64(spec.seed),
            n: 0,
            noise_prob: 0.0,
            priors: Vec::new(),
            dims: spec.dims,
            boundaries: boundaries_of(&spec.schedule),
        })
    }

    /// Concept boundaries for the drift ground-truth side channel.
    pub fn ground_truth(&self) -> &[DriftBoundary] {
        &self.boundaries
    }

    /// Schema of the events this generator emits.
    pub fn schema(&self) -> Schema {
        match &self.core {
            Core::Hyperplane(_) => {
                let names: Vec<String> = (0..self.dims).map(|i| format!("x{i}")).collect();
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                Schema::numeric(&refs).with_label("label", &["0", "1"])
            }
            Core::Mixture(t) => {
                let names: Vec<String> = (0..self.dims).map(|i| format!("x{i}")).collect();
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                let classes: Vec<String> =
                    (0..t.segments[0].concept.means.len()).map(|c| c.to_string()).collect();
                let class_refs: Vec<&str> = classes.iter().map(String::as_str).collect();
                Schema::numeric(&refs).with_label("label", &class_refs)
            }
            Core::Fitted { model, .. } => {
                let mut schema = Schema { fields: vec![], label_field: None };
                for (name, f) in &model.fields {
                    schema.fields.push(crate::model::FieldSpec {
                        name: name.clone(),
                        kind: match f {
                            FittedField::Numeric { .. } => crate::model::FieldKind::Numeric,
                            FittedField::Categorical { .. } => crate::model::FieldKind::Categorical,
                        },
                        categories: match f {
                            FittedField::Numeric { .. } => None,
                            FittedField::Categorical { mass } => {
                                Some(mass.keys().cloned().collect())
                            }
                        },
                    });
                }
                if !model.priors.is_empty() {
                    let classes: Vec<&str> = model.priors.iter().map(|(c, _)| c.as_str()).collect();
                    schema = schema.with_label("label", &classes);
                }
                schema
            }
        }
    }

}

/// One-uniform categorical draw by cumulative scan.
fn weighted(rng: &mut ChaCha12Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random_range(0.0..total);
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn lerp(a: f64, b: f64, f: f64) -> f64 {
    a + (b - a) * f
}

impl Iterator for StreamGenerator {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        let n = self.n;
        self.n += 1;
        let mut e = Event::new(n as i64, "");
        match &mut self.core {
            Core::Hyperplane(timeline) => {
                e.source = "hyperplane".into();
                let xs: Vec<f64> = (0..self.dims).map(|_| self.rng.random_range(0.0..1.0)).collect();
                let (base, blend) = timeline.at(n);
                let (w, theta): (Vec<f64>, f64) = match blend {
                    None => (base.w.clone(), base.theta),
                    Some((next, f)) => (
                        base.w.iter().zip(&next.w).map(|(a, b)| lerp(*a, *b, f)).collect(),
                        lerp(base.theta, next.theta, f),
                    ),
                };
                let dot: f64 = w.iter().zip(&xs).map(|(wi, xi)| wi * xi).sum();
                let mut label = if dot >= theta { 1u8 } else { 0u8 };
                if self.noise_prob > 0.0 && self.rng.random_bool(self.noise_prob) {
                    label ^= 1;
                }
                for (i, x) in xs.into_iter().enumerate() {
                    e.values.insert(format!("x{i}"), Value::Num(x));
                }
                e.label = Some(label.to_string());
            }
            Core::Mixture(timeline) => {
                e.source = "mixture".into();
                let class = weighted(&mut self.rng, &self.priors);
                let (base, blend) = timeline.at(n);
                for d in 0..self.dims {
                    let (mean, var) = match blend {
                        None => (base.means[class][d], base.vars[class][d]),
                        Some((next, f)) => (
                            lerp(base.means[class][d], next.means[class][d], f),
                            lerp(base.vars[class][d], next.vars[class][d], f),
                        ),
                    };
                    let z: f64 = self.rng.sample(StandardNormal);
                    e.values.insert(format!("x{d}"), Value::Num(mean + z * var.sqrt()));
                }
                e.label = Some(class.to_string());
            }
            Core::Fitted { model, timeline } => {
                e.source = "fitted".into();
                let (base, blend) = timeline.at(n);
                let priors: Vec<f64> = match blend {
                    None => base.clone(),
                    Some((next, f)) => {
                        base.iter().zip(next).map(|(a, b)| lerp(*a, *b, f)).collect()
                    }
                };
                if !model.priors.is_empty() {
                    let class = weighted(&mut self.rng, &priors);
                    e.label = Some(model.priors[class].0.clone());
                }
                for (name, field) in &model.fields {
                    match field {
                        FittedField::Numeric { lo, hi, mass } => {
                            let bin = weighted(&mut self.rng, mass);
                            let width = (hi - lo) / mass.len() as f64;
                            let bin_lo = lo + bin as f64 * width;
                            let x = if width > 0.0 {
                                self.rng.random_range(bin_lo..bin_lo + width)
                            } else {
                                *lo
                            };
                            e.values.insert(name.clone(), Value::Num(x));
                        }
                        FittedField::Categorical { mass } => {
                            let cats: Vec<&String> = mass.keys().collect();
                            let weights: Vec<f64> = mass.values().copied().collect();
                            let c = weighted(&mut self.rng, &weights);
                            e.values.insert(name.clone(), Value::Cat(cats[c].clone()));
                        }
                    }
                }
            }
        }
        Some(e)
    }
}
