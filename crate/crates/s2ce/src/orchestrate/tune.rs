use serde::{Deserialize, Serialize};

/// Runtime parameters under tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeKnobs {
    /// Events per channel message in concurrent mode.
    pub batch_size: usize,
    /// Replicas for stateless stages.
    pub parallelism: usize,
    /// Bounded queue capacity per edge, in messages.
    pub queue_capacity: usize,
}

impl Default for RuntimeKnobs {
    fn default() -> Self {
        RuntimeKnobs {
            batch_size: 64,
            parallelism: 1,
            queue_capacity: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub throughput_eps: f64,
    pub p95_latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub round: usize,
    pub events_each: u64,
    /// (candidate index into the original list, outcome), ranked best
    /// first.
    pub ranked: Vec<(usize, BenchOutcome)>,
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub rounds: Vec<RoundResult>,
    pub winner: usize,
}

/// Successive halving over knob candidates.
///
/// The event budget is split evenly over `ceil(log2(n))` rounds; each round
/// benchmarks the survivors on its share and keeps the top half
/// (`ceil(k/2)`) by throughput, ties by lower latency then by candidate
/// order. A single candidate is returned immediately, unbenchmarked.
pub fn tune_parameters(
    candidates: &[RuntimeKnobs],
    budget_events: u64,
    mut bench: impl FnMut(&RuntimeKnobs, u64) -> BenchOutcome,
) -> (RuntimeKnobs, TuneReport) {
    assert!(!candidates.is_empty(), "need at least one candidate");
    if candidates.len() == 1 {
        return (
            candidates[0],
            TuneReport {
                rounds: Vec::new(),
                winner: 0,
            },
        );
    }

    let total_rounds = (candidates.len() as f64).log2().ceil() as u64;
    let events_each = (budget_events / total_rounds.max(1)).max(1);

    let mut alive: Vec<usize> = (0..candidates.len()).collect();
    let mut rounds = Vec::new();
    let mut round = 0;
    while alive.len() > 1 {
        let mut ranked: Vec<(usize, BenchOutcome)> = alive
            .iter()
            .map(|&i| (i, bench(&candidates[i], events_each)))
            .collect();
        ranked.sort_by(|a, b| {
            b.1.throughput_eps
                .partial_cmp(&a.1.throughput_eps)
                .unwrap()
                .then(a.1.p95_latency_ms.partial_cmp(&b.1.p95_latency_ms).unwrap())
                .then(a.0.cmp(&b.0))
        });
        let keep = alive.len().div_ceil(2);
        alive = ranked.iter().take(keep).map(|(i, _)| *i).collect();
        rounds.push(RoundResult {
            round,
            events_each,
            ranked,
            survivors: alive.clone(),
        });
        round += 1;
    }

    let winner = alive[0];
    (candidates[winner], TuneReport { rounds, winner })
}
