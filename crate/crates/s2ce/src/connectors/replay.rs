use super::files::{read_events, FileSourceError};
use crate::model::Event;
use std::path::Path;
use std::time::{Duration, Instant};

/// Paces emissions to a target long-run rate by scheduling event `i` at
/// `start + i/rate` instead of sleeping a fixed gap, so sleep jitter does
/// not accumulate.
#[derive(Debug)]
pub struct RateLimiter {
    start: Instant,
    rate_eps: f64,
    emitted: u64,
}

impl RateLimiter {
    /// `rate_eps = 0` disables pacing ("as fast as possible").
    pub fn new(rate_eps: f64) -> Self {
        RateLimiter {
            start: Instant::now(),
            rate_eps,
            emitted: 0,
        }
    }

    /// Blocks until the next emission is due, then accounts for it.
    pub fn pace(&mut self) {
        if self.rate_eps > 0.0 {
            let due = self.start + Duration::from_secs_f64(self.emitted as f64 / self.rate_eps);
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        self.emitted += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub count: u64,
    pub duration_s: f64,
    pub achieved_eps: f64,
}

/// Replays a record file into `sink` in file order at `rate_eps` events per
/// second (0 = unpaced). The sink is free to block; replay never drops.
pub fn replay(
    path: impl AsRef<Path>,
    rate_eps: f64,
    sink: impl FnMut(Event),
) -> Result<ReplayReport, FileSourceError> {
    let events = read_events(path)?;
    Ok(replay_events(events, rate_eps, sink))
}

/// In-memory variant of [`replay`]; shared by the synthetic generators.
pub fn replay_events(
    events: Vec<Event>,
    rate_eps: f64,
    mut sink: impl FnMut(Event),
) -> ReplayReport {
    let mut limiter = RateLimiter::new(rate_eps);
    let started = Instant::now();
    let mut count = 0u64;
    for e in events {
        limiter.pace();
        sink(e);
        count += 1;
    }
    let duration_s = started.elapsed().as_secs_f64();
    ReplayReport {
        count,
        duration_s,
        achieved_eps: if duration_s > 0.0 {
            count as f64 / duration_s
        } else {
            f64::INFINITY
        },
    }
}
