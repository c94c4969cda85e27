use rand::Rng;
use serde::{Deserialize, Serialize};

/// Algorithm R: a uniform sample of `k` items from a stream of unknown
/// length, one RNG draw per post-fill item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reservoir<T> {
    pub capacity: usize,
    pub items: Vec<T>,
    pub seen: u64,
}

impl<T> Reservoir<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "reservoir capacity must be >= 1");
        Reservoir {
            capacity,
            items: Vec::with_capacity(capacity),
            seen: 0,
        }
    }

    /// Classic reservoir step: fill to `k`, then replace a uniform slot with
    /// probability `k/n`.
    pub fn add(&mut self, item: T, rng: &mut impl Rng) {
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            let j = rng.random_range(0..self.seen);
            if (j as usize) < self.capacity {
                self.items[j as usize] = item;
            }
        }
    }

    /// Shrinks capacity in place (dropping the tail) or raises it for future
    /// fills; used by the `set_sample_rate` control message.
    pub fn resize(&mut self, capacity: usize) {
        assert!(capacity >= 1);
        self.capacity = capacity;
        self.items.truncate(capacity);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
