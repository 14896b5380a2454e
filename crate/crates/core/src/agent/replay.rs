use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;

use crate::kg::Statement;

/// Network input: one statement list per encoder.
pub type NetState = Vec<Vec<Statement>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Arc<NetState>,
    pub action: usize,
    pub reward: f64,
    /// `None` only for terminal transitions.
    pub next_state: Option<Arc<NetState>>,
    pub done: bool,
    /// Discount exponent: the target is `r + gamma^discount_steps * Q(s')`.
    /// One for an environment step, zero between memory decisions of the
    /// same step when discounting per step.
    pub discount_steps: u32,
}

/// FIFO experience store sampled uniformly with replacement.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn sample<'a, R: Rng + ?Sized>(&'a self, n: usize, rng: &mut R) -> Vec<&'a Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect()
    }
}
