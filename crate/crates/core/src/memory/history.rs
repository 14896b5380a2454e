use std::collections::VecDeque;

use crate::env::Observation;
use crate::kg::{Statement, Symbol};

/// Sliding window over the most recent observed statements, each stamped
/// with the time it was seen. Holds at most `max_len` statements.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryWindow {
    window: VecDeque<Statement>,
    max_len: usize,
    timestamp: Symbol,
}

impl HistoryWindow {
    pub fn new(max_len: usize, timestamp: Symbol) -> Self {
        assert!(max_len > 0, "history window needs a positive length");
        Self {
            window: VecDeque::with_capacity(max_len + 1),
            max_len,
            timestamp,
        }
    }

    pub fn push(&mut self, obs: &Observation, t: u32) {
        for st in obs {
            self.window.push_back(st.requalified(self.timestamp, t as f64));
        }
        while self.window.len() > self.max_len {
            self.window.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn timestamp_key(&self) -> Symbol {
        self.timestamp
    }

    pub fn clear(&mut self) {
        self.window.clear();
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Statement> {
        self.window.iter()
    }

    pub fn to_vec(&self) -> Vec<Statement> {
        self.window.iter().cloned().collect()
    }
}
