//! Short-term, episodic and semantic memory systems.
//!
//! An observation enters short-term memory stamped with `current_time`. Each
//! short-term item is then moved, one at a time, to episodic memory (keeping
//! its time as `timestamp`), to semantic memory (as a `strength` counter), or
//! forgotten. Semantic strengths decay exponentially once per step.

mod history;
mod qa;
mod snapshot;

pub use history::HistoryWindow;
pub use qa::{answer_from_history, answer_question, heuristic_explore};
pub use snapshot::{MemorySnapshot, EPISODIC_COLOR, SEMANTIC_COLOR, SHORT_COLOR};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Observation, Vocabulary};
use crate::kg::Statement;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MemoryAction {
    ToEpisodic,
    ToSemantic,
    Forget,
}

impl MemoryAction {
    pub const ALL: [MemoryAction; 3] = [MemoryAction::ToEpisodic, MemoryAction::ToSemantic, MemoryAction::Forget];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

fn default_decay() -> f64 {
    0.8
}

fn default_prune() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryConfig {
    /// Bound on `|episodic| + |semantic|`.
    pub capacity: usize,
    #[serde(default)]
    pub episodic_cap: Option<usize>,
    #[serde(default)]
    pub semantic_cap: Option<usize>,
    #[serde(default = "default_decay")]
    pub decay_factor: f64,
    #[serde(default = "default_prune")]
    pub prune_threshold: f64,
    /// When set, an episodic answer older than this many steps loses to a
    /// semantic one. `None` always prefers episodic.
    #[serde(default)]
    pub recency_horizon: Option<u32>,
}

impl MemoryConfig {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            episodic_cap: None,
            semantic_cap: None,
            decay_factor: default_decay(),
            prune_threshold: default_prune(),
            recency_horizon: None,
        }
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        if self.capacity == 0 {
            return Err(MemoryError::InvalidArgument("capacity must be positive".into()));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(MemoryError::InvalidArgument("decay_factor must lie in (0, 1]".into()));
        }
        if !(self.prune_threshold >= 0.0) {
            return Err(MemoryError::InvalidArgument("prune_threshold must be non-negative".into()));
        }
        Ok(())
    }
}

/// Where a managed short-term item ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Episodic,
    SemanticNew,
    SemanticMerged,
    Discarded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManageOutcome {
    pub placement: Placement,
    pub evicted: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemorySystems {
    config: MemoryConfig,
    vocab: Vocabulary,
    time: u32,
    short: Vec<Statement>,
    episodic: Vec<Statement>,
    semantic: Vec<Statement>,
}

/// Stamps each observed statement with `current_time: t`, adjacency first
/// (north, east, south, west) and `atLocation` statements after, in
/// observation order.
pub fn encode_short(obs: &Observation, t: u32, vocab: &Vocabulary) -> Vec<Statement> {
    let mut adjacency: Vec<(usize, Statement)> = Vec::new();
    let mut rest = Vec::new();
    for st in obs {
        let stamped = st.requalified(vocab.current_time, t as f64);
        match vocab.direction_of(st.relation) {
            Some(d) => adjacency.push((d.index(), stamped)),
            None => rest.push(stamped),
        }
    }
    adjacency.sort_by_key(|(d, _)| *d);
    adjacency.into_iter().map(|(_, s)| s).chain(rest).collect()
}

impl MemorySystems {
    pub fn new(config: MemoryConfig, vocab: Vocabulary) -> Result<Self, MemoryError> {
        config.validate()?;
        Ok(Self {
            config,
            vocab,
            time: 0,
            short: Vec::new(),
            episodic: Vec::new(),
            semantic: Vec::new(),
        })
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn time(&self) -> u32 {
        self.time
    }

    pub fn short(&self) -> &[Statement] {
        &self.short
    }

    pub fn episodic(&self) -> &[Statement] {
        &self.episodic
    }

    pub fn semantic(&self) -> &[Statement] {
        &self.semantic
    }

    pub fn long_len(&self) -> usize {
        self.episodic.len() + self.semantic.len()
    }

    /// Empties every store and rewinds the clock.
    pub fn clear(&mut self) {
        self.time = 0;
        self.short.clear();
        self.episodic.clear();
        self.semantic.clear();
    }

    /// Replaces short-term memory with the encoded observation at time `t`.
    pub fn observe(&mut self, obs: &Observation, t: u32) -> &[Statement] {
        self.time = t;
        self.short = encode_short(obs, t, &self.vocab);
        &self.short
    }

    /// Moves `item` out of short-term memory according to `action`.
    pub fn manage(&mut self, item: &Statement, action: MemoryAction) -> Result<ManageOutcome, MemoryError> {
        let pos = self
            .short
            .iter()
            .position(|s| s == item)
            .ok_or_else(|| MemoryError::InvalidArgument("item is not in short-term memory".into()))?;
        let Some(time) = item.qualifiers.get(self.vocab.current_time) else {
            return Err(MemoryError::InvalidArgument("short-term item lacks current_time".into()));
        };
        let item = self.short.remove(pos);
        let mut evicted = Vec::new();
        let placement = match action {
            MemoryAction::Forget => Placement::Discarded,
            MemoryAction::ToEpisodic => {
                if self.config.episodic_cap == Some(0) {
                    Placement::Discarded
                } else {
                    if self.config.episodic_cap.is_some_and(|cap| self.episodic.len() >= cap) {
                        evicted.extend(self.evict_oldest_episodic());
                    }
                    while self.long_len() >= self.config.capacity {
                        evicted.extend(self.evict_joint());
                    }
                    self.episodic.push(item.requalified(self.vocab.timestamp, time));
                    Placement::Episodic
                }
            }
            MemoryAction::ToSemantic => {
                let strength = self.vocab.strength;
                if let Some(existing) = self.semantic.iter_mut().find(|s| s.triple() == item.triple()) {
                    let old = existing.qualifiers.get(strength).unwrap_or(0.0);
                    existing.qualifiers.set(strength, old + 1.0);
                    Placement::SemanticMerged
                } else if self.config.semantic_cap == Some(0) {
                    Placement::Discarded
                } else {
                    if self.config.semantic_cap.is_some_and(|cap| self.semantic.len() >= cap) {
                        evicted.extend(self.evict_weakest_semantic());
                    }
                    while self.long_len() >= self.config.capacity {
                        evicted.extend(self.evict_joint());
                    }
                    self.semantic.push(item.requalified(strength, 1.0));
                    Placement::SemanticNew
                }
            }
        };
        Ok(ManageOutcome { placement, evicted })
    }

    fn evict_joint(&mut self) -> Option<Statement> {
        if self.episodic.is_empty() {
            self.evict_weakest_semantic()
        } else {
            self.evict_oldest_episodic()
        }
    }

    /// Smallest timestamp; ties go to the earliest inserted.
    fn evict_oldest_episodic(&mut self) -> Option<Statement> {
        let ts = self.vocab.timestamp;
        let idx = self
            .episodic
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| {
                let (ta, tb) = (a.qualifiers.get(ts).unwrap_or(0.0), b.qualifiers.get(ts).unwrap_or(0.0));
                ta.total_cmp(&tb).then(i.cmp(j))
            })
            .map(|(i, _)| i)?;
        Some(self.episodic.remove(idx))
    }

    /// Smallest strength; ties go to the earliest inserted.
    fn evict_weakest_semantic(&mut self) -> Option<Statement> {
        let key = self.vocab.strength;
        let idx = self
            .semantic
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| {
                let (sa, sb) = (a.qualifiers.get(key).unwrap_or(0.0), b.qualifiers.get(key).unwrap_or(0.0));
                sa.total_cmp(&sb).then(i.cmp(j))
            })
            .map(|(i, _)| i)?;
        Some(self.semantic.remove(idx))
    }

    /// Scales every semantic strength by the configured factor and prunes
    /// those that fall below the threshold.
    pub fn decay(&mut self) {
        self.decay_by(self.config.decay_factor);
    }

    pub fn decay_by(&mut self, factor: f64) {
        let key = self.vocab.strength;
        let threshold = self.config.prune_threshold;
        for st in &mut self.semantic {
            let s = st.qualifiers.get(key).unwrap_or(0.0);
            st.qualifiers.set(key, s * factor);
        }
        self.semantic
            .retain(|st| st.qualifiers.get(key).unwrap_or(0.0) >= threshold);
    }

    /// Test and replay helper: installs stores verbatim.
    pub fn with_contents(
        mut self,
        time: u32,
        short: Vec<Statement>,
        episodic: Vec<Statement>,
        semantic: Vec<Statement>,
    ) -> Self {
        self.time = time;
        self.short = short;
        self.episodic = episodic;
        self.semantic = semantic;
        self
    }
}
