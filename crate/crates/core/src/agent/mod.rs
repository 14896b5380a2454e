//! Double DQN training and greedy evaluation.
//!
//! HumemAI trains in two phases. Phase one learns the memory-management
//! policy while a wall-avoiding random walk explores; phase two freezes it
//! and learns exploration, starting from the phase-one LSTM weights. The
//! baseline learns exploration directly over a sliding history window.

mod dqn;
mod eval;
mod experiment;
mod replay;
mod train;

pub use dqn::{dqn_update, masked_argmax, td_target, td_target_masked, Learner};
pub use eval::{evaluate, evaluate_seeds, run_greedy_episode, AttentionStep, EpisodeLog, EvalReport, PolicyKind};
pub use experiment::{run_experiment, test_seeds, validation_seeds, CellSummary, ExperimentOutput};
pub use replay::{NetState, ReplayBuffer, Transition};
pub use train::{train_baseline, train_phase1_mm, train_phase2_explore, MetricRow, PhaseOutput, Policy};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EnvError;
use crate::memory::MemoryError;
use crate::nn::NnError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Humemai,
    HumemaiEpisodicOnly,
    HumemaiSemanticOnly,
    Baseline,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [
        AgentKind::Humemai,
        AgentKind::HumemaiEpisodicOnly,
        AgentKind::HumemaiSemanticOnly,
        AgentKind::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Humemai => "humemai",
            AgentKind::HumemaiEpisodicOnly => "humemai-episodic-only",
            AgentKind::HumemaiSemanticOnly => "humemai-semantic-only",
            AgentKind::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Allowed memory-management actions (episodic, semantic, forget).
    pub fn mm_mask(self) -> [bool; 3] {
        match self {
            AgentKind::HumemaiEpisodicOnly => [true, false, true],
            AgentKind::HumemaiSemanticOnly => [false, true, true],
            _ => [true; 3],
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How an env-step reward is credited to the memory-management decisions
/// made during that step.
/// Unit of time for discounting memory-management transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MmDiscount {
    /// `gamma` between consecutive memory decisions.
    PerDecision,
    /// `gamma` only across environment steps; decisions within a step are
    /// undiscounted.
    PerStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardAttribution {
    /// Every decision of the step receives the full reward.
    Broadcast,
    /// Only the step's final decision receives it; the others get zero.
    LastOnly,
}

/// Layer sizes for one network family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetDims {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub mlp_hidden: Vec<usize>,
}

impl NetDims {
    pub fn humemai() -> Self {
        Self {
            embed_dim: 64,
            hidden_dim: 52,
            mlp_hidden: vec![64],
        }
    }

    pub fn baseline() -> Self {
        Self {
            embed_dim: 64,
            hidden_dim: 64,
            mlp_hidden: vec![320, 320],
        }
    }
}

/// Linear ε decay from `start` to `end` over `decay_steps`, then flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

mod defaults {
    pub fn gamma() -> f64 {
        0.9
    }
    pub fn lr() -> f64 {
        1e-3
    }
    pub fn batch_size() -> usize {
        32
    }
    pub fn buffer_capacity() -> usize {
        10_000
    }
    pub fn epsilon_start() -> f64 {
        1.0
    }
    pub fn epsilon_end() -> f64 {
        0.05
    }
    pub fn epsilon_decay_fraction() -> f64 {
        0.5
    }
    pub fn target_sync_every() -> u64 {
        200
    }
    pub fn episodes_per_phase() -> usize {
        100
    }
    pub fn eval_every() -> usize {
        10
    }
    pub fn validation_episodes() -> usize {
        2
    }
    pub fn eval_episodes() -> usize {
        5
    }
    pub fn train_every() -> u64 {
        4
    }
    pub fn reward_attribution() -> super::RewardAttribution {
        super::RewardAttribution::LastOnly
    }
    pub fn mm_discount() -> super::MmDiscount {
        super::MmDiscount::PerStep
    }
    pub fn humemai_net() -> super::NetDims {
        super::NetDims::humemai()
    }
    pub fn baseline_net() -> super::NetDims {
        super::NetDims::baseline()
    }
    pub fn seeds() -> Vec<u64> {
        vec![0, 1, 2, 3, 4]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    #[serde(default = "defaults::lr")]
    pub lr: f64,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::buffer_capacity")]
    pub buffer_capacity: usize,
    #[serde(default = "defaults::epsilon_start")]
    pub epsilon_start: f64,
    #[serde(default = "defaults::epsilon_end")]
    pub epsilon_end: f64,
    /// Fraction of a phase's env steps over which ε decays.
    #[serde(default = "defaults::epsilon_decay_fraction")]
    pub epsilon_decay_fraction: f64,
    /// Gradient updates between target-network syncs.
    #[serde(default = "defaults::target_sync_every")]
    pub target_sync_every: u64,
    #[serde(default = "defaults::episodes_per_phase")]
    pub episodes_per_phase: usize,
    /// Training episodes between greedy validation runs.
    #[serde(default = "defaults::eval_every")]
    pub eval_every: usize,
    #[serde(default = "defaults::validation_episodes")]
    pub validation_episodes: usize,
    /// Greedy test episodes after training.
    #[serde(default = "defaults::eval_episodes")]
    pub eval_episodes: usize,
    /// Env steps between gradient updates.
    #[serde(default = "defaults::train_every")]
    pub train_every: u64,
    #[serde(default = "defaults::reward_attribution")]
    pub reward_attribution: RewardAttribution,
    #[serde(default = "defaults::mm_discount")]
    pub mm_discount: MmDiscount,
    #[serde(default = "defaults::humemai_net")]
    pub humemai_net: NetDims,
    #[serde(default = "defaults::baseline_net")]
    pub baseline_net: NetDims,
    #[serde(default = "defaults::seeds")]
    pub seeds: Vec<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl TrainConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, AgentError> {
        let cfg: Self = toml::from_str(s).map_err(|e| AgentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let err = |m: &str| Err(AgentError::Config(m.to_owned()));
        if !(0.0..1.0).contains(&self.gamma) {
            return err("gamma must lie in [0, 1)");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return err("lr must be positive");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return err("batch_size and buffer_capacity must be positive");
        }
        for (name, v) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(AgentError::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return err("epsilon_decay_fraction must lie in [0, 1]");
        }
        if self.target_sync_every == 0 || self.train_every == 0 {
            return err("target_sync_every and train_every must be positive");
        }
        if self.eval_every == 0 || self.validation_episodes == 0 {
            return err("eval_every and validation_episodes must be positive");
        }
        Ok(())
    }

    pub fn epsilon_schedule(&self, total_steps: u64) -> EpsilonSchedule {
        EpsilonSchedule {
            start: self.epsilon_start,
            end: self.epsilon_end,
            decay_steps: (total_steps as f64 * self.epsilon_decay_fraction).round() as u64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_schedule_is_monotone_and_hits_endpoints() {
        let s = TrainConfig::default().epsilon_schedule(10_000);
        assert_eq!(s.value(0), 1.0);
        assert_eq!(s.value(5_000), 0.05);
        assert_eq!(s.value(9_999), 0.05);
        let mut prev = f64::INFINITY;
        for step in 0..10_000 {
            let e = s.value(step);
            assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn train_config_defaults_and_validation() {
        let cfg = TrainConfig::default();
        assert_eq!((cfg.gamma, cfg.lr, cfg.batch_size, cfg.buffer_capacity), (0.9, 1e-3, 32, 10_000));
        assert_eq!(cfg.target_sync_every, 200);
        let bad = TrainConfig::from_toml_str("gamma = 1.0").unwrap_err();
        assert!(bad.to_string().contains("gamma"));
        let cfg = TrainConfig::from_toml_str("episodes_per_phase = 3\nseeds = [7]").unwrap();
        assert_eq!((cfg.episodes_per_phase, cfg.seeds), (3, vec![7]));
    }

    #[test]
    fn agent_kind_names_round_trip() {
        for k in AgentKind::ALL {
            assert_eq!(AgentKind::parse(k.name()), Some(k));
        }
        assert_eq!(AgentKind::parse("nope"), None);
        assert_eq!(AgentKind::HumemaiEpisodicOnly.mm_mask(), [true, false, true]);
    }
}
