use serde::{Deserialize, Serialize};

use super::eval::evaluate;
use super::train::{train_baseline, train_phase1_mm, train_phase2_explore, MetricRow, Policy};
use super::{AgentError, AgentKind, EvalReport, TrainConfig};
use crate::env::EnvConfig;
use crate::memory::MemoryConfig;

// Env seeds for training, validation and testing live in disjoint ranges
// for run seeds below 2^30 and fewer than 2^20 episodes per range.
const VALIDATION_BASE: u64 = 1 << 62;
const TEST_BASE: u64 = 1 << 63;

pub(crate) fn train_env_seed(run_seed: u64, phase: u64, episode: usize) -> u64 {
    (run_seed << 32) | (phase << 24) | episode as u64
}

pub fn validation_seeds(run_seed: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|k| VALIDATION_BASE | (run_seed << 20) | k).collect()
}

pub fn test_seeds(run_seed: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|k| TEST_BASE | (run_seed << 20) | k).collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub policy: Policy,
    pub metrics: Vec<MetricRow>,
    /// Final greedy test of the trained agent.
    pub report: EvalReport,
    /// Test of the phase-one memory policy with random exploration.
    pub phase1_report: Option<EvalReport>,
}

/// Trains one agent for one run seed and evaluates it greedily.
pub fn run_experiment(
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
    kind: AgentKind,
    capacity: usize,
    seed: u64,
    progress: &mut dyn FnMut(&MetricRow),
) -> Result<ExperimentOutput, AgentError> {
    let (policy, metrics, phase1_report) = match kind {
        AgentKind::Baseline => {
            let out = train_baseline(env_cfg, cfg, capacity, seed, progress)?;
            (Policy::Baseline { capacity, net: out.best }, out.metrics, None)
        }
        _ => {
            let memory = MemoryConfig::new(capacity);
            let p1 = train_phase1_mm(env_cfg, cfg, kind, &memory, seed, progress)?;
            let phase1 = Policy::Humemai {
                kind,
                memory: memory.clone(),
                mm: p1.best.clone(),
                explore: None,
            };
            let phase1_report = evaluate(&phase1, env_cfg, cfg.eval_episodes, seed)?;
            let p2 = train_phase2_explore(env_cfg, cfg, kind, &memory, &p1.best, seed, progress)?;
            let mut metrics = p1.metrics;
            metrics.extend(p2.metrics);
            let policy = Policy::Humemai {
                kind,
                memory,
                mm: p1.best,
                explore: Some(p2.best),
            };
            (policy, metrics, Some(phase1_report))
        }
    };
    let report = evaluate(&policy, env_cfg, cfg.eval_episodes, seed)?;
    Ok(ExperimentOutput {
        policy,
        metrics,
        report,
        phase1_report,
    })
}

/// Mean ± population std of per-seed mean rewards for one table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub agent: String,
    pub capacity: usize,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl CellSummary {
    pub fn new(agent: AgentKind, capacity: usize, seeds: Vec<u64>, per_seed: Vec<f64>) -> Self {
        let (mean, std) = super::eval::mean_std(&per_seed);
        Self {
            agent: agent.name().into(),
            capacity,
            seeds,
            per_seed,
            mean,
            std,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges_are_disjoint() {
        let train: Vec<u64> = (0..3).flat_map(|p| (0..200).map(move |e| train_env_seed(5, p, e))).collect();
        let val = validation_seeds(5, 10);
        let test = test_seeds(5, 10);
        for s in &train {
            assert!(!val.contains(s) && !test.contains(s));
        }
        assert!(val.iter().all(|s| !test.contains(s)));
        assert_ne!(test_seeds(5, 1), test_seeds(6, 1));
    }
}
