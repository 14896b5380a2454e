use serde::{Deserialize, Serialize};

use super::dqn::greedy_action;
use super::experiment::test_seeds;
use super::train::{explore_state, manage_observation, stream, Policy};
use super::AgentError;
use crate::env::{EnvConfig, Move, RoomsEnv};
use crate::kg::{dot_from_edges, Statement};
use crate::memory::{
    answer_from_history, answer_question, encode_short, heuristic_explore, HistoryWindow, MemorySnapshot, MemorySystems,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Mm,
    Explore,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Mm => "mm",
            PolicyKind::Explore => "explore",
        }
    }
}

/// Attention matrix of one policy at one step. For the memory-management
/// policy it is the mean over that step's decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionStep {
    pub episode: usize,
    pub step: u32,
    pub policy: PolicyKind,
    pub weights: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub seed: u64,
    pub reward: f64,
    pub step_rewards: Vec<u32>,
    /// (step, policy, weights); empty unless recording.
    pub attention: Vec<(u32, PolicyKind, [[f64; 3]; 3])>,
    pub final_memory: Option<MemorySystems>,
    pub final_history: Option<Vec<Statement>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub agent: String,
    pub capacity: usize,
    pub label: String,
    pub seeds: Vec<u64>,
    pub episode_rewards: Vec<f64>,
    pub step_rewards: Vec<Vec<u32>>,
    pub mean: f64,
    /// Population standard deviation of `episode_rewards`.
    pub std: f64,
    pub attention: Vec<AttentionStep>,
    pub final_memory: Option<serde_json::Value>,
    pub final_memory_dot: Option<String>,
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Plays one episode greedily from env seed `seed`.
pub fn run_greedy_episode(policy: &Policy, env_cfg: &EnvConfig, seed: u64, record: bool) -> Result<EpisodeLog, AgentError> {
    let mut env = RoomsEnv::new(env_cfg.clone())?;
    let vocab = *env.vocab();
    let (mut obs, mut qs) = env.reset_with_seed(seed);
    let mut log = EpisodeLog {
        seed,
        reward: 0.0,
        step_rewards: Vec::with_capacity(env_cfg.steps_per_episode as usize),
        attention: Vec::new(),
        final_memory: None,
        final_history: None,
    };
    match policy {
        Policy::Humemai {
            kind,
            memory,
            mm,
            explore,
        } => {
            let mask = kind.mm_mask();
            let mut mem = MemorySystems::new(memory.clone(), vocab)?;
            let mut rng = stream(seed, 20);
            for t in 0..env_cfg.steps_per_episode {
                let short = encode_short(&obs, t, &vocab);
                let mut sum = [[0.0; 3]; 3];
                let mut n = 0;
                manage_observation(&mut mem, &obs, t, |s| {
                    let (a, out) = greedy_action(mm, s, &mask)?;
                    if let Some(w) = out.attention {
                        for (row, wr) in sum.iter_mut().zip(w) {
                            row.iter_mut().zip(wr).for_each(|(x, y)| *x += y);
                        }
                        n += 1;
                    }
                    Ok(a)
                })?;
                if record && n > 0 {
                    sum.iter_mut().flatten().for_each(|x| *x /= n as f64);
                    log.attention.push((t, PolicyKind::Mm, sum));
                }
                let mv = match explore {
                    Some(net) => {
                        let (a, out) = greedy_action(net, &explore_state(short, &mem), &[])?;
                        if let (true, Some(w)) = (record, out.attention) {
                            log.attention.push((t, PolicyKind::Explore, w));
                        }
                        Move::from_index(a).expect("5 actions")
                    }
                    None => heuristic_explore(&mem, &obs, &mut rng),
                };
                let answers: Vec<_> = qs.iter().map(|q| answer_question(&mem, q)).collect();
                let out = env.step(mv, &answers)?;
                log.reward += out.reward as f64;
                log.step_rewards.push(out.reward);
                obs = out.observation;
                qs = out.questions;
            }
            log.final_memory = Some(mem);
        }
        Policy::Baseline { capacity, net } => {
            let mut hist = HistoryWindow::new(*capacity, vocab.timestamp);
            for t in 0..env_cfg.steps_per_episode {
                hist.push(&obs, t);
                let (a, _) = greedy_action(net, &[hist.to_vec()], &[])?;
                let answers: Vec<_> = qs.iter().map(|q| answer_from_history(&hist, q)).collect();
                let out = env.step(Move::from_index(a).expect("5 actions"), &answers)?;
                log.reward += out.reward as f64;
                log.step_rewards.push(out.reward);
                obs = out.observation;
                qs = out.questions;
            }
            log.final_history = Some(hist.to_vec());
        }
    }
    Ok(log)
}

/// Greedy evaluation on `n_episodes` test seeds derived from `run_seed`.
pub fn evaluate(policy: &Policy, env_cfg: &EnvConfig, n_episodes: usize, run_seed: u64) -> Result<EvalReport, AgentError> {
    evaluate_seeds(policy, env_cfg, &test_seeds(run_seed, n_episodes), "test")
}

/// Greedy evaluation, one episode per env seed. Attention traces are kept
/// for every episode; the memory snapshot is the last episode's.
pub fn evaluate_seeds(policy: &Policy, env_cfg: &EnvConfig, seeds: &[u64], label: &str) -> Result<EvalReport, AgentError> {
    let env = RoomsEnv::new(env_cfg.clone())?;
    let mut report = EvalReport {
        agent: policy.kind().name().into(),
        capacity: policy.capacity(),
        label: label.into(),
        seeds: seeds.to_vec(),
        episode_rewards: Vec::new(),
        step_rewards: Vec::new(),
        mean: 0.0,
        std: 0.0,
        attention: Vec::new(),
        final_memory: None,
        final_memory_dot: None,
    };
    for (i, &s) in seeds.iter().enumerate() {
        let log = run_greedy_episode(policy, env_cfg, s, true)?;
        report.episode_rewards.push(log.reward);
        report.step_rewards.push(log.step_rewards);
        report.attention.extend(log.attention.into_iter().map(|(step, policy, weights)| AttentionStep {
            episode: i,
            step,
            policy,
            weights,
        }));
        let kg = |e| AgentError::InvalidArgument(format!("snapshot: {e}"));
        if let Some(mem) = &log.final_memory {
            report.final_memory = Some(MemorySnapshot::to_json(mem, env.symbols()).map_err(kg)?);
            report.final_memory_dot = Some(MemorySnapshot::to_dot(mem, env.symbols()).map_err(kg)?);
        }
        if let Some(hist) = &log.final_history {
            let edges: Vec<_> = hist.iter().map(|s| (s, None)).collect();
            let json = crate::kg::statements_to_json(hist, env.symbols()).map_err(kg)?;
            report.final_memory = Some(serde_json::json!({ "capacity": policy.capacity(), "history": json }));
            report.final_memory_dot = Some(dot_from_edges(&edges, env.symbols(), &Default::default()).map_err(kg)?);
        }
    }
    (report.mean, report.std) = mean_std(&report.episode_rewards);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!((m, s), (5.0, 2.0));
        assert_eq!(mean_std(&[]), (0.0, 0.0));
    }
}
