use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dqn::greedy_action;
use super::eval::run_greedy_episode;
use super::experiment::{train_env_seed, validation_seeds};
use super::{AgentError, AgentKind, Learner, NetDims, NetState, ReplayBuffer, RewardAttribution, TrainConfig, Transition};
use super::MmDiscount;
use crate::env::{EnvConfig, Move, Observation, RoomsEnv};
use crate::memory::{
    answer_from_history, answer_question, encode_short, heuristic_explore, HistoryWindow, MemoryAction, MemoryConfig,
    MemorySystems,
};
use crate::nn::{NetConfig, NetKind, QNet};

/// A trained agent ready for greedy evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Humemai {
        kind: AgentKind,
        memory: MemoryConfig,
        mm: QNet,
        /// `None` explores with the wall-avoiding random walk.
        explore: Option<QNet>,
    },
    Baseline {
        capacity: usize,
        net: QNet,
    },
}

impl Policy {
    pub fn kind(&self) -> AgentKind {
        match self {
            Policy::Humemai { kind, .. } => *kind,
            Policy::Baseline { .. } => AgentKind::Baseline,
        }
    }

    pub fn capacity(&self) -> usize {
        match self {
            Policy::Humemai { memory, .. } => memory.capacity,
            Policy::Baseline { capacity, .. } => *capacity,
        }
    }
}

/// One row of the per-episode training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub episode: usize,
    pub phase: String,
    /// Mean loss over the episode's updates, if any ran.
    pub loss: Option<f64>,
    pub train_reward: f64,
    pub eval_reward: Option<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct PhaseOutput {
    /// Network with the best validation score.
    pub best: QNet,
    /// Network after the last update.
    pub last: QNet,
    pub best_eval: f64,
    pub metrics: Vec<MetricRow>,
}

pub(crate) const PHASE_MM: u64 = 1;
pub(crate) const PHASE_EXPLORE: u64 = 2;
pub(crate) const PHASE_BASELINE: u64 = 3;

/// Independent random stream `k` derived from a run seed.
pub(crate) fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

pub(crate) fn net_config(env: &RoomsEnv, dims: &NetDims, kind: NetKind, n_actions: usize) -> NetConfig {
    NetConfig {
        kind,
        vocab_size: env.symbols().len(),
        embed_dim: dims.embed_dim,
        hidden_dim: dims.hidden_dim,
        mlp_hidden: dims.mlp_hidden.clone(),
        n_actions,
        max_val: env.config().steps_per_episode as f64,
        qualifier_keys: match kind {
            NetKind::Memory => env.vocab().qualifier_keys().iter().map(|s| s.0).collect(),
            NetKind::History => Vec::new(),
        },
    }
}

/// Loads the observation into short-term memory and asks `decide` for one
/// memory action per item, in order, then decays semantic memory. Returns
/// each decision's input state and action.
pub(crate) fn manage_observation<F>(
    mem: &mut MemorySystems,
    obs: &Observation,
    t: u32,
    mut decide: F,
) -> Result<Vec<(Arc<NetState>, usize)>, AgentError>
where
    F: FnMut(&NetState) -> Result<usize, AgentError>,
{
    let items = mem.observe(obs, t).to_vec();
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let state = Arc::new(vec![vec![item.clone()], mem.episodic().to_vec(), mem.semantic().to_vec()]);
        let a = decide(&state)?;
        let action = MemoryAction::from_index(a).ok_or_else(|| AgentError::InvalidArgument(format!("memory action {a}")))?;
        mem.manage(&item, action)?;
        out.push((state, a));
    }
    mem.decay();
    Ok(out)
}

/// Explore-policy input: the current observation plus long-term memory.
pub(crate) fn explore_state(short: Vec<crate::kg::Statement>, mem: &MemorySystems) -> Arc<NetState> {
    Arc::new(vec![short, mem.episodic().to_vec(), mem.semantic().to_vec()])
}

struct Trainer<'a> {
    cfg: &'a TrainConfig,
    learner: Learner,
    buffer: ReplayBuffer,
    env_steps: u64,
    losses: Vec<f64>,
}

impl Trainer<'_> {
    fn after_env_step(&mut self, rng: &mut ChaCha8Rng) -> Result<(), AgentError> {
        self.env_steps += 1;
        if self.env_steps.is_multiple_of(self.cfg.train_every) && self.buffer.len() >= self.cfg.batch_size {
            let batch = self.buffer.sample(self.cfg.batch_size, rng);
            let loss = self.learner.update(&batch, self.cfg.gamma)?;
            self.losses.push(loss);
        }
        Ok(())
    }

    fn push(&mut self, state: Arc<NetState>, action: usize, reward: f64, next: Option<Arc<NetState>>, discount_steps: u32) {
        let done = next.is_none();
        self.buffer.push(Transition {
            state,
            action,
            reward,
            next_state: next,
            done,
            discount_steps,
        });
    }

    fn take_mean_loss(&mut self) -> Option<f64> {
        if self.losses.is_empty() {
            return None;
        }
        let m = self.losses.iter().sum::<f64>() / self.losses.len() as f64;
        self.losses.clear();
        Some(m)
    }
}

struct Validator {
    best: Option<QNet>,
    best_eval: f64,
}

impl Validator {
    fn due(cfg: &TrainConfig, episode: usize, total: usize) -> bool {
        (episode + 1).is_multiple_of(cfg.eval_every) || episode + 1 == total
    }

    fn offer(&mut self, score: f64, net: &QNet) {
        if self.best.is_none() || score > self.best_eval {
            self.best_eval = score;
            self.best = Some(net.clone());
        }
    }
}

fn validate(policy: &Policy, env_cfg: &EnvConfig, cfg: &TrainConfig, seed: u64) -> Result<f64, AgentError> {
    let seeds = validation_seeds(seed, cfg.validation_episodes);
    let mut total = 0.0;
    for s in &seeds {
        total += run_greedy_episode(policy, env_cfg, *s, false)?.reward;
    }
    Ok(total / seeds.len() as f64)
}

/// Phase one: learns memory management while exploring at random.
pub fn train_phase1_mm(
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
    kind: AgentKind,
    memory: &MemoryConfig,
    seed: u64,
    progress: &mut dyn FnMut(&MetricRow),
) -> Result<PhaseOutput, AgentError> {
    cfg.validate()?;
    if kind == AgentKind::Baseline {
        return Err(AgentError::Config("the baseline has no memory-management phase".into()));
    }
    let mut env = RoomsEnv::new(env_cfg.clone())?;
    let steps = env_cfg.steps_per_episode;
    let net = QNet::new(net_config(&env, &cfg.humemai_net, NetKind::Memory, 3), &mut stream(seed, 1))?;
    let mut tr = Trainer {
        cfg,
        learner: Learner::new(net, cfg.lr, cfg.target_sync_every, kind.mm_mask().to_vec()),
        buffer: ReplayBuffer::new(cfg.buffer_capacity),
        env_steps: 0,
        losses: Vec::new(),
    };
    let mut rng = stream(seed, 10);
    let schedule = cfg.epsilon_schedule(cfg.episodes_per_phase as u64 * steps as u64);
    let mut mem = MemorySystems::new(memory.clone(), *env.vocab())?;
    let mut val = Validator { best: None, best_eval: 0.0 };
    let mut metrics = Vec::new();

    for ep in 0..cfg.episodes_per_phase {
        let (mut obs, mut qs) = env.reset_with_seed(train_env_seed(seed, PHASE_MM, ep));
        mem.clear();
        let mut carry: Option<(Arc<NetState>, usize, f64)> = None;
        let mut ep_reward = 0.0;
        for t in 0..steps {
            let eps = schedule.value(tr.env_steps);
            let decisions = {
                let learner = &tr.learner;
                manage_observation(&mut mem, &obs, t, |s| learner.epsilon_greedy(s, eps, &mut rng))?
            };
            let mv = heuristic_explore(&mem, &obs, &mut rng);
            let answers: Vec<_> = qs.iter().map(|q| answer_question(&mem, q)).collect();
            let out = env.step(mv, &answers)?;
            let r = out.reward as f64;
            ep_reward += r;

            if let Some(first) = decisions.first() {
                if let Some((s, a, rp)) = carry.take() {
                    tr.push(s, a, rp, Some(first.0.clone()), 1);
                }
                let credit = match cfg.reward_attribution {
                    RewardAttribution::Broadcast => r,
                    RewardAttribution::LastOnly => 0.0,
                };
                let within = match cfg.mm_discount {
                    MmDiscount::PerDecision => 1,
                    MmDiscount::PerStep => 0,
                };
                for w in decisions.windows(2) {
                    tr.push(w[0].0.clone(), w[0].1, credit, Some(w[1].0.clone()), within);
                }
                let last = decisions.last().expect("non-empty");
                carry = Some((last.0.clone(), last.1, r));
            }
            tr.after_env_step(&mut rng)?;
            obs = out.observation;
            qs = out.questions;
        }
        if let Some((s, a, rp)) = carry {
            tr.push(s, a, rp, None, 1);
        }

        let eval_reward = if Validator::due(cfg, ep, cfg.episodes_per_phase) {
            let policy = Policy::Humemai {
                kind,
                memory: memory.clone(),
                mm: tr.learner.online.clone(),
                explore: None,
            };
            let score = validate(&policy, env_cfg, cfg, seed)?;
            val.offer(score, &tr.learner.online);
            Some(score)
        } else {
            None
        };
        let row = MetricRow {
            episode: ep,
            phase: "mm".into(),
            loss: tr.take_mean_loss(),
            train_reward: ep_reward,
            eval_reward,
            epsilon: schedule.value(tr.env_steps),
        };
        progress(&row);
        metrics.push(row);
    }
    let last = tr.learner.online;
    Ok(PhaseOutput {
        best: val.best.unwrap_or_else(|| last.clone()),
        last,
        best_eval: val.best_eval,
        metrics,
    })
}

/// Phase two: learns exploration with memory management frozen to the
/// greedy policy of `mm`. The explore network starts from `mm`'s LSTMs.
pub fn train_phase2_explore(
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
    kind: AgentKind,
    memory: &MemoryConfig,
    mm: &QNet,
    seed: u64,
    progress: &mut dyn FnMut(&MetricRow),
) -> Result<PhaseOutput, AgentError> {
    cfg.validate()?;
    let mut env = RoomsEnv::new(env_cfg.clone())?;
    let vocab = *env.vocab();
    let steps = env_cfg.steps_per_episode;
    let mut net = QNet::new(net_config(&env, &cfg.humemai_net, NetKind::Memory, Move::ALL.len()), &mut stream(seed, 2))?;
    net.copy_lstms_from(mm)?;
    let mm_mask = kind.mm_mask();
    let mut tr = Trainer {
        cfg,
        learner: Learner::new(net, cfg.lr, cfg.target_sync_every, Vec::new()),
        buffer: ReplayBuffer::new(cfg.buffer_capacity),
        env_steps: 0,
        losses: Vec::new(),
    };
    let mut rng = stream(seed, 11);
    let schedule = cfg.epsilon_schedule(cfg.episodes_per_phase as u64 * steps as u64);
    let mut mem = MemorySystems::new(memory.clone(), vocab)?;
    let mut val = Validator { best: None, best_eval: 0.0 };
    let mut metrics = Vec::new();

    for ep in 0..cfg.episodes_per_phase {
        let (mut obs, mut qs) = env.reset_with_seed(train_env_seed(seed, PHASE_EXPLORE, ep));
        mem.clear();
        let mut carry: Option<(Arc<NetState>, usize, f64)> = None;
        let mut ep_reward = 0.0;
        for t in 0..steps {
            let short = encode_short(&obs, t, &vocab);
            manage_observation(&mut mem, &obs, t, |s| Ok(greedy_action(mm, s, &mm_mask)?.0))?;
            let state = explore_state(short, &mem);
            if let Some((s, a, rp)) = carry.take() {
                tr.push(s, a, rp, Some(state.clone()), 1);
            }
            let eps = schedule.value(tr.env_steps);
            let a = tr.learner.epsilon_greedy(&state, eps, &mut rng)?;
            let answers: Vec<_> = qs.iter().map(|q| answer_question(&mem, q)).collect();
            let out = env.step(Move::from_index(a).expect("5 actions"), &answers)?;
            let r = out.reward as f64;
            ep_reward += r;
            carry = Some((state, a, r));
            tr.after_env_step(&mut rng)?;
            obs = out.observation;
            qs = out.questions;
        }
        if let Some((s, a, rp)) = carry {
            tr.push(s, a, rp, None, 1);
        }

        let eval_reward = if Validator::due(cfg, ep, cfg.episodes_per_phase) {
            let policy = Policy::Humemai {
                kind,
                memory: memory.clone(),
                mm: mm.clone(),
                explore: Some(tr.learner.online.clone()),
            };
            let score = validate(&policy, env_cfg, cfg, seed)?;
            val.offer(score, &tr.learner.online);
            Some(score)
        } else {
            None
        };
        let row = MetricRow {
            episode: ep,
            phase: "explore".into(),
            loss: tr.take_mean_loss(),
            train_reward: ep_reward,
            eval_reward,
            epsilon: schedule.value(tr.env_steps),
        };
        progress(&row);
        metrics.push(row);
    }
    let last = tr.learner.online;
    Ok(PhaseOutput {
        best: val.best.unwrap_or_else(|| last.clone()),
        last,
        best_eval: val.best_eval,
        metrics,
    })
}

/// Single-phase exploration learning over a window of the last `capacity`
/// observed statements, for twice the per-phase episode count.
pub fn train_baseline(
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
    capacity: usize,
    seed: u64,
    progress: &mut dyn FnMut(&MetricRow),
) -> Result<PhaseOutput, AgentError> {
    cfg.validate()?;
    if capacity == 0 {
        return Err(AgentError::Config("capacity must be positive".into()));
    }
    let mut env = RoomsEnv::new(env_cfg.clone())?;
    let vocab = *env.vocab();
    let steps = env_cfg.steps_per_episode;
    let episodes = 2 * cfg.episodes_per_phase;
    let net = QNet::new(net_config(&env, &cfg.baseline_net, NetKind::History, Move::ALL.len()), &mut stream(seed, 3))?;
    let mut tr = Trainer {
        cfg,
        learner: Learner::new(net, cfg.lr, cfg.target_sync_every, Vec::new()),
        buffer: ReplayBuffer::new(cfg.buffer_capacity),
        env_steps: 0,
        losses: Vec::new(),
    };
    let mut rng = stream(seed, 12);
    let schedule = cfg.epsilon_schedule(episodes as u64 * steps as u64);
    let mut hist = HistoryWindow::new(capacity, vocab.timestamp);
    let mut val = Validator { best: None, best_eval: 0.0 };
    let mut metrics = Vec::new();

    for ep in 0..episodes {
        let (mut obs, mut qs) = env.reset_with_seed(train_env_seed(seed, PHASE_BASELINE, ep));
        hist.clear();
        let mut carry: Option<(Arc<NetState>, usize, f64)> = None;
        let mut ep_reward = 0.0;
        for t in 0..steps {
            hist.push(&obs, t);
            let state = Arc::new(vec![hist.to_vec()]);
            if let Some((s, a, rp)) = carry.take() {
                tr.push(s, a, rp, Some(state.clone()), 1);
            }
            let eps = schedule.value(tr.env_steps);
            let a = tr.learner.epsilon_greedy(&state, eps, &mut rng)?;
            let answers: Vec<_> = qs.iter().map(|q| answer_from_history(&hist, q)).collect();
            let out = env.step(Move::from_index(a).expect("5 actions"), &answers)?;
            let r = out.reward as f64;
            ep_reward += r;
            carry = Some((state, a, r));
            tr.after_env_step(&mut rng)?;
            obs = out.observation;
            qs = out.questions;
        }
        if let Some((s, a, rp)) = carry {
            tr.push(s, a, rp, None, 1);
        }

        let eval_reward = if Validator::due(cfg, ep, episodes) {
            let policy = Policy::Baseline {
                capacity,
                net: tr.learner.online.clone(),
            };
            let score = validate(&policy, env_cfg, cfg, seed)?;
            val.offer(score, &tr.learner.online);
            Some(score)
        } else {
            None
        };
        let row = MetricRow {
            episode: ep,
            phase: "baseline".into(),
            loss: tr.take_mean_loss(),
            train_reward: ep_reward,
            eval_reward,
            epsilon: schedule.value(tr.env_steps),
        };
        progress(&row);
        metrics.push(row);
    }
    let last = tr.learner.online;
    Ok(PhaseOutput {
        best: val.best.unwrap_or_else(|| last.clone()),
        last,
        best_eval: val.best_eval,
        metrics,
    })
}
