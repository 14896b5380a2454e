use rand::Rng;

use super::{AgentError, Transition};
use crate::kg::Statement;
use crate::nn::{Adam, Forward, GradTape, Gradients, QNet};

/// Index of the largest allowed value; ties go to the lowest index.
pub fn masked_argmax(q: &[f64], mask: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in q.iter().enumerate() {
        if !mask.get(i).copied().unwrap_or(true) {
            continue;
        }
        if best.is_none_or(|b| *v > q[b]) {
            best = Some(i);
        }
    }
    best
}

/// Double DQN target `r + γ · Q_target(s', argmax_a Q_online(s', a))`.
pub fn td_target(q_online_next: &[f64], q_target_next: &[f64], r: f64, done: bool, gamma: f64) -> Result<f64, AgentError> {
    td_target_masked(q_online_next, q_target_next, r, done, gamma, &[])
}

/// As [`td_target`] with the argmax restricted to `mask` (empty = all).
pub fn td_target_masked(
    q_online_next: &[f64],
    q_target_next: &[f64],
    r: f64,
    done: bool,
    gamma: f64,
    mask: &[bool],
) -> Result<f64, AgentError> {
    if q_online_next.is_empty() || q_online_next.len() != q_target_next.len() {
        return Err(AgentError::InvalidArgument(format!(
            "next-state Q vectors must be non-empty and equal length ({} vs {})",
            q_online_next.len(),
            q_target_next.len()
        )));
    }
    if done {
        return Ok(r);
    }
    let a = masked_argmax(q_online_next, mask)
        .ok_or_else(|| AgentError::InvalidArgument("mask excludes every action".into()))?;
    Ok(r + gamma * q_target_next[a])
}

fn as_stores(state: &[Vec<Statement>]) -> Vec<&[Statement]> {
    state.iter().map(Vec::as_slice).collect()
}

/// One Adam step on the mean squared TD error of `batch`. Returns the loss
/// measured before the step.
pub fn dqn_update(
    online: &mut QNet,
    target: &QNet,
    adam: &mut Adam,
    batch: &[&Transition],
    gamma: f64,
    mask: &[bool],
) -> Result<f64, AgentError> {
    if batch.is_empty() {
        return Err(AgentError::InvalidArgument("empty batch".into()));
    }
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros(online);
    let mut loss = 0.0;
    let mut tape = GradTape::new();
    for tr in batch {
        let y = match (&tr.next_state, tr.done) {
            (Some(next), false) => {
                let stores = as_stores(next);
                let qo = online.forward(&stores)?.q;
                let qt = target.forward(&stores)?.q;
                td_target_masked(&qo, &qt, tr.reward, false, gamma.powi(tr.discount_steps as i32), mask)?
            }
            (None, false) => return Err(AgentError::InvalidArgument("non-terminal transition without next state".into())),
            (_, true) => tr.reward,
        };
        let q = online.forward_taped(&as_stores(&tr.state), &mut tape)?.q;
        let err = q
            .get(tr.action)
            .ok_or_else(|| AgentError::InvalidArgument(format!("action {} out of range", tr.action)))?
            - y;
        loss += err * err / n;
        let mut dq = vec![0.0; q.len()];
        dq[tr.action] = 2.0 * err / n;
        tape.backward(online, &dq, &mut grads)?;
    }
    if !loss.is_finite() {
        return Err(AgentError::Diverged(format!("loss = {loss}")));
    }
    let g = grads.finalize(online);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(AgentError::Diverged("non-finite gradient".into()));
    }
    online.update(|p| adam.step_next(p, g))?;
    Ok(loss)
}

/// Online and target networks with their optimizer.
#[derive(Debug, Clone)]
pub struct Learner {
    pub online: QNet,
    pub target: QNet,
    adam: Adam,
    mask: Vec<bool>,
    updates: u64,
    sync_every: u64,
}

impl Learner {
    pub fn new(online: QNet, lr: f64, sync_every: u64, mask: Vec<bool>) -> Self {
        Self {
            adam: Adam::new(online.param_count(), lr),
            target: online.clone(),
            online,
            mask,
            updates: 0,
            sync_every,
        }
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Gradient step, then a target sync when the update count reaches a
    /// multiple of the sync period.
    pub fn update(&mut self, batch: &[&Transition], gamma: f64) -> Result<f64, AgentError> {
        let loss = dqn_update(&mut self.online, &self.target, &mut self.adam, batch, gamma, &self.mask)?;
        self.updates += 1;
        if self.updates.is_multiple_of(self.sync_every) {
            self.target = self.online.clone();
        }
        Ok(loss)
    }

    pub fn greedy(&self, state: &[Vec<Statement>]) -> Result<(usize, Forward), AgentError> {
        greedy_action(&self.online, state, &self.mask)
    }

    /// Uniform over allowed actions with probability `eps`, greedy otherwise.
    /// The network is only evaluated for greedy choices.
    pub fn epsilon_greedy<R: Rng + ?Sized>(&self, state: &[Vec<Statement>], eps: f64, rng: &mut R) -> Result<usize, AgentError> {
        if rng.random::<f64>() < eps {
            let allowed: Vec<usize> = (0..self.online.config().n_actions)
                .filter(|&a| self.mask.get(a).copied().unwrap_or(true))
                .collect();
            return Ok(allowed[rng.random_range(0..allowed.len())]);
        }
        Ok(self.greedy(state)?.0)
    }
}

pub(crate) fn greedy_action(net: &QNet, state: &[Vec<Statement>], mask: &[bool]) -> Result<(usize, Forward), AgentError> {
    let out = net.forward(&as_stores(state))?;
    let a = masked_argmax(&out.q, mask).ok_or_else(|| AgentError::InvalidArgument("mask excludes every action".into()))?;
    Ok((a, out))
}
