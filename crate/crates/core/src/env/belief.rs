//! Exact Bayesian belief tracking over enumerable instances.
//!
//! `b'(s') = eta * O(o' | s') * sum_s T(s' | s, a) b(s)`, with the
//! observation model deterministic: an observation either matches the
//! room-local view of `s'` or it does not.

use std::collections::BTreeMap;

use super::{observation_for, EnvError, Move, ObjectKind, Observation, RoomsEnv};

/// Room index of every object, in config order.
pub type StateKey = Vec<usize>;
pub type Belief = BTreeMap<StateKey, f64>;

pub const MAX_STATES: usize = 10_000;

/// All placements with static objects at home.
pub fn enumerate_states(env: &RoomsEnv) -> Result<Vec<StateKey>, EnvError> {
    let n_rooms = env.rooms().len();
    let free: Vec<usize> = (0..env.n_objects())
        .filter(|&i| env.object_kind(i) != ObjectKind::Static)
        .collect();
    let total = (n_rooms as f64).powi(free.len() as i32);
    if total > MAX_STATES as f64 {
        return Err(EnvError::InvalidArgument(format!(
            "{total} states exceed the enumeration limit of {MAX_STATES}"
        )));
    }
    let base: StateKey = (0..env.n_objects()).map(|i| env.object_init_room(i)).collect();
    let mut states = vec![base];
    for &i in &free {
        states = states
            .into_iter()
            .flat_map(|s| {
                (0..n_rooms).map(move |r| {
                    let mut s = s.clone();
                    s[i] = r;
                    s
                })
            })
            .collect();
    }
    Ok(states)
}

pub fn point_belief(state: StateKey) -> Belief {
    Belief::from([(state, 1.0)])
}

pub fn uniform_belief(env: &RoomsEnv) -> Result<Belief, EnvError> {
    let states = enumerate_states(env)?;
    let p = 1.0 / states.len() as f64;
    Ok(states.into_iter().map(|s| (s, p)).collect())
}

/// `T(. | s, a)` as a list of successor states and probabilities.
pub fn transition_distribution(env: &RoomsEnv, s: &[usize], mv: Move) -> Vec<(StateKey, f64)> {
    let n = env.n_objects();
    let mut partial: Vec<(StateKey, f64)> = vec![(s.to_vec(), 1.0)];
    for i in (0..n).filter(|&i| env.object_kind(i) == ObjectKind::Independent) {
        let dist = env.move_distribution(i, s[i]);
        partial = partial
            .into_iter()
            .flat_map(|(loc, p)| {
                Move::ALL.into_iter().zip(dist.iter()).filter(|(_, pk)| **pk > 0.0).map(move |(m, pk)| {
                    let mut l = loc.clone();
                    l[i] = env.destination(s[i], m);
                    (l, p * pk)
                })
            })
            .collect();
    }
    for i in (0..n).filter(|&i| env.object_kind(i) == ObjectKind::Dependent) {
        let carry = env.carry_prob(i);
        let mut next = Vec::with_capacity(partial.len());
        for (loc, p) in partial {
            let carriers: Vec<usize> = (0..n)
                .filter(|&j| env.object_kind(j) == ObjectKind::Independent && s[j] == s[i] && loc[j] != s[j])
                .collect();
            if carriers.is_empty() || carry == 0.0 {
                next.push((loc, p));
                continue;
            }
            if carry < 1.0 {
                next.push((loc.clone(), p * (1.0 - carry)));
            }
            let share = p * carry / carriers.len() as f64;
            for j in carriers {
                let mut l = loc.clone();
                l[i] = loc[j];
                next.push((l, share));
            }
        }
        partial = next;
    }
    let agent = env.agent_index();
    let mut merged: BTreeMap<StateKey, f64> = BTreeMap::new();
    for (mut loc, p) in partial {
        loc[agent] = env.destination(s[agent], mv);
        *merged.entry(loc).or_default() += p;
    }
    merged.into_iter().collect()
}

/// `O(o | s')`: one when `obs` is exactly what the agent would see in `s'`.
pub fn observation_likelihood(env: &RoomsEnv, s: &[usize], obs: &Observation) -> f64 {
    if observation_for(env, s) == *obs {
        1.0
    } else {
        0.0
    }
}

pub fn exact_belief_update(
    env: &RoomsEnv,
    belief: &Belief,
    mv: Move,
    obs: &Observation,
) -> Result<Belief, EnvError> {
    let mass: f64 = belief.values().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(EnvError::InvalidArgument(format!("belief sums to {mass}, expected 1")));
    }
    let mut predicted: Belief = BTreeMap::new();
    for (s, &b) in belief {
        if b == 0.0 {
            continue;
        }
        for (next, t) in transition_distribution(env, s, mv) {
            *predicted.entry(next).or_default() += t * b;
        }
    }
    let mut posterior: Belief = predicted
        .into_iter()
        .map(|(s, p)| {
            let o = observation_likelihood(env, &s, obs);
            (s, o * p)
        })
        .filter(|(_, p)| *p > 0.0)
        .collect();
    let total: f64 = posterior.values().sum();
    if total <= 0.0 {
        return Err(EnvError::Inconsistent("observation has zero probability under the belief".into()));
    }
    let eta = 1.0 / total;
    posterior.values_mut().for_each(|p| *p *= eta);
    Ok(posterior)
}

/// `0.5 * sum |a - b|` over the union of supports.
pub fn total_variation(a: &Belief, b: &Belief) -> f64 {
    let mut tv = 0.0;
    for (s, pa) in a {
        tv += (pa - b.get(s).copied().unwrap_or(0.0)).abs();
    }
    for (s, pb) in b {
        if !a.contains_key(s) {
            tv += pb.abs();
        }
    }
    0.5 * tv
}

pub fn mode(belief: &Belief) -> Option<&StateKey> {
    belief
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(s, _)| s)
}
