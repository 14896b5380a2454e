//! Handcrafted question answering and exploration.

use rand::Rng;

use super::{HistoryWindow, MemorySystems};
use crate::env::{Direction, Move, Observation, Question};
use crate::kg::{Statement, Symbol};

/// Latest-inserted statement maximising `key` among `(head, relation, ?)` matches.
fn best_match<'a>(store: &'a [Statement], q: &Question, key: Symbol) -> Option<&'a Statement> {
    let mut best: Option<(&Statement, f64)> = None;
    for st in store.iter().filter(|s| s.head == q.head && s.relation == q.relation) {
        let v = st.qualifiers.get(key).unwrap_or(f64::NEG_INFINITY);
        if best.is_none_or(|(_, b)| v >= b) {
            best = Some((st, v));
        }
    }
    best.map(|(st, _)| st)
}

/// Most recent episodic or strongest semantic memory about the question's
/// head. Episodic wins when both exist, unless a recency horizon is
/// configured and the episodic memory is older than it.
pub fn answer_question(mem: &MemorySystems, q: &Question) -> Option<Symbol> {
    let vocab = mem.vocab();
    let episodic = best_match(mem.episodic(), q, vocab.timestamp);
    let semantic = best_match(mem.semantic(), q, vocab.strength);
    match (episodic, semantic) {
        (Some(e), Some(s)) => {
            let fresh = match mem.config().recency_horizon {
                None => true,
                Some(h) => {
                    let ts = e.qualifiers.get(vocab.timestamp).unwrap_or(0.0);
                    ts + h as f64 >= mem.time() as f64
                }
            };
            Some(if fresh { e.tail } else { s.tail })
        }
        (Some(e), None) => Some(e.tail),
        (None, Some(s)) => Some(s.tail),
        (None, None) => None,
    }
}

pub fn answer_from_history(h: &HistoryWindow, q: &Question) -> Option<Symbol> {
    let mut best: Option<(&Statement, f64)> = None;
    for st in h.iter().filter(|s| s.head == q.head && s.relation == q.relation) {
        let v = st.qualifiers.get(h.timestamp_key()).unwrap_or(f64::NEG_INFINITY);
        if best.is_none_or(|(_, b)| v >= b) {
            best = Some((st, v));
        }
    }
    best.map(|(st, _)| st.tail)
}

/// Random walk that avoids known walls.
///
/// Neighbours come from the current observation; directions it does not
/// cover fall back to the most recent remembered adjacency statement.
/// Directions known to be walls are never chosen; with no open direction
/// the agent stays.
pub fn heuristic_explore<R: Rng + ?Sized>(mem: &MemorySystems, obs: &Observation, rng: &mut R) -> Move {
    let vocab = mem.vocab();
    let room = obs
        .iter()
        .find(|s| s.head == vocab.agent && s.relation == vocab.at_location)
        .map(|s| s.tail)
        .or_else(|| obs.iter().find(|s| vocab.direction_of(s.relation).is_some()).map(|s| s.head));
    let Some(room) = room else {
        return Move::Stay;
    };
    let remembered = |d: Direction| -> Option<Symbol> {
        let rel = vocab.direction(d);
        mem.short()
            .iter()
            .chain(mem.episodic())
            .chain(mem.semantic())
            .rfind(|s| s.head == room && s.relation == rel)
            .map(|s| s.tail)
    };
    let open: Vec<Move> = Direction::ALL
        .into_iter()
        .filter(|&d| {
            let rel = vocab.direction(d);
            let seen = obs.iter().find(|s| s.head == room && s.relation == rel).map(|s| s.tail);
            seen.or_else(|| remembered(d)) != Some(vocab.wall)
        })
        .map(Move::from_direction)
        .collect();
    if open.is_empty() {
        Move::Stay
    } else {
        open[rng.random_range(0..open.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, ObjectKind, ObjectSpec, RoomsEnv};
    use crate::kg::Graph;
    use crate::memory::MemoryConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture() -> (RoomsEnv, MemorySystems) {
        let env = RoomsEnv::new(EnvConfig::default_layout()).unwrap();
        let mem = MemorySystems::new(MemoryConfig::new(16), *env.vocab()).unwrap();
        (env, mem)
    }

    fn st(env: &RoomsEnv, h: &str, t: &str) -> Statement {
        let s = |n| env.symbols().lookup(n).unwrap();
        Statement::new(s(h), env.vocab().at_location, s(t))
    }

    fn question(env: &RoomsEnv, head: &str) -> Question {
        let h = env.symbols().lookup(head).unwrap();
        Question::new(h, env.vocab().at_location, env.vocab().wall)
    }

    #[test]
    fn most_recent_episodic_wins() {
        let (env, mem) = fixture();
        let ts = env.vocab().timestamp;
        let mem = mem.with_contents(
            10,
            vec![],
            vec![st(&env, "Phone", "Kitchen").with_qualifier(ts, 5.0), st(&env, "Phone", "Hall").with_qualifier(ts, 9.0)],
            vec![],
        );
        let q = question(&env, "Phone");
        assert_eq!(answer_question(&mem, &q), env.symbols().lookup("Hall"));
        assert_eq!(answer_question(&mem, &q), answer_question(&mem, &q));
    }

    #[test]
    fn semantic_only_and_empty() {
        let (env, mem) = fixture();
        let q = question(&env, "Alice");
        assert_eq!(answer_question(&mem, &q), None);
        let mem = mem.with_contents(
            3,
            vec![],
            vec![],
            vec![st(&env, "Alice", "Library").with_qualifier(env.vocab().strength, 1.6)],
        );
        assert_eq!(answer_question(&mem, &q), env.symbols().lookup("Library"));
    }

    #[test]
    fn strongest_semantic_and_tie_breaks() {
        let (env, mem) = fixture();
        let key = env.vocab().strength;
        let mem = mem.with_contents(
            3,
            vec![],
            vec![],
            vec![
                st(&env, "Bob", "Library").with_qualifier(key, 2.0),
                st(&env, "Bob", "Hall").with_qualifier(key, 2.0),
                st(&env, "Bob", "Sauna").with_qualifier(key, 1.0),
            ],
        );
        assert_eq!(answer_question(&mem, &question(&env, "Bob")), env.symbols().lookup("Hall"));
    }

    #[test]
    fn episodic_preferred_unless_stale() {
        let (env, mem) = fixture();
        let ts = env.vocab().timestamp;
        let contents = (
            vec![st(&env, "Bob", "Kitchen").with_qualifier(ts, 2.0)],
            vec![st(&env, "Bob", "Hall").with_qualifier(env.vocab().strength, 3.0)],
        );
        let q = question(&env, "Bob");
        let m = mem.clone().with_contents(50, vec![], contents.0.clone(), contents.1.clone());
        assert_eq!(answer_question(&m, &q), env.symbols().lookup("Kitchen"));
        let mut cfg = MemoryConfig::new(16);
        cfg.recency_horizon = Some(10);
        let m = MemorySystems::new(cfg, *env.vocab()).unwrap().with_contents(50, vec![], contents.0, contents.1);
        assert_eq!(answer_question(&m, &q), env.symbols().lookup("Hall"));
    }

    #[test]
    fn history_answers_with_latest() {
        let (env, _) = fixture();
        let mut h = HistoryWindow::new(12, env.vocab().timestamp);
        let q = question(&env, "Phone");
        assert_eq!(answer_from_history(&h, &q), None);
        h.push(&[st(&env, "Phone", "Kitchen")].into_iter().collect::<Graph>(), 5);
        h.push(&[st(&env, "Phone", "Hall")].into_iter().collect::<Graph>(), 9);
        assert_eq!(answer_from_history(&h, &q), env.symbols().lookup("Hall"));
    }

    #[test]
    fn history_matches_brute_force_scan() {
        let (mut env, _) = fixture();
        let mut h = HistoryWindow::new(20, env.vocab().timestamp);
        let (mut obs, mut qs) = env.reset();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 0..60 {
            h.push(&obs, t);
            for q in &qs {
                // oracle: scan newest-first for the first matching statement
                let oracle = h
                    .iter()
                    .collect::<Vec<_>>()
                    .into_iter()
                    .rev()
                    .find(|s| s.head == q.head && s.relation == q.relation)
                    .map(|s| s.tail);
                assert_eq!(answer_from_history(&h, q), oracle);
            }
            let mv = Move::from_index(rng.random_range(0..5)).unwrap();
            let out = env.step(mv, &vec![None; qs.len()]).unwrap();
            obs = out.observation;
            qs = out.questions;
        }
    }

    fn closet_env() -> (RoomsEnv, MemorySystems, Observation) {
        let mut cfg = EnvConfig::default_layout();
        cfg.objects.retain(|o| o.kind != ObjectKind::Agent);
        cfg.objects.push(ObjectSpec::new("Agent", ObjectKind::Agent, "Closet"));
        let mut env = RoomsEnv::new(cfg).unwrap();
        let (obs, _) = env.reset();
        let mem = MemorySystems::new(MemoryConfig::new(8), *env.vocab()).unwrap();
        (env, mem, obs)
    }

    #[test]
    fn explore_avoids_walls_uniformly() {
        let (_, mem, obs) = closet_env();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut north = 0;
        for _ in 0..n {
            match heuristic_explore(&mem, &obs, &mut rng) {
                Move::North => north += 1,
                Move::West => {}
                other => panic!("walked into {other:?}"),
            }
        }
        let freq = north as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "{freq}");
    }

    #[test]
    fn explore_all_walls_stays() {
        let mut cfg = EnvConfig::corridor();
        cfg.rooms.truncate(1);
        cfg.rooms[0].east = crate::env::WALL.into();
        cfg.objects = vec![
            ObjectSpec::new("Key", ObjectKind::Static, "West"),
            ObjectSpec::new("Agent", ObjectKind::Agent, "West"),
        ];
        let mut env = RoomsEnv::new(cfg).unwrap();
        let (obs, _) = env.reset();
        let mem = MemorySystems::new(MemoryConfig::new(8), *env.vocab()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(heuristic_explore(&mem, &obs, &mut rng), Move::Stay);
    }

    #[test]
    fn explore_falls_back_to_memory() {
        let (env, mem, obs) = closet_env();
        // drop the east/south wall statements from the view but remember them
        let partial: Graph = obs.iter().filter(|s| s.tail != env.vocab().wall).cloned().collect();
        let walls: Vec<Statement> = obs
            .iter()
            .filter(|s| s.tail == env.vocab().wall)
            .map(|s| s.requalified(env.vocab().timestamp, 0.0))
            .collect();
        let mem = mem.with_contents(1, vec![], walls, vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mv = heuristic_explore(&mem, &partial, &mut rng);
            assert!(matches!(mv, Move::North | Move::West), "{mv:?}");
        }
    }
}
