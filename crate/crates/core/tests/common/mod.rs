#![allow(dead_code)]

use std::collections::HashSet;

use humemai::env::{EnvConfig, Move, ObjectKind, ObjectSpec, RoomSpec, RoomsEnv, ANY_ROOM};
use humemai::kg::{Graph, Statement};
use rand::Rng;

/// Random connected grid layout with a random mix of object kinds.
pub fn random_config<R: Rng>(rng: &mut R) -> EnvConfig {
    let rows = rng.random_range(1..=3usize);
    let cols = rng.random_range(1..=4usize);
    let name = |r: usize, c: usize| format!("R{r}x{c}");
    let mut rooms: Vec<RoomSpec> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| RoomSpec::new(&name(r, c)))
        .collect();
    for r in 0..rows {
        for c in 0..cols {
            // Keep the first row and column fully linked so the grid stays connected.
            if c + 1 < cols && (r == 0 || rng.random_bool(0.6)) {
                rooms[r * cols + c].east = name(r, c + 1);
                rooms[r * cols + c + 1].west = name(r, c);
            }
            if r + 1 < rows && (c == 0 || rng.random_bool(0.6)) {
                rooms[r * cols + c].south = name(r + 1, c);
                rooms[(r + 1) * cols + c].north = name(r, c);
            }
        }
    }
    let n_rooms = rooms.len();
    let pick = |rng: &mut R| rooms[rng.random_range(0..n_rooms)].name.clone();
    let mut objects = Vec::new();
    for i in 0..rng.random_range(1..=6) {
        let kind = match rng.random_range(0..3) {
            0 => ObjectKind::Static,
            1 => ObjectKind::Independent,
            _ => ObjectKind::Dependent,
        };
        let mut o = ObjectSpec::new(&format!("Obj{i}"), kind, &pick(rng));
        if kind == ObjectKind::Independent {
            o = o.with_move_rule(ANY_ROOM, random_dist(rng));
            for _ in 0..rng.random_range(0..3) {
                o = o.with_move_rule(&pick(rng), random_dist(rng));
            }
        }
        if kind == ObjectKind::Dependent {
            o = o.with_carry_prob(rng.random_range(0.0..=1.0));
        }
        objects.push(o.with_weight(rng.random_range(0.1..3.0)));
    }
    objects.push(ObjectSpec::new("Agent", ObjectKind::Agent, &pick(rng)));
    EnvConfig {
        rooms,
        objects,
        steps_per_episode: rng.random_range(5..40),
        questions_per_step: rng.random_range(1..12),
        seed: rng.random(),
    }
}

fn random_dist<R: Rng>(rng: &mut R) -> [f64; 5] {
    let mut w = [0.0; 5];
    for x in &mut w {
        *x = rng.random_range(0.0..1.0);
    }
    let s: f64 = w.iter().sum();
    w.map(|x| x / s)
}

pub fn random_move<R: Rng>(rng: &mut R) -> Move {
    Move::ALL[rng.random_range(0..5)]
}

/// The room-local view rebuilt from the config's names and the hidden state,
/// without going through the environment's own observation code.
pub fn expected_observation(env: &RoomsEnv) -> HashSet<(String, String, String)> {
    let cfg = env.config();
    let loc = &env.state().location;
    let room = &cfg.rooms[loc[env.agent_index()]];
    let mut out = HashSet::new();
    for (rel, tail) in [("north", &room.north), ("east", &room.east), ("south", &room.south), ("west", &room.west)] {
        out.insert((room.name.clone(), rel.to_string(), tail.clone()));
    }
    for (i, o) in cfg.objects.iter().enumerate() {
        if cfg.rooms[loc[i]].name == room.name {
            out.insert((o.name.clone(), "atLocation".into(), room.name.clone()));
        }
    }
    out
}

pub fn named(env: &RoomsEnv, g: &Graph) -> HashSet<(String, String, String)> {
    g.iter().map(|s| names(env, s)).collect()
}

pub fn names(env: &RoomsEnv, s: &Statement) -> (String, String, String) {
    let n = |x| env.symbols().name(x).unwrap().to_string();
    (n(s.head), n(s.relation), n(s.tail))
}
