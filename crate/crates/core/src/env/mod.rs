//! The Rooms environment: a hidden dynamic knowledge graph of rooms and
//! objects, observed one room at a time while answering location questions.

pub mod belief;
mod config;
pub mod counting;
pub mod trajectory;

pub use config::{
    Direction, EnvConfig, Move, ObjectKind, ObjectSpec, RoomSpec, ANY_ROOM, WALL,
};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kg::{Graph, KgError, Statement, Symbol, SymbolTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("inconsistent belief: {0}")]
    Inconsistent(String),
    #[error("episode is over; call reset")]
    EpisodeOver,
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Kg(#[from] KgError),
}

/// Symbols every component agrees on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vocabulary {
    pub at_location: Symbol,
    pub directions: [Symbol; 4],
    pub wall: Symbol,
    pub agent: Symbol,
    pub current_time: Symbol,
    pub timestamp: Symbol,
    pub strength: Symbol,
}

impl Vocabulary {
    pub fn direction(&self, d: Direction) -> Symbol {
        self.directions[d.index()]
    }

    pub fn direction_of(&self, relation: Symbol) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| self.directions[d.index()] == relation)
    }

    /// Qualifier keys in `[short, episodic, semantic]` order.
    pub fn qualifier_keys(&self) -> [Symbol; 3] {
        [self.current_time, self.timestamp, self.strength]
    }
}

#[derive(Debug, Clone)]
struct CompiledObject {
    symbol: Symbol,
    kind: ObjectKind,
    init_room: usize,
    /// Per-room distribution over `Move::ALL`.
    moves: Vec<[f64; 5]>,
    carry_prob: f64,
}

/// Hidden state: time plus the room index of every object, in config order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoomsState {
    pub time: u32,
    pub location: Vec<usize>,
}

/// A one-hop question `(head, atLocation, ?)`. The truth is frozen when the
/// question is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Question {
    pub head: Symbol,
    pub relation: Symbol,
    truth: Symbol,
}

impl Question {
    pub fn new(head: Symbol, relation: Symbol, truth: Symbol) -> Self {
        Self { head, relation, truth }
    }

    pub fn truth(&self) -> Symbol {
        self.truth
    }
}

/// The room-local sub-graph visible to the agent.
pub type Observation = Graph;

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub reward: u32,
    pub observation: Observation,
    pub questions: Vec<Question>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct RoomsEnv {
    config: EnvConfig,
    symbols: SymbolTable,
    vocab: Vocabulary,
    rooms: Vec<Symbol>,
    neighbors: Vec<[Option<usize>; 4]>,
    objects: Vec<CompiledObject>,
    agent: usize,
    question_objects: Vec<usize>,
    question_dist: WeightedIndex<f64>,
    state: RoomsState,
    questions: Vec<Question>,
    rng: ChaCha8Rng,
    done: bool,
}

impl RoomsEnv {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let mut symbols = SymbolTable::new();
        let directions = [
            symbols.intern("north")?,
            symbols.intern("east")?,
            symbols.intern("south")?,
            symbols.intern("west")?,
        ];
        let at_location = symbols.intern("atLocation")?;
        let wall = symbols.intern(WALL)?;
        let current_time = symbols.intern("current_time")?;
        let timestamp = symbols.intern("timestamp")?;
        let strength = symbols.intern("strength")?;
        let rooms = config
            .rooms
            .iter()
            .map(|r| symbols.intern(&r.name))
            .collect::<Result<Vec<_>, _>>()?;
        let room_index = |name: &str| config.rooms.iter().position(|r| r.name == name);
        let neighbors = config
            .rooms
            .iter()
            .map(|r| Direction::ALL.map(|d| room_index(r.neighbor(d))))
            .collect();
        let mut objects = Vec::with_capacity(config.objects.len());
        for o in &config.objects {
            let moves = config
                .rooms
                .iter()
                .map(|r| match o.kind {
                    ObjectKind::Independent => *o.move_distribution(&r.name).expect("validated"),
                    _ => [0.0, 0.0, 0.0, 0.0, 1.0],
                })
                .collect();
            objects.push(CompiledObject {
                symbol: symbols.intern(&o.name)?,
                kind: o.kind,
                init_room: room_index(&o.init_room).expect("validated"),
                moves,
                carry_prob: o.carry_prob,
            });
        }
        let agent = objects.iter().position(|o| o.kind == ObjectKind::Agent).expect("validated");
        let question_objects: Vec<usize> = (0..objects.len()).filter(|&i| i != agent).collect();
        let weights: Vec<f64> = question_objects
            .iter()
            .map(|&i| config.objects[i].question_weight)
            .collect();
        let question_dist =
            WeightedIndex::new(&weights).map_err(|e| EnvError::Config(format!("question weights: {e}")))?;
        let vocab = Vocabulary {
            at_location,
            directions,
            wall,
            agent: objects[agent].symbol,
            current_time,
            timestamp,
            strength,
        };
        let state = RoomsState {
            time: 0,
            location: objects.iter().map(|o| o.init_room).collect(),
        };
        let seed = config.seed;
        Ok(Self {
            config,
            symbols,
            vocab,
            rooms,
            neighbors,
            objects,
            agent,
            question_objects,
            question_dist,
            state,
            questions: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            done: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn state(&self) -> &RoomsState {
        &self.state
    }

    pub fn time(&self) -> u32 {
        self.state.time
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn rooms(&self) -> &[Symbol] {
        &self.rooms
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn object_symbol(&self, i: usize) -> Symbol {
        self.objects[i].symbol
    }

    pub fn object_kind(&self, i: usize) -> ObjectKind {
        self.objects[i].kind
    }

    pub fn object_init_room(&self, i: usize) -> usize {
        self.objects[i].init_room
    }

    pub fn agent_index(&self) -> usize {
        self.agent
    }

    pub fn agent_room(&self) -> usize {
        self.state.location[self.agent]
    }

    pub fn neighbor(&self, room: usize, d: Direction) -> Option<usize> {
        self.neighbors[room][d.index()]
    }

    pub fn room_index(&self, sym: Symbol) -> Option<usize> {
        self.rooms.iter().position(|&r| r == sym)
    }

    /// Move distribution of object `i` when standing in `room`.
    pub(crate) fn move_distribution(&self, i: usize, room: usize) -> &[f64; 5] {
        &self.objects[i].moves[room]
    }

    pub(crate) fn carry_prob(&self, i: usize) -> f64 {
        self.objects[i].carry_prob
    }

    /// Resolves a move from `room`; walls mean staying put.
    pub fn destination(&self, room: usize, mv: Move) -> usize {
        mv.direction().and_then(|d| self.neighbor(room, d)).unwrap_or(room)
    }

    pub fn reset(&mut self) -> (Observation, Vec<Question>) {
        self.reset_with_seed(self.config.seed)
    }

    pub fn reset_with_seed(&mut self, seed: u64) -> (Observation, Vec<Question>) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = RoomsState {
            time: 0,
            location: self.objects.iter().map(|o| o.init_room).collect(),
        };
        self.done = false;
        self.questions = self.sample_questions_now();
        (self.observe(), self.questions.clone())
    }

    /// Grades `answers` against the outstanding questions, advances the world
    /// one tick and issues fresh questions.
    pub fn step(&mut self, mv: Move, answers: &[Option<Symbol>]) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        if answers.len() != self.questions.len() {
            return Err(EnvError::InvalidArgument(format!(
                "expected {} answers, got {}",
                self.questions.len(),
                answers.len()
            )));
        }
        let reward = self
            .questions
            .iter()
            .zip(answers)
            .filter(|(q, a)| **a == Some(q.truth))
            .count() as u32;
        let location = self.transition(&self.state.location.clone(), mv);
        self.state.location = location;
        self.state.time += 1;
        self.done = self.state.time >= self.config.steps_per_episode;
        self.questions = self.sample_questions_now();
        Ok(StepOutcome {
            reward,
            observation: self.observe(),
            questions: self.questions.clone(),
            done: self.done,
        })
    }

    /// Order: independents move, dependents co-move with a departing
    /// independent, then the agent moves.
    fn transition(&mut self, before: &[usize], mv: Move) -> Vec<usize> {
        let mut after = before.to_vec();
        let mut departed = Vec::new();
        for i in 0..self.objects.len() {
            if self.objects[i].kind != ObjectKind::Independent {
                continue;
            }
            let dist = &self.objects[i].moves[before[i]];
            let u: f64 = self.rng.random();
            let mut acc = 0.0;
            let mut choice = Move::Stay;
            for (k, p) in dist.iter().enumerate() {
                acc += p;
                if u < acc {
                    choice = Move::ALL[k];
                    break;
                }
            }
            after[i] = self.destination(before[i], choice);
            if after[i] != before[i] {
                departed.push(i);
            }
        }
        for i in 0..self.objects.len() {
            if self.objects[i].kind != ObjectKind::Dependent {
                continue;
            }
            let carriers: Vec<usize> = departed.iter().copied().filter(|&j| before[j] == before[i]).collect();
            if carriers.is_empty() {
                continue;
            }
            if self.rng.random::<f64>() < self.objects[i].carry_prob {
                let carrier = carriers[self.rng.random_range(0..carriers.len())];
                after[i] = after[carrier];
            }
        }
        after[self.agent] = self.destination(before[self.agent], mv);
        after
    }

    fn sample_questions_now(&mut self) -> Vec<Question> {
        let n = self.config.questions_per_step;
        (0..n)
            .map(|_| {
                let obj = self.question_objects[self.question_dist.sample(&mut self.rng)];
                Question::new(
                    self.objects[obj].symbol,
                    self.vocab.at_location,
                    self.rooms[self.state.location[obj]],
                )
            })
            .collect()
    }

    /// Draws a fresh set of questions about the current state.
    pub fn sample_questions(&mut self) -> Vec<Question> {
        self.sample_questions_now()
    }

    pub fn observe(&self) -> Observation {
        observation_for(self, &self.state.location)
    }

    /// The complete hidden state as a knowledge graph.
    pub fn hidden_state_graph(&self) -> Graph {
        let mut g = Graph::new();
        for (r, &room) in self.rooms.iter().enumerate() {
            for d in Direction::ALL {
                let tail = self.neighbor(r, d).map_or(self.vocab.wall, |n| self.rooms[n]);
                g.insert(Statement::new(room, self.vocab.direction(d), tail));
            }
        }
        for (i, o) in self.objects.iter().enumerate() {
            g.insert(Statement::new(o.symbol, self.vocab.at_location, self.rooms[self.state.location[i]]));
        }
        g
    }
}

/// Observation generated by an arbitrary placement of objects.
pub(crate) fn observation_for(env: &RoomsEnv, location: &[usize]) -> Observation {
    let room = location[env.agent];
    let room_sym = env.rooms[room];
    let mut g = Graph::new();
    for d in Direction::ALL {
        let tail = env.neighbor(room, d).map_or(env.vocab.wall, |n| env.rooms[n]);
        g.insert(Statement::new(room_sym, env.vocab.direction(d), tail));
    }
    for (i, o) in env.objects.iter().enumerate() {
        if location[i] == room {
            g.insert(Statement::new(o.symbol, env.vocab.at_location, room_sym));
        }
    }
    g
}
