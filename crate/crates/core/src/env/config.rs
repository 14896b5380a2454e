use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EnvError;

pub const WALL: &str = "Wall";
/// Wildcard key in `move_rule` tables.
pub const ANY_ROOM: &str = "*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn opposite(self) -> Self {
        match self {
            Direction::North => Direction::South,
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::West => Direction::East,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::East => "east",
            Direction::South => "south",
            Direction::West => "west",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Exploration action. Index order is `North, East, South, West, Stay`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    North,
    East,
    South,
    West,
    Stay,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::North, Move::East, Move::South, Move::West, Move::Stay];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            Move::North => Some(Direction::North),
            Move::East => Some(Direction::East),
            Move::South => Some(Direction::South),
            Move::West => Some(Direction::West),
            Move::Stay => None,
        }
    }

    pub fn from_direction(d: Direction) -> Self {
        Self::ALL[d.index()]
    }
}

fn wall() -> String {
    WALL.to_owned()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub name: String,
    #[serde(default = "wall")]
    pub north: String,
    #[serde(default = "wall")]
    pub east: String,
    #[serde(default = "wall")]
    pub south: String,
    #[serde(default = "wall")]
    pub west: String,
}

impl RoomSpec {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            north: wall(),
            east: wall(),
            south: wall(),
            west: wall(),
        }
    }

    pub fn neighbor(&self, d: Direction) -> &str {
        match d {
            Direction::North => &self.north,
            Direction::East => &self.east,
            Direction::South => &self.south,
            Direction::West => &self.west,
        }
    }

    pub fn neighbor_mut(&mut self, d: Direction) -> &mut String {
        match d {
            Direction::North => &mut self.north,
            Direction::East => &mut self.east,
            Direction::South => &mut self.south,
            Direction::West => &mut self.west,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Static,
    Independent,
    Dependent,
    Agent,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub name: String,
    pub kind: ObjectKind,
    pub init_room: String,
    /// Independent objects only: room name (or `*`) to probabilities over
    /// `[north, east, south, west, stay]`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub move_rule: BTreeMap<String, [f64; 5]>,
    /// Dependent objects only.
    #[serde(default)]
    pub carry_prob: f64,
    #[serde(default = "one")]
    pub question_weight: f64,
}

impl ObjectSpec {
    pub fn new(name: &str, kind: ObjectKind, init_room: &str) -> Self {
        Self {
            name: name.to_owned(),
            kind,
            init_room: init_room.to_owned(),
            move_rule: BTreeMap::new(),
            carry_prob: 0.0,
            question_weight: if kind == ObjectKind::Agent { 0.0 } else { 1.0 },
        }
    }

    pub fn with_move_rule(mut self, room: &str, probs: [f64; 5]) -> Self {
        self.move_rule.insert(room.to_owned(), probs);
        self
    }

    pub fn with_carry_prob(mut self, p: f64) -> Self {
        self.carry_prob = p;
        self
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.question_weight = w;
        self
    }

    /// Resolved distribution for `room`, falling back to the `*` entry.
    pub fn move_distribution(&self, room: &str) -> Option<&[f64; 5]> {
        self.move_rule.get(room).or_else(|| self.move_rule.get(ANY_ROOM))
    }
}

fn default_steps() -> u32 {
    100
}

fn default_questions() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub rooms: Vec<RoomSpec>,
    pub objects: Vec<ObjectSpec>,
    #[serde(default = "default_steps")]
    pub steps_per_episode: u32,
    #[serde(default = "default_questions")]
    pub questions_per_step: usize,
    #[serde(default)]
    pub seed: u64,
}

pub(crate) const RESERVED: [&str; 6] = [WALL, "north", "east", "south", "west", "atLocation"];

impl EnvConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, EnvError> {
        let cfg: Self = toml::from_str(s).map_err(|e| EnvError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self, EnvError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| EnvError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `.json` files as JSON and everything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn room(&self, name: &str) -> Option<&RoomSpec> {
        self.rooms.iter().find(|r| r.name == name)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let err = |msg: String| Err(EnvError::Config(msg));
        if self.rooms.is_empty() {
            return err("layout must contain at least one room".into());
        }
        if self.steps_per_episode == 0 {
            return err("steps_per_episode must be positive".into());
        }
        if self.questions_per_step == 0 {
            return err("questions_per_step must be positive".into());
        }
        let mut names = HashSet::new();
        for name in self.rooms.iter().map(|r| &r.name).chain(self.objects.iter().map(|o| &o.name)) {
            if name.is_empty() {
                return err("names must be non-empty".into());
            }
            if RESERVED.contains(&name.as_str()) || name == ANY_ROOM {
                return err(format!("name {name:?} is reserved"));
            }
            if !names.insert(name.as_str()) {
                return err(format!("duplicate name {name:?}"));
            }
        }
        for room in &self.rooms {
            for d in Direction::ALL {
                let n = room.neighbor(d);
                if n == WALL {
                    continue;
                }
                let Some(other) = self.room(n) else {
                    return err(format!("({}, {}) points at unknown room {n:?}", room.name, d.name()));
                };
                if other.neighbor(d.opposite()) != room.name {
                    return err(format!(
                        "layout inconsistency: ({}, {}, {}) but ({}, {}, {})",
                        room.name,
                        d.name(),
                        n,
                        n,
                        d.opposite().name(),
                        other.neighbor(d.opposite())
                    ));
                }
            }
        }
        let agents = self.objects.iter().filter(|o| o.kind == ObjectKind::Agent).count();
        if agents != 1 {
            return err(format!("exactly one object must have kind agent, found {agents}"));
        }
        let mut total_weight = 0.0;
        for obj in &self.objects {
            if self.room(&obj.init_room).is_none() {
                return err(format!("init_room {:?} of {} is not in the layout", obj.init_room, obj.name));
            }
            if !(obj.question_weight.is_finite() && obj.question_weight >= 0.0) {
                return err(format!("question_weight of {} must be a non-negative real", obj.name));
            }
            if obj.kind != ObjectKind::Agent {
                total_weight += obj.question_weight;
            }
            if !(0.0..=1.0).contains(&obj.carry_prob) {
                return err(format!("carry_prob of {} must lie in [0, 1]", obj.name));
            }
            for key in obj.move_rule.keys() {
                if key != ANY_ROOM && self.room(key).is_none() {
                    return err(format!("move_rule of {} names unknown room {key:?}", obj.name));
                }
            }
            if obj.kind == ObjectKind::Independent {
                for room in &self.rooms {
                    let Some(dist) = obj.move_distribution(&room.name) else {
                        return err(format!("move_rule of {} has no entry for room {}", obj.name, room.name));
                    };
                    if dist.iter().any(|p| !p.is_finite() || *p < 0.0) {
                        return err(format!("move_rule of {} in {} has a negative entry", obj.name, room.name));
                    }
                    let sum: f64 = dist.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return err(format!(
                            "move_rule of {} in {} sums to {sum}, expected 1",
                            obj.name, room.name
                        ));
                    }
                }
            }
        }
        if self.objects.iter().all(|o| o.kind == ObjectKind::Agent) {
            return err("at least one non-agent object is required for questions".into());
        }
        if total_weight <= 0.0 {
            return err("question weights of non-agent objects are all zero".into());
        }
        Ok(())
    }

    /// Eight rooms in two rows of four with ten objects. The bottom-right
    /// room reproduces the `Closet` neighbourhood of the running example.
    pub fn default_layout() -> Self {
        let top = ["Kitchen", "Hall", "Library", "Nursery"];
        let bottom = ["Office", "Bedroom", "Sauna", "Closet"];
        let mut rooms: Vec<RoomSpec> = top.iter().chain(bottom.iter()).map(|n| RoomSpec::new(n)).collect();
        let mut link = |a: &str, d: Direction, b: &str| {
            rooms.iter_mut().find(|r| r.name == a).unwrap().neighbor_mut(d).replace_range(.., b);
            rooms
                .iter_mut()
                .find(|r| r.name == b)
                .unwrap()
                .neighbor_mut(d.opposite())
                .replace_range(.., a);
        };
        for row in [top, bottom] {
            for w in row.windows(2) {
                link(w[0], Direction::East, w[1]);
            }
        }
        link("Kitchen", Direction::South, "Office");
        link("Library", Direction::South, "Sauna");
        link("Nursery", Direction::South, "Closet");

        let roam = [0.1, 0.1, 0.1, 0.1, 0.6];
        let home = [0.025, 0.025, 0.025, 0.025, 0.9];
        let person = |name: &str, room: &str, w: f64| {
            ObjectSpec::new(name, ObjectKind::Independent, room)
                .with_move_rule(ANY_ROOM, roam)
                .with_move_rule(room, home)
                .with_weight(w)
        };
        let objects = vec![
            ObjectSpec::new("Bed", ObjectKind::Static, "Bedroom"),
            ObjectSpec::new("Table", ObjectKind::Static, "Kitchen"),
            person("Alice", "Library", 3.0),
            person("Bob", "Kitchen", 2.0),
            person("Sam", "Closet", 1.0),
            person("Tom", "Office", 1.0),
            ObjectSpec::new("Phone", ObjectKind::Dependent, "Kitchen")
                .with_carry_prob(0.5)
                .with_weight(2.0),
            ObjectSpec::new("Laptop", ObjectKind::Dependent, "Library").with_carry_prob(0.5),
            ObjectSpec::new("Towel", ObjectKind::Dependent, "Sauna").with_carry_prob(0.3),
            ObjectSpec::new("Agent", ObjectKind::Agent, "Hall"),
        ];
        Self {
            rooms,
            objects,
            steps_per_episode: 100,
            questions_per_step: 10,
            seed: 0,
        }
    }

    /// `West - Middle - East` with a single static object in the east room.
    pub fn corridor() -> Self {
        let mut rooms = vec![RoomSpec::new("West"), RoomSpec::new("Middle"), RoomSpec::new("East")];
        rooms[0].east = "Middle".into();
        rooms[1].west = "West".into();
        rooms[1].east = "East".into();
        rooms[2].west = "Middle".into();
        Self {
            rooms,
            objects: vec![
                ObjectSpec::new("Key", ObjectKind::Static, "East"),
                ObjectSpec::new("Agent", ObjectKind::Agent, "West"),
            ],
            steps_per_episode: 100,
            questions_per_step: 10,
            seed: 0,
        }
    }

    /// Rooms `A` (west) and `B` (east), agent in `A`, one independent object
    /// `X` in `A` that crosses to the other room with probability `move_prob`.
    pub fn two_room(move_prob: f64) -> Self {
        let mut a = RoomSpec::new("A");
        a.east = "B".into();
        let mut b = RoomSpec::new("B");
        b.west = "A".into();
        let x = ObjectSpec::new("X", ObjectKind::Independent, "A")
            .with_move_rule("A", [0.0, move_prob, 0.0, 0.0, 1.0 - move_prob])
            .with_move_rule("B", [0.0, 0.0, 0.0, move_prob, 1.0 - move_prob]);
        Self {
            rooms: vec![a, b],
            objects: vec![x, ObjectSpec::new("Agent", ObjectKind::Agent, "A")],
            steps_per_episode: 100,
            questions_per_step: 10,
            seed: 0,
        }
    }
}
