//! JSONL trajectory export: one line per step.

use std::io::Write;

use serde_json::{json, Value};

use super::{EnvError, Observation, Question, RoomsEnv};
use crate::kg::{statements_to_json, Symbol, SymbolTable};

/// Pre-transition snapshot of a step, completed once answers are graded.
pub struct StepRecord {
    time: u32,
    hidden_state: Value,
    observation: Value,
    questions: Vec<Question>,
}

impl StepRecord {
    /// Captures the env's current hidden state alongside what the agent sees.
    pub fn capture(env: &RoomsEnv, observation: &Observation, questions: &[Question]) -> Result<Self, EnvError> {
        let symbols = env.symbols();
        Ok(Self {
            time: env.time(),
            hidden_state: statements_to_json(env.hidden_state_graph().statements(), symbols)?,
            observation: statements_to_json(observation.statements(), symbols)?,
            questions: questions.to_vec(),
        })
    }

    pub fn finish(self, symbols: &SymbolTable, answers: &[Option<Symbol>], reward: u32) -> Result<Value, EnvError> {
        let name = |s: Symbol| symbols.name(s).map(str::to_owned);
        let qs = self
            .questions
            .iter()
            .map(|q| Ok(json!({"head": name(q.head)?, "relation": name(q.relation)?, "truth": name(q.truth())?})))
            .collect::<Result<Vec<_>, EnvError>>()?;
        let ans = answers
            .iter()
            .map(|a| a.map(name).transpose())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(json!({
            "time": self.time,
            "hidden_state": self.hidden_state,
            "observation": self.observation,
            "questions": qs,
            "answers": ans,
            "reward": reward,
        }))
    }
}

pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write(&mut self, record: &Value) -> Result<(), EnvError> {
        writeln!(self.out, "{record}").map_err(|e| EnvError::Io(e.to_string()))
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, Move};

    #[test]
    fn one_line_per_step() {
        let mut env = RoomsEnv::new(EnvConfig::corridor()).unwrap();
        let (mut obs, mut qs) = env.reset();
        let mut w = TrajectoryWriter::new(Vec::new());
        for _ in 0..3 {
            let answers: Vec<_> = qs.iter().map(|q| Some(q.truth())).collect();
            let rec = StepRecord::capture(&env, &obs, &qs).unwrap();
            let out = env.step(Move::East, &answers).unwrap();
            w.write(&rec.finish(env.symbols(), &answers, out.reward).unwrap()).unwrap();
            obs = out.observation;
            qs = out.questions;
        }
        let text = String::from_utf8(w.into_inner()).unwrap();
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 3);
        for (t, l) in lines.iter().enumerate() {
            assert_eq!(l["time"], t as u64);
            assert_eq!(l["reward"], 10);
            assert_eq!(l["questions"].as_array().unwrap().len(), 10);
            assert_eq!(l["answers"][0], "East");
        }
        // agent walked east: West -> Middle -> East
        let agent_room = |l: &Value| {
            l["hidden_state"]
                .as_array()
                .unwrap()
                .iter()
                .find(|s| s["head"] == "Agent")
                .unwrap()["tail"]
                .clone()
        };
        assert_eq!(agent_room(&lines[0]), "West");
        assert_eq!(agent_room(&lines[2]), "East");
    }
}
