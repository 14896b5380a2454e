use std::collections::HashMap;

use serde_json::{json, Value};

use super::{MemoryConfig, MemorySystems};
use crate::env::Vocabulary;
use crate::kg::{dot_from_edges, statements_from_json, statements_to_json, KgError, Statement, Symbol, SymbolTable};

pub const SHORT_COLOR: &str = "lightgray";
pub const EPISODIC_COLOR: &str = "orange";
pub const SEMANTIC_COLOR: &str = "lightblue";

/// Serializable view of a [`MemorySystems`].
///
/// JSON layout: `{capacity, decay_factor, time, short, episodic, semantic}`
/// where each store is an array in the graph statement format.
pub struct MemorySnapshot;

impl MemorySnapshot {
    pub fn to_json(mem: &MemorySystems, symbols: &SymbolTable) -> Result<Value, KgError> {
        Ok(json!({
            "capacity": mem.config().capacity,
            "decay_factor": mem.config().decay_factor,
            "time": mem.time(),
            "short": statements_to_json(mem.short(), symbols)?,
            "episodic": statements_to_json(mem.episodic(), symbols)?,
            "semantic": statements_to_json(mem.semantic(), symbols)?,
        }))
    }

    pub fn from_json(value: &Value, vocab: Vocabulary, symbols: &mut SymbolTable) -> Result<MemorySystems, KgError> {
        let num = |k: &str| {
            value
                .get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| KgError::Json(format!("missing numeric field {k}")))
        };
        let mut cfg = MemoryConfig::new(num("capacity")? as usize);
        cfg.decay_factor = num("decay_factor")?;
        let time = num("time")? as u32;
        let mut store = |k: &str| -> Result<Vec<Statement>, KgError> {
            statements_from_json(value.get(k).unwrap_or(&Value::Array(vec![])), symbols)
        };
        let (short, episodic, semantic) = (store("short")?, store("episodic")?, store("semantic")?);
        let mem = MemorySystems::new(cfg, vocab).map_err(|e| KgError::Json(e.to_string()))?;
        Ok(mem.with_contents(time, short, episodic, semantic))
    }

    /// DOT digraph with edges and nodes coloured by owning store. A node
    /// takes the colour of the first store (short, episodic, semantic) it
    /// appears in.
    pub fn to_dot(mem: &MemorySystems, symbols: &SymbolTable) -> Result<String, KgError> {
        let mut node_colors: HashMap<Symbol, String> = HashMap::new();
        let mut edges = Vec::new();
        for (store, color) in [
            (mem.short(), SHORT_COLOR),
            (mem.episodic(), EPISODIC_COLOR),
            (mem.semantic(), SEMANTIC_COLOR),
        ] {
            for st in store {
                for sym in [st.head, st.tail] {
                    node_colors.entry(sym).or_insert_with(|| color.to_owned());
                }
                edges.push((st, Some(color)));
            }
        }
        dot_from_edges(&edges, symbols, &node_colors)
    }
}
