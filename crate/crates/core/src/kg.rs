//! Interned symbols and qualified-quadruple stores.
//!
//! Everything the environment emits and everything the agent remembers is a
//! [`Statement`]: a `(head, relation, tail)` triple with zero or more
//! qualifier key/value pairs, e.g. `(Phone, atLocation, Kitchen, {timestamp: 42})`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown symbol id {0}")]
    UnknownSymbol(u32),
    #[error("malformed graph json: {0}")]
    Json(String),
}

/// Dense id of an interned name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(pub u32);

impl Symbol {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijective text <-> id table. Ids are contiguous from zero.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    names: Vec<String>,
    ids: HashMap<String, Symbol>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, text: &str) -> Result<Symbol, KgError> {
        if text.is_empty() {
            return Err(KgError::InvalidArgument("cannot intern an empty name".into()));
        }
        if let Some(&sym) = self.ids.get(text) {
            return Ok(sym);
        }
        let sym = Symbol(self.names.len() as u32);
        self.names.push(text.to_owned());
        self.ids.insert(text.to_owned(), sym);
        Ok(sym)
    }

    pub fn lookup(&self, text: &str) -> Option<Symbol> {
        self.ids.get(text).copied()
    }

    pub fn name(&self, sym: Symbol) -> Result<&str, KgError> {
        self.names
            .get(sym.index())
            .map(String::as_str)
            .ok_or(KgError::UnknownSymbol(sym.0))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (Symbol(i as u32), n.as_str()))
    }
}

/// Qualifier key/value pairs, sorted by key, at most one value per key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qualifiers(SmallVec<[(Symbol, f64); 1]>);

impl Qualifiers {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(key: Symbol, value: f64) -> Self {
        let mut q = Self::default();
        q.0.push((key, value));
        q
    }

    /// Inserts or overwrites `key`.
    pub fn set(&mut self, key: Symbol, value: f64) {
        match self.0.binary_search_by_key(&key, |&(k, _)| k) {
            Ok(i) => self.0[i].1 = value,
            Err(i) => self.0.insert(i, (key, value)),
        }
    }

    pub fn get(&self, key: Symbol) -> Option<f64> {
        self.0.iter().find(|(k, _)| *k == key).map(|&(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, f64)> + '_ {
        self.0.iter().copied()
    }

    /// The sole pair of a memory statement.
    pub fn only(&self) -> Option<(Symbol, f64)> {
        match self.0.as_slice() {
            [pair] => Some(*pair),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub head: Symbol,
    pub relation: Symbol,
    pub tail: Symbol,
    pub qualifiers: Qualifiers,
}

impl Statement {
    pub fn new(head: Symbol, relation: Symbol, tail: Symbol) -> Self {
        Self {
            head,
            relation,
            tail,
            qualifiers: Qualifiers::none(),
        }
    }

    pub fn with_qualifier(mut self, key: Symbol, value: f64) -> Self {
        self.qualifiers.set(key, value);
        self
    }

    pub fn triple(&self) -> (Symbol, Symbol, Symbol) {
        (self.head, self.relation, self.tail)
    }

    /// Same triple, qualifiers replaced by a single pair.
    pub fn requalified(&self, key: Symbol, value: f64) -> Self {
        Self {
            head: self.head,
            relation: self.relation,
            tail: self.tail,
            qualifiers: Qualifiers::single(key, value),
        }
    }
}

/// Insertion-ordered collection of distinct statements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Graph {
    statements: Vec<Statement>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `st` unless an identical statement is already present.
    pub fn insert(&mut self, st: Statement) -> bool {
        if self.statements.contains(&st) {
            return false;
        }
        self.statements.push(st);
        true
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Statement> {
        self.statements.iter()
    }

    pub fn contains(&self, st: &Statement) -> bool {
        self.statements.contains(st)
    }

    pub fn query_tails(&self, head: Symbol, relation: Symbol) -> Vec<&Statement> {
        query_tails(&self.statements, head, relation)
    }

    pub fn to_json(&self, symbols: &SymbolTable) -> Result<serde_json::Value, KgError> {
        statements_to_json(&self.statements, symbols)
    }

    pub fn from_json(value: &serde_json::Value, symbols: &mut SymbolTable) -> Result<Self, KgError> {
        let mut g = Graph::new();
        for st in statements_from_json(value, symbols)? {
            if !g.insert(st) {
                return Err(KgError::Json("duplicate statement".into()));
            }
        }
        Ok(g)
    }
}

impl FromIterator<Statement> for Graph {
    fn from_iter<I: IntoIterator<Item = Statement>>(iter: I) -> Self {
        let mut g = Graph::new();
        for st in iter {
            g.insert(st);
        }
        g
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Statement;
    type IntoIter = std::slice::Iter<'a, Statement>;

    fn into_iter(self) -> Self::IntoIter {
        self.statements.iter()
    }
}

/// One-hop lookup `(head, relation, ?)` in insertion order.
pub fn query_tails<'a, I>(statements: I, head: Symbol, relation: Symbol) -> Vec<&'a Statement>
where
    I: IntoIterator<Item = &'a Statement>,
{
    statements
        .into_iter()
        .filter(|st| st.head == head && st.relation == relation)
        .collect()
}

#[derive(Serialize, Deserialize)]
struct JsonStatement {
    head: String,
    relation: String,
    tail: String,
    #[serde(default)]
    qualifiers: BTreeMap<String, f64>,
}

pub fn statements_to_json(
    statements: &[Statement],
    symbols: &SymbolTable,
) -> Result<serde_json::Value, KgError> {
    let mut out = Vec::with_capacity(statements.len());
    for st in statements {
        let mut qualifiers = BTreeMap::new();
        for (k, v) in st.qualifiers.iter() {
            qualifiers.insert(symbols.name(k)?.to_owned(), v);
        }
        out.push(JsonStatement {
            head: symbols.name(st.head)?.to_owned(),
            relation: symbols.name(st.relation)?.to_owned(),
            tail: symbols.name(st.tail)?.to_owned(),
            qualifiers,
        });
    }
    serde_json::to_value(out).map_err(|e| KgError::Json(e.to_string()))
}

pub fn statements_from_json(
    value: &serde_json::Value,
    symbols: &mut SymbolTable,
) -> Result<Vec<Statement>, KgError> {
    let raw: Vec<JsonStatement> =
        serde_json::from_value(value.clone()).map_err(|e| KgError::Json(e.to_string()))?;
    raw.into_iter()
        .map(|js| {
            let mut st = Statement::new(
                symbols.intern(&js.head)?,
                symbols.intern(&js.relation)?,
                symbols.intern(&js.tail)?,
            );
            for (k, v) in js.qualifiers {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(KgError::Json(format!("qualifier {k} must be a non-negative number")));
                }
                st.qualifiers.set(symbols.intern(&k)?, v);
            }
            Ok(st)
        })
        .collect()
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

/// Edge label: relation name followed by `key=value` qualifiers.
pub fn edge_label(st: &Statement, symbols: &SymbolTable) -> Result<String, KgError> {
    let mut label = symbols.name(st.relation)?.to_owned();
    for (k, v) in st.qualifiers.iter() {
        write!(label, "\n{}={}", symbols.name(k)?, format_value(v)).unwrap();
    }
    Ok(label)
}

/// Renders statements as a DOT digraph.
///
/// Nodes listed in `node_colors` get a `color`/`style=filled` attribute; each
/// statement becomes one edge labelled with its relation and qualifiers.
pub fn export_dot(
    g: &Graph,
    symbols: &SymbolTable,
    node_colors: &HashMap<Symbol, String>,
) -> Result<String, KgError> {
    let edges: Vec<(&Statement, Option<&str>)> = g.iter().map(|st| (st, None)).collect();
    dot_from_edges(&edges, symbols, node_colors)
}

pub fn dot_from_edges(
    edges: &[(&Statement, Option<&str>)],
    symbols: &SymbolTable,
    node_colors: &HashMap<Symbol, String>,
) -> Result<String, KgError> {
    let mut out = String::from("digraph {\n");
    let mut seen = Vec::new();
    for (st, _) in edges {
        for sym in [st.head, st.tail] {
            if !seen.contains(&sym) {
                seen.push(sym);
            }
        }
    }
    for sym in seen {
        let name = dot_quote(symbols.name(sym)?);
        match node_colors.get(&sym) {
            Some(color) => writeln!(
                out,
                "    {name} [style=filled, fillcolor={}];",
                dot_quote(color)
            )
            .unwrap(),
            None => writeln!(out, "    {name};").unwrap(),
        }
    }
    for (st, color) in edges {
        let label = dot_quote(&edge_label(st, symbols)?);
        let head = dot_quote(symbols.name(st.head)?);
        let tail = dot_quote(symbols.name(st.tail)?);
        match color {
            Some(c) => writeln!(out, "    {head} -> {tail} [label={label}, color={}];", dot_quote(c)),
            None => writeln!(out, "    {head} -> {tail} [label={label}];"),
        }
        .unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> (SymbolTable, Symbol, Symbol, Symbol) {
        let mut t = SymbolTable::new();
        let phone = t.intern("Phone").unwrap();
        let at = t.intern("atLocation").unwrap();
        let kitchen = t.intern("Kitchen").unwrap();
        (t, phone, at, kitchen)
    }

    #[test]
    fn intern_is_idempotent_and_contiguous() {
        let mut t = SymbolTable::new();
        let a = t.intern("Agent").unwrap();
        let b = t.intern("Closet").unwrap();
        let c = t.intern("north").unwrap();
        assert_eq!((a.0, b.0, c.0), (0, 1, 2));
        assert_eq!(t.intern("Agent").unwrap(), a);
        assert_eq!(t.name(b).unwrap(), "Closet");
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn intern_rejects_empty() {
        let mut t = SymbolTable::new();
        assert!(matches!(t.intern(""), Err(KgError::InvalidArgument(_))));
        assert!(t.is_empty());
    }

    #[test]
    fn query_tails_one_hop() {
        let (mut t, phone, at, kitchen) = table();
        let hall = t.intern("Hall").unwrap();
        let mut g = Graph::new();
        assert!(g.query_tails(phone, at).is_empty());
        g.insert(Statement::new(phone, at, kitchen));
        assert_eq!(g.query_tails(phone, at), vec![&Statement::new(phone, at, kitchen)]);
        g.insert(Statement::new(phone, at, hall));
        let tails: Vec<_> = g.query_tails(phone, at).iter().map(|s| s.tail).collect();
        assert_eq!(tails, vec![kitchen, hall]);
        assert!(g.query_tails(kitchen, at).is_empty());
    }

    #[test]
    fn graph_rejects_identical_statement() {
        let (_, phone, at, kitchen) = table();
        let mut g = Graph::new();
        assert!(g.insert(Statement::new(phone, at, kitchen)));
        assert!(!g.insert(Statement::new(phone, at, kitchen)));
        // different qualifiers make a different statement
        let ts = Symbol(99);
        assert!(g.insert(Statement::new(phone, at, kitchen).with_qualifier(ts, 3.0)));
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn qualifiers_keep_one_value_per_key() {
        let mut q = Qualifiers::none();
        q.set(Symbol(2), 1.0);
        q.set(Symbol(1), 5.0);
        q.set(Symbol(2), 7.0);
        assert_eq!(q.len(), 2);
        assert_eq!(q.get(Symbol(2)), Some(7.0));
        assert_eq!(q.only(), None);
    }

    #[test]
    fn dot_empty_graph() {
        let t = SymbolTable::new();
        let dot = export_dot(&Graph::new(), &t, &HashMap::new()).unwrap();
        assert_eq!(dot, "digraph {\n}\n");
    }

    #[test]
    fn dot_single_edge_with_timestamp_label() {
        let (mut t, phone, at, kitchen) = table();
        let ts = t.intern("timestamp").unwrap();
        let g: Graph = [Statement::new(phone, at, kitchen).with_qualifier(ts, 42.0)]
            .into_iter()
            .collect();
        let dot = export_dot(&g, &t, &HashMap::new()).unwrap();
        let edges: Vec<&str> = dot.lines().filter(|l| l.contains("->")).collect();
        assert_eq!(edges.len(), 1);
        let edge = edges[0];
        assert!(edge.contains("\"Phone\" -> \"Kitchen\""));
        let label_start = edge.find("label=\"").unwrap() + 7;
        let label_end = edge[label_start..].find('"').unwrap() + label_start;
        let label = &edge[label_start..label_end];
        assert_eq!(label.split("\\n").collect::<Vec<_>>(), vec!["atLocation", "timestamp=42"]);
    }

    #[test]
    fn dot_colors_nodes() {
        let (t, phone, at, kitchen) = table();
        let g: Graph = [Statement::new(phone, at, kitchen)].into_iter().collect();
        let colors = HashMap::from([(phone, "orange".to_string())]);
        let dot = export_dot(&g, &t, &colors).unwrap();
        assert!(dot.contains("\"Phone\" [style=filled, fillcolor=\"orange\"];"));
        assert!(dot.contains("    \"Kitchen\";"));
    }

    #[test]
    fn json_shape() {
        let (mut t, phone, at, kitchen) = table();
        let strength = t.intern("strength").unwrap();
        let g: Graph = [Statement::new(phone, at, kitchen).with_qualifier(strength, 1.6)]
            .into_iter()
            .collect();
        let v = g.to_json(&t).unwrap();
        assert_eq!(
            v,
            serde_json::json!([{"head": "Phone", "relation": "atLocation", "tail": "Kitchen",
                                "qualifiers": {"strength": 1.6}}])
        );
    }

    #[test]
    fn json_rejects_negative_qualifier() {
        let mut t = SymbolTable::new();
        let v = serde_json::json!([{"head": "a", "relation": "r", "tail": "b", "qualifiers": {"strength": -1.0}}]);
        assert!(Graph::from_json(&v, &mut t).is_err());
    }
}
