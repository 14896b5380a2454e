//! Builds a small qualified knowledge graph, queries it, round-trips it
//! through JSON and prints it as DOT.
//!
//! cargo run --example kg_graph

use std::collections::HashMap;

use humemai::kg::{export_dot, Graph, Statement, SymbolTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut symbols = SymbolTable::new();
    let mut sym = |s: &str| symbols.intern(s);
    let (laptop, phone, at, north) = (sym("laptop")?, sym("phone")?, sym("atLocation")?, sym("north")?);
    let (office, kitchen, ts, strength) = (sym("office")?, sym("kitchen")?, sym("timestamp")?, sym("strength")?);

    let mut g = Graph::new();
    g.insert(Statement::new(laptop, at, office).with_qualifier(ts, 3.0));
    g.insert(Statement::new(phone, at, kitchen).with_qualifier(strength, 2.5));
    g.insert(Statement::new(kitchen, north, office));
    // Inserting an identical statement is a no-op.
    assert!(!g.insert(Statement::new(kitchen, north, office)));

    for st in g.query_tails(laptop, at) {
        println!("laptop is in {} (timestamp {:?})", symbols.name(st.tail)?, st.qualifiers.get(ts));
    }

    let json = g.to_json(&symbols)?;
    println!("{}", serde_json::to_string_pretty(&json)?);
    let mut fresh = SymbolTable::new();
    let back = Graph::from_json(&json, &mut fresh)?;
    assert_eq!(back.len(), g.len());

    let colors = HashMap::from([(office, "lightblue".to_owned())]);
    print!("{}", export_dot(&g, &symbols, &colors)?);
    Ok(())
}
