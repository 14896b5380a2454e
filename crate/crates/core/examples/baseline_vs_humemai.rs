//! Trains HumemAI and the history-window baseline at the same capacity on the
//! default eight-room layout and prints paired greedy test rewards.
//!
//! cargo run --release --example baseline_vs_humemai [capacity] [seeds...]

use std::time::Instant;

use humemai::agent::{run_experiment, AgentKind, CellSummary, TrainConfig};
use humemai::env::EnvConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let capacity: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(48);
    let mut seeds: Vec<u64> = args.map(|s| s.parse()).collect::<Result<_, _>>()?;
    if seeds.is_empty() {
        seeds = vec![0];
    }
    let env = EnvConfig::default_layout();
    let cfg = TrainConfig::default();
    let mut cells = Vec::new();
    for kind in [AgentKind::Humemai, AgentKind::Baseline] {
        let mut per_seed = Vec::new();
        for &seed in &seeds {
            let start = Instant::now();
            let out = run_experiment(&env, &cfg, kind, capacity, seed, &mut |row| {
                if let Some(e) = row.eval_reward {
                    eprintln!("  {kind} seed {seed} {} ep {:>3} eval {e:.1} train {:.1}", row.phase, row.episode, row.train_reward);
                }
            })?;
            println!("{kind:<10} seed {seed}: {:.1} ± {:.1} ({:.0?})", out.report.mean, out.report.std, start.elapsed());
            per_seed.push(out.report.mean);
        }
        cells.push(CellSummary::new(kind, capacity, seeds.clone(), per_seed));
    }
    println!("| agent | capacity | mean ± std |");
    println!("|---|---|---|");
    for c in &cells {
        println!("| {} | {} | {:.1} ± {:.1} |", c.agent, c.capacity, c.mean, c.std);
    }
    Ok(())
}
