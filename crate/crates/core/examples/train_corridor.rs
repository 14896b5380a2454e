//! Trains HumemAI on the three-room corridor, where every question asks for
//! the static Key in the east room, and compares it with the optimum of 980.
//!
//! cargo run --release --example train_corridor [seed]

use std::time::Instant;

use humemai::agent::{run_experiment, AgentKind, TrainConfig};
use humemai::env::EnvConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let env = EnvConfig::corridor();
    let cfg = TrainConfig::default();
    let start = Instant::now();
    let out = run_experiment(&env, &cfg, AgentKind::Humemai, 8, seed, &mut |row| {
        if row.eval_reward.is_some() {
            println!(
                "{:>8} ep {:>3}  train {:>6.1}  eval {:>6.1}  loss {:>8.3}  eps {:.2}",
                row.phase,
                row.episode,
                row.train_reward,
                row.eval_reward.unwrap_or(f64::NAN),
                row.loss.unwrap_or(f64::NAN),
                row.epsilon
            );
        }
    })?;
    println!(
        "greedy test reward {:.1} ± {:.1} over {} episodes ({:.1?})",
        out.report.mean,
        out.report.std,
        out.report.episode_rewards.len(),
        start.elapsed()
    );
    Ok(())
}
