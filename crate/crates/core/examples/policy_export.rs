//! Trains a tiny HumemAI agent on the two-room layout, saves it as a policy
//! file with checkpoints, loads it back and evaluates it on fresh seeds.
//!
//! cargo run --release --example policy_export

use humemai::agent::{evaluate_seeds, run_experiment, AgentKind, NetDims, TrainConfig};
use humemai::cli::{attention_csv, load_policy, save_policy};
use humemai::env::EnvConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = EnvConfig::two_room(0.3);
    let dims = NetDims {
        embed_dim: 8,
        hidden_dim: 8,
        mlp_hidden: vec![16],
    };
    let cfg = TrainConfig {
        episodes_per_phase: 10,
        eval_every: 5,
        validation_episodes: 2,
        eval_episodes: 3,
        batch_size: 16,
        humemai_net: dims.clone(),
        baseline_net: dims,
        ..TrainConfig::default()
    };
    let out = run_experiment(&env, &cfg, AgentKind::Humemai, 6, 0, &mut |row| {
        if let Some(v) = row.eval_reward {
            eprintln!("{} episode {}: validation {v:.1}", row.phase, row.episode);
        }
    })?;
    println!("test reward {:.1} ± {:.1}", out.report.mean, out.report.std);

    let dir = std::env::temp_dir().join("humemai-policy-export");
    let path = save_policy(&dir, &out.policy)?;
    let loaded = load_policy(&path)?;
    assert_eq!(loaded, out.policy);
    let report = evaluate_seeds(&loaded, &env, &[100, 101, 102], "fresh")?;
    println!("saved to {}; fresh seeds {:?} -> {:?}", path.display(), report.seeds, report.episode_rewards);
    println!("{}", attention_csv(&report).lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
