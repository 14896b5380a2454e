//! Walks the default layout storing object locations episodically and
//! forgetting room adjacency, answers the environment's questions from memory
//! and prints the final memory graph as DOT.
//!
//! cargo run --example memory_systems > memory.dot

use humemai::env::{EnvConfig, RoomsEnv};
use humemai::memory::{answer_question, heuristic_explore, MemoryAction, MemoryConfig, MemorySnapshot, MemorySystems};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut env = RoomsEnv::new(EnvConfig::default_layout())?;
    let vocab = *env.vocab();
    let mut mem = MemorySystems::new(MemoryConfig::new(24), vocab)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut obs, mut qs) = env.reset_with_seed(5);
    let (mut total, mut asked) = (0, 0);
    for t in 0..env.config().steps_per_episode {
        for item in mem.observe(&obs, t).to_vec() {
            let action = if item.relation == vocab.at_location {
                MemoryAction::ToEpisodic
            } else {
                MemoryAction::Forget
            };
            mem.manage(&item, action)?;
        }
        mem.decay();
        let answers: Vec<_> = qs.iter().map(|q| answer_question(&mem, q)).collect();
        let out = env.step(heuristic_explore(&mem, &obs, &mut rng), &answers)?;
        total += out.reward;
        asked += answers.len();
        (obs, qs) = (out.observation, out.questions);
    }
    eprintln!(
        "answered {total}/{asked} correctly; episodic {} semantic {} (capacity {})",
        mem.episodic().len(),
        mem.semantic().len(),
        mem.config().capacity
    );
    print!("{}", MemorySnapshot::to_dot(&mem, env.symbols())?);
    Ok(())
}
