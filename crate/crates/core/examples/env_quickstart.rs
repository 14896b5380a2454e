//! Plays one episode of the default Rooms layout with a random walk,
//! answering every question with "don't know", and writes the trajectory as
//! JSON lines.
//!
//! cargo run --example env_quickstart > trajectory.jsonl

use humemai::env::trajectory::{StepRecord, TrajectoryWriter};
use humemai::env::{EnvConfig, Move, RoomsEnv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut env = RoomsEnv::new(EnvConfig::default_layout())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut obs, mut qs) = env.reset_with_seed(42);
    let mut out = TrajectoryWriter::new(std::io::stdout().lock());
    let mut total = 0;
    loop {
        let record = StepRecord::capture(&env, &obs, &qs)?;
        let answers = vec![None; qs.len()];
        let step = env.step(Move::ALL[rng.random_range(0..Move::ALL.len())], &answers)?;
        out.write(&record.finish(env.symbols(), &answers, step.reward)?)?;
        total += step.reward;
        if step.done {
            break;
        }
        (obs, qs) = (step.observation, step.questions);
    }
    eprintln!("{} steps, reward {total}", env.time());
    Ok(())
}
