//! Builds the default memory and history Q-networks, runs a forward pass on a
//! memory snapshot from the default layout and times forward/backward.
//!
//! cargo run --release --example qnet_forward

use std::time::Instant;

use humemai::env::{EnvConfig, Move, RoomsEnv};
use humemai::kg::Statement;
use humemai::memory::{MemoryAction, MemoryConfig, MemorySystems};
use humemai::nn::{GradTape, Gradients, NetConfig, QNet, MEMORY_STORES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut env = RoomsEnv::new(EnvConfig::default_layout())?;
    let vocab = *env.vocab();
    let mut mem = MemorySystems::new(MemoryConfig::new(48), vocab)?;

    let (mut obs, _) = env.reset();
    for t in 0..60 {
        let short = mem.observe(&obs, t).to_vec();
        for item in &short {
            mem.manage(item, MemoryAction::ALL[rng.random_range(0..2)])?;
        }
        mem.decay();
        obs = env.step(Move::from_index(rng.random_range(0..5)).unwrap(), &[None; 10])?.observation;
    }
    mem.observe(&obs, 60);

    let v = env.symbols().len();
    let net = QNet::new(NetConfig::humemai(v, &vocab.qualifier_keys(), 5, 100.0), &mut rng)?;
    let base = QNet::new(NetConfig::baseline(v, 5, 100.0), &mut rng)?;
    println!("memory network: {} parameters", net.param_count());
    println!("history network: {} parameters", base.param_count());

    let stores: [&[Statement]; 3] = [mem.short(), mem.episodic(), mem.semantic()];
    let out = net.forward(&stores)?;
    println!(
        "stores: short {} episodic {} semantic {}",
        mem.short().len(),
        mem.episodic().len(),
        mem.semantic().len()
    );
    println!("q = {:?}", out.q);
    if let Some(a) = out.attention {
        for (name, row) in MEMORY_STORES.iter().zip(a) {
            println!("attention {name:>8}: {:.3} {:.3} {:.3}", row[0], row[1], row[2]);
        }
    }

    let reps = 200;
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(net.forward(&stores)?);
    }
    let fwd = start.elapsed() / reps;
    let mut grads = Gradients::zeros(&net);
    let start = Instant::now();
    for _ in 0..reps {
        let mut tape = GradTape::new();
        net.forward_taped(&stores, &mut tape)?;
        tape.backward(&net, &[1.0, 0.0, 0.0, 0.0, 0.0], &mut grads)?;
    }
    grads.finalize(&net);
    let fb = start.elapsed() / reps;
    let history: Vec<Statement> = mem.episodic().iter().chain(mem.short()).cloned().collect();
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(base.forward(&[&history])?);
    }
    let hf = start.elapsed() / reps;
    println!("memory forward {fwd:?}, forward+backward {fb:?}; history forward ({} tokens) {hf:?}", history.len());
    Ok(())
}
