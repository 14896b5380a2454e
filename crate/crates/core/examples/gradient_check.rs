//! Checks the hand-written backward pass of a small memory Q-network against
//! central finite differences.
//!
//! cargo run --release --example gradient_check

use humemai::kg::{Statement, Symbol};
use humemai::nn::{gradcheck, NetConfig, QNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let keys = [Symbol(0), Symbol(1), Symbol(2)];
    let cfg = NetConfig {
        embed_dim: 6,
        hidden_dim: 5,
        mlp_hidden: vec![8],
        ..NetConfig::humemai(12, &keys, 3, 10.0)
    };
    let net = QNet::new(cfg, &mut rng)?;
    let mut store = |n: usize| -> Vec<Statement> {
        (0..n)
            .map(|_| {
                let s = |rng: &mut ChaCha8Rng| Symbol(rng.random_range(3..12));
                Statement::new(s(&mut rng), s(&mut rng), s(&mut rng)).with_qualifier(keys[rng.random_range(0..3)], rng.random_range(0.0..10.0))
            })
            .collect()
    };
    let (short, episodic, semantic) = (store(1), store(4), store(3));
    let weights = [0.3, -1.2, 0.7];
    let report = gradcheck(&net, &[&short, &episodic, &semantic], &weights, 1e-5, 1e-6)?;
    println!(
        "{} parameters, max relative error {:.2e} at {:?}",
        report.n_params, report.max_rel_err, report.worst
    );
    assert!(report.passes(1e-4));
    Ok(())
}
