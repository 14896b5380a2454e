//! Tracks the exact belief over hidden states of a three-room corridor with
//! one wandering object while a random walk observes it.
//!
//! cargo run --example belief_oracle

use humemai::env::belief::{enumerate_states, exact_belief_update, mode, point_belief, total_variation, uniform_belief};
use humemai::env::counting::count_hidden_states;
use humemai::env::{EnvConfig, Move, ObjectKind, ObjectSpec, RoomsEnv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = EnvConfig::corridor();
    cfg.objects.retain(|o| o.kind == ObjectKind::Agent);
    let mut x = ObjectSpec::new("X", ObjectKind::Independent, "Middle");
    for room in ["West", "Middle", "East"] {
        x = x.with_move_rule(room, [0.2, 0.2, 0.2, 0.2, 0.2]);
    }
    cfg.objects.insert(0, x);
    let mut env = RoomsEnv::new(cfg.clone())?;
    let n_static = cfg.objects.iter().filter(|o| o.kind == ObjectKind::Static).count() as u32;
    println!(
        "{} enumerated states (closed form {})",
        enumerate_states(&env)?.len(),
        count_hidden_states(cfg.rooms.len() as u32, cfg.objects.len() as u32, n_static)?
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (_, qs) = env.reset_with_seed(7);
    let prior = uniform_belief(&env)?;
    let mut belief = point_belief(env.state().location.clone());
    let mut answers = vec![None; qs.len()];
    for t in 0..12 {
        let mv = Move::ALL[rng.random_range(0..Move::ALL.len())];
        let out = env.step(mv, &answers)?;
        belief = exact_belief_update(&env, &belief, mv, &out.observation)?;
        let truth = &env.state().location;
        println!(
            "t={t:>2} {:<5?} support {} p(true state) {:.3} mode matches truth: {} TV to uniform {:.3}",
            mv,
            belief.len(),
            belief.get(truth).copied().unwrap_or(0.0),
            mode(&belief) == Some(truth),
            total_variation(&belief, &prior)
        );
        answers = vec![None; out.questions.len()];
    }
    Ok(())
}
