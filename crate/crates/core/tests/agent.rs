use humemai::agent::{
    evaluate, evaluate_seeds, run_experiment, run_greedy_episode, train_phase1_mm, train_phase2_explore, AgentKind,
    NetDims, Policy, TrainConfig,
};
use humemai::env::{EnvConfig, Move, RoomsEnv};
use humemai::memory::{
    answer_from_history, answer_question, heuristic_explore, HistoryWindow, MemoryAction, MemoryConfig, MemorySystems,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_cfg(episodes: usize) -> TrainConfig {
    let dims = NetDims {
        embed_dim: 8,
        hidden_dim: 8,
        mlp_hidden: vec![16],
    };
    TrainConfig {
        episodes_per_phase: episodes,
        eval_every: 5,
        validation_episodes: 1,
        eval_episodes: 3,
        batch_size: 16,
        target_sync_every: 50,
        train_every: 1,
        humemai_net: dims.clone(),
        baseline_net: dims,
        ..TrainConfig::default()
    }
}

fn two_room() -> EnvConfig {
    let mut env = EnvConfig::two_room(0.3);
    env.steps_per_episode = 30;
    env.questions_per_step = 3;
    env
}

/// Episode reward of a uniformly random memory policy with heuristic
/// exploration on env seed `seed`.
fn random_mm_reward(env_cfg: &EnvConfig, capacity: usize, seed: u64) -> f64 {
    let mut env = RoomsEnv::new(env_cfg.clone()).unwrap();
    let mut mem = MemorySystems::new(MemoryConfig::new(capacity), *env.vocab()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (mut obs, mut qs) = env.reset_with_seed(seed);
    let mut total = 0.0;
    for t in 0..env_cfg.steps_per_episode {
        for item in mem.observe(&obs, t).to_vec() {
            mem.manage(&item, MemoryAction::ALL[rng.random_range(0..3)]).unwrap();
        }
        mem.decay();
        let mv = heuristic_explore(&mem, &obs, &mut rng);
        let answers: Vec<_> = qs.iter().map(|q| answer_question(&mem, q)).collect();
        let out = env.step(mv, &answers).unwrap();
        total += out.reward as f64;
        obs = out.observation;
        qs = out.questions;
    }
    total
}

#[test]
fn trained_mm_beats_random_mm_on_two_rooms() {
    let env = two_room();
    let cfg = small_cfg(30);
    let memory = MemoryConfig::new(4);
    let p1 = train_phase1_mm(&env, &cfg, AgentKind::Humemai, &memory, 0, &mut |_| {}).unwrap();
    assert_eq!(p1.metrics.len(), 30);
    let policy = Policy::Humemai {
        kind: AgentKind::Humemai,
        memory: memory.clone(),
        mm: p1.best,
        explore: None,
    };
    let seeds: Vec<u64> = (0..20).map(|k| 1000 + k).collect();
    let trained = evaluate_seeds(&policy, &env, &seeds, "paired").unwrap();
    let random: f64 = seeds.iter().map(|&s| random_mm_reward(&env, 4, s)).sum::<f64>() / seeds.len() as f64;
    assert!(trained.mean >= random, "trained {} vs random {random}", trained.mean);
}

#[test]
fn phase_two_warm_starts_and_freezes_mm() {
    let env = two_room();
    let mut cfg = small_cfg(3);
    let memory = MemoryConfig::new(4);
    let p1 = train_phase1_mm(&env, &cfg, AgentKind::Humemai, &memory, 1, &mut |_| {}).unwrap();
    let mm_before = p1.best.clone();
    // A batch larger than any buffer means no update ever runs, so the
    // returned network is the initial one.
    cfg.batch_size = 100_000;
    let p2 = train_phase2_explore(&env, &cfg, AgentKind::Humemai, &memory, &p1.best, 1, &mut |_| {}).unwrap();
    assert_eq!(p1.best.params(), mm_before.params());
    let (mut lstm, mut fresh) = (0, 0);
    let mut names: Vec<&str> = (0..p2.last.param_count()).filter_map(|i| p2.last.param_name(i)).collect();
    names.dedup();
    for name in names {
        let (a, b) = (p2.last.tensor(name).unwrap(), mm_before.tensor(name).unwrap());
        if name.starts_with("lstm.") {
            assert_eq!(a, b, "{name}");
            lstm += 1;
        } else if a != b {
            fresh += 1;
        }
    }
    assert!(lstm > 0 && fresh > 0);
    assert_eq!(p2.last.config().n_actions, 5);
}

#[test]
fn corridor_agent_prefers_the_east_room() {
    let env = EnvConfig::corridor();
    let out = run_experiment(&env, &small_cfg(20), AgentKind::Humemai, 8, 0, &mut |_| {}).unwrap();
    let Policy::Humemai { memory, mm, explore, .. } = &out.policy else {
        panic!("expected a HumemAI policy");
    };
    let explore = explore.as_ref().unwrap();

    let east_share = |choose: &mut dyn FnMut(&MemorySystems, &humemai::env::Observation, u32) -> Move| {
        let mut rooms = RoomsEnv::new(env.clone()).unwrap();
        let east = rooms.room_index(rooms.symbols().lookup("East").unwrap()).unwrap();
        let mut mem = MemorySystems::new(memory.clone(), *rooms.vocab()).unwrap();
        let (mut obs, mut qs) = rooms.reset_with_seed(77);
        let mut visits = 0;
        for t in 0..env.steps_per_episode {
            for item in mem.observe(&obs, t).to_vec() {
                let st = [vec![item.clone()], mem.episodic().to_vec(), mem.semantic().to_vec()];
                let q = mm.forward(&[&st[0], &st[1], &st[2]]).unwrap().q;
                let a = (0..3).max_by(|&i, &j| q[i].total_cmp(&q[j])).unwrap();
                mem.manage(&item, MemoryAction::ALL[a]).unwrap();
            }
            mem.decay();
            let mv = choose(&mem, &obs, t);
            let answers: Vec<_> = qs.iter().map(|q| answer_question(&mem, q)).collect();
            let step = rooms.step(mv, &answers).unwrap();
            visits += (rooms.agent_room() == east) as usize;
            obs = step.observation;
            qs = step.questions;
        }
        visits as f64 / env.steps_per_episode as f64
    };
    let vocab = *RoomsEnv::new(env.clone()).unwrap().vocab();
    let greedy = east_share(&mut |mem, obs, t| {
        let short = humemai::memory::encode_short(obs, t, &vocab);
        let q = explore.forward(&[&short, mem.episodic(), mem.semantic()]).unwrap().q;
        Move::ALL[(0..5).max_by(|&i, &j| q[i].total_cmp(&q[j])).unwrap()]
    });
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let random = east_share(&mut |_, _, _| Move::ALL[rng.random_range(0..5)]);
    assert!(greedy > random, "greedy {greedy} vs random walk {random}");
}

#[test]
fn reports_account_rewards_and_are_deterministic() {
    let env = two_room();
    let cfg = small_cfg(5);
    let a = run_experiment(&env, &cfg, AgentKind::Humemai, 4, 7, &mut |_| {}).unwrap();
    let b = run_experiment(&env, &cfg, AgentKind::Humemai, 4, 7, &mut |_| {}).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.report, b.report);

    let r = &a.report;
    let bound = (env.steps_per_episode as usize * env.questions_per_step) as f64;
    for (steps, total) in r.step_rewards.iter().zip(&r.episode_rewards) {
        assert_eq!(steps.iter().map(|&x| x as f64).sum::<f64>(), *total);
        assert!(*total <= bound);
    }
    let mean = r.episode_rewards.iter().sum::<f64>() / r.episode_rewards.len() as f64;
    assert!((r.mean - mean).abs() < 1e-12);

    let repeat = evaluate_seeds(&a.policy, &env, &[3, 3, 3], "repeat").unwrap();
    assert_eq!(repeat.std, 0.0);
    let one = run_greedy_episode(&a.policy, &env, 3, true).unwrap();
    assert_eq!(one, run_greedy_episode(&a.policy, &env, 3, true).unwrap());
    assert_eq!(one.reward, repeat.mean);

    for kind in [AgentKind::HumemaiEpisodicOnly, AgentKind::HumemaiSemanticOnly, AgentKind::Baseline] {
        let out = run_experiment(&env, &cfg, kind, 4, 7, &mut |_| {}).unwrap();
        assert_eq!(out.report.agent, kind.name());
        assert_eq!(out.phase1_report.is_some(), kind != AgentKind::Baseline);
        // The baseline trains for twice the per-phase episode count.
        assert_eq!(out.metrics.len(), 10);
    }
    let eval = evaluate(&a.policy, &env, 2, 7).unwrap();
    assert_eq!(eval.seeds, humemai::agent::test_seeds(7, 2));
}

#[test]
fn long_window_answers_everything_on_a_static_env() {
    let mut env = RoomsEnv::new(EnvConfig::corridor()).unwrap();
    let mut hist = HistoryWindow::new(10_000, env.vocab().timestamp);
    let (mut obs, mut qs) = env.reset_with_seed(0);
    let mut rewards = Vec::new();
    for t in 0..20 {
        hist.push(&obs, t);
        assert!(hist.len() <= hist.max_len());
        let answers: Vec<_> = qs.iter().map(|q| answer_from_history(&hist, q)).collect();
        let mv = if t < 2 { Move::East } else { Move::West };
        let out = env.step(mv, &answers).unwrap();
        rewards.push(out.reward);
        obs = out.observation;
        qs = out.questions;
    }
    // The key is seen on arrival in the east room at t = 2.
    assert!(rewards[..2].iter().all(|&r| r == 0));
    assert!(rewards[2..].iter().all(|&r| r as usize == env.config().questions_per_step));
}
