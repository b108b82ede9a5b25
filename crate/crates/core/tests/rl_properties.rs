mod common;

use contagion::dynamics::{EpidemicParams, HealthState};
use contagion::graph::make_star;
use contagion::rl::{
    encode_observation, q_forward, td_loss_and_gradients, train_dqn, QNetwork, QPolicy, ReplayBuffer, TrainConfig,
    Transition,
};
use contagion::rng::seeded;
use proptest::prelude::*;

#[test]
fn analytic_gradients_match_central_differences() {
    for (hidden, nodes) in [(5, 4), (50, 6), (106, 5)] {
        let mut rng = seeded(hidden as u64);
        let net = QNetwork::init(nodes, hidden, &mut rng);
        let target = QNetwork::init(nodes, hidden, &mut rng);
        let batch = common::random_batch(&mut rng, nodes, 16);
        for gamma in [0.0, 0.7] {
            let err = common::gradient_relative_error(&net, &target, &batch, gamma, 1e-5);
            assert!(err < 1e-4, "hidden {hidden}, gamma {gamma}: relative error {err}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_discount_ignores_the_target_network(seed in any::<u64>(), nodes in 1usize..8, hidden in 1usize..20) {
        let mut rng = seeded(seed);
        let net = QNetwork::init(nodes, hidden, &mut rng);
        let t1 = QNetwork::init(nodes, hidden, &mut rng);
        let t2 = QNetwork::init(nodes, hidden, &mut rng);
        let batch = common::random_batch(&mut rng, nodes, 8);
        let terminal: Vec<Transition> = batch.iter().cloned().map(|t| Transition { terminal: true, ..t }).collect();
        let (a, ga) = td_loss_and_gradients(&net, &t1, &batch, 0.0);
        let (b, gb) = td_loss_and_gradients(&net, &t2, &batch, 0.0);
        let (c, _) = td_loss_and_gradients(&net, &t2, &terminal, 0.9);
        prop_assert_eq!(a, b);
        prop_assert_eq!(ga, gb);
        prop_assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn network_json_round_trip_is_exact(seed in any::<u64>(), nodes in 1usize..8, hidden in 1usize..20) {
        let net = QNetwork::init(nodes, hidden, &mut seeded(seed));
        let back = QNetwork::from_json(&net.to_json()).unwrap();
        prop_assert_eq!(&back, &net);
        let x = encode_observation(&HealthState::susceptible(nodes));
        prop_assert_eq!(q_forward(&back, &x).unwrap(), q_forward(&net, &x).unwrap());
    }

    #[test]
    fn observation_is_one_hot_per_node(text in "[SIR]{1,12}") {
        let state = HealthState::parse(&text).unwrap();
        let x = encode_observation(&state);
        prop_assert_eq!(x.len(), 3 * text.len());
        for chunk in x.chunks(3) {
            prop_assert_eq!(chunk.iter().sum::<f64>(), 1.0);
        }
    }
}

#[test]
fn replay_sampling_is_uniform() {
    let mut buf = ReplayBuffer::new(10);
    for a in 0..25 {
        buf.push(Transition { observation: vec![], action: a, reward: 0.0, next_observation: vec![], terminal: true });
    }
    let mut counts = [0usize; 10];
    let mut rng = seeded(6);
    for _ in 0..5_000 {
        for i in buf.sample_indices(10, &mut rng) {
            counts[i] += 1;
        }
    }
    let expected = 5_000.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 0.999 quantile of chi-square with 9 degrees of freedom.
    assert!(chi2 < 27.877, "{counts:?}");
}

#[test]
fn q_policy_breaks_ties_towards_the_lowest_action() {
    let policy = QPolicy::new(QNetwork::zeros(3, 4)).unwrap();
    assert_eq!(policy.action(&HealthState::parse("ISS").unwrap()), 0);
}

#[test]
fn training_is_deterministic_and_finite() {
    let g = make_star(3);
    let params = EpidemicParams::new(0.5, 0.5, 1, 10);
    let cfg = TrainConfig { hidden: 8, iterations: 4, steps_per_iteration: 100, warmup: 50, seed: 3, ..TrainConfig::default() };
    let a = train_dqn(&g, &params, &cfg).unwrap();
    let b = train_dqn(&g, &params, &cfg).unwrap();
    assert_eq!(a.learning_curve, b.learning_curve);
    assert_eq!(a.policy.network(), b.policy.network());
    assert!(a.policy.network().is_finite());
    assert_eq!(a.learning_curve.len(), 4);
}
