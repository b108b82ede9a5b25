mod common;

use contagion::dynamics::{run_episode, step, Allocation, Compartment, EpidemicParams, HealthState};
use contagion::graph::{make_chain, make_clique};
use contagion::policy::{greedy_policy, null_policy, random_policy, Policy, RandomPolicy};
use contagion::rng::seeded;
use proptest::prelude::*;

fn policies() -> Vec<Box<dyn Policy>> {
    vec![
        Box::new(null_policy()),
        Box::new(random_policy()),
        Box::new(RandomPolicy { susceptible_only: true }),
        Box::new(greedy_policy()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn episode_bookkeeping_is_consistent(
        seed in any::<u64>(),
        n in 1usize..12,
        p in 0.1f64..0.8,
        tau in 0.0f64..=1.0,
        rho in 0.0f64..=1.0,
        nt in 0usize..3,
        horizon in 0usize..25,
        budget in proptest::option::of(0usize..4),
        which in 0usize..4,
    ) {
        let g = common::random_graph(&mut seeded(seed), n, p);
        let mut params = EpidemicParams::new(tau, rho, nt, horizon);
        params.treatment_budget = budget;
        let policy = &policies()[which];
        let trace = run_episode(&g, &params, policy.as_ref(), &mut seeded(seed ^ 0xabc)).unwrap();

        prop_assert!(trace.num_steps() <= horizon);
        prop_assert_eq!(trace.states.len(), trace.num_steps() + 1);
        prop_assert_eq!(trace.seeded.len(), 1);
        if trace.num_steps() < horizon {
            prop_assert!(!trace.states.last().unwrap().has_infected());
        }
        let treated: usize = trace.allocations.iter().map(Allocation::num_treated).sum();
        if let Some(b) = budget {
            prop_assert!(treated <= b);
        }
        for a in &trace.allocations {
            prop_assert!(a.num_treated() <= nt);
            prop_assert!(a.validate(n, nt).is_ok());
        }

        let mut sick = vec![0u32; n];
        for s in &trace.states {
            for v in s.nodes_in(Compartment::I) {
                sick[v] += 1;
            }
        }
        prop_assert_eq!(&sick, &trace.per_node_sick_days);
        prop_assert_eq!(trace.total_sick_days, sick.iter().sum::<u32>());

        let mut ever = vec![false; n];
        for &v in trace.seeded.iter().chain(trace.newly_infected.iter().flatten()) {
            prop_assert!(!ever[v], "node {} infected twice", v);
            ever[v] = true;
        }
        prop_assert_eq!(&ever, &trace.ever_infected);

        for w in trace.states.windows(2) {
            for v in 0..n {
                let (a, b) = (w[0].get(v), w[1].get(v));
                prop_assert!(a != Compartment::R || b == Compartment::R);
                prop_assert!(a != Compartment::I || b != Compartment::S);
            }
        }
        if rho == 1.0 {
            prop_assert!(sick.iter().all(|&d| d <= 1));
        }
        if tau == 0.0 {
            prop_assert_eq!(trace.epidemic_size(), 1);
        }
    }

    #[test]
    fn treating_non_susceptible_nodes_is_a_no_op(seed in any::<u64>(), text in "[SIR]{6}") {
        let g = make_clique(6);
        let state = HealthState::parse(&text).unwrap();
        let params = EpidemicParams::new(0.5, 0.5, 6, 10);
        let wasted: Vec<usize> = (0..6).filter(|&v| !state.is(v, Compartment::S)).collect();
        let a = step(&g, &state, &params, &Allocation::from_nodes(wasted), &mut seeded(seed)).unwrap();
        let b = step(&g, &state, &params, &Allocation::idle(6), &mut seeded(seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn seeding_an_immune_node_is_a_no_op() {
    let g = make_chain(3);
    let params = EpidemicParams::new(1.0, 1.0, 1, 5).with_seeds(vec![1]);
    let pre = HealthState::parse("SRS").unwrap();
    let trace = contagion::dynamics::run_episode_from(&g, &params, pre, &null_policy(), &mut seeded(0)).unwrap();
    assert!(trace.seeded.is_empty());
    assert_eq!(trace.total_sick_days, 0);
    assert_eq!(trace.num_steps(), 0);
}

#[test]
fn certain_chain_takes_one_step_per_hop() {
    let g = make_chain(5);
    let params = EpidemicParams::new(1.0, 1.0, 1, 20).with_seeds(vec![0]);
    let trace = run_episode(&g, &params, &null_policy(), &mut seeded(4)).unwrap();
    assert_eq!(trace.newly_infected, vec![vec![1], vec![2], vec![3], vec![4], vec![]]);
    assert_eq!(trace.total_sick_days, 5);
}

#[test]
fn episodes_are_reproducible_from_a_seed() {
    let g = make_clique(7);
    let params = EpidemicParams::new(0.3, 0.4, 2, 20);
    let a = run_episode(&g, &params, &random_policy(), &mut seeded(31)).unwrap();
    let b = run_episode(&g, &params, &random_policy(), &mut seeded(31)).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}
