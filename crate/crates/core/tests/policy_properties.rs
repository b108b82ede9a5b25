mod common;

use std::collections::BTreeMap;

use contagion::dynamics::{infection_probability, Allocation, Compartment, Decision, EpidemicParams, HealthState};
use contagion::graph::{make_chain, make_cycle, CentralityMeasure, Graph};
use contagion::policy::{
    centrality_policy, greedy_policy, null_policy, random_policy, table_policy, ConditionalTable, GreedyPolicy, Policy,
    RandomPolicy, TableEntry,
};
use contagion::rng::seeded;
use proptest::prelude::*;
use rand::Rng;

fn decision<'a>(g: &'a Graph, state: &'a HealthState, params: &'a EpidemicParams, key: u64) -> Decision<'a> {
    Decision { graph: g, state, params, step: 1, slots: params.treatments_per_step, budget_left: None, episode_key: key }
}

/// Pearson statistic against uniform expected counts.
fn chi_square(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

// 0.999 quantile of chi-square with 5 degrees of freedom.
const CHI2_5_999: f64 = 20.515;

#[test]
fn random_policy_is_uniform_over_nodes() {
    let g = make_cycle(6);
    let state = HealthState::parse("ISSSSS").unwrap();
    let params = EpidemicParams::new(0.5, 0.5, 1, 20);
    let mut rng = seeded(8);
    let mut counts = vec![0; 6];
    for _ in 0..60_000 {
        let a = random_policy().allocate(&decision(&g, &state, &params, 0), &mut rng);
        counts[a.treated().next().unwrap()] += 1;
    }
    assert!(chi_square(&counts) < CHI2_5_999, "{counts:?}");
}

#[test]
fn centrality_ties_break_uniformly_across_episodes() {
    let g = make_cycle(7);
    let state = HealthState::parse("ISSSSSS").unwrap();
    let params = EpidemicParams::new(0.5, 0.5, 1, 20);
    let policy = centrality_policy(CentralityMeasure::Degree.compute(&g).unwrap());
    assert!(!policy.is_deterministic());
    let mut rng = seeded(2);
    let mut counts = vec![0; 6];
    for _ in 0..60_000 {
        let key: u64 = rng.gen();
        let a = policy.allocate(&decision(&g, &state, &params, key), &mut seeded(0));
        let v = a.treated().next().unwrap();
        assert_ne!(v, 0, "infected node must not be treated");
        counts[v - 1] += 1;
    }
    assert!(chi_square(&counts) < CHI2_5_999, "{counts:?}");
}

#[test]
fn centrality_tie_order_is_fixed_within_an_episode() {
    let g = make_cycle(7);
    let params = EpidemicParams::new(0.5, 0.5, 1, 20);
    let policy = centrality_policy(CentralityMeasure::Degree.compute(&g).unwrap());
    let a = HealthState::parse("ISSSSSS").unwrap();
    let b = HealthState::parse("IRSSSSS").unwrap();
    for key in 0..50 {
        let first = policy.allocate(&decision(&g, &a, &params, key), &mut seeded(0)).treated().next().unwrap();
        let second = policy.allocate(&decision(&g, &b, &params, key), &mut seeded(1)).treated().next().unwrap();
        if first != 1 {
            assert_eq!(first, second);
        }
    }
}

#[test]
fn table_draws_follow_their_weights() {
    let g = make_chain(3);
    let rows = BTreeMap::from([
        (0, vec![TableEntry { treat: Some(1), w: 0.5 }, TableEntry { treat: Some(2), w: 0.5 }]),
        (1, vec![TableEntry { treat: None, w: 1.0 }]),
        (2, vec![TableEntry { treat: Some(1), w: 1.0 }]),
    ]);
    let policy = table_policy(ConditionalTable::new(rows).unwrap(), 3).unwrap();
    let state = HealthState::parse("ISS").unwrap();
    let params = EpidemicParams::new(0.5, 0.5, 1, 20);
    let mut rng = seeded(12);
    let trials = 10_000;
    let ones = (0..trials)
        .filter(|_| policy.allocate(&decision(&g, &state, &params, 0), &mut rng).treated().next() == Some(1))
        .count();
    let share = ones as f64 / trials as f64;
    assert!((share - 0.5).abs() <= 0.02, "share {share}");

    let later = Decision { step: 2, ..decision(&g, &state, &params, 0) };
    assert!(policy.allocate(&later, &mut rng).is_idle());
}

/// Expected new infections by summing over every transmission outcome.
fn brute_force_expectation(g: &Graph, state: &HealthState, tau: f64, treated: &[usize]) -> f64 {
    let at_risk: Vec<(usize, f64)> = state
        .nodes_in(Compartment::S)
        .filter(|v| !treated.contains(v))
        .map(|v| (v, infection_probability(state.infected_neighbors(g, v), tau)))
        .collect();
    (0u32..1 << at_risk.len())
        .map(|mask| {
            let mut p = 1.0;
            for (i, &(_, q)) in at_risk.iter().enumerate() {
                p *= if mask >> i & 1 == 1 { q } else { 1.0 - q };
            }
            p * mask.count_ones() as f64
        })
        .sum()
}

fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in subsets(&items[i + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn greedy_minimises_one_step_infections(
        seed in any::<u64>(),
        n in 2usize..9,
        text_seed in any::<u64>(),
        tau in 0.05f64..1.0,
        nt in 1usize..3,
    ) {
        let g = common::random_graph(&mut seeded(seed), n, 0.5);
        let mut rng = seeded(text_seed);
        let text: String = (0..n).map(|_| ['S', 'S', 'I', 'R'][rng.gen_range(0..4)]).collect();
        let state = HealthState::parse(&text).unwrap();
        let params = EpidemicParams::new(tau, 0.5, nt, 20);
        let d = decision(&g, &state, &params, 0);
        let chosen: Vec<usize> = greedy_policy().allocate(&d, &mut seeded(0)).treated().collect();
        let got = brute_force_expectation(&g, &state, tau, &chosen);
        prop_assert!((GreedyPolicy::one_step_expectation(&d, &Allocation::from_nodes(chosen.clone())) - got).abs() < 1e-12);

        let pool: Vec<usize> = state.nodes_in(Compartment::S).collect();
        let best = (0..=nt.min(pool.len()))
            .flat_map(|k| subsets(&pool, k))
            .map(|s| brute_force_expectation(&g, &state, tau, &s))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(got <= best + 1e-12, "greedy {} vs best {}", got, best);
    }

    #[test]
    fn every_policy_emits_valid_allocations(
        seed in any::<u64>(),
        n in 1usize..10,
        nt in 0usize..4,
        key in any::<u64>(),
    ) {
        let g = common::random_graph(&mut seeded(seed), n, 0.4);
        let mut rng = seeded(seed ^ 5);
        let text: String = (0..n).map(|_| ['S', 'I', 'R'][rng.gen_range(0..3)]).collect();
        let state = HealthState::parse(&text).unwrap();
        let params = EpidemicParams::new(0.5, 0.5, nt, 20);
        let mut policies: Vec<Box<dyn Policy>> = vec![
            Box::new(null_policy()),
            Box::new(random_policy()),
            Box::new(RandomPolicy { susceptible_only: true }),
            Box::new(greedy_policy()),
        ];
        for m in CentralityMeasure::ALL {
            if let Ok(scores) = m.compute(&g) {
                policies.push(Box::new(centrality_policy(scores)));
            }
        }
        let d = decision(&g, &state, &params, key);
        for p in &policies {
            let a = p.allocate(&d, &mut rng);
            prop_assert_eq!(a.slots().len(), nt);
            prop_assert!(a.validate(n, nt).is_ok(), "{} produced {:?}", p.name(), a);
            if let Some(dist) = p.distribution(&d) {
                let mass: f64 = dist.iter().map(|(_, w)| w).sum();
                prop_assert!((mass - 1.0).abs() < 1e-12);
                prop_assert!(dist.iter().all(|(a, _)| a.validate(n, nt).is_ok()));
            }
        }
    }
}
