//! Small hand-built instances on which planning beats myopic treatment.

use crate::dynamics::EpidemicParams;
use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone)]
pub struct ControlFixture {
    pub graph: Graph,
    pub params: EpidemicParams,
    /// Node the greedy policy treats first.
    pub greedy_first: Option<NodeId>,
    /// Node the optimal policy treats first; `None` means it waits.
    pub optimal_first: Option<NodeId>,
    /// Control guard large enough for the instance.
    pub guard: usize,
}

/// Seeds 0 and 1 share neighbour A = 2, a dead end at risk 0.75. Seed 0 also
/// touches B = 3, a hub over five leaves, at risk 0.5. Greedy protects A;
/// protecting B first saves more.
pub fn greedy_trap() -> ControlFixture {
    let mut edges = vec![(0, 2), (1, 2), (0, 3)];
    edges.extend((4..9).map(|leaf| (3, leaf)));
    ControlFixture {
        graph: Graph::new(9, edges).expect("fixture graph is valid"),
        params: EpidemicParams::new(0.5, 1.0, 1, 20).with_seeds(vec![0, 1]),
        greedy_first: Some(2),
        optimal_first: Some(3),
        guard: 9,
    }
}

/// Seed 0 has two symmetric sides, each `a - c - K4` with `c` joined to the
/// whole clique. With one lifetime treatment it pays to wait one step and
/// spend it on the bottleneck `c` of whichever side caught the disease.
pub fn wait_and_see() -> ControlFixture {
    let mut edges = Vec::new();
    for (a, c, first) in [(1, 2, 3), (7, 8, 9)] {
        edges.extend([(0, a), (a, c)]);
        let cluster: Vec<NodeId> = std::iter::once(c).chain(first..first + 4).collect();
        for (i, &u) in cluster.iter().enumerate() {
            edges.extend(cluster[i + 1..].iter().map(|&v| (u, v)));
        }
    }
    ControlFixture {
        graph: Graph::new(13, edges).expect("fixture graph is valid"),
        params: EpidemicParams::new(0.5, 1.0, 1, 20).with_seeds(vec![0]).with_budget(1),
        greedy_first: Some(1),
        optimal_first: None,
        guard: 13,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{seed_infection, Decision, HealthState};
    use crate::exact::{exact_policy_eval, optimal_value};
    use crate::policy::{GreedyPolicy, Policy};
    use crate::rng::seeded;

    fn first_actions(f: &ControlFixture) -> (Option<NodeId>, Option<NodeId>) {
        let n = f.graph.num_nodes();
        let mut vf = optimal_value(&f.graph, &f.params, f.guard).unwrap();
        let mut state = HealthState::susceptible(n);
        seed_infection(&mut state, &f.params, &mut seeded(0));
        let budget = f.params.treatment_budget;
        let optimal = vf.best_action(&state, f.params.horizon, budget).treated().next();
        let decision = Decision {
            graph: &f.graph,
            state: &state,
            params: &f.params,
            step: 1,
            slots: f.params.slots(budget),
            budget_left: budget,
            episode_key: 0,
        };
        let greedy = GreedyPolicy.allocate(&decision, &mut seeded(0)).treated().next();
        (greedy, optimal)
    }

    #[test]
    fn fixtures_behave_as_documented() {
        for f in [greedy_trap(), wait_and_see()] {
            assert_eq!(first_actions(&f), (f.greedy_first, f.optimal_first));
            let opt = optimal_value(&f.graph, &f.params, f.guard).unwrap().expected_sick_days();
            let greedy = exact_policy_eval(&f.graph, &f.params, &GreedyPolicy, f.guard).unwrap();
            assert!(opt < greedy.expected_sick_days - 1e-6);
        }
    }
}
