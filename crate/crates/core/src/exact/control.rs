//! Finite-horizon optimal control by memoized backward induction.
//!
//! `V(s, r, b)` is the minimal expected number of sick days accrued over the
//! next `r` steps from state `s` with `b` lifetime treatments left. Each step
//! costs the expected number of infected nodes at its end.

use std::sync::Mutex;

use super::states::{Kernel, Masks, StableMap};
use super::{check_guard, seeded_distribution};
use crate::dynamics::{Allocation, Decision, EpidemicParams, HealthState};
use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::policy::{combinations, Policy};
use crate::rng::SimRng;

const UNLIMITED: u32 = u32::MAX;
const TIE_TOLERANCE: f64 = 1e-12;

type Key = (Masks, u32, usize);

pub struct ValueFunction {
    graph: Graph,
    params: EpidemicParams,
    neighbor_masks: Vec<u32>,
    memo: StableMap<Key, (f64, Allocation)>,
}

impl std::fmt::Debug for ValueFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ValueFunction").field("states", &self.memo.len()).finish()
    }
}

/// Solves the control problem from the configured initial infection and
/// returns the memo table, which extends lazily to any further queries.
pub fn optimal_value(graph: &Graph, params: &EpidemicParams, guard: usize) -> Result<ValueFunction> {
    check_guard(graph, guard)?;
    params.validate(graph.num_nodes())?;
    let mut vf = ValueFunction {
        graph: graph.clone(),
        params: params.clone(),
        neighbor_masks: Kernel::new(graph, params.tau, params.rho).neighbor_masks,
        memo: StableMap::default(),
    };
    vf.expected_sick_days();
    Ok(vf)
}

impl ValueFunction {
    pub fn params(&self) -> &EpidemicParams {
        &self.params
    }

    pub fn num_states(&self) -> usize {
        self.memo.len()
    }

    fn start_budget(&self) -> u32 {
        self.params.treatment_budget.map_or(UNLIMITED, |b| b as u32)
    }

    fn encode_budget(budget: Option<usize>) -> u32 {
        budget.map_or(UNLIMITED, |b| b as u32)
    }

    /// Optimal expected total sick days over the horizon, seeding day included.
    pub fn expected_sick_days(&mut self) -> f64 {
        let n = self.graph.num_nodes();
        let pre = HealthState::susceptible(n);
        let start = self.start_budget();
        let horizon = self.params.horizon;
        seeded_distribution(&self.graph, &self.params, &pre)
            .into_iter()
            .map(|(m, p)| p * (m.infected.count_ones() as f64 + self.solve(m, start, horizon).0))
            .sum()
    }

    /// Optimal expected sick days over the next `remaining` steps from `state`.
    pub fn value(&mut self, state: &HealthState, remaining: usize, budget: Option<usize>) -> f64 {
        self.solve(Masks::encode(state), Self::encode_budget(budget), remaining).0
    }

    pub fn best_action(&mut self, state: &HealthState, remaining: usize, budget: Option<usize>) -> Allocation {
        self.solve(Masks::encode(state), Self::encode_budget(budget), remaining).1
    }

    /// Expected sick days of every candidate first action, followed by optimal play.
    pub fn action_values(
        &mut self,
        state: &HealthState,
        remaining: usize,
        budget: Option<usize>,
    ) -> Vec<(Allocation, f64)> {
        let masks = Masks::encode(state);
        let budget = Self::encode_budget(budget);
        self.candidates(masks, budget)
            .into_iter()
            .map(|a| {
                let q = self.q_value(masks, budget, remaining, &a);
                (a, q)
            })
            .collect()
    }

    fn slots(&self, budget: u32) -> usize {
        let left = (budget != UNLIMITED).then_some(budget as usize);
        self.params.slots(left)
    }

    /// Idle first, then subsets of susceptible nodes in lexicographic order.
    fn candidates(&self, masks: Masks, budget: u32) -> Vec<Allocation> {
        let n = self.graph.num_nodes();
        let slots = self.slots(budget);
        let s = masks.susceptible(n);
        let pool: Vec<NodeId> = (0..n).filter(|v| s >> v & 1 == 1).collect();
        let mut out = vec![Allocation::idle(slots)];
        for k in 1..=slots.min(pool.len()) {
            for subset in combinations(&pool, k) {
                let mut slots_vec: Vec<Option<NodeId>> = subset.into_iter().map(Some).collect();
                slots_vec.resize(slots, None);
                out.push(Allocation::from_slots(slots_vec));
            }
        }
        out
    }

    fn kernel(&self) -> Kernel<'_> {
        Kernel { graph: &self.graph, neighbor_masks: self.neighbor_masks.clone(), tau: self.params.tau, rho: self.params.rho }
    }

    fn q_value(&mut self, masks: Masks, budget: u32, remaining: usize, action: &Allocation) -> f64 {
        let treat = action.treated().fold(0u32, |m, v| m | 1 << v);
        let new_budget = if budget == UNLIMITED { UNLIMITED } else { budget - action.num_treated() as u32 };
        let mut successors = Vec::new();
        {
            let kernel = self.kernel();
            let after = kernel.treat(masks, treat);
            kernel.successors(after, |next, p| successors.push((next, p)));
        }
        successors
            .into_iter()
            .map(|(next, p)| p * (next.infected.count_ones() as f64 + self.solve(next, new_budget, remaining - 1).0))
            .sum()
    }

    fn solve(&mut self, masks: Masks, budget: u32, remaining: usize) -> (f64, Allocation) {
        if remaining == 0 || masks.infected == 0 {
            return (0.0, Allocation::idle(self.slots(budget)));
        }
        let key = (masks, budget, remaining);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let mut best: Option<(f64, Allocation)> = None;
        for action in self.candidates(masks, budget) {
            let q = self.q_value(masks, budget, remaining, &action);
            if best.as_ref().is_none_or(|(b, _)| q < b - TIE_TOLERANCE) {
                best = Some((q, action));
            }
        }
        let best = best.expect("idle is always a candidate");
        self.memo.insert(key, best.clone());
        best
    }
}

/// Executes the optimal action of a [`ValueFunction`], extending it on demand.
pub struct OptimalPolicy {
    values: Mutex<ValueFunction>,
}

impl OptimalPolicy {
    pub fn new(values: ValueFunction) -> Self {
        Self { values: Mutex::new(values) }
    }
}

impl Policy for OptimalPolicy {
    fn name(&self) -> String {
        "optimal".into()
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn allocate(&self, decision: &Decision<'_>, _rng: &mut SimRng) -> Allocation {
        let mut values = self.values.lock().expect("value table lock");
        let remaining = values.params.horizon.saturating_sub(decision.step - 1);
        let action = values.best_action(decision.state, remaining, decision.budget_left);
        let mut slots: Vec<Option<NodeId>> = action.treated().take(decision.slots).map(Some).collect();
        slots.resize(decision.slots, None);
        Allocation::from_slots(slots)
    }
}
