//! Sampling-free evaluation and control.
//!
//! [`exact_policy_eval`] pushes the full distribution over health states
//! through the dynamics. [`optimal_value`] solves the finite-horizon control
//! problem by memoized backward induction. [`chain_risk_analytic`] is the
//! closed form for `rho = 1` chains and serves as a cross-check of both.

mod control;
pub mod fixtures;
mod states;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Decision, EpidemicParams, HealthState, InitialInfection};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::policy::Policy;
use states::{Kernel, Masks, StableMap, MAX_ENCODED_NODES};

pub use control::{optimal_value, OptimalPolicy, ValueFunction};

pub const EVAL_GUARD: usize = 12;
pub const CONTROL_GUARD: usize = 9;
pub const DOMINANCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RiskSource {
    Exact,
    Analytic,
    MonteCarlo { samples: usize },
}

impl RiskSource {
    pub fn label(&self) -> &'static str {
        match self {
            RiskSource::Exact => "exact",
            RiskSource::Analytic => "analytic",
            RiskSource::MonteCarlo { .. } => "monte_carlo",
        }
    }
}

/// Per-node probability of ever being infected, plus expected sick days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskProfile {
    pub p_infected: Vec<f64>,
    pub sick_days: Vec<f64>,
    pub expected_sick_days: f64,
    pub source: RiskSource,
}

impl RiskProfile {
    pub fn len(&self) -> usize {
        self.p_infected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_infected.is_empty()
    }

    pub fn mean_risk(&self) -> f64 {
        self.p_infected.iter().sum::<f64>() / self.len() as f64
    }

    pub fn spread(&self) -> f64 {
        let max = self.p_infected.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.p_infected.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// CSV with columns `node,p_infected,expected_sick_days_share,source`;
    /// the share column holds each node's expected sick days.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["node", "p_infected", "expected_sick_days_share", "source"])?;
        for v in 0..self.len() {
            w.write_record([
                v.to_string(),
                self.p_infected[v].to_string(),
                self.sick_days[v].to_string(),
                self.source.label().to_string(),
            ])?;
        }
        crate::error::finish_csv(w)
    }
}

/// `a` dominates `b` when no node is worse off and at least one is strictly better.
pub fn dominates(a: &RiskProfile, b: &RiskProfile) -> Result<bool> {
    dominates_within(&a.p_infected, &b.p_infected, DOMINANCE_TOLERANCE)
}

pub fn dominates_within(a: &[f64], b: &[f64], tolerance: f64) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!("profile lengths differ: {} vs {}", a.len(), b.len())));
    }
    let no_worse = a.iter().zip(b).all(|(x, y)| *x <= y + tolerance);
    let some_better = a.iter().zip(b).any(|(x, y)| *x < y - tolerance);
    Ok(no_worse && some_better)
}

/// Closed-form risk on a `rho = 1` chain of `n` nodes seeded at `initial`
/// with `treated` immunised before seeding.
pub fn chain_risk_analytic(n: usize, tau: f64, treated: Option<NodeId>, initial: NodeId) -> RiskProfile {
    let p_infected: Vec<f64> = (0..n)
        .map(|j| {
            let blocked = treated.is_some_and(|k| (initial.min(j)..=initial.max(j)).contains(&k));
            if blocked { 0.0 } else { tau.powi(initial.abs_diff(j) as i32) }
        })
        .collect();
    let expected_sick_days = p_infected.iter().sum();
    RiskProfile { sick_days: p_infected.clone(), p_infected, expected_sick_days, source: RiskSource::Analytic }
}

pub(crate) fn check_guard(graph: &Graph, guard: usize) -> Result<()> {
    let n = graph.num_nodes();
    if n > guard || n > MAX_ENCODED_NODES {
        return Err(Error::GuardExceeded { num_nodes: n, guard: guard.min(MAX_ENCODED_NODES) });
    }
    Ok(())
}

/// Initial distribution over (state, budget) after seeding, with the seeding step's marginals.
pub(crate) fn seeded_distribution(
    graph: &Graph,
    params: &EpidemicParams,
    pre: &HealthState,
) -> Vec<(Masks, f64)> {
    let n = graph.num_nodes();
    let base = Masks::encode(pre);
    let seed_sets: Vec<(Vec<NodeId>, f64)> = match &params.initial_infection {
        InitialInfection::UniformRandomSingle => (0..n).map(|v| (vec![v], 1.0 / n as f64)).collect(),
        InitialInfection::Explicit(seeds) => vec![(seeds.clone(), 1.0)],
    };
    seed_sets
        .into_iter()
        .map(|(seeds, p)| {
            let s = base.susceptible(n);
            let seeded = seeds.iter().fold(0u32, |m, &v| m | (1 << v)) & s;
            (Masks { infected: base.infected | seeded, removed: base.removed }, p)
        })
        .collect()
}

/// Diagnostics of one exact propagation.
#[derive(Debug, Clone)]
pub struct ExactRun {
    pub profile: RiskProfile,
    /// Total probability mass (live + absorbed) after each step.
    pub mass: Vec<f64>,
    pub steps: usize,
}

pub fn exact_policy_eval(
    graph: &Graph,
    params: &EpidemicParams,
    policy: &dyn Policy,
    guard: usize,
) -> Result<RiskProfile> {
    exact_run(graph, params, &HealthState::susceptible(graph.num_nodes()), policy, guard).map(|r| r.profile)
}

/// Exact evaluation from a pre-seeding state (e.g. with preemptive treatments applied).
pub fn exact_policy_eval_from(
    graph: &Graph,
    params: &EpidemicParams,
    pre: &HealthState,
    policy: &dyn Policy,
    guard: usize,
) -> Result<RiskProfile> {
    exact_run(graph, params, pre, policy, guard).map(|r| r.profile)
}

pub fn exact_run(
    graph: &Graph,
    params: &EpidemicParams,
    pre: &HealthState,
    policy: &dyn Policy,
    guard: usize,
) -> Result<ExactRun> {
    check_guard(graph, guard)?;
    let n = graph.num_nodes();
    params.validate(n)?;
    if pre.len() != n {
        return Err(Error::InvalidParameter("pre-seeding state length mismatch".into()));
    }
    let kernel = Kernel::new(graph, params.tau, params.rho);
    let mut p_infected = vec![0.0; n];
    let mut sick_days = vec![0.0; n];
    let mut absorbed = 0.0;

    const UNLIMITED: u32 = u32::MAX;
    let start_budget = params.treatment_budget.map_or(UNLIMITED, |b| b as u32);
    let mut live: StableMap<(Masks, u32), f64> = StableMap::default();
    for (masks, p) in seeded_distribution(graph, params, pre) {
        for v in (0..n).filter(|v| masks.infected >> v & 1 == 1) {
            sick_days[v] += p;
            p_infected[v] += p;
        }
        if masks.infected == 0 {
            absorbed += p;
        } else {
            *live.entry((masks, start_budget)).or_insert(0.0) += p;
        }
    }

    let mut mass = vec![absorbed + live.values().sum::<f64>()];
    let mut steps = 0;
    for t in 1..=params.horizon {
        if live.is_empty() {
            break;
        }
        steps = t;
        let mut next: StableMap<(Masks, u32), f64> = StableMap::default();
        let mut entries: Vec<_> = live.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        for ((masks, budget), p) in entries {
            let state = masks.decode(n);
            let budget_left = (budget != UNLIMITED).then_some(budget as usize);
            let slots = params.slots(budget_left);
            let decision =
                Decision { graph, state: &state, params, step: t, slots, budget_left, episode_key: 0 };
            let dist = policy.distribution(&decision).ok_or_else(|| Error::NotExactlyEvaluable(policy.name()))?;
            for (allocation, w) in dist {
                allocation.validate(n, slots)?;
                let treat = allocation.treated().fold(0u32, |m, v| m | 1 << v);
                let after_treat = kernel.treat(masks, treat);
                let new_budget =
                    if budget == UNLIMITED { UNLIMITED } else { budget - allocation.num_treated() as u32 };
                let pw = p * w;
                let marg = kernel.marginals(after_treat);
                for &(v, q) in &marg.infection {
                    p_infected[v] += pw * q;
                }
                for &(v, q) in &marg.infected_after {
                    sick_days[v] += pw * q;
                }
                kernel.successors(after_treat, |succ, q| {
                    if succ.infected == 0 {
                        absorbed += pw * q;
                    } else {
                        *next.entry((succ, new_budget)).or_insert(0.0) += pw * q;
                    }
                });
            }
        }
        live = next;
        mass.push(absorbed + live.values().sum::<f64>());
    }
    let expected_sick_days = sick_days.iter().sum();
    Ok(ExactRun {
        profile: RiskProfile { p_infected, sick_days, expected_sick_days, source: RiskSource::Exact },
        mass,
        steps,
    })
}
