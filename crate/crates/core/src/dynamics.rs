//! Discrete-time SIR dynamics with preventative treatments.
//!
//! One step runs three synchronous phases in a fixed order:
//!
//! 1. treat: allocated susceptible nodes move to `R`; treating `I`/`R` is wasted,
//! 2. transmit: each remaining `S` node becomes `I` with probability
//!    `1 - (1 - tau)^k`, `k` its infected neighbours at the start of the phase,
//! 3. recover: nodes infected at the start of phase 2 move to `R` with probability `rho`.
//!
//! Nodes infected in phase 2 cannot recover in the same step. A node accrues
//! one sick day for every step (seeding included) that ends with it infected.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::policy::Policy;
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compartment {
    S,
    I,
    R,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HealthState(Vec<Compartment>);

impl HealthState {
    pub fn susceptible(num_nodes: usize) -> Self {
        Self(vec![Compartment::S; num_nodes])
    }

    pub fn from_compartments(compartments: Vec<Compartment>) -> Self {
        Self(compartments)
    }

    /// Parses a compact string such as `"ISR"`.
    pub fn parse(text: &str) -> Result<Self> {
        text.chars()
            .map(|c| match c {
                'S' => Ok(Compartment::S),
                'I' => Ok(Compartment::I),
                'R' => Ok(Compartment::R),
                other => Err(Error::InvalidParameter(format!("unknown compartment `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, node: NodeId) -> Compartment {
        self.0[node]
    }

    pub fn set(&mut self, node: NodeId, compartment: Compartment) {
        self.0[node] = compartment;
    }

    pub fn compartments(&self) -> &[Compartment] {
        &self.0
    }

    pub fn is(&self, node: NodeId, compartment: Compartment) -> bool {
        self.0[node] == compartment
    }

    pub fn count(&self, compartment: Compartment) -> usize {
        self.0.iter().filter(|&&c| c == compartment).count()
    }

    pub fn nodes_in(&self, compartment: Compartment) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().enumerate().filter(move |(_, &c)| c == compartment).map(|(v, _)| v)
    }

    pub fn has_infected(&self) -> bool {
        self.0.contains(&Compartment::I)
    }

    pub fn infected_neighbors(&self, graph: &Graph, node: NodeId) -> usize {
        graph.neighbors(node).iter().filter(|&&w| self.0[w] == Compartment::I).count()
    }
}

impl std::fmt::Display for HealthState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.0 {
            let ch = match c {
                Compartment::S => 'S',
                Compartment::I => 'I',
                Compartment::R => 'R',
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialInfection {
    /// One node drawn uniformly at random.
    UniformRandomSingle,
    Explicit(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    pub tau: f64,
    pub rho: f64,
    pub treatments_per_step: usize,
    pub horizon: usize,
    pub initial_infection: InitialInfection,
    /// Optional cap on treatments over a whole episode.
    #[serde(default)]
    pub treatment_budget: Option<usize>,
}

impl EpidemicParams {
    pub fn new(tau: f64, rho: f64, treatments_per_step: usize, horizon: usize) -> Self {
        Self {
            tau,
            rho,
            treatments_per_step,
            horizon,
            initial_infection: InitialInfection::UniformRandomSingle,
            treatment_budget: None,
        }
    }

    pub fn with_seeds(mut self, seeds: Vec<NodeId>) -> Self {
        self.initial_infection = InitialInfection::Explicit(seeds);
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.treatment_budget = Some(budget);
        self
    }

    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        for (name, p) in [("tau", self.tau), ("rho", self.rho)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if let InitialInfection::Explicit(seeds) = &self.initial_infection {
            if let Some(&bad) = seeds.iter().find(|&&v| v >= num_nodes) {
                return Err(Error::NodeOutOfRange { node: bad, num_nodes });
            }
        }
        if num_nodes == 0 {
            return Err(Error::InvalidParameter("graph has no nodes".into()));
        }
        Ok(())
    }

    /// Treatment slots usable at a step given what is left of the lifetime budget.
    pub fn slots(&self, remaining: Option<usize>) -> usize {
        remaining.map_or(self.treatments_per_step, |r| r.min(self.treatments_per_step))
    }
}

/// Up to `N_t` treatment slots; `None` is a deliberately unused slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(Vec<Option<NodeId>>);

impl Allocation {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn idle(slots: usize) -> Self {
        Self(vec![None; slots])
    }

    pub fn single(node: NodeId) -> Self {
        Self(vec![Some(node)])
    }

    pub fn from_nodes(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        Self(nodes.into_iter().map(Some).collect())
    }

    pub fn from_slots(slots: Vec<Option<NodeId>>) -> Self {
        Self(slots)
    }

    pub fn slots(&self) -> &[Option<NodeId>] {
        &self.0
    }

    pub fn treated(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().flatten().copied()
    }

    pub fn num_treated(&self) -> usize {
        self.0.iter().flatten().count()
    }

    pub fn is_idle(&self) -> bool {
        self.num_treated() == 0
    }

    /// Checks slot count, index range and uniqueness.
    pub fn validate(&self, num_nodes: usize, max_slots: usize) -> Result<()> {
        if self.num_treated() > max_slots {
            return Err(Error::InvalidAllocation(format!(
                "{} treatments exceed the {max_slots} available",
                self.num_treated()
            )));
        }
        let mut seen = BTreeSet::new();
        for v in self.treated() {
            if v >= num_nodes {
                return Err(Error::NodeOutOfRange { node: v, num_nodes });
            }
            if !seen.insert(v) {
                return Err(Error::InvalidAllocation(format!("node {v} allocated twice")));
            }
        }
        Ok(())
    }
}

/// Probability that a susceptible node with `infected_neighbors` infected contacts is infected.
pub fn infection_probability(infected_neighbors: usize, tau: f64) -> f64 {
    if infected_neighbors == 0 {
        0.0
    } else {
        1.0 - (1.0 - tau).powi(infected_neighbors as i32)
    }
}

pub(crate) fn bernoulli(rng: &mut SimRng, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.gen::<f64>() < p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: HealthState,
    pub newly_infected: Vec<NodeId>,
}

/// One treat-transmit-recover step.
pub fn step(
    graph: &Graph,
    state: &HealthState,
    params: &EpidemicParams,
    allocation: &Allocation,
    rng: &mut SimRng,
) -> Result<StepOutcome> {
    let n = graph.num_nodes();
    if state.len() != n {
        return Err(Error::InvalidParameter(format!("state has {} nodes, graph {n}", state.len())));
    }
    allocation.validate(n, params.treatments_per_step)?;

    let mut current = state.clone();
    for v in allocation.treated() {
        if current.is(v, Compartment::S) {
            current.set(v, Compartment::R);
        }
    }

    let mut next = current.clone();
    let mut newly_infected = Vec::new();
    for v in current.nodes_in(Compartment::S) {
        let k = current.infected_neighbors(graph, v);
        if k > 0 && bernoulli(rng, infection_probability(k, params.tau)) {
            next.set(v, Compartment::I);
            newly_infected.push(v);
        }
    }
    for v in current.nodes_in(Compartment::I) {
        if bernoulli(rng, params.rho) {
            next.set(v, Compartment::R);
        }
    }
    Ok(StepOutcome { state: next, newly_infected })
}

/// Everything that happened in one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    /// State at the end of each step; index 0 is the state right after seeding.
    pub states: Vec<HealthState>,
    /// Allocation applied at step `t` is stored at index `t - 1`.
    pub allocations: Vec<Allocation>,
    pub seeded: Vec<NodeId>,
    /// Nodes infected at step `t` are stored at index `t - 1`.
    pub newly_infected: Vec<Vec<NodeId>>,
    pub ever_infected: Vec<bool>,
    pub per_node_sick_days: Vec<u32>,
    pub total_sick_days: u32,
}

impl EpisodeTrace {
    pub fn num_steps(&self) -> usize {
        self.allocations.len()
    }

    pub fn epidemic_size(&self) -> usize {
        self.ever_infected.iter().filter(|&&x| x).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serialization is infallible")
    }
}

/// What a policy sees when asked to allocate.
#[derive(Debug, Clone, Copy)]
pub struct Decision<'a> {
    pub graph: &'a Graph,
    pub state: &'a HealthState,
    pub params: &'a EpidemicParams,
    /// 1-based step index.
    pub step: usize,
    /// Treatments usable this step.
    pub slots: usize,
    /// Lifetime treatments left, when the episode is budgeted.
    pub budget_left: Option<usize>,
    /// Per-episode random key for tie-breaking.
    pub episode_key: u64,
}

/// Applies the initial infection to `state`; seeds already in `R` stay immune.
pub fn seed_infection(
    state: &mut HealthState,
    params: &EpidemicParams,
    rng: &mut SimRng,
) -> Vec<NodeId> {
    let candidates = match &params.initial_infection {
        InitialInfection::UniformRandomSingle => vec![rng.gen_range(0..state.len())],
        InitialInfection::Explicit(seeds) => seeds.clone(),
    };
    let mut seeded = Vec::new();
    for v in candidates {
        if state.is(v, Compartment::S) {
            state.set(v, Compartment::I);
            seeded.push(v);
        }
    }
    seeded
}

pub fn run_episode(
    graph: &Graph,
    params: &EpidemicParams,
    policy: &dyn Policy,
    rng: &mut SimRng,
) -> Result<EpisodeTrace> {
    run_episode_from(graph, params, HealthState::susceptible(graph.num_nodes()), policy, rng)
}

/// Runs an episode from a pre-seeding state, e.g. one with preemptively treated nodes.
pub fn run_episode_from(
    graph: &Graph,
    params: &EpidemicParams,
    mut state: HealthState,
    policy: &dyn Policy,
    rng: &mut SimRng,
) -> Result<EpisodeTrace> {
    let n = graph.num_nodes();
    params.validate(n)?;
    if state.len() != n {
        return Err(Error::InvalidParameter(format!("state has {} nodes, graph {n}", state.len())));
    }
    // Policy randomness gets its own stream so that dynamics draws line up
    // across policies that share an episode seed.
    let mut policy_rng = rng::seeded(rng.gen());
    let episode_key: u64 = rng.gen();
    let seeded = seed_infection(&mut state, params, rng);

    let mut ever_infected = vec![false; n];
    let mut sick_days = vec![0u32; n];
    for &v in &seeded {
        ever_infected[v] = true;
    }
    for v in state.nodes_in(Compartment::I) {
        sick_days[v] += 1;
    }

    let mut states = vec![state];
    let mut allocations = Vec::new();
    let mut newly = Vec::new();
    let mut remaining = params.treatment_budget;
    for t in 1..=params.horizon {
        let current = states.last().unwrap();
        if !current.has_infected() {
            break;
        }
        let slots = params.slots(remaining);
        let decision = Decision { graph, state: current, params, step: t, slots, budget_left: remaining, episode_key };
        let allocation = policy.allocate(&decision, &mut policy_rng);
        allocation.validate(n, slots)?;
        if let Some(r) = remaining.as_mut() {
            *r -= allocation.num_treated();
        }
        let outcome = step(graph, current, params, &allocation, rng)?;
        for &v in &outcome.newly_infected {
            ever_infected[v] = true;
        }
        for v in outcome.state.nodes_in(Compartment::I) {
            sick_days[v] += 1;
        }
        states.push(outcome.state);
        allocations.push(allocation);
        newly.push(outcome.newly_infected);
    }
    let total_sick_days = sick_days.iter().sum();
    Ok(EpisodeTrace {
        states,
        allocations,
        seeded,
        newly_infected: newly,
        ever_infected,
        per_node_sick_days: sick_days,
        total_sick_days,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_chain, make_star};
    use crate::policy::NullPolicy;

    fn forced(tau: f64, rho: f64) -> EpidemicParams {
        EpidemicParams::new(tau, rho, 1, 20)
    }

    #[test]
    fn infection_probability_examples() {
        assert_eq!(infection_probability(0, 0.9), 0.0);
        assert_eq!(infection_probability(1, 1.0), 1.0);
        assert_eq!(infection_probability(2, 0.5), 0.75);
    }

    #[test]
    fn forced_wave_step() {
        let g = make_chain(3);
        let mut rng = rng::seeded(1);
        let out = step(&g, &HealthState::parse("ISS").unwrap(), &forced(1.0, 1.0), &Allocation::idle(1), &mut rng)
            .unwrap();
        assert_eq!(out.state.to_string(), "RIS");
        assert_eq!(out.newly_infected, vec![1]);
    }

    #[test]
    fn treatment_blocks_the_only_path() {
        let g = make_chain(3);
        let mut rng = rng::seeded(1);
        let out = step(&g, &HealthState::parse("ISS").unwrap(), &forced(1.0, 1.0), &Allocation::single(1), &mut rng)
            .unwrap();
        assert_eq!(out.state.to_string(), "RRS");
        assert!(out.newly_infected.is_empty());
    }

    #[test]
    fn treating_an_infected_node_is_wasted() {
        let g = make_chain(3);
        let mut rng = rng::seeded(1);
        let start = HealthState::parse("IIR").unwrap();
        let out = step(&g, &start, &forced(0.3, 0.0), &Allocation::single(0), &mut rng).unwrap();
        assert_eq!(out.state, start);
        assert!(out.newly_infected.is_empty());
    }

    #[test]
    fn step_rejects_bad_allocations() {
        let g = make_chain(3);
        let mut rng = rng::seeded(1);
        let s = HealthState::parse("ISS").unwrap();
        assert!(step(&g, &s, &forced(1.0, 1.0), &Allocation::single(3), &mut rng).is_err());
        let two = Allocation::from_nodes([1, 2]);
        assert!(step(&g, &s, &forced(1.0, 1.0), &two, &mut rng).is_err());
        let mut wide = forced(1.0, 1.0);
        wide.treatments_per_step = 2;
        assert!(step(&g, &s, &wide, &Allocation::from_nodes([1, 1]), &mut rng).is_err());
    }

    #[test]
    fn deterministic_wave_on_chain() {
        let g = make_chain(3);
        let params = forced(1.0, 1.0).with_seeds(vec![0]);
        let trace = run_episode(&g, &params, &NullPolicy, &mut rng::seeded(5)).unwrap();
        assert_eq!(trace.total_sick_days, 3);
        assert_eq!(trace.ever_infected, vec![true; 3]);
    }

    #[test]
    fn no_transmission_means_one_sick_day() {
        let g = make_star(4);
        for seed in 0..20 {
            let params = forced(0.0, 1.0);
            let trace = run_episode(&g, &params, &NullPolicy, &mut rng::seeded(seed)).unwrap();
            assert_eq!(trace.total_sick_days, 1);
            assert_eq!(trace.epidemic_size(), 1);
        }
    }

    #[test]
    fn seeding_an_immune_node_does_nothing() {
        let g = make_chain(3);
        let params = forced(1.0, 1.0).with_seeds(vec![1]);
        let pre = HealthState::parse("SRS").unwrap();
        let trace = run_episode_from(&g, &params, pre, &NullPolicy, &mut rng::seeded(0)).unwrap();
        assert!(trace.seeded.is_empty());
        assert_eq!(trace.total_sick_days, 0);
        assert_eq!(trace.num_steps(), 0);
    }

    #[test]
    fn full_wave_lasts_eccentricity_plus_one_steps() {
        let g = make_chain(6);
        let params = forced(1.0, 1.0).with_seeds(vec![1]);
        let trace = run_episode(&g, &params, &NullPolicy, &mut rng::seeded(0)).unwrap();
        assert_eq!(trace.total_sick_days, 6);
        // eccentricity of node 1 is 4; states 0..=4 hold an infected node
        let infected_steps = trace.states.iter().filter(|s| s.has_infected()).count();
        assert_eq!(infected_steps, 5);
    }

    #[test]
    fn trace_json_uses_compartment_letters() {
        let g = make_chain(2);
        let params = forced(1.0, 1.0).with_seeds(vec![0]);
        let trace = run_episode(&g, &params, &NullPolicy, &mut rng::seeded(0)).unwrap();
        let json = trace.to_json();
        assert!(json.contains(r#"["I","S"]"#), "{json}");
    }

    #[test]
    fn params_validation() {
        assert!(EpidemicParams::new(1.5, 0.5, 1, 20).validate(3).is_err());
        assert!(EpidemicParams::new(0.5, -0.1, 1, 20).validate(3).is_err());
        assert!(EpidemicParams::new(0.5, 0.5, 1, 20).with_seeds(vec![3]).validate(3).is_err());
        assert!(EpidemicParams::new(0.5, 0.5, 1, 20).with_seeds(vec![2]).validate(3).is_ok());
    }
}
