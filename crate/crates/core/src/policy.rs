//! Allocation policies.
//!
//! A [`Policy`] maps a [`Decision`] to an [`Allocation`]; randomness comes only
//! from the caller's stream. Policies that can enumerate their allocation
//! distribution also expose it through [`Policy::distribution`], which is what
//! the exact evaluator consumes.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{infection_probability, Allocation, Compartment, Decision};
use crate::error::{Error, Result};
use crate::graph::{CentralityScores, NodeId};
use crate::rng::{self, splitmix64, SimRng};

pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    fn is_deterministic(&self) -> bool;

    fn allocate(&self, decision: &Decision<'_>, rng: &mut SimRng) -> Allocation;

    /// Exact distribution over allocations, if the policy can enumerate it.
    ///
    /// Must not depend on `decision.episode_key`.
    fn distribution(&self, decision: &Decision<'_>) -> Option<Vec<(Allocation, f64)>> {
        self.is_deterministic().then(|| vec![(self.allocate(decision, &mut rng::seeded(0)), 1.0)])
    }
}

/// Never treats anyone.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullPolicy;

impl Policy for NullPolicy {
    fn name(&self) -> String {
        "null".into()
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn allocate(&self, decision: &Decision<'_>, _rng: &mut SimRng) -> Allocation {
        Allocation::idle(decision.slots)
    }
}

pub fn null_policy() -> NullPolicy {
    NullPolicy
}

/// Uniform allocation without replacement.
///
/// By default draws from every node, so treatments may be wasted on `I`/`R`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy {
    pub susceptible_only: bool,
}

impl RandomPolicy {
    fn candidates(&self, decision: &Decision<'_>) -> Vec<NodeId> {
        (0..decision.graph.num_nodes())
            .filter(|&v| !self.susceptible_only || decision.state.is(v, Compartment::S))
            .collect()
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        if self.susceptible_only { "random_susceptible".into() } else { "random".into() }
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn allocate(&self, decision: &Decision<'_>, rng: &mut SimRng) -> Allocation {
        let pool = self.candidates(decision);
        let take = decision.slots.min(pool.len());
        let mut slots: Vec<Option<NodeId>> =
            index::sample(rng, pool.len(), take).into_iter().map(|i| Some(pool[i])).collect();
        slots.resize(decision.slots, None);
        Allocation::from_slots(slots)
    }

    fn distribution(&self, decision: &Decision<'_>) -> Option<Vec<(Allocation, f64)>> {
        let pool = self.candidates(decision);
        let take = decision.slots.min(pool.len());
        let subsets = combinations(&pool, take);
        let w = 1.0 / subsets.len() as f64;
        Some(subsets.into_iter().map(|s| (Allocation::from_nodes(s), w)).collect())
    }
}

pub fn random_policy() -> RandomPolicy {
    RandomPolicy::default()
}

/// All `k`-subsets of `items`, lexicographic.
pub(crate) fn combinations(items: &[NodeId], k: usize) -> Vec<Vec<NodeId>> {
    fn go(items: &[NodeId], k: usize, start: usize, cur: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::new(), &mut out);
    out
}

const SCORE_TIE_TOLERANCE: f64 = 1e-9;

/// Treats the most central susceptible nodes first.
///
/// Scores within a relative `1e-9` of each other form a tie group; inside a
/// group the order is a fresh uniform permutation each episode.
#[derive(Debug, Clone)]
pub struct CentralityPolicy {
    scores: CentralityScores,
    /// Tie-group rank per node, 0 for the most central group.
    rank: Vec<usize>,
    pub susceptible_only: bool,
}

impl CentralityPolicy {
    pub fn new(scores: CentralityScores) -> Self {
        let n = scores.len();
        let mut order: Vec<NodeId> = (0..n).collect();
        order.sort_by(|&a, &b| scores.scores[b].total_cmp(&scores.scores[a]).then(a.cmp(&b)));
        let mut rank = vec![0; n];
        let mut group = 0;
        for w in 1..n {
            let (prev, cur) = (scores.scores[order[w - 1]], scores.scores[order[w]]);
            if (prev - cur).abs() > SCORE_TIE_TOLERANCE * prev.abs().max(1.0) {
                group += 1;
            }
            rank[order[w]] = group;
        }
        Self { scores, rank, susceptible_only: true }
    }

    pub fn scores(&self) -> &CentralityScores {
        &self.scores
    }

    fn eligible(&self, decision: &Decision<'_>) -> Vec<NodeId> {
        (0..self.rank.len())
            .filter(|&v| !self.susceptible_only || decision.state.is(v, Compartment::S))
            .collect()
    }

    fn has_ties(&self) -> bool {
        let mut seen = vec![false; self.rank.len()];
        self.rank.iter().any(|&r| std::mem::replace(&mut seen[r], true))
    }
}

impl Policy for CentralityPolicy {
    fn name(&self) -> String {
        format!("{}_first", self.scores.measure.name())
    }

    fn is_deterministic(&self) -> bool {
        !self.has_ties()
    }

    fn allocate(&self, decision: &Decision<'_>, _rng: &mut SimRng) -> Allocation {
        let mut pool = self.eligible(decision);
        let key = |v: NodeId| (self.rank[v], splitmix64(decision.episode_key ^ splitmix64(v as u64)));
        pool.sort_by_key(|&v| key(v));
        let mut slots: Vec<Option<NodeId>> = pool.into_iter().take(decision.slots).map(Some).collect();
        slots.resize(decision.slots, None);
        Allocation::from_slots(slots)
    }

    /// Exact only when no tie group straddles the cut-off.
    fn distribution(&self, decision: &Decision<'_>) -> Option<Vec<(Allocation, f64)>> {
        let mut pool = self.eligible(decision);
        pool.sort_by_key(|&v| (self.rank[v], v));
        let take = decision.slots.min(pool.len());
        if take > 0 && take < pool.len() && self.rank[pool[take - 1]] == self.rank[pool[take]] {
            return None;
        }
        let mut slots: Vec<Option<NodeId>> = pool.into_iter().take(take).map(Some).collect();
        slots.resize(decision.slots, None);
        Some(vec![(Allocation::from_slots(slots), 1.0)])
    }
}

pub fn centrality_policy(scores: CentralityScores) -> CentralityPolicy {
    CentralityPolicy::new(scores)
}

/// Minimizes the exact expected number of infections in the coming transmission phase.
///
/// By linearity that expectation is the sum of per-node infection
/// probabilities, so the greedy choice is the susceptible frontier nodes with
/// the largest infection probability (smallest index on ties). Slots with no
/// frontier node to protect stay idle.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyPolicy;

impl GreedyPolicy {
    /// Expected newly infected after applying `allocation` at `decision`.
    pub fn one_step_expectation(decision: &Decision<'_>, allocation: &Allocation) -> f64 {
        let treated: Vec<NodeId> = allocation.treated().collect();
        decision
            .state
            .nodes_in(Compartment::S)
            .filter(|v| !treated.contains(v))
            .map(|v| infection_probability(decision.state.infected_neighbors(decision.graph, v), decision.params.tau))
            .sum()
    }
}

impl Policy for GreedyPolicy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn allocate(&self, decision: &Decision<'_>, _rng: &mut SimRng) -> Allocation {
        let tau = decision.params.tau;
        let mut frontier: Vec<(f64, NodeId)> = decision
            .state
            .nodes_in(Compartment::S)
            .map(|v| (infection_probability(decision.state.infected_neighbors(decision.graph, v), tau), v))
            .filter(|&(p, _)| p > 0.0)
            .collect();
        frontier.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut slots: Vec<Option<NodeId>> =
            frontier.into_iter().take(decision.slots).map(|(_, v)| Some(v)).collect();
        slots.resize(decision.slots, None);
        Allocation::from_slots(slots)
    }
}

pub fn greedy_policy() -> GreedyPolicy {
    GreedyPolicy
}

/// Treats a fixed set of nodes at one step and nothing otherwise.
#[derive(Debug, Clone)]
pub struct ScheduledPolicy {
    pub step: usize,
    pub nodes: Vec<NodeId>,
}

impl Policy for ScheduledPolicy {
    fn name(&self) -> String {
        format!("scheduled@{}", self.step)
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn allocate(&self, decision: &Decision<'_>, _rng: &mut SimRng) -> Allocation {
        if decision.step == self.step {
            let mut slots: Vec<Option<NodeId>> =
                self.nodes.iter().take(decision.slots).copied().map(Some).collect();
            slots.resize(decision.slots, None);
            Allocation::from_slots(slots)
        } else {
            Allocation::idle(decision.slots)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// Identity of the single infected node at the first decision.
    FirstInfected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub treat: Option<NodeId>,
    pub w: f64,
}

/// Per-trigger distributions over single treatments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub trigger: Trigger,
    pub rows: BTreeMap<NodeId, Vec<TableEntry>>,
}

pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

impl ConditionalTable {
    pub fn new(rows: BTreeMap<NodeId, Vec<TableEntry>>) -> Result<Self> {
        let table = Self { trigger: Trigger::FirstInfected, rows };
        table.validate()?;
        Ok(table)
    }

    /// Deterministic table: trigger `i` treats `choice[i]`.
    pub fn pure(choice: &[Option<NodeId>]) -> Self {
        let rows = choice.iter().enumerate().map(|(i, &t)| (i, vec![TableEntry { treat: t, w: 1.0 }])).collect();
        Self { trigger: Trigger::FirstInfected, rows }
    }

    pub fn validate(&self) -> Result<()> {
        for (trigger, row) in &self.rows {
            if row.is_empty() {
                return Err(Error::InvalidTable(format!("row {trigger} is empty")));
            }
            if let Some(e) = row.iter().find(|e| !e.w.is_finite() || e.w < 0.0) {
                return Err(Error::InvalidTable(format!("row {trigger} has weight {}", e.w)));
            }
            let sum: f64 = row.iter().map(|e| e.w).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidTable(format!("row {trigger} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialization is infallible")
    }
}

/// Executes a [`ConditionalTable`]: at step 1, if exactly one node is infected,
/// samples a treatment from that node's row; idle otherwise.
#[derive(Debug, Clone)]
pub struct TablePolicy {
    table: ConditionalTable,
}

impl TablePolicy {
    pub fn new(table: ConditionalTable, num_nodes: usize) -> Result<Self> {
        table.validate()?;
        if let Some(missing) = (0..num_nodes).find(|v| !table.rows.contains_key(v)) {
            return Err(Error::InvalidTable(format!("no row for trigger node {missing}")));
        }
        for row in table.rows.values() {
            if let Some(t) = row.iter().filter_map(|e| e.treat).find(|&t| t >= num_nodes) {
                return Err(Error::NodeOutOfRange { node: t, num_nodes });
            }
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &ConditionalTable {
        &self.table
    }

    fn row(&self, decision: &Decision<'_>) -> Option<&[TableEntry]> {
        if decision.step != 1 || decision.slots == 0 {
            return None;
        }
        let mut infected = decision.state.nodes_in(Compartment::I);
        let first = infected.next()?;
        if infected.next().is_some() {
            return None;
        }
        self.table.rows.get(&first).map(Vec::as_slice)
    }
}

fn entry_allocation(entry: &TableEntry, slots: usize) -> Allocation {
    let mut s = vec![entry.treat];
    s.resize(slots.max(1), None);
    Allocation::from_slots(s)
}

impl Policy for TablePolicy {
    fn name(&self) -> String {
        "table".into()
    }

    fn is_deterministic(&self) -> bool {
        self.table.rows.values().all(|row| row.iter().filter(|e| e.w > 0.0).count() <= 1)
    }

    fn allocate(&self, decision: &Decision<'_>, rng: &mut SimRng) -> Allocation {
        let Some(row) = self.row(decision) else {
            return Allocation::idle(decision.slots);
        };
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = row.last().unwrap();
        for entry in row.iter().filter(|e| e.w > 0.0) {
            acc += entry.w;
            chosen = entry;
            if u < acc {
                break;
            }
        }
        entry_allocation(chosen, decision.slots)
    }

    fn distribution(&self, decision: &Decision<'_>) -> Option<Vec<(Allocation, f64)>> {
        Some(match self.row(decision) {
            None => vec![(Allocation::idle(decision.slots), 1.0)],
            Some(row) => {
                row.iter().filter(|e| e.w > 0.0).map(|e| (entry_allocation(e, decision.slots), e.w)).collect()
            }
        })
    }
}

pub fn table_policy(table: ConditionalTable, num_nodes: usize) -> Result<TablePolicy> {
    TablePolicy::new(table, num_nodes)
}
