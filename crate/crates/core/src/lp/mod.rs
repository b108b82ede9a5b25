//! Risk matrices and the linear programs built on them.
//!
//! A preemptive strategy picks (a distribution over) one node to immunise
//! before anyone is infected. A precision strategy observes the first patient
//! and then picks the treatment. Both are mixtures of pure choices, so every
//! node's risk is linear in the mixture weights and equalizing risks is a
//! linear program.

mod simplex;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use simplex::{solve_lp, LinearProgram, LpOutcome, FEASIBILITY_TOLERANCE};

use crate::dynamics::{Compartment, EpidemicParams, HealthState, InitialInfection};
use crate::error::{Error, Result};
use crate::exact::{chain_risk_analytic, exact_policy_eval, exact_policy_eval_from, RiskSource, EVAL_GUARD};
use crate::graph::{Graph, NodeId};
use crate::policy::{null_policy, ConditionalTable, ScheduledPolicy, TableEntry};

pub const EQUALIZE_TOLERANCE: f64 = 1e-6;
const TIE_TOLERANCE: f64 = 1e-12;
/// Weights below this are treated as solver noise and dropped.
const WEIGHT_FLOOR: f64 = 1e-12;

/// Pure choices are indexed `0..n` for "treat node k" and `n` for no treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskMatrix {
    pub num_nodes: usize,
    /// `preemptive[k][j]`: P(j ever infected | k immunised, uniform single seed).
    pub preemptive: Vec<Vec<f64>>,
    /// `precision[i][k][j]`: P(j ever infected | seed i, k treated at step 1).
    pub precision: Vec<Vec<Vec<f64>>>,
    pub source: RiskSource,
}

fn choice_label(k: usize, n: usize) -> String {
    if k == n { "none".into() } else { k.to_string() }
}

fn choice_treat(k: usize, n: usize) -> Option<NodeId> {
    (k < n).then_some(k)
}

fn check_params(graph: &Graph, params: &EpidemicParams) -> Result<()> {
    params.validate(graph.num_nodes())?;
    if params.treatments_per_step == 0 {
        return Err(Error::InvalidParameter("risk matrices need at least one treatment slot".into()));
    }
    Ok(())
}

/// Builds both matrices. Chains with `rho = 1` and a horizon long enough for
/// the epidemic to finish use the closed form; everything else goes through
/// the exact engine and is subject to `guard`.
pub fn build_risk_matrices(graph: &Graph, params: &EpidemicParams, guard: usize) -> Result<RiskMatrix> {
    check_params(graph, params)?;
    let n = graph.num_nodes();
    if graph.is_chain() && params.rho == 1.0 && params.horizon + 1 >= n {
        return Ok(analytic_chain(n, params.tau));
    }
    let uniform = EpidemicParams { initial_infection: InitialInfection::UniformRandomSingle, ..params.clone() };
    let preemptive = preemptive_rows(graph, &uniform, guard)?;
    let mut precision = Vec::with_capacity(n);
    for i in 0..n {
        let seeded = params.clone().with_seeds(vec![i]);
        let mut rows = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let row = if k == n || k == i {
                exact_policy_eval(graph, &seeded, &null_policy(), guard)?.p_infected
            } else {
                let policy = ScheduledPolicy { step: 1, nodes: vec![k] };
                exact_policy_eval(graph, &seeded, &policy, guard)?.p_infected
            };
            rows.push(row);
        }
        precision.push(rows);
    }
    Ok(RiskMatrix { num_nodes: n, preemptive, precision, source: RiskSource::Exact })
}

/// Exact risk profile for each single preemptive choice (row `n` is no
/// treatment), under the initial infection given in `params`.
pub fn preemptive_rows(graph: &Graph, params: &EpidemicParams, guard: usize) -> Result<Vec<Vec<f64>>> {
    check_params(graph, params)?;
    let n = graph.num_nodes();
    (0..=n)
        .map(|k| {
            let mut pre = HealthState::susceptible(n);
            if k < n {
                pre.set(k, Compartment::R);
            }
            Ok(exact_policy_eval_from(graph, params, &pre, &null_policy(), guard)?.p_infected)
        })
        .collect()
}

/// The row with the lowest mean risk, skipping `excluded` nodes (e.g. known
/// seeds, whose immunisation trivially stops everything); `None` means no
/// treatment. Ties go to the smallest index.
pub fn best_preemptive(rows: &[Vec<f64>], excluded: &[NodeId]) -> (Option<NodeId>, Vec<f64>) {
    let n = rows.len() - 1;
    let scores = rows
        .iter()
        .enumerate()
        .map(|(k, r)| if k < n && excluded.contains(&k) { f64::INFINITY } else { mean(r) });
    let (k, _) = argmin_first(scores);
    (choice_treat(k, n), rows[k].clone())
}

/// [`build_risk_matrices`] with the default exact-evaluation guard.
pub fn risk_matrices(graph: &Graph, params: &EpidemicParams) -> Result<RiskMatrix> {
    build_risk_matrices(graph, params, EVAL_GUARD)
}

fn analytic_chain(n: usize, tau: f64) -> RiskMatrix {
    let profile = |treated, i| chain_risk_analytic(n, tau, treated, i).p_infected;
    let preemptive = (0..=n)
        .map(|k| {
            let mut avg = vec![0.0; n];
            for i in 0..n {
                for (a, p) in avg.iter_mut().zip(profile(choice_treat(k, n), i)) {
                    *a += p / n as f64;
                }
            }
            avg
        })
        .collect();
    let precision = (0..n)
        .map(|i| (0..=n).map(|k| profile(choice_treat(k, n).filter(|&k| k != i), i)).collect())
        .collect();
    RiskMatrix { num_nodes: n, preemptive, precision, source: RiskSource::Analytic }
}

impl RiskMatrix {
    pub fn no_treatment_profile(&self) -> &[f64] {
        &self.preemptive[self.num_nodes]
    }

    /// Unconditional risk under a precision table given as weight rows.
    pub fn precision_risk(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let n = self.num_nodes;
        let mut r = vec![0.0; n];
        for (i, row) in rows.iter().enumerate() {
            for (k, &w) in row.iter().enumerate() {
                for (j, rj) in r.iter_mut().enumerate() {
                    *rj += w * self.precision[i][k][j] / n as f64;
                }
            }
        }
        r
    }

    pub fn preemptive_risk(&self, weights: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.num_nodes];
        for (k, &w) in weights.iter().enumerate() {
            for (rj, q) in r.iter_mut().zip(&self.preemptive[k]) {
                *rj += w * q;
            }
        }
        r
    }

    /// `k,j,value` dump of the preemptive matrix; `k = none` is no treatment.
    pub fn preemptive_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "j", "value"])?;
        for (k, row) in self.preemptive.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                w.write_record([choice_label(k, self.num_nodes), j.to_string(), v.to_string()])?;
            }
        }
        crate::error::finish_csv(w)
    }

    /// `i,k,j,value` dump of the precision tensor.
    pub fn precision_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["i", "k", "j", "value"])?;
        for (i, block) in self.precision.iter().enumerate() {
            for (k, row) in block.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    w.write_record([i.to_string(), choice_label(k, self.num_nodes), j.to_string(), v.to_string()])?;
                }
            }
        }
        crate::error::finish_csv(w)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn argmin_first(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, v) in values.into_iter().enumerate() {
        if v < best.1 - TIE_TOLERANCE {
            best = (k, v);
        }
    }
    best
}

/// Convex weights over pure choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedStrategy {
    Preemptive { weights: Vec<TableEntry> },
    Precision { table: ConditionalTable },
}

impl MixedStrategy {
    pub fn validate(&self) -> Result<()> {
        match self {
            MixedStrategy::Preemptive { weights } => {
                ConditionalTable::new(BTreeMap::from([(0, weights.clone())])).map(|_| ())
            }
            MixedStrategy::Precision { table } => table.validate(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("strategy serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// `initial,treat,weight` rows; preemptive strategies use `initial = any`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["initial", "treat", "weight"])?;
        let label = |t: Option<NodeId>| t.map_or("none".to_string(), |t| t.to_string());
        match self {
            MixedStrategy::Preemptive { weights } => {
                for e in weights {
                    w.write_record(["any".to_string(), label(e.treat), e.w.to_string()])?;
                }
            }
            MixedStrategy::Precision { table } => {
                for (i, row) in &table.rows {
                    for e in row {
                        w.write_record([i.to_string(), label(e.treat), e.w.to_string()])?;
                    }
                }
            }
        }
        crate::error::finish_csv(w)
    }
}

fn entries_from_weights(weights: &[f64], n: usize) -> Vec<TableEntry> {
    let kept: Vec<(usize, f64)> =
        weights.iter().copied().enumerate().filter(|&(_, w)| w > WEIGHT_FLOOR).collect();
    let total: f64 = kept.iter().map(|e| e.1).sum();
    kept.into_iter().map(|(k, w)| TableEntry { treat: choice_treat(k, n), w: w / total }).collect()
}

fn dense_weights(entries: &[TableEntry], n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    for e in entries {
        w[e.treat.unwrap_or(n)] += e.w;
    }
    w
}

/// Result of a preemptive or precision LP, with the risk it induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedStrategy {
    pub strategy: MixedStrategy,
    pub risk: Vec<f64>,
    pub mean_risk: f64,
}

impl SolvedStrategy {
    pub fn spread(&self) -> f64 {
        let max = self.risk.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.risk.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// The precision strategy as an executable table, if it is one.
    pub fn table(&self) -> Option<&ConditionalTable> {
        match &self.strategy {
            MixedStrategy::Precision { table } => Some(table),
            MixedStrategy::Preemptive { .. } => None,
        }
    }

    /// `node,risk` rows.
    pub fn risk_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["node", "risk"])?;
        for (j, r) in self.risk.iter().enumerate() {
            w.write_record([j.to_string(), r.to_string()])?;
        }
        crate::error::finish_csv(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Equalized {
    Feasible(SolvedStrategy),
    Infeasible,
}

impl Equalized {
    pub fn feasible(self) -> Option<SolvedStrategy> {
        match self {
            Equalized::Feasible(s) => Some(s),
            Equalized::Infeasible => None,
        }
    }
}

/// Best single preemptive choice by mean risk; `None` means no treatment.
pub fn preemptive_optimal(matrix: &RiskMatrix) -> (Option<NodeId>, Vec<f64>) {
    best_preemptive(&matrix.preemptive, &[])
}

fn solved_or_infeasible(outcome: LpOutcome) -> Result<Option<Vec<f64>>> {
    match outcome {
        LpOutcome::Optimal { x, .. } => Ok(Some(x)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::NumericalBreakdown("bounded program reported unbounded".into())),
    }
}

/// Minimum mean risk over preemptive mixtures that give every node the same risk.
pub fn preemptive_equalize(matrix: &RiskMatrix) -> Result<Equalized> {
    let n = matrix.num_nodes;
    let r = &matrix.preemptive;
    let objective = (0..=n).map(|k| mean(&r[k])).collect();
    let mut lp = LinearProgram::new(objective);
    lp.add_eq(vec![1.0; n + 1], 1.0);
    for j in 1..n {
        lp.add_eq((0..=n).map(|k| r[k][j] - r[k][0]).collect(), 0.0);
    }
    let Some(x) = solved_or_infeasible(solve_lp(&lp)?)? else {
        return Ok(Equalized::Infeasible);
    };
    let weights = entries_from_weights(&x, n);
    let risk = matrix.preemptive_risk(&dense_weights(&weights, n));
    Ok(Equalized::Feasible(SolvedStrategy {
        mean_risk: mean(&risk),
        risk,
        strategy: MixedStrategy::Preemptive { weights },
    }))
}

fn precision_solution(matrix: &RiskMatrix, rows: Vec<Vec<TableEntry>>) -> SolvedStrategy {
    let n = matrix.num_nodes;
    let dense: Vec<Vec<f64>> = rows.iter().map(|r| dense_weights(r, n)).collect();
    let risk = matrix.precision_risk(&dense);
    let table = ConditionalTable { trigger: crate::policy::Trigger::FirstInfected, rows: rows.into_iter().enumerate().collect() };
    SolvedStrategy { mean_risk: mean(&risk), risk, strategy: MixedStrategy::Precision { table } }
}

/// Minimum mean risk over precision tables that equalize unconditional risk.
pub fn precision_equalize(matrix: &RiskMatrix) -> Result<Equalized> {
    let n = matrix.num_nodes;
    let q = &matrix.precision;
    let width = n + 1;
    let var = |i: usize, k: usize| i * width + k;
    let mut objective = vec![0.0; n * width];
    for i in 0..n {
        for k in 0..width {
            objective[var(i, k)] = mean(&q[i][k]) / n as f64;
        }
    }
    let mut lp = LinearProgram::new(objective);
    for i in 0..n {
        let mut row = vec![0.0; n * width];
        row[var(i, 0)..var(i, 0) + width].iter_mut().for_each(|c| *c = 1.0);
        lp.add_eq(row, 1.0);
    }
    for j in 1..n {
        let mut row = vec![0.0; n * width];
        for i in 0..n {
            for k in 0..width {
                row[var(i, k)] = (q[i][k][j] - q[i][k][0]) / n as f64;
            }
        }
        lp.add_eq(row, 0.0);
    }
    let Some(x) = solved_or_infeasible(solve_lp(&lp)?)? else {
        return Ok(Equalized::Infeasible);
    };
    let rows = (0..n).map(|i| entries_from_weights(&x[var(i, 0)..var(i, 0) + width], n)).collect();
    Ok(Equalized::Feasible(precision_solution(matrix, rows)))
}

/// Per initial patient, the pure treatment with the lowest total risk.
pub fn precision_optimal(matrix: &RiskMatrix) -> SolvedStrategy {
    let n = matrix.num_nodes;
    let rows = (0..n)
        .map(|i| {
            let (k, _) = argmin_first(matrix.precision[i].iter().map(|r| r.iter().sum::<f64>()));
            vec![TableEntry { treat: choice_treat(k, n), w: 1.0 }]
        })
        .collect();
    precision_solution(matrix, rows)
}
