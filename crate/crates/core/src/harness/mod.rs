//! Seeded Monte Carlo campaigns and their reports.
//!
//! Run `i` of an experiment draws its episode stream from
//! `mix_seed(base_seed, i) = splitmix64(base_seed ^ splitmix64(i))`. Runs
//! execute in parallel but are aggregated in run-index order, so reports do
//! not depend on the thread count.

mod burden;
mod config;
mod output;
pub mod stats;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use burden::{
    burden_by_centrality, burden_by_community, terciles, CentralityRow, CentralityTable, CommunityBurden,
    CommunityTable, TercileRow,
};
pub use config::{ExperimentConfig, GraphSpec, Metric, PolicySpec};
pub use output::{
    analyze, centrality_csv, meta_json, report_csv, runs_csv, terciles_csv, write_outputs, Analysis, OutputFiles,
};

use crate::dynamics::{run_episode, EpidemicParams};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::policy::Policy;
use crate::rng::{mix_seed, seeded};

/// One episode's totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub total_sick_days: u32,
    pub epidemic_size: usize,
    pub node_sick_days: Vec<u32>,
    pub ever_infected: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub policy: String,
    pub num_nodes: usize,
    pub runs: usize,
    pub node_mean_sick_days: Vec<f64>,
    pub node_se_sick_days: Vec<f64>,
    pub node_p_infected: Vec<f64>,
    pub node_se_p_infected: Vec<f64>,
    pub mean_total_sick_days: f64,
    pub se_total_sick_days: f64,
    pub median_total_sick_days: f64,
    pub mean_epidemic_size: f64,
    pub records: Vec<RunRecord>,
}

impl ExperimentReport {
    pub fn seeds(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.seed).collect()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.total_sick_days as f64).collect()
    }

    fn from_records(policy: String, num_nodes: usize, records: Vec<RunRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidConfig("no runs to aggregate".into()));
        }
        let column = |f: &dyn Fn(&RunRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
        let mut node_mean_sick_days = Vec::with_capacity(num_nodes);
        let mut node_se_sick_days = Vec::with_capacity(num_nodes);
        let mut node_p_infected = Vec::with_capacity(num_nodes);
        let mut node_se_p_infected = Vec::with_capacity(num_nodes);
        for v in 0..num_nodes {
            let days = column(&|r| r.node_sick_days[v] as f64);
            let hit = column(&|r| if r.ever_infected[v] { 1.0 } else { 0.0 });
            node_mean_sick_days.push(stats::mean(&days));
            node_se_sick_days.push(stats::standard_error(&days));
            node_p_infected.push(stats::mean(&hit));
            node_se_p_infected.push(stats::standard_error(&hit));
        }
        let totals = column(&|r| r.total_sick_days as f64);
        let sizes = column(&|r| r.epidemic_size as f64);
        Ok(Self {
            policy,
            num_nodes,
            runs: records.len(),
            node_mean_sick_days,
            node_se_sick_days,
            node_p_infected,
            node_se_p_infected,
            mean_total_sick_days: stats::mean(&totals),
            se_total_sick_days: stats::standard_error(&totals),
            median_total_sick_days: stats::median(&totals),
            mean_epidemic_size: stats::mean(&sizes),
            records,
        })
    }
}

/// Runs `runs` seeded episodes of `policy`.
pub fn run_campaign(
    graph: &Graph,
    params: &EpidemicParams,
    policy: &dyn Policy,
    runs: usize,
    base_seed: u64,
) -> Result<ExperimentReport> {
    let records = (0..runs)
        .into_par_iter()
        .map(|run| {
            let seed = mix_seed(base_seed, run as u64);
            let trace = run_episode(graph, params, policy, &mut seeded(seed))?;
            Ok(RunRecord {
                run,
                seed,
                total_sick_days: trace.total_sick_days,
                epidemic_size: trace.epidemic_size(),
                node_sick_days: trace.per_node_sick_days,
                ever_infected: trace.ever_infected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ExperimentReport::from_records(policy.name(), graph.num_nodes(), records)
}

/// Runs an experiment; relative paths in the config resolve against `base_dir`.
pub fn run_experiment_in(cfg: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    let graph = cfg.graph.build(base_dir)?;
    cfg.params.validate(graph.num_nodes())?;
    let policy = cfg.policy.build(&graph, &cfg.params, base_dir)?;
    run_campaign(&graph, &cfg.params, policy.as_ref(), cfg.runs, cfg.base_seed)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_in(cfg, Path::new("."))
}

/// Runs configs that differ only in their policy with common random numbers:
/// run `i` of every config consumes the same episode seed.
pub fn repeat_with_shared_seeds(cfgs: &[ExperimentConfig], base_dir: &Path) -> Result<Vec<ExperimentReport>> {
    if let Some(first) = cfgs.first() {
        let same = |c: &ExperimentConfig| {
            c.graph == first.graph && c.params == first.params && c.runs == first.runs && c.base_seed == first.base_seed
        };
        if let Some(i) = cfgs.iter().position(|c| !same(c)) {
            return Err(Error::InvalidConfig(format!("config {i} differs from config 0 beyond its policy")));
        }
    }
    cfgs.iter().map(|c| run_experiment_in(c, base_dir)).collect()
}
