//! `contagion` command-line front end.
//!
//! Exit codes: 0 success, 1 domain-invariant failure, 2 usage error,
//! 3 infeasible linear program.

mod commands;
mod sink;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use contagion::dynamics::EpidemicParams;
use contagion::Error;

#[derive(Debug, Parser, Serialize)]
#[command(name = "contagion", version, about = "Network epidemic simulation and treatment-allocation analysis")]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for result files (plus meta.json); results go to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tabular output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Graph argument: `karate`, `chain:N`, `clique:N`, `cycle:N`, `star:LEAVES`,
/// `barbell:LEFT,RIGHT`, `scale-free:N,M,P_TRIAD,SEED`, or a graph JSON path.
pub type GraphArg = String;

#[derive(Debug, Clone, Args, Serialize)]
pub struct ParamArgs {
    /// Per-contact transmission probability.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Per-step recovery probability.
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    /// Treatments per step.
    #[arg(long, default_value_t = 1)]
    pub nt: usize,
    /// Maximum number of steps.
    #[arg(long, default_value_t = 20)]
    pub horizon: usize,
    /// Comma-separated initial infections; one uniformly random node when omitted.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<usize>>,
    /// Lifetime treatment budget.
    #[arg(long)]
    pub budget: Option<usize>,
}

impl ParamArgs {
    pub fn params(&self) -> EpidemicParams {
        let mut p = EpidemicParams::new(self.tau, self.rho, self.nt, self.horizon);
        if let Some(seeds) = &self.seeds {
            p = p.with_seeds(seeds.clone());
        }
        if let Some(b) = self.budget {
            p = p.with_budget(b);
        }
        p
    }
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Generate or inspect graphs.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Run one episode and print its trace.
    Simulate {
        #[arg(long)]
        graph: GraphArg,
        /// null, random, random-susceptible, degree, betweenness, eigenvector,
        /// greedy, optimal, table:PATH or dqn:PATH.
        #[arg(long, default_value = "null")]
        policy: String,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Sampling-free evaluation and optimal control.
    #[command(subcommand)]
    Exact(ExactCommand),
    /// Preemptive and precision linear programs.
    Lp {
        #[arg(value_enum)]
        objective: LpObjective,
        #[arg(long, value_enum)]
        mode: LpMode,
        #[arg(long)]
        graph: GraphArg,
        #[command(flatten)]
        params: ParamArgs,
        /// Largest graph evaluated exactly when building risk matrices.
        #[arg(long, default_value_t = contagion::exact::EVAL_GUARD)]
        guard: usize,
    },
    /// Deep Q-learning baseline.
    #[command(subcommand)]
    Rl(RlCommand),
    /// Run an experiment config and write report.csv, runs.csv, centrality.csv, terciles.csv and meta.json.
    Experiment {
        config: PathBuf,
        /// Override the config's run count.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Girvan-Newman bisection.
    Communities {
        #[arg(long)]
        graph: GraphArg,
    },
    /// Degree, betweenness and eigenvector centrality.
    Centrality {
        #[arg(long)]
        graph: GraphArg,
    },
}

#[derive(Debug, Subcommand, Serialize)]
pub enum GraphCommand {
    /// Write a generated graph as JSON.
    Generate {
        #[arg(value_enum)]
        kind: GraphKind,
        /// Node count (chain, clique, cycle, scale-free).
        #[arg(long)]
        n: Option<usize>,
        /// Leaf count (star).
        #[arg(long)]
        leaves: Option<usize>,
        /// Left clique size (barbell).
        #[arg(long)]
        left: Option<usize>,
        /// Right clique size (barbell).
        #[arg(long)]
        right: Option<usize>,
        /// Edges per added node (scale-free).
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Triad-formation probability (scale-free).
        #[arg(long, default_value_t = 0.5)]
        p_triad: f64,
    },
    /// Print node, edge and degree statistics.
    Inspect { graph: GraphArg },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Chain,
    Clique,
    Cycle,
    Star,
    Barbell,
    ScaleFree,
    Karate,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum ExactCommand {
    /// Exact per-node risk profile of a policy.
    Eval {
        #[arg(long)]
        graph: GraphArg,
        #[arg(long, default_value = "null")]
        policy: String,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = contagion::exact::EVAL_GUARD)]
        guard: usize,
    },
    /// Backward-induction optimum.
    Optimal {
        #[arg(long)]
        graph: GraphArg,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = contagion::exact::CONTROL_GUARD)]
        guard: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpObjective {
    Equalize,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpMode {
    Preemptive,
    Precision,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum RlCommand {
    /// Train an agent; writes weights.json and learning_curve.csv.
    Train {
        #[arg(long)]
        graph: GraphArg,
        #[command(flatten)]
        params: ParamArgs,
        /// Training config JSON; unspecified fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Start from the published hyperparameters.
        #[arg(long)]
        published_preset: bool,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Evaluation episodes for the final greedy policy.
        #[arg(long, default_value_t = 1000)]
        eval_episodes: usize,
    },
    /// Bounded random hyperparameter search.
    Search {
        #[arg(long)]
        graph: GraphArg,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 4)]
        trials: usize,
        #[arg(long, default_value_t = 200)]
        eval_episodes: usize,
        /// Cap on iterations actually trained per trial.
        #[arg(long, default_value_t = 20)]
        max_iterations: usize,
    },
}

/// Outcome of a command that ran to completion.
pub enum Outcome {
    Done,
    Infeasible,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::InvalidConfig(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
