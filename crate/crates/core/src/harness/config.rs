use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::EpidemicParams;
use crate::error::{Error, Result};
use crate::exact::{optimal_value, OptimalPolicy, CONTROL_GUARD};
use crate::graph::{
    karate_club, make_barbell, make_chain, make_clique, make_cycle, make_scale_free, make_star, CentralityMeasure,
    Graph,
};
use crate::policy::{centrality_policy, ConditionalTable, GreedyPolicy, NullPolicy, Policy, RandomPolicy, TablePolicy};
use crate::rl::{QNetwork, QPolicy};

/// A generator call or a graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Chain { n: usize },
    Clique { n: usize },
    Cycle { n: usize },
    Star { leaves: usize },
    Barbell { left: usize, right: usize },
    ScaleFree { n: usize, m: usize, p_triad: f64, seed: u64 },
    Karate,
    File { path: PathBuf },
}

impl GraphSpec {
    /// Builds the graph; relative file paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<Graph> {
        let positive = |name: &str, v: usize| {
            if v == 0 { Err(Error::InvalidConfig(format!("{name} must be at least 1"))) } else { Ok(()) }
        };
        Ok(match *self {
            GraphSpec::Chain { n } => {
                positive("n", n)?;
                make_chain(n)
            }
            GraphSpec::Clique { n } => {
                positive("n", n)?;
                make_clique(n)
            }
            GraphSpec::Cycle { n } => {
                if n < 3 {
                    return Err(Error::InvalidConfig("a cycle needs at least 3 nodes".into()));
                }
                make_cycle(n)
            }
            GraphSpec::Star { leaves } => make_star(leaves),
            GraphSpec::Barbell { left, right } => {
                positive("left", left)?;
                positive("right", right)?;
                make_barbell(left, right)
            }
            GraphSpec::ScaleFree { n, m, p_triad, seed } => make_scale_free(n, m, p_triad, seed)?,
            GraphSpec::Karate => karate_club(),
            GraphSpec::File { ref path } => Graph::load(base_dir.join(path))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    Null,
    Random {
        #[serde(default)]
        susceptible_only: bool,
    },
    Centrality { measure: CentralityMeasure },
    Greedy,
    /// Backward-induction optimum; only for small graphs.
    Optimal {
        #[serde(default)]
        guard: Option<usize>,
    },
    Table { table: ConditionalTable },
    TableFile { path: PathBuf },
    /// Greedy policy of a saved Q-network.
    Dqn { path: PathBuf },
}

impl PolicySpec {
    pub fn build(&self, graph: &Graph, params: &EpidemicParams, base_dir: &Path) -> Result<Box<dyn Policy>> {
        let read = |path: &Path| {
            let full = base_dir.join(path);
            std::fs::read_to_string(&full).map_err(|e| Error::io(&full, e))
        };
        Ok(match self {
            PolicySpec::Null => Box::new(NullPolicy),
            PolicySpec::Random { susceptible_only } => Box::new(RandomPolicy { susceptible_only: *susceptible_only }),
            PolicySpec::Centrality { measure } => Box::new(centrality_policy(measure.compute(graph)?)),
            PolicySpec::Greedy => Box::new(GreedyPolicy),
            PolicySpec::Optimal { guard } => {
                Box::new(OptimalPolicy::new(optimal_value(graph, params, guard.unwrap_or(CONTROL_GUARD))?))
            }
            PolicySpec::Table { table } => Box::new(TablePolicy::new(table.clone(), graph.num_nodes())?),
            PolicySpec::TableFile { path } => {
                Box::new(TablePolicy::new(ConditionalTable::from_json(&read(path)?)?, graph.num_nodes())?)
            }
            PolicySpec::Dqn { path } => {
                let net = QNetwork::from_json(&read(path)?)?;
                if net.num_nodes() != graph.num_nodes() {
                    return Err(Error::InvalidConfig(format!(
                        "network built for {} nodes, graph has {}",
                        net.num_nodes(),
                        graph.num_nodes()
                    )));
                }
                Box::new(QPolicy::new(net)?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Per-community run totals over the Girvan-Newman bisection.
    Communities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub params: EpidemicParams,
    pub policy: PolicySpec,
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub metrics: Vec<Metric>,
    /// Output directory, resolved against the config file's directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization is infallible")
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn wants(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }
}

fn parse_list<T: std::str::FromStr>(args: &str, spec: &str, count: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = if args.is_empty() { Vec::new() } else { args.split(',').collect() };
    if parts.len() != count {
        return Err(Error::InvalidConfig(format!("`{spec}` expects {count} comma-separated arguments")));
    }
    parts
        .iter()
        .map(|p| p.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad argument `{p}` in `{spec}`"))))
        .collect()
}

/// `karate`, `chain:N`, `clique:N`, `cycle:N`, `star:LEAVES`,
/// `barbell:LEFT,RIGHT`, `scale-free:N,M,P_TRIAD,SEED`; anything else is a file path.
impl std::str::FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "karate" {
            return Ok(GraphSpec::Karate);
        }
        let Some((kind, args)) = s.split_once(':') else {
            return Ok(GraphSpec::File { path: PathBuf::from(s) });
        };
        let one = |a: &str| parse_list::<usize>(a, s, 1).map(|v| v[0]);
        Ok(match kind {
            "chain" => GraphSpec::Chain { n: one(args)? },
            "clique" => GraphSpec::Clique { n: one(args)? },
            "cycle" => GraphSpec::Cycle { n: one(args)? },
            "star" => GraphSpec::Star { leaves: one(args)? },
            "barbell" => {
                let v = parse_list::<usize>(args, s, 2)?;
                GraphSpec::Barbell { left: v[0], right: v[1] }
            }
            "scale-free" | "scale_free" => {
                let v = parse_list::<String>(args, s, 4)?;
                let num = |i: usize| parse_list::<usize>(&v[i], s, 1).map(|x| x[0]);
                GraphSpec::ScaleFree {
                    n: num(0)?,
                    m: num(1)?,
                    p_triad: parse_list::<f64>(&v[2], s, 1)?[0],
                    seed: parse_list::<u64>(&v[3], s, 1)?[0],
                }
            }
            _ if Path::new(s).extension().is_some() => GraphSpec::File { path: PathBuf::from(s) },
            other => return Err(Error::InvalidConfig(format!("unknown graph kind `{other}`"))),
        })
    }
}

/// `null`, `random`, `random-susceptible`, `degree`, `betweenness`,
/// `eigenvector`, `greedy`, `optimal`, `table:PATH`, `dqn:PATH`.
impl std::str::FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("table:") {
            return Ok(PolicySpec::TableFile { path: path.into() });
        }
        if let Some(path) = s.strip_prefix("dqn:") {
            return Ok(PolicySpec::Dqn { path: path.into() });
        }
        Ok(match s {
            "null" | "none" => PolicySpec::Null,
            "random" => PolicySpec::Random { susceptible_only: false },
            "random-susceptible" => PolicySpec::Random { susceptible_only: true },
            "greedy" => PolicySpec::Greedy,
            "optimal" => PolicySpec::Optimal { guard: None },
            other => match other.parse::<CentralityMeasure>() {
                Ok(measure) => PolicySpec::Centrality { measure },
                Err(_) => return Err(Error::InvalidConfig(format!("unknown policy `{other}`"))),
            },
        })
    }
}
