//! Degree, betweenness and eigenvector centrality.
//!
//! Betweenness is reported unnormalized, as sums of pair dependencies over
//! unordered pairs. Policies only consume the ranking, so no scaling is applied.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Graph, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityMeasure {
    Degree,
    Betweenness,
    Eigenvector,
}

impl CentralityMeasure {
    pub const ALL: [CentralityMeasure; 3] =
        [CentralityMeasure::Degree, CentralityMeasure::Betweenness, CentralityMeasure::Eigenvector];

    pub fn name(self) -> &'static str {
        match self {
            CentralityMeasure::Degree => "degree",
            CentralityMeasure::Betweenness => "betweenness",
            CentralityMeasure::Eigenvector => "eigenvector",
        }
    }

    pub fn compute(self, graph: &Graph) -> Result<CentralityScores> {
        match self {
            CentralityMeasure::Degree => Ok(degree_centrality(graph)),
            CentralityMeasure::Betweenness => Ok(betweenness_centrality(graph)),
            CentralityMeasure::Eigenvector => eigenvector_centrality(graph),
        }
    }
}

impl std::str::FromStr for CentralityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(CentralityMeasure::Degree),
            "betweenness" => Ok(CentralityMeasure::Betweenness),
            "eigenvector" | "eigen" => Ok(CentralityMeasure::Eigenvector),
            other => Err(Error::InvalidParameter(format!("unknown centrality measure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityScores {
    pub measure: CentralityMeasure,
    pub scores: Vec<f64>,
}

impl CentralityScores {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.scores[node]
    }
}

pub fn degree_centrality(graph: &Graph) -> CentralityScores {
    CentralityScores {
        measure: CentralityMeasure::Degree,
        scores: (0..graph.num_nodes()).map(|v| graph.degree(v) as f64).collect(),
    }
}

/// Single-source stage of Brandes' algorithm: BFS order, path counts and predecessor lists.
struct ShortestPathDag {
    order: Vec<NodeId>,
    sigma: Vec<f64>,
    preds: Vec<Vec<NodeId>>,
}

fn shortest_path_dag(graph: &Graph, source: NodeId) -> ShortestPathDag {
    let n = graph.num_nodes();
    let mut dist = vec![usize::MAX; n];
    let mut sigma = vec![0.0; n];
    let mut preds = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    dist[source] = 0;
    sigma[source] = 1.0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in graph.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }
    ShortestPathDag { order, sigma, preds }
}

/// Brandes' accumulation. Every source contributes once per ordered pair, so
/// the totals are halved to count unordered pairs.
pub fn betweenness_centrality(graph: &Graph) -> CentralityScores {
    let n = graph.num_nodes();
    let mut score = vec![0.0; n];
    let mut delta = vec![0.0; n];
    for s in 0..n {
        let dag = shortest_path_dag(graph, s);
        delta.iter_mut().for_each(|d| *d = 0.0);
        for &w in dag.order.iter().rev() {
            for &v in &dag.preds[w] {
                delta[v] += dag.sigma[v] / dag.sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }
    score.iter_mut().for_each(|x| *x /= 2.0);
    CentralityScores { measure: CentralityMeasure::Betweenness, scores: score }
}

/// Edge variant of Brandes' accumulation, keyed by canonical `(u, v)` with `u < v`.
pub fn edge_betweenness(graph: &Graph) -> BTreeMap<(NodeId, NodeId), f64> {
    let n = graph.num_nodes();
    let mut score: BTreeMap<(NodeId, NodeId), f64> = graph.edges().iter().map(|&e| (e, 0.0)).collect();
    let mut delta = vec![0.0; n];
    for s in 0..n {
        let dag = shortest_path_dag(graph, s);
        delta.iter_mut().for_each(|d| *d = 0.0);
        for &w in dag.order.iter().rev() {
            for &v in &dag.preds[w] {
                let c = dag.sigma[v] / dag.sigma[w] * (1.0 + delta[w]);
                *score.get_mut(&(v.min(w), v.max(w))).expect("edge present") += c;
                delta[v] += c;
            }
        }
    }
    score.values_mut().for_each(|x| *x /= 2.0);
    score
}

pub const EIGEN_TOLERANCE: f64 = 1e-10;
pub const EIGEN_MAX_ITERATIONS: usize = 100_000;

/// Dominant eigenvector of the adjacency matrix, unit Euclidean norm.
///
/// Iterates `x <- (A + I) x` from the all-ones vector. The shift leaves the
/// dominant eigenvector unchanged and removes the `±λ` oscillation that plain
/// power iteration shows on bipartite graphs.
pub fn eigenvector_centrality(graph: &Graph) -> Result<CentralityScores> {
    let n = graph.num_nodes();
    if n == 0 {
        return Err(Error::InvalidParameter("eigenvector centrality of an empty graph".into()));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    for _ in 0..EIGEN_MAX_ITERATIONS {
        for v in 0..n {
            next[v] = x[v] + graph.neighbors(v).iter().map(|&w| x[w]).sum::<f64>();
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        next.iter_mut().for_each(|a| *a /= norm);
        let change = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if change < EIGEN_TOLERANCE {
            return Ok(CentralityScores { measure: CentralityMeasure::Eigenvector, scores: x });
        }
    }
    Err(Error::NoConvergence { iterations: EIGEN_MAX_ITERATIONS })
}
