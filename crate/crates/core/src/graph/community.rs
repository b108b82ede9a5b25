use serde::{Deserialize, Serialize};

use super::{edge_betweenness, Graph, NodeId};
use crate::error::{Error, Result};

const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityPartition {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl CommunityPartition {
    /// Every node in one community.
    pub fn single(num_nodes: usize) -> Self {
        Self { labels: vec![0; num_nodes], k: 1 }
    }

    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter("community labels must be contiguous and non-empty".into()));
        }
        Ok(Self { labels, k })
    }

    pub fn members(&self, community: usize) -> Vec<NodeId> {
        (0..self.labels.len()).filter(|&v| self.labels[v] == community).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BisectionTrace {
    pub partition: CommunityPartition,
    pub removed: Vec<(NodeId, NodeId)>,
    /// Whether any round had more than one edge at the maximum score.
    pub had_ties: bool,
}

/// Girvan–Newman, stopped at the first split into two components.
pub fn girvan_newman_bisect(graph: &Graph) -> Result<CommunityPartition> {
    girvan_newman_trace(graph).map(|t| t.partition)
}

/// As [`girvan_newman_bisect`], also reporting the removal sequence.
///
/// Each round recomputes edge betweenness and removes the highest-scoring edge,
/// breaking ties towards the lexicographically smallest `(u, v)`. Community 0
/// is the component holding node 0.
pub fn girvan_newman_trace(graph: &Graph) -> Result<BisectionTrace> {
    if graph.num_nodes() < 2 {
        return Err(Error::InvalidParameter("bisection needs at least two nodes".into()));
    }
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut current = graph.clone();
    let mut removed = Vec::new();
    let mut had_ties = false;
    loop {
        let scores = edge_betweenness(&current);
        let best = scores.values().cloned().fold(f64::NEG_INFINITY, f64::max);
        let close = |x: f64| (best - x).abs() <= TIE_TOLERANCE * best.abs().max(1.0);
        let mut top = scores.iter().filter(|(_, &x)| close(x)).map(|(&e, _)| e);
        let edge = top.next().expect("connected graph with two nodes has an edge");
        had_ties |= top.next().is_some();
        removed.push(edge);
        current = current.without_edges(&[edge]);
        if current.num_components() >= 2 {
            let partition = CommunityPartition::from_labels(current.components())?;
            return Ok(BisectionTrace { partition, removed, had_ties });
        }
    }
}
