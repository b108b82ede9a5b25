//! Undirected contact networks.
//!
//! A [`Graph`] stores its edge list canonically (`u < v`, sorted) alongside
//! sorted adjacency lists. All generators are deterministic in their arguments.

mod centrality;
mod community;
mod generators;

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use centrality::{
    betweenness_centrality, degree_centrality, edge_betweenness, eigenvector_centrality,
    CentralityMeasure, CentralityScores,
};
pub use community::{girvan_newman_bisect, girvan_newman_trace, BisectionTrace, CommunityPartition};
pub use generators::{karate_club, make_barbell, make_chain, make_clique, make_cycle, make_scale_free, make_star};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    num_nodes: usize,
    edges: Vec<[NodeId; 2]>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range endpoints.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut canonical = Vec::new();
        for (u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) has an endpoint >= num_nodes {num_nodes}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            canonical.push((u.min(v), u.max(v)));
        }
        canonical.sort_unstable();
        if let Some(w) = canonical.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }
        let mut adjacency = vec![Vec::new(); num_nodes];
        for &(u, v) in &canonical {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { num_nodes, edges: canonical, adjacency })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list, each pair with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.num_nodes && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Graph with the given edges removed. Unknown edges are ignored.
    pub fn without_edges(&self, removed: &[(NodeId, NodeId)]) -> Graph {
        let kept = self
            .edges
            .iter()
            .copied()
            .filter(|&(u, v)| !removed.contains(&(u, v)) && !removed.contains(&(v, u)));
        Graph::new(self.num_nodes, kept).expect("subgraph of a valid graph is valid")
    }

    /// Connected-component label per node, labels numbered in order of smallest member.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.num_nodes];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.num_nodes {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn num_components(&self) -> usize {
        self.components().iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.num_components() <= 1
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn distances_from(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_nodes];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// True when the edge set is exactly `{(i, i + 1)}`.
    pub fn is_chain(&self) -> bool {
        self.edges.len() + 1 == self.num_nodes
            && self.edges.iter().enumerate().all(|(i, &e)| e == (i, i + 1))
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[NodeId]) -> Result<Graph> {
        if perm.len() != self.num_nodes {
            return Err(Error::InvalidParameter("permutation length mismatch".into()));
        }
        Graph::new(self.num_nodes, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile { num_nodes: self.num_nodes, edges: self.edges.iter().map(|&(u, v)| [u, v]).collect() };
        serde_json::to_string(&file).expect("graph serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Graph> {
        let file: GraphFile = serde_json::from_str(text)?;
        Graph::new(file.num_nodes, file.edges.into_iter().map(|[u, v]| (u, v)))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Graph> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Graph::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph> {
    Graph::load(path)
}

pub fn save_graph(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    graph.save(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loop() {
        let err = Graph::from_json(r#"{"num_nodes": 2, "edges": [[0, 0]]}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidGraph(_)));
    }

    #[test]
    fn rejects_duplicate_edge_in_either_orientation() {
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, [(0, 1), (0, 1)]).is_err());
    }

    #[test]
    fn rejects_out_of_range_endpoint() {
        assert!(Graph::new(2, [(0, 2)]).is_err());
    }

    #[test]
    fn adjacency_is_symmetric() {
        let g = karate_club();
        for u in 0..g.num_nodes() {
            for &v in g.neighbors(u) {
                assert!(g.neighbors(v).contains(&u));
            }
        }
    }

    #[test]
    fn json_round_trip_on_karate() {
        let g = karate_club();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("karate.json");
        save_graph(&g, &path).unwrap();
        assert_eq!(load_graph(&path).unwrap(), g);
    }

    #[test]
    fn stored_edges_are_ordered() {
        let g = Graph::new(3, [(2, 1), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert!(g.is_chain());
    }

    #[test]
    fn components_and_distances() {
        let g = Graph::new(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
        assert_eq!(g.components(), vec![0, 0, 0, 1, 1]);
        assert!(!g.is_connected());
        assert_eq!(g.distances_from(0), vec![Some(0), Some(1), Some(2), None, None]);
    }
}
