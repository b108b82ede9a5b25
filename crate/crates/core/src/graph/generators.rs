use rand::seq::SliceRandom;
use rand::Rng;

use super::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::rng;

const KARATE_CLUB_JSON: &str = include_str!("../../data/karate_club.json");

/// Path `0 - 1 - ... - (n-1)`.
pub fn make_chain(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|i| (i - 1, i))).expect("chain is a valid graph")
}

pub fn make_clique(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::new(n, edges).expect("clique is a valid graph")
}

pub fn make_cycle(n: usize) -> Graph {
    assert!(n >= 3, "a cycle needs at least three nodes");
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is a valid graph")
}

/// Hub `0` with leaves `1..=leaves`.
pub fn make_star(leaves: usize) -> Graph {
    Graph::new(leaves + 1, (1..=leaves).map(|v| (0, v))).expect("star is a valid graph")
}

/// Two cliques joined through one intermediary each to a shared center.
///
/// Layout: left clique `0..left`, right clique `left..left+right`, then the
/// left intermediary, the right intermediary and finally the center. The left
/// intermediary touches the last left-clique node, the right one the first
/// right-clique node.
pub fn make_barbell(left: usize, right: usize) -> Graph {
    assert!(left >= 1 && right >= 1, "barbell cliques need at least one node each");
    let left_mid = left + right;
    let right_mid = left_mid + 1;
    let center = right_mid + 1;
    let mut edges = Vec::new();
    for u in 0..left {
        for v in u + 1..left {
            edges.push((u, v));
        }
    }
    for u in left..left + right {
        for v in u + 1..left + right {
            edges.push((u, v));
        }
    }
    edges.extend([(left - 1, left_mid), (left, right_mid), (left_mid, center), (right_mid, center)]);
    Graph::new(center + 1, edges).expect("barbell is a valid graph")
}

/// Holme–Kim growth: preferential attachment with triad formation.
///
/// Seeds with a clique on nodes `0..=m`. Each later node attaches `m` edges:
/// the first to an endpoint drawn from the edge-endpoint multiset, each
/// following one with probability `p_triad` to a random neighbor of the
/// previous target, otherwise preferentially. Repeated targets are redrawn.
pub fn make_scale_free(n: usize, m: usize, p_triad: f64, seed: u64) -> Result<Graph> {
    if m == 0 || m >= n {
        return Err(Error::InvalidParameter(format!("scale-free needs 1 <= m < n, got m={m}, n={n}")));
    }
    if !(0.0..=1.0).contains(&p_triad) {
        return Err(Error::InvalidParameter(format!("p_triad {p_triad} outside [0, 1]")));
    }
    let mut rng = rng::seeded(seed);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut endpoints: Vec<NodeId> = Vec::new();
    let connect = |u: NodeId, v: NodeId, edges: &mut Vec<_>, adjacency: &mut Vec<Vec<NodeId>>| {
        edges.push((u, v));
        adjacency[u].push(v);
        adjacency[v].push(u);
    };
    for u in 0..=m {
        for v in u + 1..=m {
            connect(u, v, &mut edges, &mut adjacency);
            endpoints.extend([u, v]);
        }
    }
    for v in m + 1..n {
        let mut targets: Vec<NodeId> = Vec::with_capacity(m);
        while targets.len() < m {
            let triad = targets.last().and_then(|&prev| {
                if rng.gen::<f64>() >= p_triad {
                    return None;
                }
                let open: Vec<NodeId> =
                    adjacency[prev].iter().copied().filter(|w| !targets.contains(w)).collect();
                open.choose(&mut rng).copied()
            });
            let target = match triad {
                Some(t) => t,
                None => loop {
                    let t = endpoints[rng.gen_range(0..endpoints.len())];
                    if !targets.contains(&t) {
                        break t;
                    }
                },
            };
            targets.push(target);
        }
        for &t in &targets {
            connect(t, v, &mut edges, &mut adjacency);
            endpoints.extend([t, v]);
        }
    }
    Graph::new(n, edges)
}

/// Zachary's karate club network (34 members, 78 ties).
pub fn karate_club() -> Graph {
    Graph::from_json(KARATE_CLUB_JSON).expect("bundled karate fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_edges() {
        assert_eq!(make_chain(3).edges(), &[(0, 1), (1, 2)]);
        let single = make_chain(1);
        assert_eq!((single.num_nodes(), single.num_edges()), (1, 0));
        let eleven = make_chain(11);
        assert_eq!((eleven.num_nodes(), eleven.num_edges()), (11, 10));
    }

    #[test]
    fn barbell_structure() {
        let g = make_barbell(3, 3);
        assert_eq!(g.num_nodes(), 9);
        // two triangles, two clique-intermediary links, two intermediary-center links
        assert_eq!(g.num_edges(), 3 + 3 + 4);
        assert_eq!(g.neighbors(8), &[6, 7]);
        assert!(g.is_connected());
    }

    #[test]
    fn unit_barbell_is_a_path() {
        let g = make_barbell(1, 1);
        assert_eq!(g.num_nodes(), 5);
        assert_eq!(g.num_edges(), 4);
        let mut degrees: Vec<usize> = (0..5).map(|v| g.degree(v)).collect();
        degrees.sort();
        assert_eq!(degrees, vec![1, 1, 2, 2, 2]);
        assert!(g.is_connected());
    }

    #[test]
    fn asymmetric_barbell_has_larger_right_clique() {
        let g = make_barbell(3, 5);
        assert_eq!(g.num_nodes(), 11);
        assert_eq!(g.num_edges(), 3 + 10 + 4);
        assert!((3..8).all(|v| (3..8).filter(|&w| w != v).all(|w| g.has_edge(v, w))));
    }

    #[test]
    fn scale_free_sizes() {
        let g = make_scale_free(100, 2, 0.5, 7).unwrap();
        assert_eq!(g.num_nodes(), 100);
        assert_eq!(g.num_edges(), 3 + 97 * 2);
        assert!(g.is_connected());
    }

    #[test]
    fn scale_free_with_one_edge_per_node_is_a_tree() {
        let g = make_scale_free(5, 1, 0.0, 3).unwrap();
        assert_eq!(g.num_edges(), 4);
        assert!(g.is_connected());
    }

    #[test]
    fn scale_free_is_deterministic_in_seed() {
        let a = make_scale_free(60, 3, 0.3, 99).unwrap();
        let b = make_scale_free(60, 3, 0.3, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, make_scale_free(60, 3, 0.3, 100).unwrap());
    }

    #[test]
    fn scale_free_degree_tail_is_heavy() {
        for seed in 0..30 {
            let g = make_scale_free(500, 2, 0.5, seed).unwrap();
            let max_degree = (0..g.num_nodes()).map(|v| g.degree(v)).max().unwrap();
            assert!(max_degree > 8, "seed {seed}: max degree {max_degree}");
        }
    }

    #[test]
    fn scale_free_rejects_bad_arguments() {
        assert!(make_scale_free(5, 0, 0.5, 1).is_err());
        assert!(make_scale_free(5, 5, 0.5, 1).is_err());
        assert!(make_scale_free(5, 2, 1.5, 1).is_err());
    }

    #[test]
    fn karate_counts() {
        let g = karate_club();
        assert_eq!(g.num_nodes(), 34);
        assert_eq!(g.num_edges(), 78);
        assert!(g.is_connected());
    }
}
