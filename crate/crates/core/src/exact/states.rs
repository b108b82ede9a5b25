//! Bitmask encoding of health states and exact one-step transitions.

use std::collections::HashMap;
use std::hash::BuildHasherDefault;
use std::collections::hash_map::DefaultHasher;

use crate::dynamics::{infection_probability, Compartment, HealthState};
use crate::graph::Graph;

/// Fixed-key hasher so iteration order, and hence floating-point summation
/// order, is identical across processes.
pub(crate) type StableMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

pub(crate) const MAX_ENCODED_NODES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Masks {
    pub infected: u32,
    pub removed: u32,
}

impl Masks {
    pub fn encode(state: &HealthState) -> Self {
        let mut m = Masks { infected: 0, removed: 0 };
        for (v, c) in state.compartments().iter().enumerate() {
            match c {
                Compartment::I => m.infected |= 1 << v,
                Compartment::R => m.removed |= 1 << v,
                Compartment::S => {}
            }
        }
        m
    }

    pub fn decode(self, num_nodes: usize) -> HealthState {
        HealthState::from_compartments(
            (0..num_nodes)
                .map(|v| {
                    if self.infected >> v & 1 == 1 {
                        Compartment::I
                    } else if self.removed >> v & 1 == 1 {
                        Compartment::R
                    } else {
                        Compartment::S
                    }
                })
                .collect(),
        )
    }

    pub fn susceptible(self, num_nodes: usize) -> u32 {
        full(num_nodes) & !(self.infected | self.removed)
    }
}

pub(crate) fn full(num_nodes: usize) -> u32 {
    if num_nodes == 32 { u32::MAX } else { (1u32 << num_nodes) - 1 }
}

/// Graph-level quantities reused by every transition.
pub(crate) struct Kernel<'a> {
    pub graph: &'a Graph,
    pub neighbor_masks: Vec<u32>,
    pub tau: f64,
    pub rho: f64,
}

/// Per-node marginals of one step, valid by linearity without enumerating outcomes.
pub(crate) struct Marginals {
    /// Probability each node becomes infected this step.
    pub infection: Vec<(usize, f64)>,
    /// Probability each node is infected when the step ends.
    pub infected_after: Vec<(usize, f64)>,
}

impl<'a> Kernel<'a> {
    pub fn new(graph: &'a Graph, tau: f64, rho: f64) -> Self {
        let neighbor_masks =
            (0..graph.num_nodes()).map(|v| graph.neighbors(v).iter().fold(0u32, |m, &w| m | 1 << w)).collect();
        Self { graph, neighbor_masks, tau, rho }
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// Applies treatment to susceptible nodes in `treat`.
    pub fn treat(&self, state: Masks, treat: u32) -> Masks {
        let s = state.susceptible(self.num_nodes());
        Masks { infected: state.infected, removed: state.removed | (treat & s) }
    }

    pub fn marginals(&self, state: Masks) -> Marginals {
        let n = self.num_nodes();
        let s = state.susceptible(n);
        let mut infection = Vec::new();
        let mut infected_after = Vec::new();
        for v in 0..n {
            let bit = 1u32 << v;
            if s & bit != 0 {
                let k = (self.neighbor_masks[v] & state.infected).count_ones() as usize;
                let q = infection_probability(k, self.tau);
                if q > 0.0 {
                    infection.push((v, q));
                    infected_after.push((v, q));
                }
            } else if state.infected & bit != 0 && self.rho < 1.0 {
                infected_after.push((v, 1.0 - self.rho));
            }
        }
        Marginals { infection, infected_after }
    }

    /// Calls `emit(next, probability)` for every successor of the transmit
    /// and recover phases from a post-treatment state.
    pub fn successors(&self, state: Masks, mut emit: impl FnMut(Masks, f64)) {
        let n = self.num_nodes();
        let s = state.susceptible(n);
        let mut base = Masks { infected: state.infected, removed: state.removed };
        // uncertain events: (bit, probability, is_infection)
        let mut events: Vec<(u32, f64, bool)> = Vec::new();
        for v in 0..n {
            let bit = 1u32 << v;
            if s & bit != 0 {
                let k = (self.neighbor_masks[v] & state.infected).count_ones() as usize;
                let q = infection_probability(k, self.tau);
                if q >= 1.0 {
                    base.infected |= bit;
                } else if q > 0.0 {
                    events.push((bit, q, true));
                }
            } else if state.infected & bit != 0 {
                if self.rho >= 1.0 {
                    base.infected &= !bit;
                    base.removed |= bit;
                } else if self.rho > 0.0 {
                    events.push((bit, self.rho, false));
                }
            }
        }
        let m = events.len();
        for outcome in 0u64..(1u64 << m) {
            let mut next = base;
            let mut p = 1.0;
            for (i, &(bit, q, infects)) in events.iter().enumerate() {
                if outcome >> i & 1 == 1 {
                    p *= q;
                    if infects {
                        next.infected |= bit;
                    } else {
                        next.infected &= !bit;
                        next.removed |= bit;
                    }
                } else {
                    p *= 1.0 - q;
                }
            }
            emit(next, p);
        }
    }
}
