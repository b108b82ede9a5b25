//! Precision contagion control on explicit contact networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: contact networks, generators, centrality and community detection.
//! - [`dynamics`]: discrete-time SIR evolution with preventative treatments.
//! - [`policy`]: the allocation-policy abstraction and heuristic policies.
//! - [`exact`]: sampling-free evaluation, backward induction and dominance.
//! - [`lp`]: risk matrices, a dense simplex solver and equalizing strategies.
//! - [`rl`]: a small Q-network trained from replay.
//! - [`harness`]: seeded Monte-Carlo campaigns and report emission.

pub mod dynamics;
pub mod error;
pub mod exact;
pub mod graph;
pub mod harness;
pub mod lp;
pub mod policy;
pub mod rl;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
