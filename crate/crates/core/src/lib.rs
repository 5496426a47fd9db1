//! Decentralized multi-robot task allocation by decreasing-threshold greedy
//! bidding, with a lazy-evaluation variant, a sequential greedy baseline, a
//! centralized matroid threshold greedy, an exact brute-force oracle, and a
//! Monte-Carlo benchmark harness.
//!
//! Agents maximize a surveillance objective ([`surveillance`]) subject to each
//! task going to at most one agent ([`model::is_feasible`]). Communication is
//! simulated in synchronous flooding rounds ([`consensus`]). Solvers are
//! selected by name through [`alloc::Registry`].

pub mod alloc;
pub mod bench;
pub mod consensus;
pub mod error;
pub mod model;
pub mod surveillance;

pub use alloc::{Allocator, Registry, RunMetrics, RunResult, SolverParams};
pub use consensus::{Topology, TopologyKind};
pub use error::{Error, Result};
pub use model::{AgentId, Allocation, EvalCounter, Instance, TaskId};
