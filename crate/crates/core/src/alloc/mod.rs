//! Task allocators behind a common [`Allocator`] trait, looked up by name in a
//! [`Registry`].
//!
//! | name      | solver                                                   |
//! |-----------|----------------------------------------------------------|
//! | `dtta`    | decentralized decreasing-threshold allocation            |
//! | `ldtta`   | the same with lazily re-evaluated, sorted marginal caches |
//! | `sga`     | decentralized sequential greedy, one task per step       |
//! | `central` | centralized threshold greedy over task-agent pairs       |

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::consensus::{StepCounter, Topology};
use crate::error::{Error, Result};
use crate::model::{total_value, AgentId, Allocation, EvalCounter, Instance, TaskId};

mod brute;
mod central;
mod dtta;
mod ldtta;
mod sga;

pub use brute::{brute_force_opt, BRUTE_FORCE_MAX_AGENTS, BRUTE_FORCE_MAX_TASKS};
pub use central::{threshold_greedy_matroid, CentralThresholdGreedy, MatroidSelection};
pub use dtta::Dtta;
pub use ldtta::LazyDtta;
pub use sga::SequentialGreedy;

/// A task-allocation strategy.
pub trait Allocator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Runs the solver to completion. Centralized solvers ignore `topo`.
    fn allocate(&self, inst: &Instance, topo: &Topology) -> Result<RunResult>;
}

/// One task committed to one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationEvent {
    pub agent: AgentId,
    pub task: TaskId,
    /// Marginal gain of the task for the agent at the moment it was committed.
    pub marginal: f64,
    /// Threshold in force when it was committed; `None` for solvers without thresholds.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub value: f64,
    pub evals_total: u64,
    pub evals_per_agent: Vec<u64>,
    pub consensus_steps: u64,
    pub flood_rounds: u64,
    pub threshold_levels: u32,
}

impl RunMetrics {
    pub fn evals_per_agent_max(&self) -> u64 {
        self.evals_per_agent.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub allocation: Allocation,
    pub metrics: RunMetrics,
    /// Commit log in order; replaying it rebuilds `allocation`.
    pub events: Vec<AllocationEvent>,
    /// Initial threshold `d`, when the solver has one.
    pub initial_threshold: Option<f64>,
}

impl RunResult {
    pub(crate) fn finish(
        inst: &Instance,
        allocation: Allocation,
        counter: EvalCounter,
        steps: StepCounter,
        threshold_levels: u32,
        events: Vec<AllocationEvent>,
        initial_threshold: Option<f64>,
    ) -> Result<Self> {
        let value = total_value(&allocation, inst)?;
        Ok(RunResult {
            allocation,
            metrics: RunMetrics {
                value,
                evals_total: counter.global(),
                evals_per_agent: counter.per_agent().to_vec(),
                consensus_steps: steps.consensus_steps,
                flood_rounds: steps.flood_rounds,
                threshold_levels,
            },
            events,
            initial_threshold,
        })
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<f64> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(epsilon)
    } else {
        Err(Error::input(format!("epsilon must lie in (0,1), got {epsilon}")))
    }
}

pub(crate) fn check_setup(inst: &Instance, topo: &Topology) -> Result<()> {
    if inst.n_agents() == 0 {
        return Err(Error::input("instance has no agents"));
    }
    if topo.n_agents() != inst.n_agents() {
        return Err(Error::config(format!(
            "topology covers {} agents, instance has {}",
            topo.n_agents(),
            inst.n_agents()
        )));
    }
    Ok(())
}

/// Geometric threshold sequence `d, d(1-eps), d(1-eps)^2, ...`, active while
/// the threshold is at least `(eps/r) d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSchedule {
    d: f64,
    epsilon: f64,
    r: usize,
    theta: f64,
    level: u32,
}

impl ThresholdSchedule {
    pub fn new(d: f64, epsilon: f64, r: usize) -> Result<Self> {
        check_epsilon(epsilon)?;
        if r == 0 || !(d.is_finite() && d > 0.0) {
            return Err(Error::input(format!("threshold schedule needs r >= 1 and d > 0, got r={r}, d={d}")));
        }
        Ok(ThresholdSchedule { d, epsilon, r, theta: d, level: 0 })
    }

    pub fn initial(&self) -> f64 {
        self.d
    }

    pub fn terminal(&self) -> f64 {
        self.epsilon / self.r as f64 * self.d
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Zero-based index of the current level.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_active(&self) -> bool {
        self.theta >= self.terminal()
    }

    pub fn advance(&mut self) {
        self.theta *= 1.0 - self.epsilon;
        self.level += 1;
    }

    /// `ceil(ln(r/eps) / ln(1/(1-eps)))`, the level budget from the complexity bound.
    pub fn level_budget(r: usize, epsilon: f64) -> u32 {
        ((r as f64 / epsilon).ln() / (1.0 / (1.0 - epsilon)).ln()).ceil() as u32
    }
}

/// Constructor parameters shared by all registered allocators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub epsilon: f64,
}

pub type Factory = fn(&SolverParams) -> Result<Box<dyn Allocator>>;

#[derive(Clone, Copy)]
pub struct RegistryEntry {
    pub factory: Factory,
    /// Whether the output depends on `epsilon`.
    pub uses_epsilon: bool,
    pub summary: &'static str,
}

/// Name -> allocator factory.
#[derive(Clone)]
pub struct Registry {
    entries: BTreeMap<&'static str, RegistryEntry>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry { entries: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Registry::empty();
        r.register(
            "dtta",
            RegistryEntry {
                factory: |p| Ok(Box::new(Dtta::new(p.epsilon)?)),
                uses_epsilon: true,
                summary: "decentralized decreasing-threshold allocation",
            },
        );
        r.register(
            "ldtta",
            RegistryEntry {
                factory: |p| Ok(Box::new(LazyDtta::new(p.epsilon)?)),
                uses_epsilon: true,
                summary: "decreasing-threshold allocation with lazy marginal caches",
            },
        );
        r.register(
            "sga",
            RegistryEntry {
                factory: |_| Ok(Box::new(SequentialGreedy)),
                uses_epsilon: false,
                summary: "decentralized sequential greedy baseline",
            },
        );
        r.register(
            "central",
            RegistryEntry {
                factory: |p| Ok(Box::new(CentralThresholdGreedy::new(p.epsilon)?)),
                uses_epsilon: true,
                summary: "centralized threshold greedy over task-agent pairs",
            },
        );
        r
    }

    /// Adds or replaces an entry.
    pub fn register(&mut self, name: &'static str, entry: RegistryEntry) {
        self.entries.insert(name, entry);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn entry(&self, name: &str) -> Result<&RegistryEntry> {
        self.entries.get(name).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            Error::input(format!("unknown algorithm `{name}` (known: {})", known.join(", ")))
        })
    }

    pub fn build(&self, name: &str, params: &SolverParams) -> Result<Box<dyn Allocator>> {
        (self.entry(name)?.factory)(params)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}
