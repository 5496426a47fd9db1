//! Synchronous-round simulation of the communication layer.
//!
//! Both primitives flood information between neighbours until no agent's
//! local view changes. [`max_cons`] agrees on the single largest value;
//! [`max_coor`] disseminates every agent's bid and then resolves conflicts
//! per task, so several non-conflicting tasks can be committed in one step.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentId, TaskId};

/// Undirected communication graph over agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adjacency: Vec<Vec<usize>>,
}

impl Topology {
    pub fn complete(n: usize) -> Self {
        let adjacency = (0..n).map(|a| (0..n).filter(|&b| b != a).collect()).collect();
        Topology { adjacency }
    }

    pub fn ring(n: usize) -> Self {
        let edges = match n {
            0 | 1 => Vec::new(),
            2 => vec![(0, 1)],
            _ => (0..n).map(|a| (a, (a + 1) % n)).collect(),
        };
        Topology::from_edges(n, &edges).expect("ring edges are in range")
    }

    /// A random spanning tree (each node attached to a uniformly chosen earlier
    /// node of a random permutation) plus every other edge with probability `p`.
    pub fn random_connected(n: usize, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config(format!("edge probability {p} outside [0,1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut edges = BTreeSet::new();
        for i in 1..n {
            let parent = order[rng.gen_range(0..i)];
            let (u, v) = (order[i].min(parent), order[i].max(parent));
            edges.insert((u, v));
        }
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(p) {
                    edges.insert((u, v));
                }
            }
        }
        Topology::from_edges(n, &edges.into_iter().collect::<Vec<_>>())
    }

    /// Builds a graph from undirected edges. Does not require connectivity;
    /// the consensus primitives reject disconnected graphs when they run.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::config(format!("edge ({u},{v}) out of range for {n} agents")));
            }
            if u == v {
                return Err(Error::config(format!("self-loop on agent {u}")));
            }
            adjacency[u].insert(v);
            adjacency[v].insert(u);
        }
        Ok(Topology { adjacency: adjacency.into_iter().map(|s| s.into_iter().collect()).collect() })
    }

    pub fn n_agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, agent: AgentId) -> &[usize] {
        &self.adjacency[agent.index()]
    }

    fn bfs(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.adjacency.len()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
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

    pub fn is_connected(&self) -> bool {
        self.adjacency.is_empty() || self.bfs(0).iter().all(Option::is_some)
    }

    /// Longest shortest path, or `None` when disconnected.
    pub fn diameter(&self) -> Option<usize> {
        (0..self.adjacency.len()).try_fold(0, |acc, s| {
            self.bfs(s).into_iter().try_fold(acc, |m, d| d.map(|d| m.max(d)))
        })
    }
}

/// Topology family selectable from the command line: `complete`, `ring` or `random:p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TopologyKind {
    Complete,
    Ring,
    Random { p: f64 },
}

impl TopologyKind {
    pub fn build(&self, n_agents: usize, seed: u64) -> Result<Topology> {
        match *self {
            TopologyKind::Complete => Ok(Topology::complete(n_agents)),
            TopologyKind::Ring => Ok(Topology::ring(n_agents)),
            TopologyKind::Random { p } => Topology::random_connected(n_agents, p, seed),
        }
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "complete" => Ok(TopologyKind::Complete),
            "ring" => Ok(TopologyKind::Ring),
            other => {
                let p = other
                    .strip_prefix("random:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| Error::config(format!("unknown topology `{other}` (complete | ring | random:p)")))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::config(format!("edge probability {p} outside [0,1]")));
                }
                Ok(TopologyKind::Random { p })
            }
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::Complete => f.write_str("complete"),
            TopologyKind::Ring => f.write_str("ring"),
            TopologyKind::Random { p } => write!(f, "random:{p}"),
        }
    }
}

/// Consensus accounting for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounter {
    /// One per `max_cons` / `max_coor` invocation.
    pub consensus_steps: u64,
    /// Neighbour-exchange rounds summed over all invocations.
    pub flood_rounds: u64,
}

/// What one agent announces in a coordination round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidMessage {
    pub agent: AgentId,
    pub task: Option<TaskId>,
    pub value: f64,
}

impl BidMessage {
    pub fn new(agent: AgentId, task: TaskId, value: f64) -> Self {
        BidMessage { agent, task: Some(task), value }
    }

    /// "No qualified task": value 0, no task.
    pub fn none(agent: AgentId) -> Self {
        BidMessage { agent, task: None, value: 0.0 }
    }
}

/// `(value, id)` ordering shared by both primitives: larger value wins, ties go to the lower id.
#[inline]
fn beats(value: f64, agent: AgentId, other_value: f64, other_agent: AgentId) -> bool {
    value > other_value || (value == other_value && agent < other_agent)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxConsOutcome {
    pub winner: AgentId,
    pub value: f64,
    /// Exchange rounds in which at least one view changed.
    pub rounds: usize,
}

/// Max-consensus over one value per agent (indexed by agent id).
pub fn max_cons(values: &[f64], topo: &Topology, steps: &mut StepCounter) -> Result<MaxConsOutcome> {
    let n = values.len();
    if n == 0 || n != topo.n_agents() {
        return Err(Error::input(format!(
            "max_cons needs one value per agent: {} values, {} agents",
            n,
            topo.n_agents()
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::input("max_cons received NaN"));
    }
    let mut view: Vec<(f64, AgentId)> = values.iter().enumerate().map(|(a, &v)| (v, AgentId::from(a))).collect();
    let mut rounds = 0;
    loop {
        let mut next = view.clone();
        let mut changed = false;
        for (a, slot) in next.iter_mut().enumerate() {
            for &b in &topo.adjacency[a] {
                let (bv, bid) = view[b];
                if beats(bv, bid, slot.0, slot.1) {
                    *slot = (bv, bid);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        view = next;
        rounds += 1;
    }
    if view.iter().any(|v| v.1 != view[0].1) {
        return Err(Error::config("max_cons did not reach agreement: topology is disconnected"));
    }
    steps.consensus_steps += 1;
    steps.flood_rounds += rounds as u64;
    Ok(MaxConsOutcome { winner: view[0].1, value: view[0].0, rounds })
}

/// Result of one coordination round: conflict-free `(agent, task, value)` winners.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Coordination {
    /// Sorted by task id.
    pub winners: Vec<(AgentId, TaskId, f64)>,
    pub rounds: usize,
}

impl Coordination {
    pub fn is_empty(&self) -> bool {
        self.winners.is_empty()
    }

    /// The winning agents (A).
    pub fn agents(&self) -> BTreeSet<AgentId> {
        self.winners.iter().map(|w| w.0).collect()
    }

    /// The committed tasks (J).
    pub fn tasks(&self) -> BTreeSet<TaskId> {
        self.winners.iter().map(|w| w.1).collect()
    }

    pub fn task_won_by(&self, agent: AgentId) -> Option<TaskId> {
        self.winners.iter().find(|w| w.0 == agent).map(|w| w.1)
    }
}

fn validate_bids(bids: &[BidMessage], n: usize) -> Result<()> {
    if bids.len() != n {
        return Err(Error::input(format!("max_coor needs one bid per agent: {} bids, {n} agents", bids.len())));
    }
    for (a, bid) in bids.iter().enumerate() {
        if bid.agent.index() != a {
            return Err(Error::input(format!("bid at slot {a} is from {}", bid.agent)));
        }
        let ok = match bid.task {
            Some(_) => bid.value > 0.0,
            None => bid.value == 0.0,
        };
        if !ok {
            return Err(Error::input(format!("bid from {} must carry a task iff its value is positive", bid.agent)));
        }
    }
    Ok(())
}

/// Floods every bid to every agent, then commits, for each contested task,
/// the highest bidder (ties to the lowest agent id). Zero bids never win.
pub fn max_coor(bids: &[BidMessage], topo: &Topology, steps: &mut StepCounter) -> Result<Coordination> {
    let n = topo.n_agents();
    validate_bids(bids, n)?;

    // known[a] is a bitset over the agents whose bid `a` has received.
    let words = n.div_ceil(64);
    let mut known: Vec<Vec<u64>> = (0..n)
        .map(|a| {
            let mut w = vec![0u64; words];
            w[a / 64] |= 1 << (a % 64);
            w
        })
        .collect();
    let mut rounds = 0;
    loop {
        let mut next = known.clone();
        let mut changed = false;
        for (a, mine) in next.iter_mut().enumerate() {
            for &b in &topo.adjacency[a] {
                for (m, theirs) in mine.iter_mut().zip(&known[b]) {
                    let merged = *m | theirs;
                    changed |= merged != *m;
                    *m = merged;
                }
            }
        }
        if !changed {
            break;
        }
        known = next;
        rounds += 1;
    }
    let full = |w: &Vec<u64>| (0..n).all(|a| w[a / 64] & (1 << (a % 64)) != 0);
    if !known.iter().all(full) {
        return Err(Error::config("max_coor did not reach agreement: topology is disconnected"));
    }

    // Every agent now holds every bid and applies the same rule; compute it once.
    let mut best: BTreeMap<TaskId, (AgentId, f64)> = BTreeMap::new();
    for bid in bids {
        let Some(task) = bid.task else { continue };
        best.entry(task)
            .and_modify(|cur| {
                if beats(bid.value, bid.agent, cur.1, cur.0) {
                    *cur = (bid.agent, bid.value);
                }
            })
            .or_insert((bid.agent, bid.value));
    }
    steps.consensus_steps += 1;
    steps.flood_rounds += rounds as u64;
    Ok(Coordination { winners: best.into_iter().map(|(t, (a, v))| (a, t, v)).collect(), rounds })
}
