//! Domain types shared by every solver: identifiers, problem instances,
//! allocations, the partition-matroid feasibility rule and evaluation counting.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surveillance;

macro_rules! dense_id {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                $name(i as u32)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

dense_id!(
    /// 0-based task identifier, dense within an instance.
    TaskId,
    "t"
);
dense_id!(
    /// 0-based agent identifier, dense within an instance.
    AgentId,
    "a"
);

/// A point on the plane, in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub position: Point,
    /// Importance factor in (0, 1].
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub start: Point,
    /// Task-agent fitness factors in (0, 1], one per task.
    pub fitness: Vec<f64>,
}

/// An immutable surveillance problem instance.
///
/// Serialized as `{tasks:[{x,y,v}], agents:[{x,y,fitness}], lambda_d, lambda_n, L}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    tasks: Vec<Task>,
    agents: Vec<Agent>,
    lambda_d: f64,
    lambda_n: f64,
    arena: f64,
}

fn in_unit_interval(v: f64) -> bool {
    v > 0.0 && v <= 1.0
}

impl Instance {
    pub fn new(
        tasks: Vec<Task>,
        agents: Vec<Agent>,
        lambda_d: f64,
        lambda_n: f64,
        arena: f64,
    ) -> Result<Self> {
        if !(arena.is_finite() && arena > 0.0) {
            return Err(Error::input(format!("arena size must be positive, got {arena}")));
        }
        if !in_unit_interval(lambda_d) || !in_unit_interval(lambda_n) {
            return Err(Error::input(format!(
                "discount factors must lie in (0,1], got lambda_d={lambda_d}, lambda_n={lambda_n}"
            )));
        }
        let inside = |p: Point| (0.0..=arena).contains(&p.x) && (0.0..=arena).contains(&p.y);
        for (j, t) in tasks.iter().enumerate() {
            if !in_unit_interval(t.importance) {
                return Err(Error::input(format!("task {j}: importance {} outside (0,1]", t.importance)));
            }
            if !inside(t.position) {
                return Err(Error::input(format!("task {j}: position outside [0,{arena}]^2")));
            }
        }
        for (a, agent) in agents.iter().enumerate() {
            if agent.fitness.len() != tasks.len() {
                return Err(Error::input(format!(
                    "agent {a}: fitness row has {} entries, expected {}",
                    agent.fitness.len(),
                    tasks.len()
                )));
            }
            if let Some(m) = agent.fitness.iter().find(|m| !in_unit_interval(**m)) {
                return Err(Error::input(format!("agent {a}: fitness {m} outside (0,1]")));
            }
            if !inside(agent.start) {
                return Err(Error::input(format!("agent {a}: start outside [0,{arena}]^2")));
            }
        }
        Ok(Instance { tasks, agents, lambda_d, lambda_n, arena })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn lambda_d(&self) -> f64 {
        self.lambda_d
    }

    pub fn lambda_n(&self) -> f64 {
        self.lambda_n
    }

    pub fn arena(&self) -> f64 {
        self.arena
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id.index()]
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id.index()]
    }

    #[inline]
    pub fn fitness(&self, agent: AgentId, task: TaskId) -> f64 {
        self.agents[agent.index()].fitness[task.index()]
    }

    pub fn task_ids(&self) -> impl Iterator<Item = TaskId> + Clone {
        (0..self.tasks.len()).map(TaskId::from)
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> + Clone {
        (0..self.agents.len()).map(AgentId::from)
    }

    pub fn check_task(&self, id: TaskId) -> Result<()> {
        if id.index() < self.tasks.len() {
            Ok(())
        } else {
            Err(Error::input(format!("unknown task {id}")))
        }
    }

    pub fn check_agent(&self, id: AgentId) -> Result<()> {
        if id.index() < self.agents.len() {
            Ok(())
        } else {
            Err(Error::input(format!("unknown agent {id}")))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Serialize, Deserialize)]
struct TaskRecord {
    x: f64,
    y: f64,
    v: f64,
}

#[derive(Serialize, Deserialize)]
struct AgentRecord {
    x: f64,
    y: f64,
    fitness: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    tasks: Vec<TaskRecord>,
    agents: Vec<AgentRecord>,
    lambda_d: f64,
    lambda_n: f64,
    #[serde(rename = "L")]
    arena: f64,
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        let tasks = file
            .tasks
            .into_iter()
            .map(|t| Task { position: Point::new(t.x, t.y), importance: t.v })
            .collect();
        let agents = file
            .agents
            .into_iter()
            .map(|a| Agent { start: Point::new(a.x, a.y), fitness: a.fitness })
            .collect();
        Instance::new(tasks, agents, file.lambda_d, file.lambda_n, file.arena)
    }
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> Self {
        InstanceFile {
            tasks: inst
                .tasks
                .into_iter()
                .map(|t| TaskRecord { x: t.position.x, y: t.position.y, v: t.importance })
                .collect(),
            agents: inst
                .agents
                .into_iter()
                .map(|a| AgentRecord { x: a.start.x, y: a.start.y, fitness: a.fitness })
                .collect(),
            lambda_d: inst.lambda_d,
            lambda_n: inst.lambda_n,
            arena: inst.arena,
        }
    }
}

/// Per-agent ordered task lists. Insertion order is visit order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    lists: Vec<Vec<TaskId>>,
}

impl Allocation {
    pub fn new(n_agents: usize) -> Self {
        Allocation { lists: vec![Vec::new(); n_agents] }
    }

    pub fn from_lists(lists: Vec<Vec<TaskId>>) -> Self {
        Allocation { lists }
    }

    pub fn n_agents(&self) -> usize {
        self.lists.len()
    }

    pub fn tasks_of(&self, agent: AgentId) -> &[TaskId] {
        &self.lists[agent.index()]
    }

    /// Appends `task` to the tail of `agent`'s list.
    pub fn push(&mut self, agent: AgentId, task: TaskId) {
        self.lists[agent.index()].push(task);
    }

    pub fn lists(&self) -> &[Vec<TaskId>] {
        &self.lists
    }

    pub fn n_assigned(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, &[TaskId])> {
        self.lists.iter().enumerate().map(|(a, l)| (AgentId::from(a), l.as_slice()))
    }

    /// Owner of `task`, if any.
    pub fn owner(&self, task: TaskId) -> Option<AgentId> {
        self.iter().find(|(_, l)| l.contains(&task)).map(|(a, _)| a)
    }
}

/// Partition-matroid membership: every task appears in at most one list, at most once.
pub fn is_feasible(alloc: &Allocation, inst: &Instance) -> Result<bool> {
    if alloc.n_agents() != inst.n_agents() {
        return Err(Error::input(format!(
            "allocation has {} agent lists, instance has {} agents",
            alloc.n_agents(),
            inst.n_agents()
        )));
    }
    let mut seen = vec![false; inst.n_tasks()];
    let mut feasible = true;
    for (_, list) in alloc.iter() {
        for &t in list {
            inst.check_task(t)?;
            if std::mem::replace(&mut seen[t.index()], true) {
                feasible = false;
            }
        }
    }
    Ok(feasible)
}

/// Sum of per-agent surveillance values. Recomputed from scratch, no counters touched.
pub fn total_value(alloc: &Allocation, inst: &Instance) -> Result<f64> {
    if !is_feasible(alloc, inst)? {
        return Err(Error::contract("total_value called on an infeasible allocation"));
    }
    alloc
        .iter()
        .map(|(a, list)| surveillance::agent_value(a, list, inst))
        .sum()
}

/// Counts marginal-gain evaluations per agent and globally.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounter {
    per_agent: Vec<u64>,
    global: u64,
}

impl EvalCounter {
    pub fn new(n_agents: usize) -> Self {
        EvalCounter { per_agent: vec![0; n_agents], global: 0 }
    }

    #[inline]
    pub fn record(&mut self, agent: AgentId) {
        self.per_agent[agent.index()] += 1;
        self.global += 1;
    }

    pub fn global(&self) -> u64 {
        self.global
    }

    pub fn agent(&self, agent: AgentId) -> u64 {
        self.per_agent[agent.index()]
    }

    pub fn per_agent(&self) -> &[u64] {
        &self.per_agent
    }

    pub fn max_per_agent(&self) -> u64 {
        self.per_agent.iter().copied().max().unwrap_or(0)
    }
}

/// One element of the task x agent ground set used by the centralized solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundPair {
    pub task: TaskId,
    pub agent: AgentId,
}

/// All task-agent pairs, task-major then agent.
pub fn ground_set(inst: &Instance) -> Vec<GroundPair> {
    inst.task_ids()
        .flat_map(|task| inst.agent_ids().map(move |agent| GroundPair { task, agent }))
        .collect()
}
