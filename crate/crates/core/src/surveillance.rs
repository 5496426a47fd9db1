//! Multi-target surveillance objective and its random instance generator.
//!
//! Agent `a` visiting tasks in list order collects, for the task at position
//! `k` of its list, `m_aj * v_j * lambda_d^tau * lambda_n^sigma`, where `tau` is
//! the polyline length from the agent's start to that task and `sigma = k + 1`.
//! Tasks are only ever appended to the tail, so the gain of appending `j` is
//! exactly that single term.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Agent, AgentId, EvalCounter, Instance, Point, Task, TaskId};

/// Value of one list entry given the path length and visit index that reach it.
#[inline]
fn term(inst: &Instance, agent: AgentId, task: TaskId, tau: f64, sigma: u32) -> f64 {
    inst.fitness(agent, task)
        * inst.task(task).importance
        * inst.lambda_d().powf(tau)
        * inst.lambda_n().powi(sigma as i32)
}

/// Incremental view of an agent's path: where it currently ends, how long it
/// is and how many tasks it has visited.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Route {
    pub tail: Point,
    pub length: f64,
    pub visited: u32,
}

impl Route {
    pub fn start(inst: &Instance, agent: AgentId) -> Self {
        Route { tail: inst.agent(agent).start, length: 0.0, visited: 0 }
    }

    /// Route after walking through `tasks` in order.
    pub fn through(inst: &Instance, agent: AgentId, tasks: &[TaskId]) -> Self {
        tasks.iter().fold(Route::start(inst, agent), |r, &t| r.extended(inst, t))
    }

    #[must_use]
    pub fn extended(self, inst: &Instance, task: TaskId) -> Self {
        let p = inst.task(task).position;
        Route { tail: p, length: self.length + self.tail.distance(p), visited: self.visited + 1 }
    }

    /// Gain of appending `task` at the tail, without counting the evaluation.
    #[inline]
    pub fn gain_uncounted(&self, inst: &Instance, agent: AgentId, task: TaskId) -> f64 {
        let tau = self.length + self.tail.distance(inst.task(task).position);
        term(inst, agent, task, tau, self.visited + 1)
    }

    /// Gain of appending `task`, charged to `agent` in `counter`.
    #[inline]
    pub fn gain(&self, inst: &Instance, agent: AgentId, task: TaskId, counter: &mut EvalCounter) -> f64 {
        counter.record(agent);
        self.gain_uncounted(inst, agent, task)
    }
}

fn check_list(agent: AgentId, tasks: &[TaskId], inst: &Instance) -> Result<()> {
    inst.check_agent(agent)?;
    for &t in tasks {
        inst.check_task(t)?;
    }
    Ok(())
}

fn check_distinct(tasks: &[TaskId], inst: &Instance) -> Result<()> {
    let mut seen = vec![false; inst.n_tasks()];
    for &t in tasks {
        if std::mem::replace(&mut seen[t.index()], true) {
            return Err(Error::contract(format!("task {t} listed twice")));
        }
    }
    Ok(())
}

/// Euclidean polyline length start -> task_1 -> ... -> task_n, in km.
pub fn path_length(agent: AgentId, ordered_tasks: &[TaskId], inst: &Instance) -> Result<f64> {
    check_list(agent, ordered_tasks, inst)?;
    Ok(Route::through(inst, agent, ordered_tasks).length)
}

/// Gain of appending `task` to `current_list`. Counts one evaluation for `agent`.
pub fn marginal_gain(
    agent: AgentId,
    task: TaskId,
    current_list: &[TaskId],
    inst: &Instance,
    counter: &mut EvalCounter,
) -> Result<f64> {
    check_list(agent, current_list, inst)?;
    inst.check_task(task)?;
    if current_list.contains(&task) {
        return Err(Error::contract(format!("task {task} already in the list of {agent}")));
    }
    Ok(Route::through(inst, agent, current_list).gain(inst, agent, task, counter))
}

/// Surveillance value of an ordered, duplicate-free task list.
pub fn agent_value(agent: AgentId, ordered_tasks: &[TaskId], inst: &Instance) -> Result<f64> {
    check_list(agent, ordered_tasks, inst)?;
    check_distinct(ordered_tasks, inst)?;
    let mut route = Route::start(inst, agent);
    let mut value = 0.0;
    for &t in ordered_tasks {
        value += route.gain_uncounted(inst, agent, t);
        route = route.extended(inst, t);
    }
    Ok(value)
}

/// Sampling ranges for random scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub arena: f64,
    pub importance: (f64, f64),
    pub fitness: (f64, f64),
    pub lambda_d: f64,
    pub lambda_n: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            arena: 10.0,
            importance: (0.6, 1.0),
            fitness: (0.5, 1.0),
            lambda_d: 0.95,
            lambda_n: 0.98,
        }
    }
}

// Independent ChaCha streams per quantity: changing the agent count leaves
// task geometry and importance untouched.
const STREAM_TASK_POSITIONS: u64 = 1;
const STREAM_IMPORTANCE: u64 = 2;
const STREAM_AGENT_POSITIONS: u64 = 3;
const STREAM_FITNESS: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Random instance with the default surveillance parameters.
pub fn generate_instance(n_tasks: usize, n_agents: usize, seed: u64) -> Result<Instance> {
    generate_instance_with(n_tasks, n_agents, seed, &ScenarioParams::default())
}

pub fn generate_instance_with(
    n_tasks: usize,
    n_agents: usize,
    seed: u64,
    params: &ScenarioParams,
) -> Result<Instance> {
    if n_tasks == 0 || n_agents == 0 {
        return Err(Error::input(format!(
            "need at least one task and one agent, got {n_tasks} tasks and {n_agents} agents"
        )));
    }
    let l = params.arena;
    let mut pos = stream(seed, STREAM_TASK_POSITIONS);
    let mut imp = stream(seed, STREAM_IMPORTANCE);
    let tasks = (0..n_tasks)
        .map(|_| Task {
            position: Point::new(pos.gen_range(0.0..=l), pos.gen_range(0.0..=l)),
            importance: imp.gen_range(params.importance.0..=params.importance.1),
        })
        .collect();

    let mut start = stream(seed, STREAM_AGENT_POSITIONS);
    let mut fit = stream(seed, STREAM_FITNESS);
    let agents = (0..n_agents)
        .map(|_| Agent {
            start: Point::new(start.gen_range(0.0..=l), start.gen_range(0.0..=l)),
            fitness: (0..n_tasks).map(|_| fit.gen_range(params.fitness.0..=params.fitness.1)).collect(),
        })
        .collect();

    Instance::new(tasks, agents, params.lambda_d, params.lambda_n, l)
}
