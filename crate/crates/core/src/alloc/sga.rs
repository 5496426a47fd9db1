use crate::alloc::{check_setup, AllocationEvent, Allocator, RunResult};
use crate::consensus::{max_cons, StepCounter, Topology};
use crate::error::Result;
use crate::model::{Allocation, EvalCounter, Instance, TaskId};
use crate::surveillance::Route;

/// Decentralized sequential greedy baseline: every round each agent evaluates
/// all remaining tasks, a max-consensus picks the single best task-agent pair,
/// and that one task is committed. Uses exactly one consensus step per task.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialGreedy;

impl Allocator for SequentialGreedy {
    fn name(&self) -> &'static str {
        "sga"
    }

    fn allocate(&self, inst: &Instance, topo: &Topology) -> Result<RunResult> {
        check_setup(inst, topo)?;
        let mut counter = EvalCounter::new(inst.n_agents());
        let mut steps = StepCounter::default();
        let mut allocation = Allocation::new(inst.n_agents());
        let mut events = Vec::new();
        let mut routes: Vec<Route> = inst.agent_ids().map(|a| Route::start(inst, a)).collect();
        let mut remaining: Vec<TaskId> = inst.task_ids().collect();

        while !remaining.is_empty() {
            // (best task, gain) per agent; strict `>` keeps the lowest task id on ties
            let local: Vec<(TaskId, f64)> = inst
                .agent_ids()
                .map(|a| {
                    let route = routes[a.index()];
                    remaining.iter().fold((remaining[0], f64::NEG_INFINITY), |best, &t| {
                        let g = route.gain(inst, a, t, &mut counter);
                        if g > best.1 {
                            (t, g)
                        } else {
                            best
                        }
                    })
                })
                .collect();
            let values: Vec<f64> = local.iter().map(|l| l.1).collect();
            let outcome = max_cons(&values, topo, &mut steps)?;
            let agent = outcome.winner;
            let (task, gain) = local[agent.index()];
            routes[agent.index()] = routes[agent.index()].extended(inst, task);
            allocation.push(agent, task);
            events.push(AllocationEvent { agent, task, marginal: gain, threshold: None });
            remaining.retain(|&t| t != task);
        }
        RunResult::finish(inst, allocation, counter, steps, 0, events, None)
    }
}
