use std::collections::BTreeSet;

use crate::alloc::{check_epsilon, check_setup, AllocationEvent, Allocator, RunResult, ThresholdSchedule};
use crate::consensus::{max_coor, max_cons, BidMessage, StepCounter, Topology};
use crate::error::Result;
use crate::model::{AgentId, Allocation, EvalCounter, Instance, TaskId};
use crate::surveillance::Route;

/// Decreasing-threshold allocation with lazy evaluation.
///
/// Each agent keeps its remaining tasks sorted by a cached marginal gain.
/// Gains only shrink as the agent's own list grows, so a cached value is an
/// upper bound: if the head's cached value is below the threshold nothing else
/// can qualify and the agent bids zero without evaluating anything. Otherwise
/// the head is re-evaluated; a head that no longer qualifies is re-inserted at
/// its new rank and the next head is tried within the same round.
#[derive(Debug, Clone, Copy)]
pub struct LazyDtta {
    epsilon: f64,
}

impl LazyDtta {
    pub fn new(epsilon: f64) -> Result<Self> {
        Ok(LazyDtta { epsilon: check_epsilon(epsilon)? })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

struct AgentState {
    id: AgentId,
    /// `(task, cached gain)`, descending by gain.
    cache: Vec<(TaskId, f64)>,
    route: Route,
}

impl AgentState {
    fn init(inst: &Instance, id: AgentId, counter: &mut EvalCounter) -> Self {
        let route = Route::start(inst, id);
        let mut cache: Vec<(TaskId, f64)> =
            inst.task_ids().map(|t| (t, route.gain(inst, id, t, counter))).collect();
        // stable: equal gains keep ascending task id
        cache.sort_by(|a, b| b.1.total_cmp(&a.1));
        AgentState { id, cache, route }
    }

    fn bid(&mut self, inst: &Instance, theta: f64, counter: &mut EvalCounter) -> BidMessage {
        while let Some(&(task, cached)) = self.cache.first() {
            if cached < theta {
                break;
            }
            let gain = self.route.gain(inst, self.id, task, counter);
            if gain >= theta {
                self.cache[0].1 = gain;
                return BidMessage::new(self.id, task, gain);
            }
            self.cache.remove(0);
            let at = self.cache.partition_point(|e| e.1 > gain);
            self.cache.insert(at, (task, gain));
        }
        BidMessage::none(self.id)
    }

    fn drop_committed(&mut self, committed: &BTreeSet<TaskId>) {
        self.cache.retain(|(t, _)| !committed.contains(t));
    }
}

impl Allocator for LazyDtta {
    fn name(&self) -> &'static str {
        "ldtta"
    }

    fn allocate(&self, inst: &Instance, topo: &Topology) -> Result<RunResult> {
        check_setup(inst, topo)?;
        let r = inst.n_tasks();
        let mut counter = EvalCounter::new(inst.n_agents());
        let mut steps = StepCounter::default();
        let mut allocation = Allocation::new(inst.n_agents());
        let mut events = Vec::new();
        if r == 0 {
            return RunResult::finish(inst, allocation, counter, steps, 0, events, None);
        }

        let mut agents: Vec<AgentState> =
            inst.agent_ids().map(|id| AgentState::init(inst, id, &mut counter)).collect();
        let heads: Vec<f64> = agents.iter().map(|s| s.cache[0].1).collect();
        let d = max_cons(&heads, topo, &mut steps)?.value;

        let mut schedule = ThresholdSchedule::new(d, self.epsilon, r)?;
        let mut levels = 0;
        while schedule.is_active() && !agents[0].cache.is_empty() {
            levels += 1;
            let theta = schedule.theta();
            loop {
                let bids: Vec<BidMessage> = agents.iter_mut().map(|s| s.bid(inst, theta, &mut counter)).collect();
                let round = max_coor(&bids, topo, &mut steps)?;
                for &(agent, task, gain) in &round.winners {
                    let state = &mut agents[agent.index()];
                    state.route = state.route.extended(inst, task);
                    allocation.push(agent, task);
                    events.push(AllocationEvent { agent, task, marginal: gain, threshold: Some(theta) });
                }
                let committed = round.tasks();
                for state in &mut agents {
                    state.drop_committed(&committed);
                }
                if round.is_empty() || agents[0].cache.is_empty() {
                    break;
                }
            }
            schedule.advance();
        }
        RunResult::finish(inst, allocation, counter, steps, levels, events, Some(d))
    }
}
