use crate::alloc::{check_epsilon, check_setup, AllocationEvent, Allocator, RunResult, ThresholdSchedule};
use crate::consensus::{max_coor, max_cons, BidMessage, StepCounter, Topology};
use crate::error::Result;
use crate::model::{AgentId, Allocation, EvalCounter, Instance, TaskId};
use crate::surveillance::Route;

/// Decentralized decreasing-threshold task allocation.
///
/// Every round each agent scans its remaining tasks in ascending id order and
/// bids the first one whose marginal gain clears the shared threshold. One
/// coordination step commits all non-conflicting winners at once; a round in
/// which nobody bids lowers the threshold by a factor `1 - epsilon`.
#[derive(Debug, Clone, Copy)]
pub struct Dtta {
    epsilon: f64,
}

impl Dtta {
    pub fn new(epsilon: f64) -> Result<Self> {
        Ok(Dtta { epsilon: check_epsilon(epsilon)? })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

struct AgentState {
    id: AgentId,
    /// Unallocated tasks in ascending id order.
    remaining: Vec<TaskId>,
    route: Route,
}

impl AgentState {
    fn first_qualified(&self, inst: &Instance, theta: f64, counter: &mut EvalCounter) -> BidMessage {
        for &task in &self.remaining {
            let gain = self.route.gain(inst, self.id, task, counter);
            if gain >= theta {
                return BidMessage::new(self.id, task, gain);
            }
        }
        BidMessage::none(self.id)
    }
}

impl Allocator for Dtta {
    fn name(&self) -> &'static str {
        "dtta"
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

        let mut agents: Vec<AgentState> = inst
            .agent_ids()
            .map(|id| AgentState { id, remaining: inst.task_ids().collect(), route: Route::start(inst, id) })
            .collect();

        let local_best: Vec<f64> = agents
            .iter()
            .map(|s| {
                s.remaining
                    .iter()
                    .map(|&t| s.route.gain(inst, s.id, t, &mut counter))
                    .fold(0.0, f64::max)
            })
            .collect();
        let d = max_cons(&local_best, topo, &mut steps)?.value;

        let mut schedule = ThresholdSchedule::new(d, self.epsilon, r)?;
        let mut levels = 0;
        // Every agent removes the same committed set each round, so all
        // `remaining` lists stay identical; an empty list ends the run for everyone.
        while schedule.is_active() && !agents[0].remaining.is_empty() {
            levels += 1;
            let theta = schedule.theta();
            loop {
                let bids: Vec<BidMessage> =
                    agents.iter().map(|s| s.first_qualified(inst, theta, &mut counter)).collect();
                let round = max_coor(&bids, topo, &mut steps)?;
                for &(agent, task, gain) in &round.winners {
                    let state = &mut agents[agent.index()];
                    state.route = state.route.extended(inst, task);
                    allocation.push(agent, task);
                    events.push(AllocationEvent { agent, task, marginal: gain, threshold: Some(theta) });
                }
                let committed = round.tasks();
                for state in &mut agents {
                    state.remaining.retain(|t| !committed.contains(t));
                }
                if round.is_empty() || agents[0].remaining.is_empty() {
                    break;
                }
            }
            schedule.advance();
        }
        RunResult::finish(inst, allocation, counter, steps, levels, events, Some(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::unit_instance;
    use crate::model::{Agent, Point, Task};

    #[test]
    fn one_agent_one_task() {
        let inst = unit_instance(&[(0.0, 0.0)], &[(3.0, 4.0)]);
        let res = Dtta::new(0.1).unwrap().allocate(&inst, &Topology::complete(1)).unwrap();
        assert_eq!(res.allocation.tasks_of(AgentId(0)), &[TaskId(0)]);
        assert_eq!(res.metrics.threshold_levels, 1);
        assert_eq!(res.events[0].threshold, res.initial_threshold);
        // init MaxCons + one coordination round
        assert_eq!(res.metrics.consensus_steps, 2);
        assert_eq!(res.metrics.evals_total, 2);
    }

    #[test]
    fn larger_bid_wins_contested_task() {
        let tasks = vec![Task { position: Point::new(5.0, 5.0), importance: 1.0 }];
        let agents = vec![
            Agent { start: Point::new(5.0, 5.0), fitness: vec![0.6] },
            Agent { start: Point::new(5.0, 5.0), fitness: vec![0.9] },
        ];
        let inst = Instance::new(tasks, agents, 0.95, 0.98, 10.0).unwrap();
        let res = Dtta::new(0.5).unwrap().allocate(&inst, &Topology::complete(2)).unwrap();
        // agent 0's gain is below the initial threshold, so only agent 1 bids at level 0
        assert_eq!(res.allocation.tasks_of(AgentId(1)), &[TaskId(0)]);
    }

    #[test]
    fn tie_goes_to_lower_id() {
        let inst = unit_instance(&[(1.0, 1.0), (1.0, 1.0)], &[(2.0, 2.0)]);
        let res = Dtta::new(0.2).unwrap().allocate(&inst, &Topology::ring(2)).unwrap();
        assert_eq!(res.allocation.tasks_of(AgentId(0)), &[TaskId(0)]);
        assert!(res.allocation.tasks_of(AgentId(1)).is_empty());
    }

    #[test]
    fn several_tasks_commit_in_one_round() {
        // Each agent sits on top of its own task: both bid at level 0 without conflict.
        let inst = unit_instance(&[(1.0, 1.0), (9.0, 9.0)], &[(1.0, 1.0), (9.0, 9.0)]);
        let res = Dtta::new(0.1).unwrap().allocate(&inst, &Topology::complete(2)).unwrap();
        assert_eq!(res.allocation.tasks_of(AgentId(0)), &[TaskId(0)]);
        assert_eq!(res.allocation.tasks_of(AgentId(1)), &[TaskId(1)]);
        assert_eq!(res.metrics.consensus_steps, 2);
    }

    #[test]
    fn topology_size_mismatch() {
        let inst = unit_instance(&[(0.0, 0.0)], &[(3.0, 4.0)]);
        assert!(Dtta::new(0.1).unwrap().allocate(&inst, &Topology::complete(2)).is_err());
    }
}
