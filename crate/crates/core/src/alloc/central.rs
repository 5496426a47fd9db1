use crate::alloc::{check_epsilon, AllocationEvent, Allocator, RunResult, ThresholdSchedule};
use crate::consensus::{StepCounter, Topology};
use crate::error::{Error, Result};
use crate::model::{ground_set, Allocation, EvalCounter, GroundPair, Instance};
use crate::surveillance::Route;

/// Output of [`threshold_greedy_matroid`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatroidSelection {
    /// Selected pairs in selection order.
    pub selected: Vec<GroundPair>,
    pub allocation: Allocation,
    pub events: Vec<AllocationEvent>,
    pub counter: EvalCounter,
    pub threshold_levels: u32,
    pub initial_threshold: Option<f64>,
}

/// Centralized decreasing-threshold greedy over task-agent pairs under the
/// partition matroid "each task at most once".
///
/// Pairs are scanned in the given order at each threshold level. A pair whose
/// task is already taken is dropped without evaluation; a pair whose gain
/// clears the threshold is selected; a pair whose gain has fallen below the
/// terminal threshold is dropped for good.
pub fn threshold_greedy_matroid(ground: &[GroundPair], inst: &Instance, epsilon: f64) -> Result<MatroidSelection> {
    check_epsilon(epsilon)?;
    for p in ground {
        inst.check_task(p.task)?;
        inst.check_agent(p.agent)?;
    }
    let mut counter = EvalCounter::new(inst.n_agents());
    let mut allocation = Allocation::new(inst.n_agents());
    let mut selected = Vec::new();
    let mut events = Vec::new();
    if ground.is_empty() {
        return Ok(MatroidSelection {
            selected,
            allocation,
            events,
            counter,
            threshold_levels: 0,
            initial_threshold: None,
        });
    }

    let mut routes: Vec<Route> = inst.agent_ids().map(|a| Route::start(inst, a)).collect();
    let d = ground
        .iter()
        .map(|p| routes[p.agent.index()].gain(inst, p.agent, p.task, &mut counter))
        .fold(0.0, f64::max);
    let mut schedule = ThresholdSchedule::new(d, epsilon, inst.n_tasks())?;
    let terminal = schedule.terminal();

    let mut taken = vec![false; inst.n_tasks()];
    let mut remaining = ground.to_vec();
    let mut levels = 0;
    while schedule.is_active() && !remaining.is_empty() {
        levels += 1;
        let theta = schedule.theta();
        let mut kept = Vec::with_capacity(remaining.len());
        for pair in remaining {
            if taken[pair.task.index()] {
                continue;
            }
            let route = &mut routes[pair.agent.index()];
            let gain = route.gain(inst, pair.agent, pair.task, &mut counter);
            if gain >= theta {
                *route = route.extended(inst, pair.task);
                taken[pair.task.index()] = true;
                allocation.push(pair.agent, pair.task);
                selected.push(pair);
                events.push(AllocationEvent { agent: pair.agent, task: pair.task, marginal: gain, threshold: Some(theta) });
            } else if gain >= terminal {
                kept.push(pair);
            }
        }
        remaining = kept;
        schedule.advance();
    }
    Ok(MatroidSelection { selected, allocation, events, counter, threshold_levels: levels, initial_threshold: Some(d) })
}

/// [`threshold_greedy_matroid`] over the full task x agent ground set.
#[derive(Debug, Clone, Copy)]
pub struct CentralThresholdGreedy {
    epsilon: f64,
}

impl CentralThresholdGreedy {
    pub fn new(epsilon: f64) -> Result<Self> {
        Ok(CentralThresholdGreedy { epsilon: check_epsilon(epsilon)? })
    }
}

impl Allocator for CentralThresholdGreedy {
    fn name(&self) -> &'static str {
        "central"
    }

    fn allocate(&self, inst: &Instance, _topo: &Topology) -> Result<RunResult> {
        if inst.n_agents() == 0 {
            return Err(Error::input("instance has no agents"));
        }
        let sel = threshold_greedy_matroid(&ground_set(inst), inst, self.epsilon)?;
        RunResult::finish(
            inst,
            sel.allocation,
            sel.counter,
            StepCounter::default(),
            sel.threshold_levels,
            sel.events,
            sel.initial_threshold,
        )
    }
}
