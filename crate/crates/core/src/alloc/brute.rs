use itertools::Itertools;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, TaskId};
use crate::surveillance::agent_value;

pub const BRUTE_FORCE_MAX_TASKS: usize = 7;
pub const BRUTE_FORCE_MAX_AGENTS: usize = 3;

/// Exact optimum by enumeration: every task goes to one agent or stays
/// unassigned, and every agent visits its tasks in the best possible order.
///
/// `max_tasks` / `max_agents` bound the instance size the caller is willing to
/// enumerate; both are capped at 7 tasks and 3 agents.
pub fn brute_force_opt(inst: &Instance, max_tasks: usize, max_agents: usize) -> Result<(f64, Allocation)> {
    let (r, n) = (inst.n_tasks(), inst.n_agents());
    let max_tasks = max_tasks.min(BRUTE_FORCE_MAX_TASKS);
    let max_agents = max_agents.min(BRUTE_FORCE_MAX_AGENTS);
    if r > max_tasks || n > max_agents {
        return Err(Error::input(format!(
            "brute force limited to {max_tasks} tasks and {max_agents} agents, got {r} and {n}"
        )));
    }

    // best[a][mask]: best visiting order of the task subset `mask` for agent `a`
    let mut best: Vec<Vec<(f64, Vec<TaskId>)>> = Vec::with_capacity(n);
    for a in inst.agent_ids() {
        let mut per_mask = Vec::with_capacity(1 << r);
        for mask in 0u32..(1 << r) {
            let subset: Vec<TaskId> = (0..r).filter(|j| mask & (1 << j) != 0).map(TaskId::from).collect();
            let k = subset.len();
            let mut top = (0.0, Vec::new());
            for order in subset.into_iter().permutations(k) {
                let v = agent_value(a, &order, inst)?;
                if v > top.0 {
                    top = (v, order);
                }
            }
            per_mask.push(top);
        }
        best.push(per_mask);
    }

    // Enumerate owner (agent or none) for each task in base n+1.
    let mut top_value = 0.0;
    let mut top_masks = vec![0u32; n];
    let combos = (n + 1).pow(r as u32);
    let mut masks = vec![0u32; n];
    for code in 0..combos {
        masks.iter_mut().for_each(|m| *m = 0);
        let mut c = code;
        for j in 0..r {
            let owner = c % (n + 1);
            c /= n + 1;
            if owner < n {
                masks[owner] |= 1 << j;
            }
        }
        let v: f64 = masks.iter().enumerate().map(|(a, &m)| best[a][m as usize].0).sum();
        if v > top_value {
            top_value = v;
            top_masks.copy_from_slice(&masks);
        }
    }
    let lists = top_masks.iter().enumerate().map(|(a, &m)| best[a][m as usize].1.clone()).collect();
    Ok((top_value, Allocation::from_lists(lists)))
}
