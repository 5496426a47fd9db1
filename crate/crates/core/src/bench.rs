//! Monte-Carlo experiment runner.
//!
//! Every `(agent count, trial)` unit draws one instance from a seed derived
//! from the master seed and the trial index alone, so all algorithms and all
//! epsilons in a unit are compared on the same instance. Units run in parallel;
//! rows come back in a fixed order, so the CSV is byte-identical for identical
//! configurations as long as wall-clock recording stays off.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alloc::{Registry, SolverParams};
use crate::consensus::TopologyKind;
use crate::error::{Error, Result};
use crate::surveillance::generate_instance;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_tasks: usize,
    pub agent_counts: Vec<usize>,
    pub trials: usize,
    pub epsilons: Vec<f64>,
    pub algos: Vec<String>,
    pub topology: TopologyKind,
    pub seed: u64,
    /// Fill the `wall_ms` column. Off by default since it breaks reproducibility.
    pub record_wall_clock: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_tasks: 200,
            agent_counts: vec![10, 20, 30, 40, 50],
            trials: 100,
            epsilons: vec![0.05],
            algos: ["dtta", "ldtta", "sga"].map(String::from).to_vec(),
            topology: TopologyKind::Complete,
            seed: 1,
            record_wall_clock: false,
        }
    }
}

impl ExperimentConfig {
    /// Epsilon values swept in the accuracy/cost trade-off study.
    pub const TRADEOFF_EPSILONS: [f64; 3] = [0.1, 0.2, 0.3];

    pub fn validate(&self, registry: &Registry) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::input("trials must be at least 1"));
        }
        if self.n_tasks == 0 || self.agent_counts.is_empty() || self.agent_counts.contains(&0) {
            return Err(Error::input("need at least one task and non-zero agent counts"));
        }
        if self.algos.is_empty() {
            return Err(Error::input("no algorithms selected"));
        }
        for algo in &self.algos {
            if registry.entry(algo)?.uses_epsilon && self.epsilons.is_empty() {
                return Err(Error::input(format!("`{algo}` needs at least one epsilon")));
            }
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::input(format!("epsilon must lie in (0,1), got {e}")));
        }
        Ok(())
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Instance seed for a trial; independent of algorithm and agent count.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    mix(mix(master) ^ trial as u64)
}

fn topology_seed(trial_seed: u64) -> u64 {
    mix(trial_seed ^ 0x746f_706f)
}

/// One CSV row: one solver run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub trial: usize,
    pub algo: String,
    pub n_agents: usize,
    pub n_tasks: usize,
    /// Empty for solvers that take no epsilon.
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub value: f64,
    pub evals_total: u64,
    pub evals_per_agent_max: u64,
    pub consensus_steps: u64,
    pub threshold_levels: u32,
    pub wall_ms: f64,
}

pub fn run_experiment(cfg: &ExperimentConfig, registry: &Registry) -> Result<Vec<RunRow>> {
    cfg.validate(registry)?;
    let units: Vec<(usize, usize)> = cfg
        .agent_counts
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let per_unit: Vec<Vec<RunRow>> = units
        .par_iter()
        .map(|&(n_agents, trial)| run_unit(cfg, registry, n_agents, trial))
        .collect::<Result<_>>()?;
    Ok(per_unit.into_iter().flatten().collect())
}

fn run_unit(cfg: &ExperimentConfig, registry: &Registry, n_agents: usize, trial: usize) -> Result<Vec<RunRow>> {
    let seed = trial_seed(cfg.seed, trial);
    let inst = generate_instance(cfg.n_tasks, n_agents, seed)?;
    let topo = cfg.topology.build(n_agents, topology_seed(seed))?;
    let mut rows = Vec::new();
    for algo in &cfg.algos {
        let epsilons: Vec<Option<f64>> = if registry.entry(algo)?.uses_epsilon {
            cfg.epsilons.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for epsilon in epsilons {
            let solver = registry.build(algo, &SolverParams { epsilon: epsilon.unwrap_or(0.5) })?;
            let started = Instant::now();
            let res = solver.allocate(&inst, &topo)?;
            let wall_ms = if cfg.record_wall_clock { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            rows.push(RunRow {
                trial,
                algo: algo.clone(),
                n_agents,
                n_tasks: cfg.n_tasks,
                epsilon,
                seed,
                value: res.metrics.value,
                evals_total: res.metrics.evals_total,
                evals_per_agent_max: res.metrics.evals_per_agent_max(),
                consensus_steps: res.metrics.consensus_steps,
                threshold_levels: res.metrics.threshold_levels,
                wall_ms,
            });
        }
    }
    Ok(rows)
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows_to_path<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_rows(rows, std::io::BufWriter::new(file))
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<RunRow>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Per-(algo, agents, tasks, epsilon) means and ratios against a baseline algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub algo: String,
    pub n_agents: usize,
    pub n_tasks: usize,
    pub epsilon: Option<f64>,
    pub trials: usize,
    pub mean_value: f64,
    pub mean_evals: f64,
    pub mean_steps: f64,
    pub mean_levels: f64,
    pub value_ratio: f64,
    pub evals_ratio: f64,
    pub steps_ratio: f64,
}

type GroupKey = (String, usize, usize, Option<u64>);

#[derive(Default)]
struct Acc {
    n: usize,
    value: f64,
    evals: f64,
    steps: f64,
    levels: f64,
}

pub fn summarize(rows: &[RunRow], baseline: &str) -> Result<Vec<GroupSummary>> {
    let mut groups: BTreeMap<GroupKey, Acc> = BTreeMap::new();
    for row in rows {
        let key = (row.algo.clone(), row.n_agents, row.n_tasks, row.epsilon.map(f64::to_bits));
        let acc = groups.entry(key).or_default();
        acc.n += 1;
        acc.value += row.value;
        acc.evals += row.evals_total as f64;
        acc.steps += row.consensus_steps as f64;
        acc.levels += row.threshold_levels as f64;
    }
    let means: BTreeMap<&GroupKey, [f64; 4]> = groups
        .iter()
        .map(|(k, a)| {
            let n = a.n as f64;
            (k, [a.value / n, a.evals / n, a.steps / n, a.levels / n])
        })
        .collect();

    let find_baseline = |key: &GroupKey| -> Result<[f64; 4]> {
        let same_eps = (baseline.to_string(), key.1, key.2, key.3);
        let no_eps = (baseline.to_string(), key.1, key.2, None);
        means
            .get(&same_eps)
            .or_else(|| means.get(&no_eps))
            .or_else(|| {
                means
                    .iter()
                    .find(|(k, _)| k.0 == baseline && k.1 == key.1 && k.2 == key.2)
                    .map(|(_, m)| m)
            })
            .copied()
            .ok_or_else(|| {
                Error::Report(format!("no `{baseline}` baseline rows for {} agents / {} tasks", key.1, key.2))
            })
    };

    groups
        .iter()
        .map(|(key, acc)| {
            let m = means[key];
            let b = find_baseline(key)?;
            Ok(GroupSummary {
                algo: key.0.clone(),
                n_agents: key.1,
                n_tasks: key.2,
                epsilon: key.3.map(f64::from_bits),
                trials: acc.n,
                mean_value: m[0],
                mean_evals: m[1],
                mean_steps: m[2],
                mean_levels: m[3],
                value_ratio: m[0] / b[0],
                evals_ratio: m[1] / b[1],
                steps_ratio: m[2] / b[2],
            })
        })
        .collect()
}
