//! Exit criteria. Each test prints one `[PASS]`/`[FAIL]` line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use threshold_alloc::alloc::{brute_force_opt, ThresholdSchedule};
use threshold_alloc::bench::{run_experiment, summarize, write_rows, ExperimentConfig, GroupSummary};
use threshold_alloc::consensus::{max_coor, max_cons, BidMessage, StepCounter};
use threshold_alloc::surveillance::{generate_instance, generate_instance_with, marginal_gain, ScenarioParams};
use threshold_alloc::{AgentId, EvalCounter, Registry, SolverParams, TaskId, Topology, TopologyKind};

fn report(name: &str, failures: &[String], elapsed: Duration, limit: Duration) {
    let timed_out = elapsed > limit;
    let verdict = if failures.is_empty() && !timed_out { "PASS" } else { "FAIL" };
    println!("[{verdict}] {name} ({:.2}s, limit {}s)", elapsed.as_secs_f64(), limit.as_secs());
    for f in failures {
        println!("        {f}");
    }
    assert!(failures.is_empty(), "{name}: {} violation(s), first: {}", failures.len(), failures[0]);
    assert!(!timed_out, "{name}: took {elapsed:?}, limit {limit:?}");
}

#[test]
fn objective_diminishing_returns_and_positivity() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1_5C0);
    let mut failures = Vec::new();
    let a0 = AgentId(0);
    for case in 0..1000 {
        let r = rng.gen_range(2..=15);
        let params = if case % 2 == 0 {
            ScenarioParams::default()
        } else {
            ScenarioParams { lambda_d: rng.gen_range(0.5..=1.0), lambda_n: rng.gen_range(0.5..=1.0), ..ScenarioParams::default() }
        };
        let inst = generate_instance_with(r, 1, rng.gen(), &params).unwrap();
        let mut tasks: Vec<TaskId> = inst.task_ids().collect();
        tasks.shuffle(&mut rng);
        let j = tasks.pop().unwrap();
        let b_len = rng.gen_range(0..=tasks.len());
        let longer = &tasks[..b_len];
        let shorter: Vec<TaskId> = longer.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let mut c = EvalCounter::new(1);
        let ga = marginal_gain(a0, j, &shorter, &inst, &mut c).unwrap();
        let gb = marginal_gain(a0, j, longer, &inst, &mut c).unwrap();
        if !(ga > 0.0 && gb > 0.0) {
            failures.push(format!("case {case}: non-positive marginal ({ga}, {gb})"));
        }
        if ga < gb - 1e-12 {
            failures.push(format!("case {case}: gain given subsequence {ga} < gain given list {gb}"));
        }
    }
    report("objective: positivity + diminishing returns on 1000 cases", &failures, started.elapsed(), Duration::from_secs(5));
}

#[test]
fn approximation_bound_against_brute_force() {
    let started = Instant::now();
    let registry = Registry::builtin();
    let topo = Topology::complete(3);
    let mut failures = Vec::new();
    for seed in 0..30u64 {
        let inst = generate_instance(6, 3, 1000 + seed).unwrap();
        let (opt, _) = brute_force_opt(&inst, 7, 3).unwrap();
        let sga = registry.build("sga", &SolverParams { epsilon: 0.5 }).unwrap().allocate(&inst, &topo).unwrap();
        if sga.metrics.value < 0.5 * opt {
            failures.push(format!("seed {seed}: sga {} < OPT/2 = {}", sga.metrics.value, 0.5 * opt));
        }
        for eps in [0.05, 0.1, 0.3] {
            for algo in ["dtta", "ldtta", "central"] {
                let res = registry.build(algo, &SolverParams { epsilon: eps }).unwrap().allocate(&inst, &topo).unwrap();
                let bound = (0.5 - eps) * opt;
                if res.metrics.value < bound {
                    failures.push(format!("seed {seed} eps {eps}: {algo} {} < {bound}", res.metrics.value));
                }
                if res.metrics.value > opt + 1e-9 {
                    failures.push(format!("seed {seed} eps {eps}: {algo} {} exceeds OPT {opt}", res.metrics.value));
                }
            }
        }
    }
    report("approximation bound: (1/2 - eps) OPT for threshold solvers, OPT/2 for SGA", &failures, started.elapsed(), Duration::from_secs(60));
}

#[test]
fn sga_consensus_steps_equal_task_count() {
    let started = Instant::now();
    let sga = Registry::builtin().build("sga", &SolverParams { epsilon: 0.5 }).unwrap();
    let mut failures = Vec::new();
    for (r, n) in [(1, 1), (1, 5), (7, 3), (50, 4), (120, 13), (200, 10), (200, 50)] {
        let inst = generate_instance(r, n, r as u64 * 31 + n as u64).unwrap();
        for kind in [TopologyKind::Complete, TopologyKind::Ring, TopologyKind::Random { p: 0.1 }] {
            let steps = sga.allocate(&inst, &kind.build(n, 3).unwrap()).unwrap().metrics.consensus_steps;
            if steps != r as u64 {
                failures.push(format!("r={r} n={n} {kind}: {steps} steps"));
            }
        }
    }
    report("SGA consensus steps == number of tasks", &failures, started.elapsed(), Duration::from_secs(60));
}

#[test]
fn threshold_levels_within_budget() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let budget = ThresholdSchedule::level_budget(200, 0.05);
    if budget != 162 {
        failures.push(format!("closed-form budget for r=200, eps=0.05 is {budget}, expected 162"));
    }
    let registry = Registry::builtin();
    for &(r, n, eps) in &[(200usize, 10usize, 0.05), (200, 50, 0.05), (200, 1, 0.05), (200, 3, 0.1), (60, 2, 0.3), (6, 3, 0.2)] {
        let budget = ThresholdSchedule::level_budget(r, eps);
        for seed in 0..5 {
            let inst = generate_instance(r, n, seed).unwrap();
            for algo in ["dtta", "ldtta"] {
                let res = registry.build(algo, &SolverParams { epsilon: eps }).unwrap().allocate(&inst, &Topology::complete(n)).unwrap();
                if res.metrics.threshold_levels > budget {
                    failures.push(format!("{algo} r={r} n={n} eps={eps}: {} levels > {budget}", res.metrics.threshold_levels));
                }
            }
        }
    }
    report("threshold levels <= ceil(ln(r/eps)/ln(1/(1-eps))) (162 at r=200, eps=0.05)", &failures, started.elapsed(), Duration::from_secs(60));
}

fn group<'a>(groups: &'a [GroupSummary], algo: &str, agents: usize, eps: Option<f64>) -> &'a GroupSummary {
    groups
        .iter()
        .find(|g| g.algo == algo && g.n_agents == agents && g.epsilon == eps)
        .unwrap_or_else(|| panic!("missing group {algo}/{agents}/{eps:?}"))
}

#[test]
fn paper_scale_comparison() {
    let started = Instant::now();
    let cfg = ExperimentConfig { agent_counts: vec![10, 50], epsilons: vec![0.05], ..ExperimentConfig::default() };
    assert_eq!((cfg.n_tasks, cfg.trials), (200, 100));
    let rows = run_experiment(&cfg, &Registry::builtin()).unwrap();
    let groups = summarize(&rows, "sga").unwrap();
    let r = cfg.n_tasks as f64;
    let mut failures = Vec::new();
    for agents in [10, 50] {
        let sga = group(&groups, "sga", agents, None);
        let dtta = group(&groups, "dtta", agents, Some(0.05));
        let ldtta = group(&groups, "ldtta", agents, Some(0.05));
        println!(
            "        agents={agents}: value ratio dtta {:.4} ldtta {:.4}; eval ratio dtta {:.4} ldtta {:.4}; step ratio dtta {:.4} ldtta {:.4}",
            dtta.value_ratio, ldtta.value_ratio, dtta.evals_ratio, ldtta.evals_ratio, dtta.steps_ratio, ldtta.steps_ratio
        );
        for g in [dtta, ldtta] {
            if g.mean_value < 0.90 * sga.mean_value {
                failures.push(format!("{} at {agents}: mean value {} < 0.9 x SGA {}", g.algo, g.mean_value, sga.mean_value));
            }
            if g.mean_steps >= r {
                failures.push(format!("{} at {agents}: mean steps {} >= r", g.algo, g.mean_steps));
            }
        }
        if !(ldtta.mean_evals < dtta.mean_evals && dtta.mean_evals < sga.mean_evals) {
            failures.push(format!(
                "evals at {agents}: expected ldtta {} < dtta {} < sga {}",
                ldtta.mean_evals, dtta.mean_evals, sga.mean_evals
            ));
        }
    }
    let l10 = group(&groups, "ldtta", 10, Some(0.05));
    let l50 = group(&groups, "ldtta", 50, Some(0.05));
    if l50.mean_steps >= l10.mean_steps {
        failures.push(format!("ldtta steps did not drop with more agents: {} (50) vs {} (10)", l50.mean_steps, l10.mean_steps));
    }
    if l50.evals_ratio >= 0.10 {
        failures.push(format!("ldtta eval ratio at 50 agents {} >= 10%", l50.evals_ratio));
    }
    if l50.steps_ratio >= 0.30 {
        failures.push(format!("ldtta step ratio at 50 agents {} >= 30%", l50.steps_ratio));
    }
    report("paper-scale comparison (r=200, 100 trials, eps=0.05, 10/50 agents)", &failures, started.elapsed(), Duration::from_secs(600));
}

#[test]
fn epsilon_tradeoff_is_monotone() {
    let started = Instant::now();
    let cfg = ExperimentConfig {
        agent_counts: vec![30],
        epsilons: ExperimentConfig::TRADEOFF_EPSILONS.to_vec(),
        algos: vec!["ldtta".into(), "dtta".into(), "sga".into()],
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg, &Registry::builtin()).unwrap();
    let groups = summarize(&rows, "sga").unwrap();
    let mut failures = Vec::new();
    for algo in ["ldtta", "dtta"] {
        let series: Vec<&GroupSummary> =
            ExperimentConfig::TRADEOFF_EPSILONS.iter().map(|&e| group(&groups, algo, 30, Some(e))).collect();
        println!(
            "        {algo}: value {:?} evals {:?} steps {:?}",
            series.iter().map(|g| g.mean_value).collect::<Vec<_>>(),
            series.iter().map(|g| g.mean_evals).collect::<Vec<_>>(),
            series.iter().map(|g| g.mean_steps).collect::<Vec<_>>()
        );
        for w in series.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            for (metric, a, b) in [
                ("value", lo.mean_value, hi.mean_value),
                ("evals", lo.mean_evals, hi.mean_evals),
                ("steps", lo.mean_steps, hi.mean_steps),
            ] {
                if b > a {
                    failures.push(format!("{algo} mean {metric} rose from {a} (eps {:?}) to {b} (eps {:?})", lo.epsilon, hi.epsilon));
                }
            }
        }
    }
    report("trade-off: value, evals, steps non-increasing in eps (30 agents, 100 trials)", &failures, started.elapsed(), Duration::from_secs(600));
}

#[test]
fn consensus_primitives() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n in [1usize, 2, 5, 12, 30] {
        let topologies = [
            ("complete", Topology::complete(n)),
            ("ring", Topology::ring(n)),
            ("random", Topology::random_connected(n, 0.15, n as u64).unwrap()),
        ];
        for _ in 0..10 {
            let values: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..20) as f64) / 20.0).collect();
            let top = values.iter().cloned().fold(f64::MIN, f64::max);
            let expected = AgentId::from(values.iter().position(|&v| v == top).unwrap());
            for (name, topo) in &topologies {
                let mut steps = StepCounter::default();
                let out = max_cons(&values, topo, &mut steps).unwrap();
                if out.winner != expected || out.value != top {
                    failures.push(format!("max_cons {name} n={n}: got ({}, {}), want ({expected}, {top})", out.winner, out.value));
                }
                let diameter = topo.diameter().unwrap();
                if out.rounds > diameter {
                    failures.push(format!("max_cons {name} n={n}: {} rounds > diameter {diameter}", out.rounds));
                }
                if steps.consensus_steps != 1 {
                    failures.push(format!("max_cons {name}: {} steps", steps.consensus_steps));
                }
            }
        }
    }

    let topo = Topology::ring(4);
    let mut steps = StepCounter::default();
    let a = |i: u32| AgentId(i);
    let zero: Vec<_> = (0..4).map(|i| BidMessage::none(a(i))).collect();
    let out = max_coor(&zero, &topo, &mut steps).unwrap();
    if !(out.agents().is_empty() && out.tasks().is_empty()) {
        failures.push("all-zero bids did not give (empty, empty)".into());
    }
    let bids = [
        BidMessage::new(a(0), TaskId(5), 0.9),
        BidMessage::new(a(1), TaskId(5), 0.8),
        BidMessage::new(a(2), TaskId(7), 0.6),
        BidMessage::none(a(3)),
    ];
    let out = max_coor(&bids, &topo, &mut steps).unwrap();
    if out.winners != vec![(a(0), TaskId(5), 0.9), (a(2), TaskId(7), 0.6)] {
        failures.push(format!("per-task conflict resolution: {:?}", out.winners));
    }
    let tied = [
        BidMessage::none(a(0)),
        BidMessage::new(a(1), TaskId(2), 0.5),
        BidMessage::new(a(2), TaskId(2), 0.5),
        BidMessage::new(a(3), TaskId(2), 0.4),
    ];
    let out = max_coor(&tied, &topo, &mut steps).unwrap();
    if out.winners != vec![(a(1), TaskId(2), 0.5)] {
        failures.push(format!("tie should go to lowest id: {:?}", out.winners));
    }
    if steps.consensus_steps != 3 {
        failures.push(format!("max_coor counted {} steps for 3 calls", steps.consensus_steps));
    }
    report("consensus: max_cons exact within diameter; max_coor per-task rules", &failures, started.elapsed(), Duration::from_secs(60));
}

#[test]
fn identical_config_gives_identical_csv() {
    let started = Instant::now();
    let cfg = ExperimentConfig {
        n_tasks: 40,
        agent_counts: vec![3, 8],
        trials: 6,
        epsilons: vec![0.05, 0.2],
        algos: ["dtta", "ldtta", "sga", "central"].map(String::from).to_vec(),
        topology: TopologyKind::Random { p: 0.3 },
        seed: 2024,
        record_wall_clock: false,
    };
    let csv = || {
        let mut buf = Vec::new();
        write_rows(&run_experiment(&cfg, &Registry::builtin()).unwrap(), &mut buf).unwrap();
        buf
    };
    let (first, second) = (csv(), csv());
    let mut failures = Vec::new();
    if first != second {
        failures.push("CSV bytes differ between identical runs".into());
    }
    let other = ExperimentConfig { seed: 2025, ..cfg.clone() };
    let mut buf = Vec::new();
    write_rows(&run_experiment(&other, &Registry::builtin()).unwrap(), &mut buf).unwrap();
    if buf == first {
        failures.push("different master seeds produced the same CSV".into());
    }
    report("determinism: identical config + seed => byte-identical CSV", &failures, started.elapsed(), Duration::from_secs(60));
}
