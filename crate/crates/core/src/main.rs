use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use threshold_alloc::bench::{self, ExperimentConfig, GroupSummary};
use threshold_alloc::surveillance::generate_instance;
use threshold_alloc::{Instance, Registry, Result, SolverParams, TopologyKind};

#[derive(Parser)]
#[command(name = "threshold-alloc", version, about = "Decreasing-threshold multi-robot task allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo comparison; writes one CSV row per solver run.
    Bench {
        #[arg(long, default_value_t = 200)]
        tasks: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 30, 40, 50])]
        agents: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05])]
        epsilon: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values = ["dtta", "ldtta", "sga"])]
        algo: Vec<String>,
        /// complete | ring | random:p
        #[arg(long, default_value = "complete")]
        topology: TopologyKind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Also write per-group means and ratios here.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long, default_value = "sga")]
        baseline: String,
        /// Record wall-clock milliseconds (makes the CSV non-reproducible).
        #[arg(long)]
        wall_clock: bool,
    },
    /// Generate a random instance as JSON.
    GenInstance {
        #[arg(long, default_value_t = 200)]
        tasks: usize,
        #[arg(long, default_value_t = 10)]
        agents: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one solver on an instance file and print the result as JSON.
    RunOne {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "ldtta")]
        algo: String,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value = "complete")]
        topology: TopologyKind,
        /// Seed for random topologies.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Means and baseline ratios from a bench CSV.
    Summarize {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "sga")]
        baseline: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the registered allocators.
    Algos,
}

fn print_summary(groups: &[GroupSummary]) {
    println!(
        "{:<8} {:>6} {:>6} {:>7} {:>12} {:>12} {:>9} {:>8} {:>8} {:>8}",
        "algo", "agents", "tasks", "eps", "value", "evals", "steps", "v_ratio", "e_ratio", "s_ratio"
    );
    for g in groups {
        let eps = g.epsilon.map(|e| e.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{:<8} {:>6} {:>6} {:>7} {:>12.4} {:>12.1} {:>9.2} {:>8.4} {:>8.4} {:>8.4}",
            g.algo, g.n_agents, g.n_tasks, eps, g.mean_value, g.mean_evals, g.mean_steps, g.value_ratio, g.evals_ratio, g.steps_ratio
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    let registry = Registry::builtin();
    match cli.command {
        Command::Bench { tasks, agents, trials, epsilon, algo, topology, seed, out, summary, baseline, wall_clock } => {
            let cfg = ExperimentConfig {
                n_tasks: tasks,
                agent_counts: agents,
                trials,
                epsilons: epsilon,
                algos: algo,
                topology,
                seed,
                record_wall_clock: wall_clock,
            };
            let rows = bench::run_experiment(&cfg, &registry)?;
            bench::write_rows_to_path(&rows, &out)?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            if cfg.algos.contains(&baseline) {
                let groups = bench::summarize(&rows, &baseline)?;
                print_summary(&groups);
                if let Some(path) = summary {
                    bench::write_rows_to_path(&groups, &path)?;
                }
            }
        }
        Command::GenInstance { tasks, agents, seed, out } => {
            let json = generate_instance(tasks, agents, seed)?.to_json()?;
            match out {
                Some(path) => std::fs::write(path, json + "\n")?,
                None => writeln!(std::io::stdout(), "{json}")?,
            }
        }
        Command::RunOne { instance, algo, epsilon, topology, seed } => {
            let inst = Instance::from_json(&std::fs::read_to_string(instance)?)?;
            let topo = topology.build(inst.n_agents(), seed)?;
            let solver = registry.build(&algo, &SolverParams { epsilon })?;
            let result = solver.allocate(&inst, &topo)?;
            writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&result)?)?;
        }
        Command::Summarize { csv, baseline, out } => {
            let rows = bench::read_rows(std::fs::File::open(csv)?)?;
            let groups = bench::summarize(&rows, &baseline)?;
            print_summary(&groups);
            if let Some(path) = out {
                bench::write_rows_to_path(&groups, &path)?;
            }
        }
        Command::Algos => {
            for name in registry.names() {
                println!("{name:<8} {}", registry.entry(name)?.summary);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
