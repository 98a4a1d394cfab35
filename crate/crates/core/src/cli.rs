//! Command-line front end. Exit codes: 0 success, 1 invariant violation,
//! 2 usage or configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::experiments::{
    aggregate_csv, parse_aggregate_csv, render_svg, run_experiment, trace_csv, write_file, ExperimentConfig,
    ExperimentError, ExperimentResult,
};
use crate::graph::{
    best_leader, communication_matrix, diameter, make_topology, second_eigenvalue_magnitude, Graph, TopologyKind,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "quack", about = "Cooperative multi-agent bandit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write aggregate.csv and regret.svg.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides run.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides run.out (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot one or more aggregate CSVs on shared axes.
    Plot {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Describe a topology.
    Graph {
        #[arg(long)]
        topology: TopologyKind,
        #[arg(long)]
        m: usize,
        /// 1-based edge list, for `custom`.
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long, conflicts_with = "best_leader")]
        info: bool,
        #[arg(long)]
        best_leader: bool,
    },
    /// Run an experiment only to check invariants; writes nothing.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, out),
        Command::Plot { inputs, out } => cmd_plot(&inputs, &out),
        Command::Graph {
            topology,
            m,
            edges,
            info,
            best_leader,
        } => cmd_graph(topology, m, edges.as_deref(), info || !best_leader),
        Command::Check { config } => cmd_check(&config),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                ExperimentError::InvariantViolation { .. } => EXIT_INVARIANT,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

fn summarise(cfg: &ExperimentConfig, r: &ExperimentResult) {
    println!("{}: {} runs of {} rounds", r.label, r.stats.runs, cfg.run.horizon);
    if let (Some(leader), Some(sod)) = (r.leader, r.sum_of_distances) {
        println!("leader {}, sum of distances {sod}", leader + 1);
    }
    println!("final mean group regret {:.3}", r.stats.final_mean());
    if let Some(bound) = r.bound {
        println!("regret bound {bound:.3}");
    }
    if let Some(inv) = &r.invariants {
        println!("invariant violations {}", inv.total());
    }
}

fn cmd_run(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), ExperimentError> {
    let cfg = load(config, seed)?;
    let dir = out.or_else(|| cfg.run.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let result = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(ExperimentError::InvariantViolation { run, report, trace }) => {
            let path = dir.join(format!("violation-run{}.csv", run + 1));
            write_file(&path, &trace_csv(&trace))?;
            eprintln!("diagnostic trace written to {}", path.display());
            return Err(ExperimentError::InvariantViolation { run, report, trace });
        }
        Err(e) => return Err(e),
    };
    write_file(&dir.join("aggregate.csv"), &aggregate_csv(&result.stats))?;
    write_file(&dir.join("regret.svg"), &render_svg(&[(&result.label, &result.stats)])?)?;
    if cfg.run.write_traces {
        let width = result.traces.len().to_string().len();
        for (i, trace) in result.traces.iter().enumerate() {
            write_file(&dir.join("traces").join(format!("run{:0width$}.csv", i + 1)), &trace_csv(trace))?;
        }
    }
    summarise(&cfg, &result);
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_plot(inputs: &[PathBuf], out: &Path) -> Result<(), ExperimentError> {
    let mut series = Vec::with_capacity(inputs.len());
    for path in inputs {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.clone(),
            source,
        })?;
        let label = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        // A file named aggregate.csv is labelled by its directory instead.
        let label = match (label.as_str(), path.parent().and_then(Path::file_name)) {
            ("aggregate", Some(dir)) => dir.to_string_lossy().into_owned(),
            _ => label,
        };
        series.push((label, parse_aggregate_csv(&text)?));
    }
    let refs: Vec<(&str, _)> = series.iter().map(|(l, s)| (l.as_str(), s)).collect();
    write_file(out, &render_svg(&refs)?)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_graph(kind: TopologyKind, m: usize, edges: Option<&Path>, info: bool) -> Result<(), ExperimentError> {
    let g = match edges {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let g = Graph::parse_edge_list(&text)?;
            if g.m() != m {
                return Err(ExperimentError::Config(format!("edge list has {} agents, --m is {m}", g.m())));
            }
            g
        }
        None => make_topology(kind, m, None)?,
    };
    let best = best_leader(&g);
    println!("leader {}, sum {}", best.leader + 1, best.sum_of_distances);
    if info {
        println!("agents {}, edges {}, max degree {}", g.m(), g.edge_count(), g.max_degree());
        println!("diameter {}", diameter(&g));
        let lambda = second_eigenvalue_magnitude(&communication_matrix(&g))?;
        println!("second eigenvalue magnitude {lambda:.6}");
        let sums: Vec<String> = best.sums.iter().map(ToString::to_string).collect();
        println!("distance sums {}", sums.join(" "));
    }
    Ok(())
}

fn cmd_check(config: &Path) -> Result<(), ExperimentError> {
    let cfg = load(config, None)?;
    let result = run_experiment(&cfg)?;
    match &result.invariants {
        Some(inv) => println!("{}: {} runs, invariant violations {}", result.label, result.stats.runs, inv.total()),
        None => println!("{}: {} runs, no leader invariants apply", result.label, result.stats.runs),
    }
    Ok(())
}
