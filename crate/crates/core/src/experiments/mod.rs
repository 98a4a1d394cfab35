//! Replicated experiments: configuration, parallel runs, aggregation,
//! reference bounds and file output.

mod aggregate;
mod bounds;
mod config;
mod output;

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::envs::EnvError;
use crate::graph::{best_leader, sum_of_distances, Agent, GraphError};
use crate::policies::{PolicyError, PolicySpec};
use crate::rng::{run_seed, stream_seed, Stream};
use crate::sim::{run_quack, InvariantReport, RunTrace, SimError};
use crate::baselines::{run_gossip_ucb, run_independent};

pub use aggregate::{nearest_rank, AggregateStats, LOWER, UPPER};
pub use bounds::{minimax_lower_bound, quack_ucb_bound, composed_bound, ucb_single_agent_bound};
pub use config::{
    AlgoConfig, AlgoKind, Algorithm, EnvConfig, EnvKind, ExperimentConfig, LeaderChoice, PolicyKind, PrivacyChoice,
    RunConfig, TopologyConfig,
};
pub use output::{aggregate_csv, parse_aggregate_csv, parse_trace_csv, render_svg, trace_csv, write_file, TraceTable};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse: {0}")]
    Parse(String),
    #[error("plot: {0}")]
    Plot(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("run {run} violated {} invariant check(s): {}", report.total(), report.first_violation.as_deref().unwrap_or("unknown"))]
    InvariantViolation {
        run: usize,
        report: InvariantReport,
        trace: Box<RunTrace>,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub label: String,
    pub traces: Vec<RunTrace>,
    pub stats: AggregateStats,
    /// Merged over all runs; `None` for algorithms without a leader.
    pub invariants: Option<InvariantReport>,
    pub leader: Option<Agent>,
    pub sum_of_distances: Option<usize>,
    /// Closed-form group-regret bound, when one applies (QuACK with UCB at
    /// its default confidence level).
    pub bound: Option<f64>,
}

/// Runs every replication of `cfg`. Run `i` uses seed `run_seed(seed, i)`, so
/// results do not depend on the number of worker threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    cfg.validate()?;
    let graph = cfg.build_graph()?;
    let env = cfg.build_env()?;
    let algo = cfg.algorithm()?;
    let (m, n) = (graph.m(), cfg.run.horizon);
    let seeds: Vec<u64> = (0..cfg.run.replications as u64).map(|i| run_seed(cfg.run.seed, i)).collect();

    let (traces, leader): (Vec<RunTrace>, Option<Agent>) = match &algo {
        Algorithm::Quack(spec) => {
            let leader = match cfg.topology.leader {
                LeaderChoice::Best => best_leader(&graph).leader,
                LeaderChoice::Fixed(v) => v,
            };
            let horizon = (m * n) as u64;
            let traces = seeds
                .par_iter()
                .map(|&s| {
                    let policy = spec.build(env.k(), horizon, stream_seed(s, Stream::Policy(0)))?;
                    run_quack(&env, &graph, leader, policy, n, s)
                })
                .collect::<Result<Vec<_>, SimError>>()?;
            (traces, Some(leader))
        }
        Algorithm::Independent(spec) => {
            let traces = seeds
                .par_iter()
                .map(|&s| run_independent(&env, m, spec, n, s))
                .collect::<Result<Vec<_>, SimError>>()?;
            (traces, None)
        }
        Algorithm::GossipUcb { gamma, sigma } => {
            let traces = seeds
                .par_iter()
                .map(|&s| run_gossip_ucb(&env, &graph, *gamma, *sigma, n, s))
                .collect::<Result<Vec<_>, SimError>>()?;
            (traces, None)
        }
    };

    let mut invariants = leader.map(|_| InvariantReport::default());
    for (run, trace) in traces.iter().enumerate() {
        if let (Some(total), Some(report)) = (invariants.as_mut(), trace.invariants()) {
            if !report.is_clean() {
                return Err(ExperimentError::InvariantViolation {
                    run,
                    report: report.clone(),
                    trace: Box::new(trace.clone()),
                });
            }
            total.merge(report);
        }
    }

    let sod = leader.map(|v| sum_of_distances(&graph, v));
    let bound = match (&algo, sod) {
        (Algorithm::Quack(PolicySpec::Ucb { sigma, delta: None }), Some(sod)) => {
            Some(quack_ucb_bound(env.gaps(), sod, m, n, *sigma))
        }
        _ => None,
    };
    let stats = AggregateStats::from_traces(&traces);
    Ok(ExperimentResult {
        label: cfg.label(),
        traces,
        stats,
        invariants,
        leader,
        sum_of_distances: sod,
        bound,
    })
}
