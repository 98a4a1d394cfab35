//! Comparison algorithms: agents that never talk, and a running-consensus
//! gossip UCB over the Laplacian averaging matrix.

use crate::envs::{Environment, Mode};
use crate::graph::{communication_matrix, CommunicationMatrix, Graph};
use crate::policies::{argmax_first, Observation, Policy, PolicyError, PolicySpec, Proposal};
use crate::rng::{stream_rng, stream_seed, SimRng, Stream};
use crate::sim::{observe, RunTrace, SimError};

/// `m` agents each running their own copy of `spec`, no communication.
/// Agent `i` uses policy stream `i`; rewards come from the shared environment
/// stream, drawn in agent order within each round.
pub fn run_independent(env: &Environment, m: usize, spec: &PolicySpec, n: usize, run_seed: u64) -> Result<RunTrace, SimError> {
    let mut policies: Vec<Box<dyn Policy>> = (0..m)
        .map(|i| spec.build(env.k(), n as u64, stream_seed(run_seed, Stream::Policy(i as u64))))
        .collect::<Result<_, _>>()?;
    if let Some(p) = policies.first() {
        if p.mode() != env.mode() {
            return Err(SimError::Mismatch {
                policy: p.mode(),
                policy_arms: p.num_arms(),
                env: env.mode(),
                env_arms: env.k(),
            });
        }
    }
    let mut rng = stream_rng(run_seed, Stream::Environment);
    let mut trace = RunTrace::new(m, env.k(), env.mode(), n);
    let mut regret = 0.0;
    for _ in 0..n {
        for policy in policies.iter_mut() {
            let p = policy.propose()?;
            let observation = observe(env, p, &mut rng)?;
            policy.feed(p, observation)?;
            let code = p.code(env.k());
            regret += env.action_gap(code);
            trace.actions.push(code as u32);
        }
        trace.regret.push(regret);
        trace.pseudo_rounds.push(0);
        trace.flags.push(0);
    }
    Ok(trace)
}

/// Gossip UCB: every agent keeps real-valued per-arm estimates of the network
/// reward sum `ŝ` and pull count `n̂`, plays
/// `argmax ŝ_a/n̂_a + √(2γσ² ln t / n̂_a)`, and after every round all agents
/// apply one averaging step `x ← P (x + increment)` to both statistics.
///
/// During the first `k` rounds every agent pulls arm `t` so the estimates
/// start from one local sample of each arm. An arm with `n̂_a < 1` (up to
/// rounding) has infinite index.
#[derive(Debug)]
pub struct GossipUcb<'a> {
    env: &'a Environment,
    p: CommunicationMatrix,
    gamma: f64,
    sigma: f64,
    /// Indexed `[arm][agent]` so each arm's column can be averaged in place.
    sums: Vec<Vec<f64>>,
    counts: Vec<Vec<f64>>,
    true_sums: Vec<f64>,
    true_counts: Vec<u64>,
    round: u64,
    rng: SimRng,
    scratch: Vec<f64>,
    trace: RunTrace,
}

const UNTRIED_SLACK: f64 = 1e-9;

impl<'a> GossipUcb<'a> {
    pub fn new(env: &'a Environment, graph: &Graph, gamma: f64, sigma: f64, run_seed: u64) -> Result<Self, SimError> {
        if env.mode() != Mode::Reward {
            return Err(SimError::Mismatch {
                policy: Mode::Reward,
                policy_arms: env.k(),
                env: env.mode(),
                env_arms: env.k(),
            });
        }
        if !(gamma > 1.0) || !(sigma > 0.0) {
            return Err(PolicyError::InvalidParameter(format!("gossip UCB needs gamma > 1 and sigma > 0, got ({gamma}, {sigma})")).into());
        }
        let (m, k) = (graph.m(), env.k());
        Ok(GossipUcb {
            env,
            p: communication_matrix(graph),
            gamma,
            sigma,
            sums: vec![vec![0.0; m]; k],
            counts: vec![vec![0.0; m]; k],
            true_sums: vec![0.0; k],
            true_counts: vec![0; k],
            round: 0,
            rng: stream_rng(run_seed, Stream::Environment),
            scratch: vec![0.0; m],
            trace: RunTrace::new(m, k, Mode::Reward, 0),
        })
    }

    pub fn index(&self, agent: usize, arm: usize, t: u64) -> f64 {
        let n = self.counts[arm][agent];
        if n < 1.0 - UNTRIED_SLACK {
            return f64::INFINITY;
        }
        self.sums[arm][agent] / n + (2.0 * self.gamma * self.sigma * self.sigma * (t as f64).ln() / n).sqrt()
    }

    /// `ŝ_a` at every agent.
    pub fn sums(&self, arm: usize) -> &[f64] {
        &self.sums[arm]
    }

    /// `n̂_a` at every agent.
    pub fn counts(&self, arm: usize) -> &[f64] {
        &self.counts[arm]
    }

    /// Rewards and pulls actually collected for `arm` across the network.
    pub fn true_totals(&self, arm: usize) -> (f64, u64) {
        (self.true_sums[arm], self.true_counts[arm])
    }

    pub fn step(&mut self) -> Result<(), SimError> {
        let t = self.round + 1;
        let (m, k) = (self.p.m(), self.env.k());
        let mut reward_inc = vec![vec![0.0; m]; k];
        let mut count_inc = vec![vec![0.0; m]; k];
        let mut regret = 0.0;
        for v in 0..m {
            let arm = if t <= k as u64 {
                (t - 1) as usize
            } else {
                argmax_first((0..k).map(|a| self.index(v, a, t)))
            };
            let Observation::Reward(x) = observe(self.env, Proposal::Arm(arm), &mut self.rng)? else {
                unreachable!("reward environment")
            };
            reward_inc[arm][v] += x;
            count_inc[arm][v] += 1.0;
            self.true_sums[arm] += x;
            self.true_counts[arm] += 1;
            regret += self.env.action_gap(arm);
            self.trace.actions.push(arm as u32);
        }
        for a in 0..k {
            for (state, inc) in [(&mut self.sums[a], &reward_inc[a]), (&mut self.counts[a], &count_inc[a])] {
                for (x, d) in state.iter_mut().zip(inc) {
                    *x += d;
                }
                self.p.apply(state, &mut self.scratch);
                state.copy_from_slice(&self.scratch);
            }
        }
        self.round = t;
        let previous = self.trace.final_regret();
        self.trace.regret.push(previous + regret);
        self.trace.pseudo_rounds.push(0);
        self.trace.flags.push(0);
        Ok(())
    }

    pub fn finish(self) -> RunTrace {
        self.trace
    }
}

pub fn run_gossip_ucb(
    env: &Environment,
    graph: &Graph,
    gamma: f64,
    sigma: f64,
    n: usize,
    run_seed: u64,
) -> Result<RunTrace, SimError> {
    let mut g = GossipUcb::new(env, graph, gamma, sigma, run_seed)?;
    for _ in 0..n {
        g.step()?;
    }
    Ok(g.finish())
}
