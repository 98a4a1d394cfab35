use crate::envs::{Environment, Mode};
use crate::graph::Agent;

/// Per-round flag bits recorded in [`RunTrace::flags`].
pub mod flag {
    /// Delayed-play utilisation inequality failed for some action.
    pub const UTILISATION: u8 = 1;
    /// `s_t > m·t`.
    pub const COUNTER_CAP: u8 = 1 << 1;
    /// A follower did not replay the leader's action from `d` rounds earlier.
    pub const IMITATION: u8 = 1 << 2;
    /// Enqueued ≠ dequeued + queued for some action.
    pub const CONSERVATION: u8 = 1 << 3;
    /// A follower observation arrived twice, or with the wrong delay.
    pub const DELIVERY: u8 = 1 << 4;
}

/// Violation counts from the online checker; all zero for a correct run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvariantReport {
    pub utilisation: u64,
    pub counter_cap: u64,
    pub imitation: u64,
    pub conservation: u64,
    pub delivery: u64,
    /// Final-round `Σ_w T_aw(n) ≤ T'_a(s_n) + 3 Σ d_vw` failures, one per action.
    pub final_bookkeeping: u64,
    /// Follower observations that should have reached the leader but did not.
    pub missing_deliveries: u64,
    pub first_violation: Option<String>,
}

impl InvariantReport {
    pub fn total(&self) -> u64 {
        self.utilisation
            + self.counter_cap
            + self.imitation
            + self.conservation
            + self.delivery
            + self.final_bookkeeping
            + self.missing_deliveries
    }

    pub fn is_clean(&self) -> bool {
        self.total() == 0
    }

    pub(crate) fn note(&mut self, message: impl FnOnce() -> String) {
        if self.first_violation.is_none() {
            self.first_violation = Some(message());
        }
    }

    pub fn merge(&mut self, other: &InvariantReport) {
        self.utilisation += other.utilisation;
        self.counter_cap += other.counter_cap;
        self.imitation += other.imitation;
        self.conservation += other.conservation;
        self.delivery += other.delivery;
        self.final_bookkeeping += other.final_bookkeeping;
        self.missing_deliveries += other.missing_deliveries;
        if self.first_violation.is_none() {
            self.first_violation.clone_from(&other.first_violation);
        }
    }
}

/// Leader-side state captured at the end of a QuACK run.
#[derive(Debug, Clone, PartialEq)]
pub struct QuackSummary {
    pub leader: Agent,
    /// Hop distance of every agent from the leader.
    pub distances: Vec<usize>,
    /// `T'_a(s_n)`: observations of each action consumed by the policy.
    pub pseudo_plays: Vec<u64>,
    /// Action code of every pseudo-round, in order (`a_1, a_2, …`).
    pub pseudo_log: Vec<u32>,
    pub invariants: InvariantReport,
}

impl QuackSummary {
    /// `T'_a(s)`: pseudo-plays of each action among the first `s` pseudo-rounds.
    pub fn pseudo_plays_at(&self, s: usize, action_count: usize) -> Vec<u64> {
        let mut counts = vec![0; action_count];
        for &code in self.pseudo_log.iter().take(s) {
            counts[code as usize] += 1;
        }
        counts
    }
}

/// Everything recorded about one run of a multi-agent algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub m: usize,
    pub k: usize,
    pub mode: Mode,
    /// Action codes, row-major: round `t` (0-based) occupies `[t·m, (t+1)·m)`.
    pub actions: Vec<u32>,
    /// Cumulative group pseudo-regret after each round.
    pub regret: Vec<f64>,
    /// `s_t` after each round; zero for algorithms without pseudo-rounds.
    pub pseudo_rounds: Vec<u64>,
    pub flags: Vec<u8>,
    pub quack: Option<QuackSummary>,
}

impl RunTrace {
    pub(crate) fn new(m: usize, k: usize, mode: Mode, n: usize) -> Self {
        RunTrace {
            m,
            k,
            mode,
            actions: Vec::with_capacity(n * m),
            regret: Vec::with_capacity(n),
            pseudo_rounds: Vec::with_capacity(n),
            flags: Vec::with_capacity(n),
            quack: None,
        }
    }

    pub fn rounds(&self) -> usize {
        self.regret.len()
    }

    pub fn round_actions(&self, t: usize) -> &[u32] {
        &self.actions[t * self.m..(t + 1) * self.m]
    }

    pub fn action(&self, t: usize, agent: Agent) -> u32 {
        self.actions[t * self.m + agent]
    }

    pub fn action_count(&self) -> usize {
        match self.mode {
            Mode::Reward => self.k,
            Mode::Duelling => self.k * self.k,
        }
    }

    /// `T_a` for each action summed over agents, after the first `rounds` rounds.
    pub fn plays(&self, rounds: usize) -> Vec<u64> {
        let mut counts = vec![0; self.action_count()];
        for &code in &self.actions[..rounds * self.m] {
            counts[code as usize] += 1;
        }
        counts
    }

    pub fn final_regret(&self) -> f64 {
        self.regret.last().copied().unwrap_or(0.0)
    }

    pub fn invariants(&self) -> Option<&InvariantReport> {
        self.quack.as_ref().map(|q| &q.invariants)
    }
}

/// Cumulative group pseudo-regret per round, recomputed from the action log.
pub fn group_pseudo_regret(trace: &RunTrace, env: &Environment) -> Vec<f64> {
    let mut total = 0.0;
    (0..trace.rounds())
        .map(|t| {
            total += trace
                .round_actions(t)
                .iter()
                .map(|&code| env.action_gap(code as usize))
                .sum::<f64>();
            total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_agents_on_a_small_gap() {
        let mut means = vec![0.5, 0.45];
        means.truncate(2);
        let env = Environment::bernoulli(&means).unwrap();
        let mut trace = RunTrace::new(2, 2, Mode::Reward, 10);
        for _ in 0..10 {
            trace.actions.extend([1, 1]);
            trace.regret.push(0.0);
        }
        let r = group_pseudo_regret(&trace, &env);
        assert!((r[9] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_play_has_no_regret() {
        let env = Environment::benchmark_bernoulli();
        let mut trace = RunTrace::new(3, 10, Mode::Reward, 5);
        for _ in 0..5 {
            trace.actions.extend([0, 0, 0]);
            trace.regret.push(0.0);
        }
        assert!(group_pseudo_regret(&trace, &env).iter().all(|&r| r == 0.0));
    }
}
