//! Single-agent bandit policies behind one propose/feed interface.
//!
//! A policy proposes one action at a time and must receive exactly one
//! observation for it before proposing again. The queue-based reduction relies
//! on this: each pseudo-round is one `propose` followed by one `feed`.

mod robust;
mod rucb;
mod thompson;
mod ucb;

use std::fmt;

use thiserror::Error;

use crate::envs::Mode;
use crate::rng::rng_from_seed;

pub use robust::{truncated_mean, RobustUcb, TruncatedMean};
pub use rucb::Rucb;
pub use thompson::Thompson;
pub use ucb::Ucb;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("propose called while {0} is still awaiting feedback")]
    DoublePropose(Proposal),
    #[error("feedback for {got} but the outstanding proposal is {expected:?}")]
    NotOutstanding {
        got: Proposal,
        expected: Option<Proposal>,
    },
    #[error("observation {0:?} does not match the policy's feedback mode")]
    WrongObservation(Observation),
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
}

/// An action chosen by a policy: one arm, or an ordered pair of arms to duel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Proposal {
    Arm(usize),
    Duel(usize, usize),
}

impl Proposal {
    /// Compact action code: `a`, or `a·k + b` for the pair `(a, b)`.
    pub fn code(&self, k: usize) -> usize {
        match *self {
            Proposal::Arm(a) => a,
            Proposal::Duel(a, b) => a * k + b,
        }
    }

    pub fn from_code(code: usize, k: usize, mode: Mode) -> Self {
        match mode {
            Mode::Reward => Proposal::Arm(code),
            Mode::Duelling => Proposal::Duel(code / k, code % k),
        }
    }
}

impl fmt::Display for Proposal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proposal::Arm(a) => write!(f, "arm {}", a + 1),
            Proposal::Duel(a, b) => write!(f, "duel ({}, {})", a + 1, b + 1),
        }
    }
}

/// Feedback for a proposal: a scalar reward, or the winner of a duel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Reward(f64),
    Winner(usize),
}

pub trait Policy: Send + fmt::Debug {
    fn name(&self) -> &'static str;

    fn mode(&self) -> Mode;

    fn num_arms(&self) -> usize;

    /// Observations consumed so far.
    fn steps(&self) -> u64;

    fn propose(&mut self) -> Result<Proposal, PolicyError>;

    fn feed(&mut self, proposal: Proposal, observation: Observation) -> Result<(), PolicyError>;
}

/// Enforces strict propose/feed alternation.
#[derive(Debug, Clone, Default)]
pub(crate) struct Turn {
    outstanding: Option<Proposal>,
}

impl Turn {
    pub(crate) fn ensure_idle(&self) -> Result<(), PolicyError> {
        match self.outstanding {
            Some(p) => Err(PolicyError::DoublePropose(p)),
            None => Ok(()),
        }
    }

    pub(crate) fn open(&mut self, p: Proposal) -> Proposal {
        self.outstanding = Some(p);
        p
    }

    pub(crate) fn ensure_outstanding(&self, p: Proposal) -> Result<(), PolicyError> {
        if self.outstanding == Some(p) {
            Ok(())
        } else {
            Err(PolicyError::NotOutstanding {
                got: p,
                expected: self.outstanding,
            })
        }
    }

    pub(crate) fn close(&mut self) {
        self.outstanding = None;
    }
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value || (i == 0 && v == best_value) {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Configuration of a policy, independent of the horizon it will face.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    /// `delta = None` uses `1/(mn)²`, supplied by the runner as a horizon.
    Ucb { sigma: f64, delta: Option<f64> },
    Thompson,
    RobustUcb {
        sigma: f64,
        epsilon: f64,
        delta: Option<f64>,
    },
    Rucb { alpha: f64 },
    LdpUcb { epsilon: f64, delta: Option<f64> },
}

impl PolicySpec {
    pub fn mode(&self) -> Mode {
        match self {
            PolicySpec::Rucb { .. } => Mode::Duelling,
            _ => Mode::Reward,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Ucb { .. } => "ucb",
            PolicySpec::Thompson => "thompson",
            PolicySpec::RobustUcb { .. } => "robust_ucb",
            PolicySpec::Rucb { .. } => "rucb",
            PolicySpec::LdpUcb { .. } => "ldp_ucb",
        }
    }

    /// `ln(1/δ)`: the configured δ, or `2 ln(horizon)` when unset.
    fn log_inv_delta(delta: Option<f64>, horizon: u64) -> Result<f64, PolicyError> {
        match delta {
            Some(d) if d > 0.0 && d < 1.0 => Ok(-d.ln()),
            Some(d) => Err(PolicyError::InvalidParameter(format!("delta must lie in (0, 1), got {d}"))),
            None => Ok(2.0 * (horizon.max(2) as f64).ln()),
        }
    }

    /// Builds a fresh policy for `k` arms. `horizon` is the total number of
    /// observations the policy may see (`m·n` inside the reduction) and sets
    /// the default confidence; `seed` drives the policy's own randomness.
    pub fn build(&self, k: usize, horizon: u64, seed: u64) -> Result<Box<dyn Policy>, PolicyError> {
        if k == 0 {
            return Err(PolicyError::InvalidParameter("need at least one arm".into()));
        }
        Ok(match *self {
            PolicySpec::Ucb { sigma, delta } => {
                Box::new(Ucb::new(k, sigma, Self::log_inv_delta(delta, horizon)?)?)
            }
            PolicySpec::Thompson => Box::new(Thompson::new(k, rng_from_seed(seed))),
            PolicySpec::RobustUcb {
                sigma,
                epsilon,
                delta,
            } => Box::new(RobustUcb::new(k, sigma, epsilon, Self::log_inv_delta(delta, horizon)?)?),
            PolicySpec::Rucb { alpha } => Box::new(Rucb::new(k, alpha, rng_from_seed(seed))?),
            PolicySpec::LdpUcb { epsilon, delta } => {
                Box::new(Ucb::ldp(k, epsilon, Self::log_inv_delta(delta, horizon)?)?)
            }
        })
    }
}
