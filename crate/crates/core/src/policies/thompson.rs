use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::envs::Mode;
use crate::rng::SimRng;

use super::{argmax_first, Observation, Policy, PolicyError, Proposal, Turn};

/// Beta-Bernoulli Thompson sampling with `Beta(1, 1)` priors.
///
/// A reward `x ∈ [0, 1]` that is not exactly 0 or 1 is replaced by a
/// Bernoulli(x) draw from the policy's own generator before the update.
#[derive(Debug, Clone)]
pub struct Thompson {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    steps: u64,
    rng: SimRng,
    turn: Turn,
}

impl Thompson {
    pub fn new(k: usize, rng: SimRng) -> Self {
        Thompson {
            alpha: vec![1.0; k],
            beta: vec![1.0; k],
            steps: 0,
            rng,
            turn: Turn::default(),
        }
    }

    /// Posterior parameters `(α_a, β_a)`.
    pub fn posterior(&self, a: usize) -> (f64, f64) {
        (self.alpha[a], self.beta[a])
    }

    #[cfg(test)]
    pub(crate) fn set_posterior(&mut self, a: usize, alpha: f64, beta: f64) {
        self.alpha[a] = alpha;
        self.beta[a] = beta;
    }
}

impl Policy for Thompson {
    fn name(&self) -> &'static str {
        "thompson"
    }

    fn mode(&self) -> Mode {
        Mode::Reward
    }

    fn num_arms(&self) -> usize {
        self.alpha.len()
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn propose(&mut self) -> Result<Proposal, PolicyError> {
        self.turn.ensure_idle()?;
        let rng = &mut self.rng;
        let draws: Vec<f64> = self
            .alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| Beta::new(a, b).expect("posterior parameters are positive").sample(rng))
            .collect();
        Ok(self.turn.open(Proposal::Arm(argmax_first(draws))))
    }

    fn feed(&mut self, proposal: Proposal, observation: Observation) -> Result<(), PolicyError> {
        self.turn.ensure_outstanding(proposal)?;
        let (Proposal::Arm(a), Observation::Reward(x)) = (proposal, observation) else {
            return Err(PolicyError::WrongObservation(observation));
        };
        if !(0.0..=1.0).contains(&x) {
            return Err(PolicyError::RewardOutOfRange(x));
        }
        self.turn.close();
        let success = if x == 0.0 || x == 1.0 {
            x == 1.0
        } else {
            self.rng.random::<f64>() < x
        };
        if success {
            self.alpha[a] += 1.0;
        } else {
            self.beta[a] += 1.0;
        }
        self.steps += 1;
        Ok(())
    }
}
