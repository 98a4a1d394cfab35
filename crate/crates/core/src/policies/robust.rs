use crate::envs::Mode;

use super::{argmax_first, Observation, Policy, PolicyError, Proposal, Turn};

/// Outcome of [`truncated_mean`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedMean {
    pub value: f64,
    /// Samples that survived truncation.
    pub kept: usize,
    pub total: usize,
    /// Set when there were no samples; `value` is then 0.
    pub empty: bool,
}

/// Truncation level for the `i`-th sample (1-based arrival index).
pub fn truncation_threshold(i: usize, sigma: f64, epsilon: f64, log_inv_delta: f64) -> f64 {
    (sigma * i as f64 / log_inv_delta).powf(1.0 / (1.0 + epsilon))
}

/// Mean of `samples` after zeroing every `x_i` with `|x_i| > u_i`, where
/// `u_i = (σ i / ln(1/δ))^{1/(1+ε)}`.
pub fn truncated_mean(samples: &[f64], sigma: f64, epsilon: f64, log_inv_delta: f64) -> TruncatedMean {
    if samples.is_empty() {
        return TruncatedMean {
            value: 0.0,
            kept: 0,
            total: 0,
            empty: true,
        };
    }
    let mut sum = 0.0;
    let mut kept = 0;
    for (i, &x) in samples.iter().enumerate() {
        if x.abs() <= truncation_threshold(i + 1, sigma, epsilon, log_inv_delta) {
            sum += x;
            kept += 1;
        }
    }
    TruncatedMean {
        value: sum / samples.len() as f64,
        kept,
        total: samples.len(),
        empty: false,
    }
}

/// Robust UCB with the truncated-mean estimator, for rewards with a finite
/// moment of order `1 + ε` bounded by `σ`.
///
/// Raw samples are retained per arm. Because each threshold depends only on
/// the sample's arrival index and the fixed confidence level, the truncated
/// sum is also maintained incrementally.
#[derive(Debug, Clone)]
pub struct RobustUcb {
    sigma: f64,
    epsilon: f64,
    log_inv_delta: f64,
    samples: Vec<Vec<f64>>,
    truncated_sums: Vec<f64>,
    steps: u64,
    turn: Turn,
}

impl RobustUcb {
    pub fn new(k: usize, sigma: f64, epsilon: f64, log_inv_delta: f64) -> Result<Self, PolicyError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(PolicyError::InvalidParameter(format!("moment bound must be positive, got {sigma}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(PolicyError::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        if !(log_inv_delta > 0.0 && log_inv_delta.is_finite()) {
            return Err(PolicyError::InvalidParameter(format!("ln(1/delta) must be positive, got {log_inv_delta}")));
        }
        Ok(RobustUcb {
            sigma,
            epsilon,
            log_inv_delta,
            samples: vec![Vec::new(); k],
            truncated_sums: vec![0.0; k],
            steps: 0,
            turn: Turn::default(),
        })
    }

    pub fn samples(&self, a: usize) -> &[f64] {
        &self.samples[a]
    }

    pub fn estimate(&self, a: usize) -> TruncatedMean {
        truncated_mean(&self.samples[a], self.sigma, self.epsilon, self.log_inv_delta)
    }

    /// `4 σ^{1/(1+ε)} (ln(1/δ)/T)^{ε/(1+ε)}`.
    pub fn width(&self, t: usize) -> f64 {
        let e = self.epsilon;
        4.0 * self.sigma.powf(1.0 / (1.0 + e)) * (self.log_inv_delta / t as f64).powf(e / (1.0 + e))
    }

    pub fn index(&self, a: usize) -> f64 {
        match self.samples[a].len() {
            0 => f64::INFINITY,
            t => self.truncated_sums[a] / t as f64 + self.width(t),
        }
    }
}

impl Policy for RobustUcb {
    fn name(&self) -> &'static str {
        "robust_ucb"
    }

    fn mode(&self) -> Mode {
        Mode::Reward
    }

    fn num_arms(&self) -> usize {
        self.samples.len()
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn propose(&mut self) -> Result<Proposal, PolicyError> {
        self.turn.ensure_idle()?;
        let arm = argmax_first((0..self.samples.len()).map(|a| self.index(a)));
        Ok(self.turn.open(Proposal::Arm(arm)))
    }

    fn feed(&mut self, proposal: Proposal, observation: Observation) -> Result<(), PolicyError> {
        self.turn.ensure_outstanding(proposal)?;
        let (Proposal::Arm(a), Observation::Reward(x)) = (proposal, observation) else {
            return Err(PolicyError::WrongObservation(observation));
        };
        self.turn.close();
        let i = self.samples[a].len() + 1;
        if x.abs() <= truncation_threshold(i, self.sigma, self.epsilon, self.log_inv_delta) {
            self.truncated_sums[a] += x;
        }
        self.samples[a].push(x);
        self.steps += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::sample_alpha_stable;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    /// Direct re-evaluation: recompute every threshold from scratch with the
    /// textbook expression and average with explicit zeros.
    fn brute_force(samples: &[f64], sigma: f64, epsilon: f64, log_inv_delta: f64) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 1..=samples.len() {
            let u = f64::exp((sigma * i as f64 / log_inv_delta).ln() / (1.0 + epsilon));
            let x = samples[i - 1];
            acc += if x.abs() > u { 0.0 } else { x };
        }
        acc / samples.len() as f64
    }

    #[test]
    fn no_truncation_is_the_plain_mean() {
        let xs = [0.1, -0.2, 0.3, 0.25];
        let t = truncated_mean(&xs, 1e6, 1.0, 2.0);
        assert_eq!(t.value, xs.iter().sum::<f64>() / 4.0);
        assert_eq!(t.kept, 4);
    }

    #[test]
    fn outlier_zeroed() {
        let t = truncated_mean(&[1e6, 0.0, 0.0, 0.0], 1.0, 1.0, 10.0);
        assert_eq!(t.value, 0.0);
        assert_eq!(t.kept, 3);
    }

    #[test]
    fn empty_flagged() {
        let t = truncated_mean(&[], 1.0, 0.5, 2.0);
        assert!(t.empty);
        assert_eq!(t.value, 0.0);
    }

    #[test]
    fn matches_brute_force_on_random_inputs() {
        let mut rng = rng_from_seed(41);
        for _ in 0..1000 {
            let len = rng.random_range(0..40);
            let scale = 10f64.powf(rng.random_range(-1.0..3.0));
            let xs: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
            let sigma = rng.random_range(0.1..5.0);
            let eps = rng.random_range(0.05..=1.0);
            let lid = rng.random_range(0.5..30.0);
            let got = truncated_mean(&xs, sigma, eps, lid).value;
            let want = brute_force(&xs, sigma, eps, lid);
            assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{got} vs {want}");
        }
    }

    #[test]
    fn cached_sum_matches_recomputation() {
        let mut policy = RobustUcb::new(3, 1.0, 0.8, 12.0).unwrap();
        let mut rng = rng_from_seed(2);
        for _ in 0..3000 {
            let p = policy.propose().unwrap();
            let x = sample_alpha_stable(1.6, 0.3, &mut rng).unwrap();
            policy.feed(p, Observation::Reward(x)).unwrap();
        }
        for a in 0..3 {
            let t = policy.samples(a).len();
            let cached = policy.truncated_sums[a] / t as f64;
            let fresh = policy.estimate(a).value;
            assert!((cached - fresh).abs() < 1e-12);
        }
    }

    #[test]
    fn width_exponent_at_epsilon_one() {
        let p = RobustUcb::new(1, 2.0, 1.0, 5.0).unwrap();
        let expected = 4.0 * 2f64.sqrt() * (5.0f64 / 7.0).sqrt();
        assert!((p.width(7) - expected).abs() < 1e-12);
    }

    #[test]
    fn single_arm_always() {
        let mut p = RobustUcb::new(1, 1.0, 0.5, 5.0).unwrap();
        for i in 0..20 {
            let prop = p.propose().unwrap();
            assert_eq!(prop, Proposal::Arm(0));
            p.feed(prop, Observation::Reward(i as f64)).unwrap();
        }
    }
}
