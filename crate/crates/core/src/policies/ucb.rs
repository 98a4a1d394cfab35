use crate::envs::Mode;

use super::{argmax_first, Observation, Policy, PolicyError, Proposal, Turn};

/// UCB with index `mean_a + √(2σ² ln(1/δ) / T_a)`.
///
/// Also serves as LDP-UCB: over Laplace-privatised rewards the only change is
/// the variance proxy `1/4 + 2/ε²`.
#[derive(Debug, Clone)]
pub struct Ucb {
    label: &'static str,
    variance_proxy: f64,
    log_inv_delta: f64,
    counts: Vec<u64>,
    sums: Vec<f64>,
    steps: u64,
    turn: Turn,
}

impl Ucb {
    pub fn new(k: usize, sigma: f64, log_inv_delta: f64) -> Result<Self, PolicyError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(PolicyError::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Self::with_variance_proxy("ucb", k, sigma * sigma, log_inv_delta)
    }

    pub fn ldp(k: usize, epsilon: f64, log_inv_delta: f64) -> Result<Self, PolicyError> {
        Self::with_variance_proxy("ldp_ucb", k, ldp_variance_proxy(epsilon)?, log_inv_delta)
    }

    fn with_variance_proxy(
        label: &'static str,
        k: usize,
        variance_proxy: f64,
        log_inv_delta: f64,
    ) -> Result<Self, PolicyError> {
        if !(log_inv_delta > 0.0 && log_inv_delta.is_finite()) {
            return Err(PolicyError::InvalidParameter(format!("ln(1/delta) must be positive, got {log_inv_delta}")));
        }
        Ok(Ucb {
            label,
            variance_proxy,
            log_inv_delta,
            counts: vec![0; k],
            sums: vec![0.0; k],
            steps: 0,
            turn: Turn::default(),
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn variance_proxy(&self) -> f64 {
        self.variance_proxy
    }

    /// Confidence width after `t` pulls.
    pub fn width(&self, t: u64) -> f64 {
        (2.0 * self.variance_proxy * self.log_inv_delta / t as f64).sqrt()
    }

    /// Index of arm `a`; infinite while the arm is untried.
    pub fn index(&self, a: usize) -> f64 {
        match self.counts[a] {
            0 => f64::INFINITY,
            t => self.sums[a] / t as f64 + self.width(t),
        }
    }

    pub fn indices(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|a| self.index(a)).collect()
    }
}

/// Variance proxy of a `[0, 1]` reward plus Laplace(1/ε) noise.
pub fn ldp_variance_proxy(epsilon: f64) -> Result<f64, PolicyError> {
    if !(epsilon > 0.0) {
        return Err(PolicyError::InvalidParameter(format!("privacy epsilon must be positive, got {epsilon}")));
    }
    Ok(0.25 + 2.0 / (epsilon * epsilon))
}

impl Policy for Ucb {
    fn name(&self) -> &'static str {
        self.label
    }

    fn mode(&self) -> Mode {
        Mode::Reward
    }

    fn num_arms(&self) -> usize {
        self.counts.len()
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn propose(&mut self) -> Result<Proposal, PolicyError> {
        self.turn.ensure_idle()?;
        let arm = argmax_first((0..self.counts.len()).map(|a| self.index(a)));
        Ok(self.turn.open(Proposal::Arm(arm)))
    }

    fn feed(&mut self, proposal: Proposal, observation: Observation) -> Result<(), PolicyError> {
        self.turn.ensure_outstanding(proposal)?;
        let (Proposal::Arm(a), Observation::Reward(x)) = (proposal, observation) else {
            return Err(PolicyError::WrongObservation(observation));
        };
        self.turn.close();
        self.counts[a] += 1;
        self.sums[a] += x;
        self.steps += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untried_arms_first_in_order() {
        let mut ucb = Ucb::new(3, 0.5, 10.0).unwrap();
        for expected in 0..3 {
            let p = ucb.propose().unwrap();
            assert_eq!(p, Proposal::Arm(expected));
            ucb.feed(p, Observation::Reward(0.0)).unwrap();
        }
    }

    #[test]
    fn hand_evaluated_index() {
        let mut ucb = Ucb::new(2, 0.5, 1e4f64.ln()).unwrap();
        ucb.counts = vec![5, 5];
        ucb.sums = vec![4.5, 0.5];
        let w = (2.0 * 0.25 * 1e4f64.ln() / 5.0).sqrt();
        assert!((ucb.index(0) - (0.9 + w)).abs() < 1e-12);
        assert!((ucb.index(0) - 1.860).abs() < 1e-3);
        assert!((ucb.index(1) - 1.060).abs() < 1e-3);
        assert_eq!(ucb.propose().unwrap(), Proposal::Arm(0));
    }

    #[test]
    fn confidence_arithmetic() {
        let (m, n) = (9.0f64, 2000.0f64);
        let log_inv_delta = -(1.0 / (m * n).powi(2)).ln();
        assert!((log_inv_delta - 19.596).abs() < 1e-3);
        assert!((log_inv_delta - 2.0 * 18000f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_first_arm() {
        let mut ucb = Ucb::new(4, 0.5, 3.0).unwrap();
        ucb.counts = vec![2; 4];
        ucb.sums = vec![1.0; 4];
        assert_eq!(ucb.propose().unwrap(), Proposal::Arm(0));
    }

    #[test]
    fn feed_counters() {
        let mut ucb = Ucb::new(4, 0.5, 3.0).unwrap();
        ucb.counts = vec![1, 1, 1, 0];
        ucb.sums = vec![0.0; 4];
        let p = ucb.propose().unwrap();
        assert_eq!(p, Proposal::Arm(3));
        ucb.feed(p, Observation::Reward(0.7)).unwrap();
        assert_eq!(ucb.counts[3], 1);
        assert_eq!(ucb.sums[3], 0.7);
        assert_eq!(ucb.steps(), 1);
    }

    #[test]
    fn argmax_shift_invariance() {
        let mut ucb = Ucb::new(6, 0.5, 5.0).unwrap();
        ucb.counts = vec![3, 8, 1, 4, 9, 2];
        ucb.sums = vec![1.0, 6.0, 0.0, 2.5, 4.0, 1.5];
        let idx = ucb.indices();
        let base = argmax_first(idx.iter().copied());
        for c in [-10.0, -0.3, 0.0, 0.7, 123.0] {
            assert_eq!(argmax_first(idx.iter().map(|x| x + c)), base);
        }
    }

    #[test]
    fn ldp_widths() {
        assert!((ldp_variance_proxy(1.0).unwrap() - 2.25).abs() < 1e-15);
        let plain = Ucb::new(2, 0.5, 7.0).unwrap();
        let private = Ucb::ldp(2, 1e8, 7.0).unwrap();
        assert!((private.width(10) - plain.width(10)).abs() < 1e-12);
        assert!(Ucb::ldp(2, 0.0, 7.0).is_err());
    }

    #[test]
    fn single_arm() {
        let mut ucb = Ucb::new(1, 0.5, 3.0).unwrap();
        for _ in 0..5 {
            let p = ucb.propose().unwrap();
            assert_eq!(p, Proposal::Arm(0));
            ucb.feed(p, Observation::Reward(1.0)).unwrap();
        }
    }
}
