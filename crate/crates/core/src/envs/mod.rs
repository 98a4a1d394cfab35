//! Stochastic bandit environments.
//!
//! Environments are immutable descriptions; every draw takes a caller-owned
//! generator and depends only on the requested action and the generator
//! state, never on which agent asks or when.

mod privacy;
mod stable;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

pub use privacy::{privatize, PrivacyKind, PrivacyMechanism};
pub use stable::sample_alpha_stable;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("environment needs at least one arm")]
    NoArms,
    #[error("arm {arm} out of range for {k} arms")]
    ArmOutOfRange { arm: usize, k: usize },
    #[error("invalid arm parameters: {0}")]
    InvalidArm(String),
    #[error("duelling environment cannot produce scalar rewards")]
    NotRewardMode,
    #[error("reward environment cannot run duels")]
    NotDuellingMode,
    #[error("invalid preference matrix: {0}")]
    InvalidPreference(String),
    #[error("preference matrix has no Condorcet winner")]
    NoCondorcetWinner,
    #[error("privatised rewards must lie in [0, 1], got {0}")]
    OutOfUnitInterval(f64),
    #[error("privacy mechanisms need Bernoulli arms (rewards in [0, 1])")]
    UnboundedPrivateArm,
    #[error("invalid privacy parameter: {0}")]
    InvalidPrivacy(String),
}

/// Feedback mode of an environment (and of the policies that match it).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Reward,
    Duelling,
}

/// Reward law of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmSpec {
    Bernoulli { p: f64 },
    Gaussian { mean: f64, sd: f64 },
    /// Standard symmetric α-stable law (scale 1) shifted by `location`.
    AlphaStable { alpha: f64, location: f64 },
}

impl ArmSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        match *self {
            ArmSpec::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                Err(EnvError::InvalidArm(format!("bernoulli p = {p} outside [0, 1]")))
            }
            ArmSpec::Gaussian { mean, sd } if !(sd > 0.0) || !mean.is_finite() => Err(
                EnvError::InvalidArm(format!("gaussian needs finite mean and sd > 0, got ({mean}, {sd})")),
            ),
            ArmSpec::AlphaStable { alpha, location } if !(alpha > 1.0 && alpha <= 2.0) || !location.is_finite() => {
                Err(EnvError::InvalidArm(format!("alpha-stable needs alpha in (1, 2], got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ArmSpec::Bernoulli { p } => p,
            ArmSpec::Gaussian { mean, .. } => mean,
            ArmSpec::AlphaStable { location, .. } => location,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ArmSpec::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            ArmSpec::Gaussian { mean, sd } => Normal::new(mean, sd)
                .expect("validated gaussian parameters")
                .sample(rng),
            ArmSpec::AlphaStable { alpha, location } => {
                sample_alpha_stable(alpha, location, rng).expect("validated stable parameters")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Feedback {
    Reward {
        arms: Vec<ArmSpec>,
        privacy: Option<PrivacyMechanism>,
    },
    Duelling {
        preference: Vec<Vec<f64>>,
    },
}

/// A k-armed environment with known gaps (simulation privilege).
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    feedback: Feedback,
    optimal: usize,
    gaps: Vec<f64>,
}

impl Environment {
    pub fn reward(arms: Vec<ArmSpec>) -> Result<Self, EnvError> {
        if arms.is_empty() {
            return Err(EnvError::NoArms);
        }
        for arm in &arms {
            arm.validate()?;
        }
        let means: Vec<f64> = arms.iter().map(ArmSpec::mean).collect();
        // Lowest index among maximisers.
        let optimal = means
            .iter()
            .enumerate()
            .fold(0, |best, (a, &mu)| if mu > means[best] { a } else { best });
        let gaps = means.iter().map(|&mu| means[optimal] - mu).collect();
        Ok(Self {
            feedback: Feedback::Reward {
                arms,
                privacy: None,
            },
            optimal,
            gaps,
        })
    }

    pub fn bernoulli(means: &[f64]) -> Result<Self, EnvError> {
        Self::reward(means.iter().map(|&p| ArmSpec::Bernoulli { p }).collect())
    }

    /// Ten Bernoulli arms, mean 0.5 for the first and 0.45 for the rest.
    pub fn benchmark_bernoulli() -> Self {
        let mut means = vec![0.45; 10];
        means[0] = 0.5;
        Self::bernoulli(&means).expect("valid means")
    }

    /// Rewards pass through `mech` before anyone observes them. Only
    /// Bernoulli arms are accepted since the mechanisms need inputs in [0, 1].
    pub fn with_privacy(mut self, mech: PrivacyMechanism) -> Result<Self, EnvError> {
        mech.validate()?;
        match &mut self.feedback {
            Feedback::Reward { arms, privacy } => {
                if arms.iter().any(|a| !matches!(a, ArmSpec::Bernoulli { .. })) {
                    return Err(EnvError::UnboundedPrivateArm);
                }
                *privacy = Some(mech);
                Ok(self)
            }
            Feedback::Duelling { .. } => Err(EnvError::NotRewardMode),
        }
    }

    /// Duelling environment over a preference matrix `P[a][b] = P(a beats b)`.
    /// The matrix must satisfy `P[a][b] + P[b][a] = 1` and have a Condorcet
    /// winner, which serves as the optimal arm.
    pub fn duelling(preference: Vec<Vec<f64>>) -> Result<Self, EnvError> {
        let k = preference.len();
        if k == 0 {
            return Err(EnvError::NoArms);
        }
        validate_preference(&preference)?;
        let optimal = condorcet_winner(&preference).ok_or(EnvError::NoCondorcetWinner)?;
        let gaps = (0..k)
            .map(|a| if a == optimal { 0.0 } else { preference[optimal][a] - 0.5 })
            .collect();
        Ok(Self {
            feedback: Feedback::Duelling { preference },
            optimal,
            gaps,
        })
    }

    /// Arm 0 beats every other arm with probability `p`; all other duels are fair.
    pub fn condorcet(k: usize, p: f64) -> Result<Self, EnvError> {
        let mut pref = vec![vec![0.5; k]; k];
        for b in 1..k {
            pref[0][b] = p;
            pref[b][0] = 1.0 - p;
        }
        Self::duelling(pref)
    }

    pub fn k(&self) -> usize {
        self.gaps.len()
    }

    pub fn mode(&self) -> Mode {
        match self.feedback {
            Feedback::Reward { .. } => Mode::Reward,
            Feedback::Duelling { .. } => Mode::Duelling,
        }
    }

    pub fn arms(&self) -> Option<&[ArmSpec]> {
        match &self.feedback {
            Feedback::Reward { arms, .. } => Some(arms),
            Feedback::Duelling { .. } => None,
        }
    }

    pub fn privacy(&self) -> Option<PrivacyMechanism> {
        match &self.feedback {
            Feedback::Reward { privacy, .. } => *privacy,
            Feedback::Duelling { .. } => None,
        }
    }

    pub fn preference(&self) -> Option<&[Vec<f64>]> {
        match &self.feedback {
            Feedback::Duelling { preference } => Some(preference),
            Feedback::Reward { .. } => None,
        }
    }

    /// Optimal arm (Condorcet winner for duels), lowest index on ties.
    pub fn optimal_arm(&self) -> usize {
        self.optimal
    }

    /// `μ*` for reward environments.
    pub fn optimal_mean(&self) -> Option<f64> {
        self.arms().map(|arms| arms[self.optimal].mean())
    }

    /// `Δ_a = μ* − μ_a`, or `P(a* ≻ a) − 1/2` for duels.
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Number of distinct actions an agent can take: `k`, or `k²` ordered pairs.
    pub fn action_count(&self) -> usize {
        match self.mode() {
            Mode::Reward => self.k(),
            Mode::Duelling => self.k() * self.k(),
        }
    }

    /// Per-round regret of an action code (`a` or `a·k + b` for the pair `(a, b)`).
    pub fn action_gap(&self, code: usize) -> f64 {
        match self.mode() {
            Mode::Reward => self.gaps[code],
            Mode::Duelling => {
                let k = self.k();
                (self.gaps[code / k] + self.gaps[code % k]) / 2.0
            }
        }
    }

    fn check_arm(&self, a: usize) -> Result<(), EnvError> {
        if a >= self.k() {
            Err(EnvError::ArmOutOfRange { arm: a, k: self.k() })
        } else {
            Ok(())
        }
    }
}

/// One reward for arm `a`, privatised when the environment carries a mechanism.
pub fn sample_reward<R: Rng + ?Sized>(env: &Environment, a: usize, rng: &mut R) -> Result<f64, EnvError> {
    env.check_arm(a)?;
    match &env.feedback {
        Feedback::Reward { arms, privacy } => {
            let x = arms[a].sample(rng);
            match privacy {
                Some(mech) => privatize(mech, x, rng),
                None => Ok(x),
            }
        }
        Feedback::Duelling { .. } => Err(EnvError::NotRewardMode),
    }
}

/// Winner of a duel between `a` and `b`: `a` with probability `P[a][b]`.
pub fn sample_duel<R: Rng + ?Sized>(
    env: &Environment,
    a: usize,
    b: usize,
    rng: &mut R,
) -> Result<usize, EnvError> {
    env.check_arm(a)?;
    env.check_arm(b)?;
    match &env.feedback {
        Feedback::Duelling { preference } => {
            Ok(if rng.random::<f64>() < preference[a][b] { a } else { b })
        }
        Feedback::Reward { .. } => Err(EnvError::NotDuellingMode),
    }
}

fn validate_preference(pref: &[Vec<f64>]) -> Result<(), EnvError> {
    let k = pref.len();
    for (a, row) in pref.iter().enumerate() {
        if row.len() != k {
            return Err(EnvError::InvalidPreference(format!("row {} has {} entries", a + 1, row.len())));
        }
        if row[a] != 0.5 {
            return Err(EnvError::InvalidPreference(format!("diagonal entry {} is not 1/2", a + 1)));
        }
        for (b, &p) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(EnvError::InvalidPreference(format!("entry ({}, {}) = {p}", a + 1, b + 1)));
            }
            if (p + pref[b][a] - 1.0).abs() > 1e-12 {
                return Err(EnvError::InvalidPreference(format!(
                    "entries ({0}, {1}) and ({1}, {0}) do not sum to 1",
                    a + 1,
                    b + 1
                )));
            }
        }
    }
    Ok(())
}

/// The arm beating every other arm with probability above 1/2, if any.
pub fn condorcet_winner(pref: &[Vec<f64>]) -> Option<usize> {
    (0..pref.len()).find(|&a| (0..pref.len()).all(|b| b == a || pref[a][b] > 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn degenerate_bernoulli() {
        let env = Environment::bernoulli(&[1.0, 0.0]).unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..1000 {
            assert_eq!(sample_reward(&env, 0, &mut rng).unwrap(), 1.0);
            assert_eq!(sample_reward(&env, 1, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn benchmark_env_empirical_means() {
        let env = Environment::benchmark_bernoulli();
        let mut rng = rng_from_seed(2);
        let n = 100_000;
        for a in 0..10 {
            let mean: f64 = (0..n).map(|_| sample_reward(&env, a, &mut rng).unwrap()).sum::<f64>() / n as f64;
            let expected = if a == 0 { 0.5 } else { 0.45 };
            assert!((mean - expected).abs() < 0.01, "arm {a}: {mean}");
        }
    }

    #[test]
    fn gaussian_mean() {
        let env = Environment::reward(vec![ArmSpec::Gaussian { mean: 0.3, sd: 1.0 }]).unwrap();
        let mut rng = rng_from_seed(3);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| sample_reward(&env, 0, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 3e-3, "{mean}");
    }

    #[test]
    fn gaps_and_optimum() {
        let env = Environment::bernoulli(&[0.2, 0.7, 0.7, 0.1]).unwrap();
        assert_eq!(env.optimal_arm(), 1);
        assert_eq!(env.optimal_mean(), Some(0.7));
        assert_eq!(env.gaps()[1], 0.0);
        assert!(env.gaps().iter().all(|&g| g >= 0.0));
        assert!((env.gaps()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mode_errors() {
        let reward = Environment::benchmark_bernoulli();
        let duel = Environment::condorcet(3, 0.7).unwrap();
        let mut rng = rng_from_seed(4);
        assert_eq!(sample_duel(&reward, 0, 1, &mut rng), Err(EnvError::NotDuellingMode));
        assert_eq!(sample_reward(&duel, 0, &mut rng), Err(EnvError::NotRewardMode));
        assert!(matches!(sample_reward(&reward, 10, &mut rng), Err(EnvError::ArmOutOfRange { .. })));
    }

    #[test]
    fn duel_examples() {
        let mut rng = rng_from_seed(5);
        let sure = Environment::condorcet(2, 1.0).unwrap();
        assert!((0..1000).all(|_| sample_duel(&sure, 0, 1, &mut rng).unwrap() == 0));

        let env = Environment::condorcet(3, 0.7).unwrap();
        let n = 100_000;
        let wins = (0..n).filter(|_| sample_duel(&env, 0, 1, &mut rng).unwrap() == 0).count();
        assert!((wins as f64 / n as f64 - 0.7).abs() < 0.01);
        // Self-duels return the arm itself; the coin is still flipped.
        assert!((0..100).all(|_| sample_duel(&env, 2, 2, &mut rng).unwrap() == 2));
    }

    #[test]
    fn duelling_gaps() {
        let env = Environment::condorcet(5, 0.7).unwrap();
        assert_eq!(env.optimal_arm(), 0);
        assert_eq!(env.gaps()[0], 0.0);
        for a in 1..5 {
            assert!((env.gaps()[a] - 0.2).abs() < 1e-12);
        }
        assert!((env.action_gap(1 * 5 + 2) - 0.2).abs() < 1e-12);
        assert!((env.action_gap(0 * 5 + 3) - 0.1).abs() < 1e-12);
        assert_eq!(env.action_gap(0), 0.0);
    }

    #[test]
    fn preference_validation() {
        let bad = vec![vec![0.5, 0.6], vec![0.5, 0.5]];
        assert!(matches!(Environment::duelling(bad), Err(EnvError::InvalidPreference(_))));
        let cyclic = vec![
            vec![0.5, 0.6, 0.4],
            vec![0.4, 0.5, 0.6],
            vec![0.6, 0.4, 0.5],
        ];
        assert_eq!(condorcet_winner(&cyclic), None);
        assert_eq!(Environment::duelling(cyclic), Err(EnvError::NoCondorcetWinner));
    }

    #[test]
    fn privacy_needs_bernoulli_arms() {
        let env = Environment::reward(vec![ArmSpec::Gaussian { mean: 0.0, sd: 1.0 }]).unwrap();
        let mech = PrivacyMechanism::laplace(1.0);
        assert_eq!(env.with_privacy(mech), Err(EnvError::UnboundedPrivateArm));
    }

    #[test]
    fn invalid_arms() {
        assert!(Environment::bernoulli(&[1.5]).is_err());
        assert!(Environment::reward(vec![ArmSpec::AlphaStable { alpha: 1.0, location: 0.0 }]).is_err());
        assert!(Environment::reward(vec![ArmSpec::Gaussian { mean: 0.0, sd: 0.0 }]).is_err());
        assert_eq!(Environment::bernoulli(&[]), Err(EnvError::NoArms));
    }
}
