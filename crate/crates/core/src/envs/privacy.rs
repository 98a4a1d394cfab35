//! Local differential privacy mechanisms for rewards in [0, 1].
//!
//! - Laplace: `x + Lap(1/ε)` (sensitivity 1). Outputs are not clipped.
//! - Bernoulli response: a two-point output `1/2 ± c` with
//!   `c = (e^ε + 1) / (2 (e^ε − 1))`, emitting the upper point with
//!   probability `1/2 + (x − 1/2) / (2c)` so that the output is unbiased.
//!   At `x = 0` the lower point has probability `e^ε / (e^ε + 1)`.

use rand::distr::Open01;
use rand::Rng;

use super::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrivacyKind {
    Laplace,
    BernoulliResponse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyMechanism {
    pub kind: PrivacyKind,
    pub epsilon: f64,
}

impl PrivacyMechanism {
    pub fn laplace(epsilon: f64) -> Self {
        Self {
            kind: PrivacyKind::Laplace,
            epsilon,
        }
    }

    pub fn bernoulli_response(epsilon: f64) -> Self {
        Self {
            kind: PrivacyKind::BernoulliResponse,
            epsilon,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.epsilon > 0.0 && !self.epsilon.is_nan() {
            Ok(())
        } else {
            Err(EnvError::InvalidPrivacy(format!("epsilon must be positive, got {}", self.epsilon)))
        }
    }

    /// Half-distance between the two bernoulli-response outputs.
    pub fn response_half_width(&self) -> f64 {
        let e = self.epsilon.exp();
        (e + 1.0) / (2.0 * (e - 1.0))
    }
}

/// Privatises one reward `x ∈ [0, 1]`.
pub fn privatize<R: Rng + ?Sized>(mech: &PrivacyMechanism, x: f64, rng: &mut R) -> Result<f64, EnvError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(EnvError::OutOfUnitInterval(x));
    }
    mech.validate()?;
    match mech.kind {
        PrivacyKind::Laplace => {
            let scale = 1.0 / mech.epsilon;
            let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
            Ok(x - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln())
        }
        PrivacyKind::BernoulliResponse => {
            let c = mech.response_half_width();
            let upper = 0.5 + (x - 0.5) / (2.0 * c);
            Ok(if rng.random::<f64>() < upper { 0.5 + c } else { 0.5 - c })
        }
    }
}
