//! Symmetric α-stable draws by the Chambers–Mallows–Stuck transform.

use rand::distr::Open01;
use rand::Rng;

use super::EnvError;

/// One draw of `location + S(α, β = 0, scale = 1)` for `α ∈ (1, 2]`.
///
/// With `V ~ U(−π/2, π/2)` and `W ~ Exp(1)`:
/// `X = sin(αV) / cos(V)^{1/α} · (cos((1 − α)V) / W)^{(1 − α)/α}`.
/// At `α = 2` this is `N(0, 2)`.
pub fn sample_alpha_stable<R: Rng + ?Sized>(alpha: f64, location: f64, rng: &mut R) -> Result<f64, EnvError> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(EnvError::InvalidArm(format!(
            "alpha-stable needs alpha in (1, 2] for a finite mean, got {alpha}"
        )));
    }
    let u: f64 = rng.sample(Open01);
    let v = std::f64::consts::PI * (u - 0.5);
    let w = -rng.sample::<f64, _>(Open01).ln();
    let x = (alpha * v).sin() / v.cos().powf(1.0 / alpha)
        * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    Ok(location + x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn alpha_two_is_gaussian_with_variance_two() {
        let mut rng = rng_from_seed(21);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_alpha_stable(2.0, 0.0, &mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 2.0).abs() < 0.04, "{var}");
    }

    #[test]
    fn location_shift() {
        let mut rng = rng_from_seed(22);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_alpha_stable(1.9, 0.7, &mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let tol = 3.0 * (var / n as f64).sqrt();
        assert!((mean - 0.7).abs() < tol, "{mean} ± {tol}");
    }

    #[test]
    fn symmetric_median() {
        let mut rng = rng_from_seed(23);
        let n = 1_000_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_alpha_stable(1.9, 0.0, &mut rng).unwrap()).collect();
        xs.sort_by(f64::total_cmp);
        let median = xs[n / 2];
        assert!(median.abs() < 0.01, "{median}");
    }

    #[test]
    fn rejects_infinite_mean() {
        let mut rng = rng_from_seed(24);
        assert!(sample_alpha_stable(1.0, 0.0, &mut rng).is_err());
        assert!(sample_alpha_stable(0.5, 0.0, &mut rng).is_err());
        assert!(sample_alpha_stable(2.1, 0.0, &mut rng).is_err());
    }
}
