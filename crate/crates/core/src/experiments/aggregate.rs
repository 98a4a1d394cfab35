use crate::sim::RunTrace;

/// Nearest-rank quantile of a sorted sample at probability `num/den`: the
/// element of rank `⌈R·num/den⌉`, clamped to `[1, R]`. Integer arithmetic
/// keeps ranks exact (`0.025·40` is not exactly 1 in floating point).
pub fn nearest_rank(sorted: &[f64], num: usize, den: usize) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let r = sorted.len();
    let rank = (r * num).div_ceil(den).clamp(1, r);
    sorted[rank - 1]
}

/// 2.5% and 97.5% as exact fractions.
pub const LOWER: (usize, usize) = (1, 40);
pub const UPPER: (usize, usize) = (39, 40);

/// Per-round summary of cumulative group regret across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateStats {
    pub runs: usize,
    pub mean: Vec<f64>,
    pub q025: Vec<f64>,
    pub q975: Vec<f64>,
    /// Rounds (1-based) where the mean left the quantile envelope; only
    /// checked once there are at least 40 runs.
    pub envelope_violations: Vec<usize>,
}

impl AggregateStats {
    pub fn rounds(&self) -> usize {
        self.mean.len()
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    /// Mean regret per round, `R(t)/t`, at 1-based round `t`.
    pub fn mean_rate(&self, t: usize) -> f64 {
        self.mean[t - 1] / t as f64
    }

    /// Aggregates rows of a runs × rounds matrix.
    pub fn from_curves(curves: &[&[f64]]) -> Self {
        assert!(!curves.is_empty(), "need at least one run");
        let n = curves[0].len();
        assert!(curves.iter().all(|c| c.len() == n), "runs differ in length");
        let r = curves.len();
        let mut stats = AggregateStats {
            runs: r,
            mean: Vec::with_capacity(n),
            q025: Vec::with_capacity(n),
            q975: Vec::with_capacity(n),
            envelope_violations: Vec::new(),
        };
        let mut column = vec![0.0; r];
        for t in 0..n {
            for (slot, curve) in column.iter_mut().zip(curves) {
                *slot = curve[t];
            }
            // Fold in run order so the mean is independent of scheduling.
            let mean = column.iter().sum::<f64>() / r as f64;
            column.sort_by(f64::total_cmp);
            let lo = nearest_rank(&column, LOWER.0, LOWER.1);
            let hi = nearest_rank(&column, UPPER.0, UPPER.1);
            if r >= 40 && !(lo <= mean && mean <= hi) {
                stats.envelope_violations.push(t + 1);
            }
            stats.mean.push(mean);
            stats.q025.push(lo);
            stats.q975.push(hi);
        }
        stats
    }

    pub fn from_traces(traces: &[RunTrace]) -> Self {
        let curves: Vec<&[f64]> = traces.iter().map(|t| t.regret.as_slice()).collect();
        Self::from_curves(&curves)
    }
}
