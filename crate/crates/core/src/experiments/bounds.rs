//! Closed-form regret bounds used as reference lines and regression guards.

/// Single-agent UCB bound over `t` rounds for σ-subgaussian rewards:
/// `Σ_{Δ>0} 16σ² ln t / Δ + 3 Σ Δ`.
pub fn ucb_single_agent_bound(gaps: &[f64], t: f64, sigma: f64) -> f64 {
    gaps.iter()
        .filter(|&&d| d > 0.0)
        .map(|&d| 16.0 * sigma * sigma * t.ln() / d + 3.0 * d)
        .sum()
}

/// Group-regret bound for QuACK with UCB at `δ = 1/(mn)²`:
/// `Σ_{Δ>0} 16σ² ln(mn)/Δ + (3 + 3 Σ_w d_vw) Σ Δ`.
pub fn quack_ucb_bound(gaps: &[f64], sum_of_distances: usize, m: usize, n: usize, sigma: f64) -> f64 {
    let mn = (m * n) as f64;
    let total_gap: f64 = gaps.iter().filter(|&&d| d > 0.0).sum();
    gaps.iter()
        .filter(|&&d| d > 0.0)
        .map(|&d| 16.0 * sigma * sigma * mn.ln() / d)
        .sum::<f64>()
        + (3.0 + 3.0 * sum_of_distances as f64) * total_gap
}

/// Generic group-regret bound: a single-agent bound evaluated at `m·n`
/// plus `3 Σ_w d_vw Σ_a Δ_a`.
pub fn composed_bound(single_agent_bound: impl Fn(f64) -> f64, sum_of_distances: usize, gaps: &[f64], m: usize, n: usize) -> f64 {
    single_agent_bound((m * n) as f64) + 3.0 * sum_of_distances as f64 * gaps.iter().sum::<f64>()
}

/// Minimax lower bound `√(mn(k−1)) / 27`.
pub fn minimax_lower_bound(m: usize, n: usize, k: usize) -> f64 {
    ((m * n * k.saturating_sub(1)) as f64).sqrt() / 27.0
}
