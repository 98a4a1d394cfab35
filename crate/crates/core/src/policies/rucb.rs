use rand::Rng;

use crate::envs::Mode;
use crate::rng::SimRng;

use super::{argmax_first, Observation, Policy, PolicyError, Proposal, Turn};

/// Relative upper confidence bound for duelling bandits (Zoghi et al., 2014).
///
/// Each step builds the optimistic preference matrix `U`, takes the set `C`
/// of arms whose row never drops below 1/2 and picks a champion `c` from it.
/// An arm that was the sole member of `C` in the past keeps half the
/// probability mass while it stays in `C`. The opponent is `argmax_j U[j][c]`.
/// If `C` is empty the champion is drawn uniformly from all arms.
#[derive(Debug, Clone)]
pub struct Rucb {
    alpha: f64,
    wins: Vec<Vec<u64>>,
    best: Option<usize>,
    steps: u64,
    rng: SimRng,
    turn: Turn,
}

impl Rucb {
    pub fn new(k: usize, alpha: f64, rng: SimRng) -> Result<Self, PolicyError> {
        if !(alpha > 0.5 && alpha.is_finite()) {
            return Err(PolicyError::InvalidParameter(format!("RUCB alpha must exceed 1/2, got {alpha}")));
        }
        Ok(Rucb {
            alpha,
            wins: vec![vec![0; k]; k],
            best: None,
            steps: 0,
            rng,
            turn: Turn::default(),
        })
    }

    pub fn wins(&self) -> &[Vec<u64>] {
        &self.wins
    }

    /// `U[a][b]`; `1` when the pair has never been compared, `1/2` on the diagonal.
    pub fn upper_bound(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.5;
        }
        let w = self.wins[a][b];
        let n = w + self.wins[b][a];
        if n == 0 {
            return 1.0;
        }
        let log_s = if self.steps > 0 { (self.steps as f64).ln() } else { 0.0 };
        w as f64 / n as f64 + (self.alpha * log_s / n as f64).sqrt()
    }

    fn choose_champion(&mut self) -> usize {
        let k = self.wins.len();
        let candidates: Vec<usize> = (0..k)
            .filter(|&a| (0..k).all(|b| self.upper_bound(a, b) >= 0.5))
            .collect();
        if candidates.is_empty() {
            return self.rng.random_range(0..k);
        }
        if self.best.is_some_and(|b| !candidates.contains(&b)) {
            self.best = None;
        }
        if candidates.len() == 1 {
            self.best = Some(candidates[0]);
            return candidates[0];
        }
        match self.best {
            Some(b) => {
                if self.rng.random::<f64>() < 0.5 {
                    b
                } else {
                    let others: Vec<usize> = candidates.into_iter().filter(|&a| a != b).collect();
                    others[self.rng.random_range(0..others.len())]
                }
            }
            None => candidates[self.rng.random_range(0..candidates.len())],
        }
    }
}

impl Policy for Rucb {
    fn name(&self) -> &'static str {
        "rucb"
    }

    fn mode(&self) -> Mode {
        Mode::Duelling
    }

    fn num_arms(&self) -> usize {
        self.wins.len()
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn propose(&mut self) -> Result<Proposal, PolicyError> {
        self.turn.ensure_idle()?;
        let c = self.choose_champion();
        let d = argmax_first((0..self.wins.len()).map(|j| self.upper_bound(j, c)));
        Ok(self.turn.open(Proposal::Duel(c, d)))
    }

    fn feed(&mut self, proposal: Proposal, observation: Observation) -> Result<(), PolicyError> {
        self.turn.ensure_outstanding(proposal)?;
        let (Proposal::Duel(a, b), Observation::Winner(x)) = (proposal, observation) else {
            return Err(PolicyError::WrongObservation(observation));
        };
        if x != a && x != b {
            return Err(PolicyError::WrongObservation(observation));
        }
        self.turn.close();
        let loser = if x == a { b } else { a };
        self.wins[x][loser] += 1;
        self.steps += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{sample_duel, Environment};
    use crate::rng::rng_from_seed;

    #[test]
    fn no_data_bounds_are_one() {
        let r = Rucb::new(4, 0.51, rng_from_seed(0)).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let expected = if a == b { 0.5 } else { 1.0 };
                assert_eq!(r.upper_bound(a, b), expected);
            }
        }
    }

    #[test]
    fn hand_evaluated_bound() {
        let mut r = Rucb::new(2, 0.51, rng_from_seed(0)).unwrap();
        r.wins[0][1] = 9;
        r.wins[1][0] = 1;
        r.steps = 100;
        let expected = 0.9 + (0.51 * 100f64.ln() / 10.0).sqrt();
        assert!((r.upper_bound(0, 1) - expected).abs() < 1e-12);
        assert!((r.upper_bound(0, 1) - 1.385).abs() < 1e-3);
    }

    #[test]
    fn feed_updates_winner_row() {
        let mut r = Rucb::new(3, 0.51, rng_from_seed(0)).unwrap();
        let p = r.propose().unwrap();
        let Proposal::Duel(a, b) = p else { unreachable!() };
        r.feed(p, Observation::Winner(a)).unwrap();
        if a != b {
            assert_eq!(r.wins[a][b], 1);
            assert_eq!(r.wins[b][a], 0);
        } else {
            assert_eq!(r.wins[a][a], 1);
        }
        assert_eq!(r.steps(), 1);
    }

    #[test]
    fn rejects_bystander_winner() {
        let mut r = Rucb::new(3, 0.51, rng_from_seed(0)).unwrap();
        let p = r.propose().unwrap();
        let Proposal::Duel(a, b) = p else { unreachable!() };
        let other = (0..3).find(|&x| x != a && x != b).unwrap();
        assert!(r.feed(p, Observation::Winner(other)).is_err());
    }

    #[test]
    fn finds_condorcet_winner() {
        let env = Environment::condorcet(5, 0.7).unwrap();
        let n = 20_000;
        let seeds = 10;
        let mut involved = 0u64;
        for seed in 0..seeds {
            let mut r = Rucb::new(5, 0.51, rng_from_seed(seed)).unwrap();
            let mut env_rng = rng_from_seed(1000 + seed);
            for t in 0..n {
                let p = r.propose().unwrap();
                let Proposal::Duel(a, b) = p else { unreachable!() };
                let winner = sample_duel(&env, a, b, &mut env_rng).unwrap();
                r.feed(p, Observation::Winner(winner)).unwrap();
                if t >= 3 * n / 4 && (a == 0 || b == 0) {
                    involved += 1;
                }
            }
        }
        let frac = involved as f64 / (seeds * n / 4) as f64;
        assert!(frac > 0.9, "{frac}");
    }
}
