use std::sync::Arc;

use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{check_distribution, Environment, Round};
use crate::error::{Error, Result};
use crate::game::Game;

/// Outcomes drawn i.i.d. from a fixed `p*`.
#[derive(Debug, Clone)]
pub struct BernoulliPmEnv {
    game: Arc<Game>,
    p_star: DVector<f64>,
    sampler: WeightedIndex<f64>,
}

impl BernoulliPmEnv {
    pub fn new(game: Arc<Game>, p_star: DVector<f64>) -> Result<Self> {
        if p_star.len() != game.n_outcomes() {
            return Err(Error::Dimension(format!(
                "p* has {} entries for {} outcomes",
                p_star.len(),
                game.n_outcomes()
            )));
        }
        check_distribution(&p_star)?;
        let sampler = WeightedIndex::new(p_star.iter().copied())
            .map_err(|e| Error::Config(format!("bad outcome weights: {e}")))?;
        Ok(Self {
            game,
            p_star,
            sampler,
        })
    }

    pub fn p_star(&self) -> &DVector<f64> {
        &self.p_star
    }
}

impl Environment for BernoulliPmEnv {
    fn game(&self) -> &Game {
        &self.game
    }

    fn context_dim(&self) -> Option<usize> {
        None
    }

    fn next_round(&mut self, rng: &mut dyn RngCore) -> Result<Round> {
        Ok(Round {
            context: None,
            p_star: self.p_star.clone(),
            outcome: self.sampler.sample(rng),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// `p_A ~ U[0.4, 0.6]`.
    Balanced,
    /// `p_A ~ U([0, 0.2] ∪ [0.8, 1])`.
    Imbalanced,
}

/// Two-outcome instance `[p_A, 1 - p_A]`.
pub fn sample_instance(kind: InstanceKind, rng: &mut dyn RngCore) -> DVector<f64> {
    let p = match kind {
        InstanceKind::Balanced => rng.random_range(0.4..=0.6),
        InstanceKind::Imbalanced => {
            let u: f64 = rng.random_range(0.0..=0.4);
            if u <= 0.2 {
                u
            } else {
                u + 0.6
            }
        }
    };
    DVector::from_vec(vec![p, 1.0 - p])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{apple_tasting, label_efficient};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_distributions() {
        let g = Arc::new(apple_tasting());
        assert!(BernoulliPmEnv::new(g.clone(), DVector::from_vec(vec![0.5, 0.6])).is_err());
        assert!(BernoulliPmEnv::new(g.clone(), DVector::from_vec(vec![1.0])).is_err());
        assert!(BernoulliPmEnv::new(g, DVector::from_vec(vec![1.0, 0.0])).is_ok());
    }

    #[test]
    fn degenerate_instance_always_emits_same_outcome() {
        let g = Arc::new(apple_tasting());
        let mut env = BernoulliPmEnv::new(g.clone(), DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let r = env.next_round(&mut rng).unwrap();
            let s = r.step(&g, 1).unwrap();
            assert_eq!(g.symbols(1)[s.observation.symbol_index], "∧");
            assert_eq!(s.regret, 0.0);
        }
    }

    #[test]
    fn fixed_action_regret_sums_to_t_delta() {
        let g = Arc::new(label_efficient());
        let p = DVector::from_vec(vec![0.3, 0.7]);
        let mut env = BernoulliPmEnv::new(g.clone(), p.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let delta = super::super::expected_regret(&g, 0, &p);
        let total: f64 = (0..1000)
            .map(|_| {
                env.next_round(&mut rng)
                    .unwrap()
                    .step(&g, 0)
                    .unwrap()
                    .regret
            })
            .sum();
        assert!((total - 1000.0 * delta).abs() < 1e-9);
        assert!((delta - 0.7).abs() < 1e-12);
    }

    #[test]
    fn frequencies_within_four_sigma() {
        let g = Arc::new(apple_tasting());
        let p = DVector::from_vec(vec![0.37, 0.63]);
        let mut env = BernoulliPmEnv::new(g, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| env.next_round(&mut rng).unwrap().outcome == 0)
            .count() as f64;
        let sd = (0.37f64 * 0.63 / n as f64).sqrt();
        assert!((hits / n as f64 - 0.37).abs() < 4.0 * sd);
    }

    #[test]
    fn instance_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let b = sample_instance(InstanceKind::Balanced, &mut rng);
            assert!((0.4..=0.6).contains(&b[0]));
            let i = sample_instance(InstanceKind::Imbalanced, &mut rng);
            assert!(i[0] <= 0.2 || i[0] >= 0.8);
            assert!((i.sum() - 1.0).abs() < 1e-15);
        }
    }
}
