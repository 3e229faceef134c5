use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Environment, Round};
use crate::error::{Error, Result};
use crate::game::Game;

const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextDist {
    /// Uniform on `[0,1]^d`.
    #[default]
    Uniform,
    /// A uniformly chosen standard basis vector.
    OneHot,
}

/// How `theta x` becomes an outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `theta x / sum(theta x)`.
    #[default]
    Normalize,
    /// `p_j = theta_j x` for all but the last outcome, which takes the remaining mass.
    Complement,
}

/// Contexts drawn i.i.d., outcomes from `p*(x)` obtained from `theta x`.
#[derive(Debug, Clone)]
pub struct LinearPmEnv {
    game: Arc<Game>,
    theta: DMatrix<f64>,
    contexts: ContextDist,
    link: Link,
}

impl LinearPmEnv {
    pub fn new(
        game: Arc<Game>,
        theta: DMatrix<f64>,
        contexts: ContextDist,
        link: Link,
    ) -> Result<Self> {
        if theta.nrows() != game.n_outcomes() || theta.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "theta is {}x{}, game has {} outcomes",
                theta.nrows(),
                theta.ncols(),
                game.n_outcomes()
            )));
        }
        Ok(Self {
            game,
            theta,
            contexts,
            link,
        })
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.ncols()
    }

    pub fn draw_context(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        let d = self.dim();
        match self.contexts {
            ContextDist::Uniform => DVector::from_fn(d, |_, _| rng.random::<f64>()),
            ContextDist::OneHot => {
                let mut x = DVector::zeros(d);
                x[rng.random_range(0..d)] = 1.0;
                x
            }
        }
    }

    /// `p*(x)`, or `None` when the link leaves the simplex at `x`.
    pub fn p_star(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let raw = &self.theta * x;
        let p = match self.link {
            Link::Normalize => {
                let s = raw.sum();
                if s.is_nan() || s <= 0.0 {
                    return None;
                }
                raw / s
            }
            Link::Complement => {
                let m = raw.len();
                let head: f64 = raw.rows(0, m - 1).sum();
                let mut p = raw;
                p[m - 1] = 1.0 - head;
                p
            }
        };
        p.iter().all(|&v| (0.0..=1.0).contains(&v)).then_some(p)
    }
}

impl Environment for LinearPmEnv {
    fn game(&self) -> &Game {
        &self.game
    }

    fn context_dim(&self) -> Option<usize> {
        Some(self.dim())
    }

    fn next_round(&mut self, rng: &mut dyn RngCore) -> Result<Round> {
        for _ in 0..MAX_REDRAWS {
            let x = self.draw_context(rng);
            if let Some(p) = self.p_star(&x) {
                let w = WeightedIndex::new(p.iter().copied())
                    .map_err(|e| Error::Config(format!("bad outcome weights: {e}")))?;
                return Ok(Round {
                    outcome: w.sample(rng),
                    context: Some(x),
                    p_star: p,
                });
            }
        }
        Err(Error::Config(format!(
            "no valid context after {MAX_REDRAWS} draws; theta does not map contexts into the simplex"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::apple_tasting;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(theta: DMatrix<f64>, c: ContextDist, link: Link) -> LinearPmEnv {
        LinearPmEnv::new(Arc::new(apple_tasting()), theta, c, link).unwrap()
    }

    #[test]
    fn constant_theta_normalizes_to_halves() {
        let e = env(
            DMatrix::from_element(2, 10, 0.1),
            ContextDist::Uniform,
            Link::Normalize,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let x = e.draw_context(&mut rng);
            let p = e.p_star(&x).unwrap();
            assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_theta_complement_tracks_context_sum() {
        let e = env(
            DMatrix::from_element(2, 10, 0.1),
            ContextDist::Uniform,
            Link::Complement,
        );
        let x = DVector::from_element(10, 0.3);
        let p = e.p_star(&x).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-15);
        assert!((p[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn one_hot_contexts_select_columns() {
        let theta = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.1, 0.6]);
        let e = env(theta, ContextDist::OneHot, Link::Normalize);
        let p = e.p_star(&DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = e.draw_context(&mut rng);
        assert_eq!(x.sum(), 1.0);
    }

    #[test]
    fn zero_sum_contexts_are_rejected() {
        let theta = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let mut e = env(theta, ContextDist::OneHot, Link::Normalize);
        assert!(e.p_star(&DVector::from_vec(vec![0.0, 1.0])).is_none());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let r = e.next_round(&mut rng).unwrap();
            assert_eq!(r.context.unwrap()[0], 1.0);
        }
        let mut dead = env(DMatrix::zeros(2, 2), ContextDist::OneHot, Link::Normalize);
        assert!(dead.next_round(&mut rng).is_err());
    }

    #[test]
    fn emitted_distributions_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta = DMatrix::from_fn(2, 10, |_, _| rng.random::<f64>());
        for link in [Link::Normalize, Link::Complement] {
            let mut e = env(theta.clone() * 0.2, ContextDist::Uniform, link);
            for _ in 0..100_000 {
                let r = e.next_round(&mut rng).unwrap();
                assert!((r.p_star.sum() - 1.0).abs() < 1e-12);
                assert!(r.p_star.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn bad_theta_shape() {
        let g = Arc::new(apple_tasting());
        assert!(LinearPmEnv::new(
            g,
            DMatrix::zeros(3, 2),
            ContextDist::Uniform,
            Link::Normalize
        )
        .is_err());
    }
}
