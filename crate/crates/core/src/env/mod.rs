//! Stochastic environments and the classifier stream used for monitoring.

mod bernoulli;
mod classifier;
mod linear;

use nalgebra::DVector;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::game::{Game, SymbolObservation};

pub use bernoulli::{sample_instance, BernoulliPmEnv, InstanceKind};
pub use classifier::{
    generate_classifier, Balance, ClassifierStream, ErrorAggregation, ErrorProfile, StreamDraw,
    MAX_GLOBAL_ERROR,
};
pub use linear::{ContextDist, LinearPmEnv, Link};

/// What the environment draws before the learner acts.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub context: Option<DVector<f64>>,
    pub p_star: DVector<f64>,
    pub outcome: usize,
}

/// Result of playing one action in a [`Round`].
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: SymbolObservation,
    pub outcome: usize,
    /// `(L_a - L_{i*}) p*`.
    pub regret: f64,
}

pub trait Environment: Send {
    fn game(&self) -> &Game;

    /// Context length, or `None` for non-contextual environments.
    fn context_dim(&self) -> Option<usize>;

    fn next_round(&mut self, rng: &mut dyn RngCore) -> Result<Round>;
}

impl Round {
    pub fn step(&self, game: &Game, action: usize) -> Result<Step> {
        if action >= game.n_actions() {
            return Err(Error::ActionOutOfRange(action));
        }
        Ok(Step {
            observation: game.observe(action, self.outcome),
            outcome: self.outcome,
            regret: expected_regret(game, action, &self.p_star),
        })
    }

    pub fn optimal_action(&self, game: &Game) -> usize {
        optimal_action(game, &self.p_star)
    }
}

/// Lowest-index minimizer of the expected loss under `p`.
pub fn optimal_action(game: &Game, p: &DVector<f64>) -> usize {
    let losses = game.expected_losses(p);
    let mut best = 0;
    for a in 1..losses.len() {
        if losses[a] < losses[best] {
            best = a;
        }
    }
    best
}

/// Expected-loss gap of `action` to the best action under `p`.
pub fn expected_regret(game: &Game, action: usize, p: &DVector<f64>) -> f64 {
    let losses = game.expected_losses(p);
    losses[action] - losses.min()
}

pub(crate) fn check_distribution(p: &DVector<f64>) -> Result<()> {
    if p.iter().any(|&v| v.is_nan() || v < 0.0) || (p.sum() - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "not a probability vector: {:?}",
            p.as_slice()
        )));
    }
    Ok(())
}
