use nalgebra::DVector;
use rand::{Rng, RngCore};

use super::Policy;
use crate::error::{Error, Result};
use crate::game::SymbolObservation;

/// Plays an action uniformly at random every round.
#[derive(Debug, Clone)]
pub struct UniformPolicy {
    n_actions: usize,
}

impl UniformPolicy {
    pub fn new(n_actions: usize) -> Self {
        Self { n_actions }
    }
}

impl Policy for UniformPolicy {
    fn name(&self) -> &str {
        "uniform"
    }

    fn select(&mut self, _: Option<&DVector<f64>>, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(rng.random_range(0..self.n_actions))
    }

    fn update(&mut self, _: usize, _: Option<&DVector<f64>>, _: &SymbolObservation) -> Result<()> {
        Ok(())
    }
}

/// Always plays the same action.
#[derive(Debug, Clone)]
pub struct FixedPolicy {
    action: usize,
}

impl FixedPolicy {
    pub fn new(action: usize, n_actions: usize) -> Result<Self> {
        if action >= n_actions {
            return Err(Error::ActionOutOfRange(action));
        }
        Ok(Self { action })
    }
}

impl Policy for FixedPolicy {
    fn name(&self) -> &str {
        "fixed"
    }

    fn select(&mut self, _: Option<&DVector<f64>>, _: &mut dyn RngCore) -> Result<usize> {
        Ok(self.action)
    }

    fn update(&mut self, _: usize, _: Option<&DVector<f64>>, _: &SymbolObservation) -> Result<()> {
        Ok(())
    }
}
