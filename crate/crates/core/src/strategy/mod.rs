//! Learning strategies: CBP and RandCBP for stochastic games, CBPside* and
//! RandCBPside* for linear contextual games, plus simple baselines.

mod baseline;
mod cbp;
mod cbpside;
mod plausible;
mod randomization;

use nalgebra::DVector;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::game::SymbolObservation;
use crate::structure::GameStructure;

pub use baseline::{FixedPolicy, UniformPolicy};
pub use cbp::{Cbp, CbpConfig, CbpState, RoundPlan};
pub use cbpside::{
    deterministic_scale, CbpSide, CbpSideConfig, ContextRoundPlan, RidgeArm, DEFAULT_LAMBDA,
};
pub use plausible::{build_halfspaces, plausible_sets, PlausibleCache, PlausibleSets, SignedPair};
pub use randomization::{sample_z, BinNormalization, RandomizationConfig};

pub const DEFAULT_ALPHA: f64 = 1.01;

/// An online learner. Rounds are numbered from 1 and advance on each `update`.
pub trait Policy: Send {
    fn name(&self) -> &str;

    fn select(&mut self, context: Option<&DVector<f64>>, rng: &mut dyn RngCore) -> Result<usize>;

    fn update(
        &mut self,
        action: usize,
        context: Option<&DVector<f64>>,
        observation: &SymbolObservation,
    ) -> Result<()>;

    /// Rounds where the confident constraints were contradictory.
    fn confidence_failures(&self) -> u64 {
        0
    }
}

/// `f(t) = alpha^{1/3} t^{2/3} ln(t)^{1/3}` and `eta_a = W_a^{2/3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationSchedule {
    alpha: f64,
    eta: Vec<f64>,
}

impl ExplorationSchedule {
    pub fn new(alpha: f64, weights: &[f64]) -> Self {
        Self {
            alpha,
            eta: weights.iter().map(|w| w.powf(2.0 / 3.0)).collect(),
        }
    }

    pub fn f(&self, t: u64) -> f64 {
        let t = t as f64;
        self.alpha.cbrt() * t.powf(2.0 / 3.0) * t.ln().max(0.0).cbrt()
    }

    pub fn eta(&self, a: usize) -> f64 {
        self.eta[a]
    }

    pub fn threshold(&self, a: usize, t: u64) -> f64 {
        self.eta[a] * self.f(t)
    }
}

/// Observer data of one unordered neighbor pair `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPlan {
    pub i: usize,
    pub j: usize,
    pub nplus: Vec<usize>,
    pub observer_set: Vec<usize>,
    /// `(a, v_{ija})` for every `a` in the observer set.
    pub observers: Vec<(usize, DVector<f64>)>,
}

impl PairPlan {
    pub fn from_structure(structure: &GameStructure) -> Result<Vec<PairPlan>> {
        structure
            .neighbor_pairs()
            .iter()
            .map(|&(i, j)| {
                let obs = structure.observers(i, j).ok_or_else(|| {
                    Error::Config(format!(
                        "pair ({i},{j}) has no observer vectors; the game is not globally observable"
                    ))
                })?;
                Ok(PairPlan {
                    i,
                    j,
                    nplus: structure.nplus(i, j).unwrap_or(&[]).to_vec(),
                    observer_set: obs.actions.clone(),
                    observers: obs.actions.iter().copied().zip(obs.vectors.iter().cloned()).collect(),
                })
            })
            .collect()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must be > 1, got {alpha}")))
    }
}

/// Index of the largest score among `candidates`; ties go to the lowest action.
fn argmax_lowest(candidates: &[usize], score: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    for a in sorted {
        let s = score(a);
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((a, s)),
        }
    }
    best.map(|(a, _)| a)
}

/// `P(t) ∪ N+(t) ∪ (V(t) ∩ R(t))`, sorted and deduplicated.
fn candidate_set(
    plausible: &PlausibleSets,
    plans: &[PairPlan],
    underplayed: impl Fn(usize) -> bool,
) -> Vec<usize> {
    let mut out = plausible.actions.clone();
    for plan in plans
        .iter()
        .filter(|p| plausible.pairs.contains(&(p.i, p.j)))
    {
        out.extend(&plan.nplus);
        out.extend(
            plan.observer_set
                .iter()
                .copied()
                .filter(|&a| underplayed(a)),
        );
    }
    out.sort_unstable();
    out.dedup();
    out
}
