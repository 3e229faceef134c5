use log::debug;

use crate::game::Game;
use crate::numerics::{lp_feasible, ConstraintSet, Memo};
use crate::structure::GameStructure;

/// A confidently signed pair: `sign * (L_i - L_j) p > 0` is believed.
pub type SignedPair = (usize, usize, i8);

/// Actions and neighbor pairs still consistent with the confident estimates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlausibleSets {
    pub actions: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    /// Set when `D(t)` was empty and the full sets were used instead.
    pub fallback: bool,
}

/// `D(t)`: the simplex cut by one strict row per confident pair.
pub fn build_halfspaces(game: &Game, confident: &[SignedPair]) -> ConstraintSet {
    let mut cs = ConstraintSet::simplex(game.n_outcomes());
    for &(i, j, sign) in confident {
        let s = f64::from(sign);
        let coef = game.loss_diff(i, j).iter().map(|v| -s * v).collect();
        cs.push_strict(coef, 0.0);
    }
    cs
}

/// Pareto actions and neighbor pairs whose cells meet `d`.
pub fn plausible_sets(structure: &GameStructure, d: &ConstraintSet) -> PlausibleSets {
    if !lp_feasible(d).feasible {
        debug!("confidence failure: D(t) is empty, using full sets");
        return PlausibleSets {
            actions: structure.pareto().to_vec(),
            pairs: structure.neighbor_pairs().to_vec(),
            fallback: true,
        };
    }
    let actions: Vec<usize> = structure
        .pareto()
        .iter()
        .copied()
        .filter(|&i| lp_feasible(&structure.cell(i).intersect(d)).feasible)
        .collect();
    let pairs: Vec<(usize, usize)> = structure
        .neighbor_pairs()
        .iter()
        .copied()
        .filter(|&(i, j)| actions.contains(&i) && actions.contains(&j))
        .filter(|&(i, j)| {
            let face = structure.cell(i).intersect(structure.cell(j));
            lp_feasible(&face.intersect(d)).feasible
        })
        .collect();
    debug_assert!(actions.len() != 1 || pairs.is_empty());
    PlausibleSets {
        actions,
        pairs,
        fallback: false,
    }
}

/// Per-run cache of [`plausible_sets`] keyed by the sorted confident-pair signature.
#[derive(Debug, Default)]
pub struct PlausibleCache {
    memo: Memo<Vec<SignedPair>, PlausibleSets>,
    fallbacks: u64,
}

impl PlausibleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(
        &mut self,
        game: &Game,
        structure: &GameStructure,
        confident: &[SignedPair],
    ) -> PlausibleSets {
        let mut key = confident.to_vec();
        key.sort_unstable();
        let sets = self.memo.get_or_insert_with(key, || {
            plausible_sets(structure, &build_halfspaces(game, confident))
        });
        if sets.fallback {
            self.fallbacks += 1;
        }
        sets
    }

    /// Rounds in which the full sets were used because `D(t)` was empty.
    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }

    pub fn hits(&self) -> u64 {
        self.memo.hits()
    }

    pub fn misses(&self) -> u64 {
        self.memo.misses()
    }
}
