//! Cell decomposition and observer structure of a finite game.
//!
//! Everything here is derived once from an immutable [`Game`] and shared read-only
//! by strategies.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::numerics::{
    affine_dimension, in_direct_sum, least_norm_solve, lp_extremize, lp_feasible, ConstraintSet,
    Sense,
};

/// Slack allowed when testing `C_a ⊆ C_b` by maximizing constraint violations.
const INCLUSION_TOL: f64 = 1e-8;

/// Largest observer set searched exhaustively for a minimal-support representation.
const MAX_SUPPORT_SEARCH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observability {
    /// A single Pareto-optimal action.
    Trivial,
    /// Every neighbor pair is locally observable ("easy").
    LocallyObservable,
    /// Globally but not locally observable ("hard").
    GloballyObservableOnly,
    NotGloballyObservable,
}

impl Observability {
    pub fn is_easy(self) -> bool {
        matches!(self, Self::Trivial | Self::LocallyObservable)
    }

    pub fn is_hard(self) -> bool {
        self == Self::GloballyObservableOnly
    }
}

/// Observer data for one ordered neighbor pair `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairObservers {
    pub actions: Vec<usize>,
    /// `vectors[k]` is `v_{ij a}` for `a = actions[k]`, of length `sigma_a`.
    pub vectors: Vec<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct GameStructure {
    n_actions: usize,
    n_outcomes: usize,
    cells: Vec<ConstraintSet>,
    pareto: Vec<usize>,
    dominated: Vec<usize>,
    degenerate: Vec<usize>,
    neighbor_pairs: Vec<(usize, usize)>,
    nplus: BTreeMap<(usize, usize), Vec<usize>>,
    locally_observable: BTreeMap<(usize, usize), bool>,
    observers: BTreeMap<(usize, usize), PairObservers>,
    weights: Vec<f64>,
    observability: Observability,
}

/// `C_i = { p in Δ_M : (L_i - L_j) p <= 0 for all j }`.
pub fn cell_of(game: &Game, i: usize) -> ConstraintSet {
    let mut cs = ConstraintSet::simplex(game.n_outcomes());
    for j in 0..game.n_actions() {
        if j != i {
            cs.push_le(game.loss_diff(i, j).iter().copied().collect(), 0.0);
        }
    }
    cs
}

/// Whether `inner ⊆ outer`, by maximizing each row of `outer` over `inner`.
fn contains(outer: &ConstraintSet, inner: &ConstraintSet) -> Result<bool> {
    if !lp_feasible(inner).feasible {
        return Ok(true);
    }
    for h in outer.le_rows() {
        let (v, _) = lp_extremize(&h.coef, inner, Sense::Max)?;
        if v > h.bound + INCLUSION_TOL {
            return Ok(false);
        }
    }
    for (a, b) in outer.eq_rows() {
        let (hi, _) = lp_extremize(a, inner, Sense::Max)?;
        let (lo, _) = lp_extremize(a, inner, Sense::Min)?;
        if hi > b + INCLUSION_TOL || lo < b - INCLUSION_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Partition of actions into (pareto, dominated, degenerate).
pub fn classify_actions(
    game: &Game,
    cells: &[ConstraintSet],
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let n = game.n_actions();
    let live: Vec<bool> = cells.iter().map(|c| lp_feasible(c).feasible).collect();
    let mut pareto = Vec::new();
    let mut dominated = Vec::new();
    let mut degenerate = Vec::new();
    'outer: for i in 0..n {
        if !live[i] {
            dominated.push(i);
            continue;
        }
        for k in (0..n).filter(|&k| k != i && live[k]) {
            // strict inclusion needs a point of C_k outside C_i
            if contains(&cells[k], &cells[i])? && !contains(&cells[i], &cells[k])? {
                degenerate.push(i);
                continue 'outer;
            }
        }
        pareto.push(i);
    }
    Ok((pareto, dominated, degenerate))
}

/// Pareto pairs whose cells meet in an `(M-2)`-dimensional face.
pub fn neighbor_pairs(
    game: &Game,
    cells: &[ConstraintSet],
    pareto: &[usize],
) -> Result<Vec<(usize, usize)>> {
    let target = game.n_outcomes() as i64 - 2;
    let mut out = Vec::new();
    for (x, &i) in pareto.iter().enumerate() {
        for &j in &pareto[x + 1..] {
            if affine_dimension(&cells[i].intersect(&cells[j]))? == target {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// `N+_{ij} = { k : C_i ∩ C_j ⊆ C_k }`.
pub fn nplus(cells: &[ConstraintSet], i: usize, j: usize) -> Result<Vec<usize>> {
    let face = cells[i].intersect(&cells[j]);
    let mut out = Vec::new();
    for (k, cell) in cells.iter().enumerate() {
        if k == i || k == j || contains(cell, &face)? {
            out.push(k);
        }
    }
    Ok(out)
}

fn stacked_transposes(game: &Game, actions: &[usize]) -> DMatrix<f64> {
    let m = game.n_outcomes();
    let cols: usize = actions.iter().map(|&a| game.sigma(a)).sum();
    let mut out = DMatrix::zeros(m, cols);
    let mut off = 0;
    for &a in actions {
        let s = game.signal_matrix(a);
        out.columns_mut(off, s.nrows()).copy_from(&s.transpose());
        off += s.nrows();
    }
    out
}

fn blocks<'a>(game: &'a Game, actions: &[usize]) -> Vec<&'a DMatrix<f64>> {
    actions.iter().map(|&a| game.signal_matrix(a)).collect()
}

/// Observer vectors for `(L_i - L_j)^T = sum_a S_a^T v_{ija}` over `observer_set`.
///
/// Searches subsets of the observer set by increasing size (lexicographic within a
/// size) and takes the minimum-norm solution on the first subset that can express
/// the loss difference; actions outside that subset get zero vectors. Returns `None`
/// if the whole set cannot express it.
pub fn observer_vectors(
    game: &Game,
    i: usize,
    j: usize,
    observer_set: &[usize],
) -> Option<Vec<DVector<f64>>> {
    let target = game.loss_diff(i, j);
    let zeros = || -> Vec<DVector<f64>> {
        observer_set
            .iter()
            .map(|&a| DVector::zeros(game.sigma(a)))
            .collect()
    };
    if target.amax() == 0.0 {
        return Some(zeros());
    }
    let k = observer_set.len();
    let candidates: Vec<Vec<usize>> = if k <= MAX_SUPPORT_SEARCH {
        let mut subsets: Vec<Vec<usize>> = (1u32..(1 << k))
            .map(|mask| (0..k).filter(|b| mask & (1 << b) != 0).collect())
            .collect();
        subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        subsets
    } else {
        vec![(0..k).collect()]
    };
    for subset in candidates {
        let actions: Vec<usize> = subset.iter().map(|&x| observer_set[x]).collect();
        if let Some(x) = least_norm_solve(&stacked_transposes(game, &actions), &target) {
            let mut out = zeros();
            let mut off = 0;
            for &pos in &subset {
                let s = out[pos].len();
                out[pos].copy_from(&x.rows(off, s));
                off += s;
            }
            return Some(out);
        }
    }
    None
}

impl GameStructure {
    pub fn analyze(game: &Game) -> Result<Self> {
        let n = game.n_actions();
        let cells: Vec<ConstraintSet> = (0..n).map(|i| cell_of(game, i)).collect();
        let (pareto, dominated, degenerate) = classify_actions(game, &cells)?;
        let neighbor_pairs = neighbor_pairs(game, &cells, &pareto)?;

        let mut nplus_map = BTreeMap::new();
        let mut locally_observable = BTreeMap::new();
        for &(i, j) in &neighbor_pairs {
            let np = nplus(&cells, i, j)?;
            let local = in_direct_sum(&game.loss_diff(i, j), &blocks(game, &np));
            nplus_map.insert((i, j), np);
            locally_observable.insert((i, j), local);
        }

        let all: Vec<usize> = (0..n).collect();
        let observability = if pareto.len() <= 1 {
            Observability::Trivial
        } else if locally_observable.values().all(|&l| l) {
            Observability::LocallyObservable
        } else if (0..n)
            .all(|i| (i + 1..n).all(|j| in_direct_sum(&game.loss_diff(i, j), &blocks(game, &all))))
        {
            Observability::GloballyObservableOnly
        } else {
            Observability::NotGloballyObservable
        };

        let mut observers = BTreeMap::new();
        for &(i, j) in &neighbor_pairs {
            let set = if locally_observable[&(i, j)] {
                nplus_map[&(i, j)].clone()
            } else {
                all.clone()
            };
            for (a, b) in [(i, j), (j, i)] {
                match observer_vectors(game, a, b, &set) {
                    Some(vectors) => {
                        observers.insert(
                            (a, b),
                            PairObservers {
                                actions: set.clone(),
                                vectors,
                            },
                        );
                    }
                    None if observability != Observability::NotGloballyObservable => {
                        return Err(Error::Invariant(format!(
                            "no observer vectors for pair ({a},{b}) of a globally observable game"
                        )));
                    }
                    None => {}
                }
            }
        }

        let mut weights = vec![0.0f64; n];
        for obs in observers.values() {
            for (&a, v) in obs.actions.iter().zip(&obs.vectors) {
                weights[a] = weights[a].max(v.amax());
            }
        }

        Ok(Self {
            n_actions: n,
            n_outcomes: game.n_outcomes(),
            cells,
            pareto,
            dominated,
            degenerate,
            neighbor_pairs,
            nplus: nplus_map,
            locally_observable,
            observers,
            weights,
            observability,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn cell(&self, i: usize) -> &ConstraintSet {
        &self.cells[i]
    }

    pub fn cells(&self) -> &[ConstraintSet] {
        &self.cells
    }

    pub fn pareto(&self) -> &[usize] {
        &self.pareto
    }

    pub fn dominated(&self) -> &[usize] {
        &self.dominated
    }

    pub fn degenerate(&self) -> &[usize] {
        &self.degenerate
    }

    /// Unordered neighbor pairs as `(i, j)` with `i < j`.
    pub fn neighbor_pairs(&self) -> &[(usize, usize)] {
        &self.neighbor_pairs
    }

    pub fn nplus(&self, i: usize, j: usize) -> Option<&[usize]> {
        self.nplus.get(&(i.min(j), i.max(j))).map(Vec::as_slice)
    }

    pub fn is_locally_observable(&self, i: usize, j: usize) -> Option<bool> {
        self.locally_observable.get(&(i.min(j), i.max(j))).copied()
    }

    /// Observer set and vectors for the ordered pair `(i, j)`.
    pub fn observers(&self, i: usize, j: usize) -> Option<&PairObservers> {
        self.observers.get(&(i, j))
    }

    pub fn observer_vector(&self, i: usize, j: usize, a: usize) -> Option<&DVector<f64>> {
        let obs = self.observers(i, j)?;
        let k = obs.actions.iter().position(|&x| x == a)?;
        Some(&obs.vectors[k])
    }

    /// `W_a`, the largest max-norm of any observer vector of `a`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn observability(&self) -> Observability {
        self.observability
    }

    /// Whether every neighbor pair has observer vectors.
    pub fn is_playable(&self) -> bool {
        self.neighbor_pairs
            .iter()
            .all(|&(i, j)| self.observers.contains_key(&(i, j)))
    }

    pub fn report(&self, game: &Game) -> StructureReport {
        let pair = |(i, j): (usize, usize)| [i, j];
        StructureReport {
            game: game.name().to_string(),
            n_actions: self.n_actions,
            n_outcomes: self.n_outcomes,
            sigmas: game.sigmas(),
            loss_normalized: game.is_normalized(),
            cells: self
                .cells
                .iter()
                .enumerate()
                .map(|(a, c)| CellReport {
                    action: a,
                    halfspaces: (0..self.n_actions)
                        .filter(|&j| j != a)
                        .map(|j| game.loss_diff(a, j).iter().copied().collect())
                        .collect(),
                    empty: self.dominated.contains(&a),
                    dimension: affine_dimension(c).unwrap_or(-1),
                })
                .collect(),
            pareto: self.pareto.clone(),
            dominated: self.dominated.clone(),
            degenerate: self.degenerate.clone(),
            neighbor_pairs: self.neighbor_pairs.iter().map(|&p| pair(p)).collect(),
            nplus: self
                .nplus
                .iter()
                .map(|(&p, v)| PairSetReport {
                    pair: pair(p),
                    actions: v.clone(),
                })
                .collect(),
            locally_observable_pairs: self
                .locally_observable
                .iter()
                .filter(|(_, &l)| l)
                .map(|(&p, _)| pair(p))
                .collect(),
            observer_sets: self
                .observers
                .iter()
                .map(|(&p, o)| PairSetReport {
                    pair: pair(p),
                    actions: o.actions.clone(),
                })
                .collect(),
            observer_vectors: self
                .observers
                .iter()
                .flat_map(|(&p, o)| {
                    o.actions
                        .iter()
                        .zip(&o.vectors)
                        .map(move |(&a, v)| ObserverVectorReport {
                            pair: pair(p),
                            action: a,
                            vector: v.iter().copied().collect(),
                        })
                })
                .collect(),
            weights: self.weights.clone(),
            observability: self.observability,
        }
    }
}

/// JSON form of a [`GameStructure`]; `halfspaces[k]` are the rows `a` of `a.p <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub game: String,
    pub n_actions: usize,
    pub n_outcomes: usize,
    pub sigmas: Vec<usize>,
    pub loss_normalized: bool,
    pub cells: Vec<CellReport>,
    pub pareto: Vec<usize>,
    pub dominated: Vec<usize>,
    pub degenerate: Vec<usize>,
    pub neighbor_pairs: Vec<[usize; 2]>,
    pub nplus: Vec<PairSetReport>,
    pub locally_observable_pairs: Vec<[usize; 2]>,
    pub observer_sets: Vec<PairSetReport>,
    pub observer_vectors: Vec<ObserverVectorReport>,
    pub weights: Vec<f64>,
    pub observability: Observability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub action: usize,
    pub halfspaces: Vec<Vec<f64>>,
    pub empty: bool,
    pub dimension: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSetReport {
    pub pair: [usize; 2],
    pub actions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverVectorReport {
    pub pair: [usize; 2],
    pub action: usize,
    pub vector: Vec<f64>,
}
