//! Finite partial-monitoring games.
//!
//! A game is a pair of `N x M` matrices: the loss matrix and the feedback matrix whose
//! entries are opaque symbols. Each action `i` only ever reveals symbols from row `i`,
//! so symbols are mapped to dense per-row ids in order of first appearance, and the
//! signal matrix `S_i` is the `sigma_i x M` one-hot map from outcomes to those ids.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-hot encoding of the symbol revealed to an action.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolObservation {
    pub action: usize,
    pub symbol_index: usize,
    pub one_hot: DVector<f64>,
}

impl SymbolObservation {
    pub fn new(action: usize, symbol_index: usize, sigma: usize) -> Self {
        let mut one_hot = DVector::zeros(sigma);
        one_hot[symbol_index] = 1.0;
        Self {
            action,
            symbol_index,
            one_hot,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Game {
    name: String,
    loss: DMatrix<f64>,
    feedback: Vec<Vec<String>>,
    /// Distinct symbols per action, in order of first appearance.
    symbols: Vec<Vec<String>>,
    /// `symbol_ids[i][j]` is the per-row id of `feedback[i][j]`.
    symbol_ids: Vec<Vec<usize>>,
    signal: Vec<DMatrix<f64>>,
    normalized: bool,
}

impl PartialEq for Game {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.loss == other.loss && self.feedback == other.feedback
    }
}

impl Game {
    /// Builds a game from row-major loss and feedback matrices.
    pub fn new(
        name: impl Into<String>,
        loss: Vec<Vec<f64>>,
        feedback: Vec<Vec<String>>,
    ) -> Result<Self> {
        let n = loss.len();
        if n == 0 || feedback.is_empty() {
            return Err(Error::InvalidGame("empty loss or feedback matrix".into()));
        }
        let m = loss[0].len();
        if loss.iter().any(|row| row.len() != m) {
            return Err(Error::Schema("loss matrix has ragged rows".into()));
        }
        if feedback.iter().any(|row| row.len() != m) {
            return Err(Error::Schema(
                "feedback rows must have the same length as loss rows".into(),
            ));
        }
        if feedback.len() != n {
            return Err(Error::Dimension(format!(
                "loss has {n} rows but feedback has {}",
                feedback.len()
            )));
        }
        if n < 2 || m < 2 {
            return Err(Error::InvalidGame(format!(
                "need at least 2 actions and 2 outcomes, got {n}x{m}"
            )));
        }
        if loss.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGame("loss entries must be finite".into()));
        }

        let mut symbols = Vec::with_capacity(n);
        let mut symbol_ids = Vec::with_capacity(n);
        let mut signal = Vec::with_capacity(n);
        for row in &feedback {
            let mut seen: Vec<String> = Vec::new();
            let ids: Vec<usize> = row
                .iter()
                .map(|s| match seen.iter().position(|t| t == s) {
                    Some(k) => k,
                    None => {
                        seen.push(s.clone());
                        seen.len() - 1
                    }
                })
                .collect();
            let mut s_mat = DMatrix::zeros(seen.len(), m);
            for (outcome, &id) in ids.iter().enumerate() {
                s_mat[(id, outcome)] = 1.0;
            }
            symbols.push(seen);
            symbol_ids.push(ids);
            signal.push(s_mat);
        }

        let (lo, hi) = loss
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let loss = DMatrix::from_fn(n, m, |i, j| loss[i][j]);

        Ok(Self {
            name: name.into(),
            loss,
            feedback,
            symbols,
            symbol_ids,
            signal,
            normalized: hi - lo <= 1.0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_actions(&self) -> usize {
        self.loss.nrows()
    }

    pub fn n_outcomes(&self) -> usize {
        self.loss.ncols()
    }

    pub fn loss(&self) -> &DMatrix<f64> {
        &self.loss
    }

    /// Row `i` of the loss matrix as a column vector.
    pub fn loss_row(&self, action: usize) -> DVector<f64> {
        self.loss.row(action).transpose()
    }

    /// `L_i - L_j` as a column vector.
    pub fn loss_diff(&self, i: usize, j: usize) -> DVector<f64> {
        (self.loss.row(i) - self.loss.row(j)).transpose()
    }

    pub fn feedback(&self) -> &[Vec<String>] {
        &self.feedback
    }

    pub fn symbols(&self, action: usize) -> &[String] {
        &self.symbols[action]
    }

    /// Number of distinct symbols action `i` can reveal.
    pub fn sigma(&self, action: usize) -> usize {
        self.symbols[action].len()
    }

    pub fn sigmas(&self) -> Vec<usize> {
        self.symbols.iter().map(Vec::len).collect()
    }

    pub fn signal_matrix(&self, action: usize) -> &DMatrix<f64> {
        &self.signal[action]
    }

    pub fn signal_matrices(&self) -> &[DMatrix<f64>] {
        &self.signal
    }

    /// Whether `max(L) - min(L) <= 1`. Recorded, never enforced.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Expected loss of every action under outcome distribution `p`.
    pub fn expected_losses(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.loss * p
    }

    /// Symbol id revealed by `action` when `outcome` occurs.
    pub fn symbol_index(&self, action: usize, outcome: usize) -> usize {
        self.symbol_ids[action][outcome]
    }

    /// Observation produced by playing `action` under `outcome`.
    pub fn observe(&self, action: usize, outcome: usize) -> SymbolObservation {
        SymbolObservation::new(
            action,
            self.symbol_index(action, outcome),
            self.sigma(action),
        )
    }

    /// One-hot encoding `e(symbol)` for a symbol seen after playing `action`.
    pub fn encode_feedback(&self, action: usize, symbol: &str) -> Result<SymbolObservation> {
        let row = self
            .symbols
            .get(action)
            .ok_or(Error::ActionOutOfRange(action))?;
        let idx = row
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::UnknownSymbol {
                action,
                symbol: symbol.to_string(),
            })?;
        Ok(SymbolObservation::new(action, idx, row.len()))
    }

    pub fn to_spec(&self) -> GameSpec {
        GameSpec {
            name: self.name.clone(),
            loss: (0..self.n_actions())
                .map(|i| self.loss.row(i).iter().copied().collect())
                .collect(),
            feedback: self.feedback.clone(),
        }
    }
}

/// On-disk representation of a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub name: String,
    pub loss: Vec<Vec<f64>>,
    pub feedback: Vec<Vec<String>>,
}

impl GameSpec {
    pub fn into_game(self) -> Result<Game> {
        Game::new(self.name, self.loss, self.feedback)
    }
}

pub fn parse_game_spec(text: &str) -> Result<Game> {
    let spec: GameSpec = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    spec.into_game()
}

pub fn load_game_spec(path: impl AsRef<Path>) -> Result<Game> {
    parse_game_spec(&fs::read_to_string(path)?)
}

pub fn save_game_spec(game: &Game, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&game.to_spec())?;
    fs::write(path, text)?;
    Ok(())
}

/// Resolves a bundled game name, or else reads a spec file at that path.
pub fn resolve_game(name_or_path: &str) -> Result<Game> {
    match bundled(name_or_path) {
        Some(g) => g,
        None => load_game_spec(name_or_path),
    }
}

/// Bundled games by name: `apple_tasting`, `label_efficient`, `tau_detection(<tau>)`.
pub fn bundled(name: &str) -> Option<Result<Game>> {
    let name = name.trim();
    match name {
        "apple_tasting" => Some(Ok(apple_tasting())),
        "label_efficient" => Some(Ok(label_efficient())),
        _ => {
            let arg = name
                .strip_prefix("tau_detection(")
                .and_then(|rest| rest.strip_suffix(')'))
                .or_else(|| name.strip_prefix("tau_detection:"))?;
            Some(
                arg.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Schema(format!("bad tau {arg:?}: {e}")))
                    .and_then(tau_detection),
            )
        }
    }
}

fn symbols(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| r.iter().map(|s| s.to_string()).collect())
        .collect()
}

/// Apple tasting: action 0 discards blindly, action 1 tastes and sees the outcome.
pub fn apple_tasting() -> Game {
    Game::new(
        "apple_tasting",
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        symbols(&[&["⊥", "⊥"], &["∧", "⊙"]]),
    )
    .expect("bundled game is valid")
}

/// Label efficient prediction, row order `[[1,1],[0,1],[1,0]]`.
pub fn label_efficient() -> Game {
    Game::new(
        "label_efficient",
        vec![vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
        symbols(&[&["⊥", "⊙"], &["∧", "∧"], &["∧", "∧"]]),
    )
    .expect("bundled game is valid")
}

/// Index of the informative, fixed-cost action of [`tau_detection`].
pub const VERIFY: usize = 0;
/// Index of the blind action of [`tau_detection`].
pub const PASS: usize = 1;

/// Threshold-detection game: outcome 0 is "error", outcome 1 is "no error".
/// Passing is optimal iff the error rate is below `tau`.
pub fn tau_detection(tau: f64) -> Result<Game> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidGame(format!(
            "tau must lie in (0,1), got {tau}"
        )));
    }
    Game::new(
        format!("tau_detection({tau})"),
        vec![vec![1.0, 1.0], vec![1.0 / tau, 0.0]],
        symbols(&[&["∧", "⊙"], &["⊥", "⊥"]]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn apple_tasting_signal_matrices() {
        let g = apple_tasting();
        assert_eq!(g.sigmas(), vec![1, 2]);
        assert_eq!(
            g.signal_matrix(0),
            &DMatrix::from_row_slice(1, 2, &[1.0, 1.0])
        );
        assert_eq!(g.signal_matrix(1), &DMatrix::<f64>::identity(2, 2));
        assert!(g.is_normalized());
    }

    #[test]
    fn label_efficient_sigmas() {
        let g = label_efficient();
        assert_eq!(g.sigmas(), vec![2, 1, 1]);
        assert_eq!(g.signal_matrix(0), &DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn repeated_symbol_row_is_all_ones() {
        let g = Game::new(
            "flat",
            vec![vec![0.0, 1.0, 0.5], vec![1.0, 0.0, 0.5]],
            symbols(&[&["x", "x", "x"], &["a", "b", "a"]]),
        )
        .unwrap();
        assert_eq!(g.sigma(0), 1);
        assert_eq!(g.signal_matrix(0), &DMatrix::from_element(1, 3, 1.0));
        assert_eq!(
            g.signal_matrix(1),
            &DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
        );
    }

    #[test]
    fn encode_feedback_examples() {
        let at = apple_tasting();
        assert_eq!(
            at.encode_feedback(1, "∧").unwrap().one_hot.as_slice(),
            &[1.0, 0.0]
        );
        assert_eq!(
            at.encode_feedback(0, "⊥").unwrap().one_hot.as_slice(),
            &[1.0]
        );
        let le = label_efficient();
        assert_eq!(
            le.encode_feedback(0, "⊙").unwrap().one_hot.as_slice(),
            &[0.0, 1.0]
        );
    }

    #[test]
    fn encode_feedback_rejects_unobservable_symbol() {
        let at = apple_tasting();
        assert!(matches!(
            at.encode_feedback(0, "∧"),
            Err(Error::UnknownSymbol { action: 0, .. })
        ));
        assert!(matches!(
            at.encode_feedback(5, "∧"),
            Err(Error::ActionOutOfRange(5))
        ));
    }

    #[test]
    fn build_game_errors() {
        assert!(Game::new("e", vec![], vec![]).is_err());
        assert!(matches!(
            Game::new(
                "r",
                vec![vec![0.0, 1.0], vec![1.0]],
                symbols(&[&["a", "b"], &["a"]])
            ),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            Game::new(
                "d",
                vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                symbols(&[&["a", "b"]])
            ),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            Game::new("one", vec![vec![0.0, 1.0]], symbols(&[&["a", "b"]])),
            Err(Error::InvalidGame(_))
        ));
    }

    #[test]
    fn tau_detection_records_normalization_flag() {
        let g = tau_detection(0.2).unwrap();
        assert!(!g.is_normalized());
        assert_eq!(g.loss()[(PASS, 0)], 5.0);
        assert!(!tau_detection(0.6).unwrap().is_normalized());
        assert!(apple_tasting().is_normalized());
        assert!(tau_detection(1.0).is_err());
    }

    #[test]
    fn bundled_names_resolve() {
        let le = bundled("label_efficient").unwrap().unwrap();
        assert_eq!(le, label_efficient());
        let td = bundled("tau_detection(0.1)").unwrap().unwrap();
        assert_eq!(td.loss()[(PASS, 0)], 10.0);
        assert!(bundled("tau_detection(x)").unwrap().is_err());
        assert!(bundled("nonexistent").is_none());
    }

    #[test]
    fn spec_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("at.json");
        let at = apple_tasting();
        save_game_spec(&at, &path).unwrap();
        let back = load_game_spec(&path).unwrap();
        assert_eq!(back, at);
        assert_eq!(back.sigmas(), at.sigmas());
    }

    #[test]
    fn ragged_spec_is_schema_error() {
        let text = r#"{"name":"bad","loss":[[1,0],[0]],"feedback":[["a","a"],["b","c"]]}"#;
        assert!(matches!(parse_game_spec(text), Err(Error::Schema(_))));
        let text = r#"{"name":"bad","loss":[[1,0],[0,1]]}"#;
        assert!(matches!(parse_game_spec(text), Err(Error::Schema(_))));
    }

    fn arb_game() -> impl Strategy<Value = Game> {
        (2usize..5, 2usize..5).prop_flat_map(|(n, m)| {
            (
                proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, m), n),
                proptest::collection::vec(proptest::collection::vec(0u8..3, m), n),
            )
                .prop_map(|(loss, fb)| {
                    let fb = fb
                        .into_iter()
                        .map(|r| r.into_iter().map(|s| format!("s{s}")).collect())
                        .collect();
                    Game::new("random", loss, fb).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn signal_maps_simplex_to_simplex(g in arb_game(), raw in proptest::collection::vec(0.0f64..1.0, 4)) {
            let m = g.n_outcomes();
            let mut p: Vec<f64> = raw.into_iter().take(m).collect();
            p.resize(m, 0.5);
            let s: f64 = p.iter().sum::<f64>().max(1e-12);
            let p = DVector::from_iterator(m, p.into_iter().map(|v| v / s));
            let mut total_sigma = 0;
            for a in 0..g.n_actions() {
                let s_a = g.signal_matrix(a);
                prop_assert_eq!(s_a.nrows(), g.sigma(a));
                for col in s_a.column_iter() {
                    prop_assert_eq!(col.sum(), 1.0);
                }
                let pi = s_a * &p;
                prop_assert!(pi.iter().all(|&v| v >= 0.0));
                prop_assert!((pi.sum() - 1.0).abs() <= 1e-12);
                total_sigma += g.sigma(a);
            }
            prop_assert!(total_sigma <= g.n_actions() * m);
        }

        #[test]
        fn spec_round_trip_is_bit_identical(g in arb_game()) {
            let text = serde_json::to_string(&g.to_spec()).unwrap();
            let back = parse_game_spec(&text).unwrap();
            prop_assert_eq!(back.loss(), g.loss());
            prop_assert_eq!(back.feedback(), g.feedback());
        }
    }
}
