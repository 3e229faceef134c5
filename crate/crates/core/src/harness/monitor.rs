use std::sync::Arc;

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::stream_rng;
use super::stats::{mean, median, std_dev};
use super::wald::{wald_budget, WaldBudget};
use crate::env::{generate_classifier, Balance, ClassifierStream, ErrorAggregation, ErrorProfile};
use crate::error::{Error, Result};
use crate::game::{tau_detection, Game, VERIFY};
use crate::strategy::{Cbp, CbpConfig, Policy, RandomizationConfig, DEFAULT_ALPHA};
use crate::structure::GameStructure;

const CLASSIFIER_STREAM: u64 = 0;
const OUTCOME_STREAM_BASE: u64 = 1_000;
const STRATEGY_STREAM_BASE: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorStrategy {
    /// One CBP instance per class.
    CCbp,
    /// One RandCBP instance per class.
    CRandcbp,
    /// Verify every prediction.
    ExploreFully,
}

impl MonitorStrategy {
    pub fn name(self) -> &'static str {
        match self {
            Self::CCbp => "c_cbp",
            Self::CRandcbp => "c_randcbp",
            Self::ExploreFully => "explore_fully",
        }
    }
}

fn all_strategies() -> Vec<MonitorStrategy> {
    vec![
        MonitorStrategy::CCbp,
        MonitorStrategy::CRandcbp,
        MonitorStrategy::ExploreFully,
    ]
}

fn default_zeta() -> f64 {
    0.01
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    #[serde(rename = "C")]
    pub n_classes: usize,
    pub tau_list: Vec<f64>,
    pub balance: Balance,
    pub errors: ErrorProfile,
    #[serde(default)]
    pub aggregation: ErrorAggregation,
    #[serde(default = "all_strategies")]
    pub strategies: Vec<MonitorStrategy>,
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub randomization: RandomizationConfig,
}

/// Learner settings shared by every class instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorParams {
    pub zeta: f64,
    pub alpha: f64,
    pub randomization: RandomizationConfig,
}

impl Default for MonitorParams {
    fn default() -> Self {
        Self {
            zeta: default_zeta(),
            alpha: DEFAULT_ALPHA,
            randomization: RandomizationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRun {
    pub strategy: MonitorStrategy,
    pub tau: f64,
    pub seed: u64,
    pub budget: WaldBudget,
    pub verifications: u64,
    pub error_rates: Vec<f64>,
    pub flags: Vec<bool>,
    pub truth: Vec<bool>,
    pub f1: f64,
}

/// F1 of `pred` against `truth`; 1 when both flag sets are empty.
pub fn f1_score(pred: &[bool], truth: &[bool]) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp + fp + fn_ == 0 {
        return 1.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

struct TauGame {
    game: Arc<Game>,
    structure: Arc<GameStructure>,
}

impl TauGame {
    fn new(tau: f64) -> Result<Self> {
        let game = tau_detection(tau)?;
        let structure = GameStructure::analyze(&game)?;
        Ok(Self {
            game: Arc::new(game),
            structure: Arc::new(structure),
        })
    }
}

fn run_classes(
    strategy: MonitorStrategy,
    stream: &ClassifierStream,
    tau: f64,
    seed: u64,
    params: &MonitorParams,
    tau_game: &TauGame,
) -> Result<MonitorRun> {
    let c = stream.n_classes();
    let budget = wald_budget(tau, c, params.zeta, tau_game.game.n_actions())?;
    let rates = stream.error_rates();
    let mut flags = Vec::with_capacity(c);
    let mut verifications = 0u64;
    for (class, &p_c) in rates.iter().enumerate() {
        let mut outcome_rng = stream_rng(seed, OUTCOME_STREAM_BASE + class as u64);
        let mut strategy_rng = stream_rng(seed, STRATEGY_STREAM_BASE + class as u64);
        let mut policy: Option<Cbp> = match strategy {
            MonitorStrategy::CCbp => Some(Cbp::new(
                tau_game.game.clone(),
                tau_game.structure.clone(),
                CbpConfig::deterministic(params.alpha),
            )?),
            MonitorStrategy::CRandcbp => Some(Cbp::new(
                tau_game.game.clone(),
                tau_game.structure.clone(),
                CbpConfig::randomized(params.alpha, params.randomization),
            )?),
            MonitorStrategy::ExploreFully => None,
        };
        let mut checked = 0u64;
        let mut errors = 0u64;
        for _ in 0..budget.per_class {
            // outcome 0 is "error"
            let outcome = usize::from(outcome_rng.random::<f64>() >= p_c);
            let action = match &mut policy {
                Some(p) => p.select(None, &mut strategy_rng)?,
                None => VERIFY,
            };
            if action == VERIFY {
                checked += 1;
                errors += u64::from(outcome == 0);
            }
            if let Some(p) = &mut policy {
                p.update(action, None, &tau_game.game.observe(action, outcome))?;
            }
        }
        if checked == 0 {
            warn!("class {class} was never verified; it is not flagged");
        }
        verifications += checked;
        flags.push(checked > 0 && errors as f64 / checked as f64 >= tau);
    }
    let truth: Vec<bool> = rates.iter().map(|&p| p >= tau).collect();
    Ok(MonitorRun {
        strategy,
        tau,
        seed,
        budget,
        verifications,
        f1: f1_score(&flags, &truth),
        error_rates: rates,
        flags,
        truth,
    })
}

/// One monitoring run: a tau-detection instance per predicted class, each playing
/// its class's per-class Wald budget of rounds.
pub fn monitor_run(
    strategy: MonitorStrategy,
    stream: &ClassifierStream,
    tau: f64,
    seed: u64,
    params: &MonitorParams,
) -> Result<MonitorRun> {
    run_classes(strategy, stream, tau, seed, params, &TauGame::new(tau)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub strategy: MonitorStrategy,
    pub tau: f64,
    pub budget_total: u64,
    pub runs: usize,
    pub f1_mean: f64,
    pub f1_median: f64,
    pub f1_std: f64,
    pub verifications_mean: f64,
    pub verifications_median: f64,
    pub verifications_std: f64,
    /// Per-run class flags.
    pub flags: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub config: MonitorConfig,
    pub rows: Vec<MonitorRow>,
}

impl MonitorReport {
    pub fn row(&self, strategy: MonitorStrategy, tau: f64) -> Option<&MonitorRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy && r.tau == tau)
    }
}

/// Full protocol: one classifier per run (seed `seed + r`), shared by all strategies
/// and thresholds.
pub fn monitor(config: &MonitorConfig) -> Result<MonitorReport> {
    if config.runs == 0 || config.tau_list.is_empty() || config.strategies.is_empty() {
        return Err(Error::Config(
            "runs, tau_list and strategies must be non-empty".into(),
        ));
    }
    let params = MonitorParams {
        zeta: config.zeta,
        alpha: config.alpha,
        randomization: config.randomization,
    };
    let streams: Vec<ClassifierStream> = (0..config.runs)
        .map(|r| {
            let mut rng = stream_rng(config.seed.wrapping_add(r as u64), CLASSIFIER_STREAM);
            generate_classifier(
                config.n_classes,
                config.balance,
                config.errors,
                config.aggregation,
                &mut rng,
            )
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &tau in &config.tau_list {
        let tau_game = TauGame::new(tau)?;
        for &strategy in &config.strategies {
            let runs = (0..config.runs)
                .into_par_iter()
                .map(|r| {
                    run_classes(
                        strategy,
                        &streams[r],
                        tau,
                        config.seed.wrapping_add(r as u64),
                        &params,
                        &tau_game,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let f1: Vec<f64> = runs.iter().map(|r| r.f1).collect();
            let ver: Vec<f64> = runs.iter().map(|r| r.verifications as f64).collect();
            rows.push(MonitorRow {
                strategy,
                tau,
                budget_total: runs[0].budget.total,
                runs: runs.len(),
                f1_mean: mean(&f1),
                f1_median: median(&f1),
                f1_std: std_dev(&f1),
                verifications_mean: mean(&ver),
                verifications_median: median(&ver),
                verifications_std: std_dev(&ver),
                flags: runs.into_iter().map(|r| r.flags).collect(),
            });
        }
    }
    Ok(MonitorReport {
        config: config.clone(),
        rows,
    })
}
