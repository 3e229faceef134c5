use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::env::{
    sample_instance, Balance, BernoulliPmEnv, ContextDist, Environment, ErrorAggregation,
    ErrorProfile, InstanceKind, LinearPmEnv, Link,
};
use crate::error::{Error, Result};
use crate::game::{resolve_game, Game};
use crate::strategy::{
    BinNormalization, Cbp, CbpConfig, CbpSide, CbpSideConfig, FixedPolicy, Policy,
    RandomizationConfig, UniformPolicy, DEFAULT_ALPHA, DEFAULT_LAMBDA,
};
use crate::structure::GameStructure;

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_k() -> usize {
    RandomizationConfig::default().k_bins
}

fn default_eps() -> f64 {
    RandomizationConfig::default().tail_eps
}

fn default_sigma() -> f64 {
    RandomizationConfig::default().sigma
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum StrategyConfig {
    Cbp {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Randcbp {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(rename = "K", default = "default_k")]
        k: usize,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(rename = "A", default)]
        a: f64,
        #[serde(default)]
        normalize: BinNormalization,
    },
    Cbpside {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        intercept: bool,
    },
    Randcbpside {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        intercept: bool,
        #[serde(rename = "K", default = "default_k")]
        k: usize,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(rename = "A", default)]
        a: f64,
        #[serde(default)]
        normalize: BinNormalization,
    },
    Uniform,
    Fixed {
        action: usize,
    },
    /// Plays the optimal action of each round.
    Oracle,
}

impl StrategyConfig {
    pub fn default_name(&self) -> &'static str {
        match self {
            Self::Cbp { .. } => "cbp",
            Self::Randcbp { .. } => "randcbp",
            Self::Cbpside { .. } => "cbpside",
            Self::Randcbpside { .. } => "randcbpside",
            Self::Uniform => "uniform",
            Self::Fixed { .. } => "fixed",
            Self::Oracle => "oracle",
        }
    }
}

/// A strategy block with an optional display label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub config: StrategyConfig,
}

impl StrategySpec {
    pub fn new(config: StrategyConfig) -> Self {
        Self {
            label: None,
            config,
        }
    }

    pub fn name(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.config.default_name().to_string())
    }
}

impl From<StrategyConfig> for StrategySpec {
    fn from(config: StrategyConfig) -> Self {
        Self::new(config)
    }
}

/// `"const:<value>"` or an explicit `M x d` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Spec(String),
    Matrix(Vec<Vec<f64>>),
}

impl ThetaSpec {
    pub fn to_matrix(&self, m: usize, d: usize) -> Result<DMatrix<f64>> {
        match self {
            Self::Spec(s) => {
                let v = s
                    .strip_prefix("const:")
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown theta spec {s:?}")))?;
                Ok(DMatrix::from_element(m, d, v))
            }
            Self::Matrix(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Dimension(format!("theta must be {m}x{d}")));
                }
                Ok(DMatrix::from_fn(m, d, |i, j| rows[i][j]))
            }
        }
    }
}

fn default_game() -> String {
    "apple_tasting".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    Bernoulli {
        game: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<Vec<f64>>,
        /// Draw a fresh `p*` per run instead of a fixed `p`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        instance: Option<InstanceKind>,
    },
    Linear {
        #[serde(default = "default_game")]
        game: String,
        d: usize,
        theta: ThetaSpec,
        #[serde(default)]
        contexts: ContextDist,
        #[serde(default)]
        link: Link,
    },
    ClassifierStream {
        #[serde(rename = "C")]
        n_classes: usize,
        balance: Balance,
        errors: ErrorProfile,
        #[serde(default)]
        aggregation: ErrorAggregation,
    },
}

/// Game and structure analyzed once and shared by every run of an experiment.
#[derive(Debug, Clone)]
pub struct PreparedEnv {
    pub config: EnvConfig,
    pub game: Arc<Game>,
    pub structure: Arc<GameStructure>,
    theta: Option<DMatrix<f64>>,
}

impl PreparedEnv {
    pub fn new(config: &EnvConfig) -> Result<Self> {
        let (game, theta) = match config {
            EnvConfig::Bernoulli { game, p, instance } => {
                if p.is_some() == instance.is_some() {
                    return Err(Error::Config(
                        "bernoulli env needs exactly one of \"p\" or \"instance\"".into(),
                    ));
                }
                (resolve_game(game)?, None)
            }
            EnvConfig::Linear { game, d, theta, .. } => {
                let g = resolve_game(game)?;
                let t = theta.to_matrix(g.n_outcomes(), *d)?;
                (g, Some(t))
            }
            EnvConfig::ClassifierStream { .. } => {
                return Err(Error::Config(
                    "classifier_stream environments are run by the monitoring protocol".into(),
                ))
            }
        };
        let structure = GameStructure::analyze(&game)?;
        Ok(Self {
            config: config.clone(),
            game: Arc::new(game),
            structure: Arc::new(structure),
            theta,
        })
    }

    /// Builds one run's environment, drawing the instance from `rng` if needed.
    pub fn instantiate(&self, rng: &mut dyn RngCore) -> Result<Box<dyn Environment>> {
        match &self.config {
            EnvConfig::Bernoulli { p, instance, .. } => {
                let p_star = match (p, instance) {
                    (Some(p), _) => DVector::from_vec(p.clone()),
                    (None, Some(kind)) => sample_instance(*kind, rng),
                    (None, None) => unreachable!("checked in new"),
                };
                Ok(Box::new(BernoulliPmEnv::new(self.game.clone(), p_star)?))
            }
            EnvConfig::Linear { contexts, link, .. } => Ok(Box::new(LinearPmEnv::new(
                self.game.clone(),
                self.theta.clone().expect("linear env has theta"),
                *contexts,
                *link,
            )?)),
            EnvConfig::ClassifierStream { .. } => unreachable!("rejected in new"),
        }
    }

    pub fn context_dim(&self) -> Option<usize> {
        self.theta.as_ref().map(|t| t.ncols())
    }
}

/// A learner, or the oracle that reads the round's optimal action.
pub enum Learner {
    Policy(Box<dyn Policy>),
    Oracle,
}

pub fn build_learner(spec: &StrategyConfig, env: &PreparedEnv) -> Result<Learner> {
    let game = env.game.clone();
    let structure = env.structure.clone();
    let randomization =
        |k: usize, eps: f64, sigma: f64, a: f64, normalize: BinNormalization| RandomizationConfig {
            a_lo: a,
            k_bins: k,
            tail_eps: eps,
            sigma,
            normalize,
        };
    let contextual = |alpha, lambda, intercept, randomization| -> Result<Learner> {
        let d = env.context_dim().ok_or_else(|| {
            Error::Config("contextual strategies need a linear environment".into())
        })?;
        let cfg = CbpSideConfig {
            alpha,
            lambda,
            randomization,
            intercept,
        };
        Ok(Learner::Policy(Box::new(CbpSide::new(
            game.clone(),
            structure.clone(),
            d,
            cfg,
        )?)))
    };
    match *spec {
        StrategyConfig::Cbp { alpha } => Ok(Learner::Policy(Box::new(Cbp::new(
            game,
            structure,
            CbpConfig::deterministic(alpha),
        )?))),
        StrategyConfig::Randcbp {
            alpha,
            k,
            eps,
            sigma,
            a,
            normalize,
        } => Ok(Learner::Policy(Box::new(Cbp::new(
            game,
            structure,
            CbpConfig::randomized(alpha, randomization(k, eps, sigma, a, normalize)),
        )?))),
        StrategyConfig::Cbpside {
            alpha,
            lambda,
            intercept,
        } => contextual(alpha, lambda, intercept, None),
        StrategyConfig::Randcbpside {
            alpha,
            lambda,
            intercept,
            k,
            eps,
            sigma,
            a,
            normalize,
        } => contextual(
            alpha,
            lambda,
            intercept,
            Some(randomization(k, eps, sigma, a, normalize)),
        ),
        StrategyConfig::Uniform => Ok(Learner::Policy(Box::new(UniformPolicy::new(
            game.n_actions(),
        )))),
        StrategyConfig::Fixed { action } => Ok(Learner::Policy(Box::new(FixedPolicy::new(
            action,
            game.n_actions(),
        )?))),
        StrategyConfig::Oracle => Ok(Learner::Oracle),
    }
}

fn default_stride() -> u64 {
    1
}

/// Repeated-run experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Environment block; alternatively `game` with `p` or `instance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<EnvConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceKind>,
    pub strategies: Vec<StrategySpec>,
    pub horizon: u64,
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub stride: u64,
    /// Strategy the Welch tests compare against; defaults to the first one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

impl ExperimentConfig {
    pub fn env_config(&self) -> Result<EnvConfig> {
        match (&self.env, &self.game) {
            (Some(env), None) => Ok(env.clone()),
            (None, Some(game)) => Ok(EnvConfig::Bernoulli {
                game: game.clone(),
                p: self.p.clone(),
                instance: self.instance,
            }),
            _ => Err(Error::Config(
                "experiment needs exactly one of \"env\" or \"game\"".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies".into()));
        }
        if self.horizon == 0 || self.runs == 0 || self.stride == 0 {
            return Err(Error::Config(
                "horizon, runs and stride must be positive".into(),
            ));
        }
        let mut names: Vec<String> = self.strategies.iter().map(StrategySpec::name).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(
                "strategy names must be unique; add labels".into(),
            ));
        }
        if let Some(r) = &self.reference {
            if !names.contains(r) {
                return Err(Error::Config(format!("unknown reference strategy {r:?}")));
            }
        }
        self.env_config().map(|_| ())
    }
}
