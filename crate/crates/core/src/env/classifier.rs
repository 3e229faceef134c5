use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use rand_distr::Gamma;
use serde::{Deserialize, Serialize};

use super::check_distribution;
use crate::error::{Error, Result};

/// Global error rate every generated classifier stays strictly below.
pub const MAX_GLOBAL_ERROR: f64 = 0.1;

const MAX_ATTEMPTS: usize = 100_000;
const IMBALANCE_CONCENTRATION: f64 = 0.5;
const NONUNIFORM_MAX_CLASS_ERROR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Balance {
    Balanced,
    Imbalanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorProfile {
    Uniform,
    Nonuniform,
}

/// How the per-predicted-class error rate is read off the confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorAggregation {
    /// `P(true != c | predicted c)`.
    #[default]
    Bayes,
    /// `1 - confusion[c, c]`, with predictions drawn from the class distribution.
    Diagonal,
}

/// A deployed classifier: true-class distribution and row-stochastic confusion matrix
/// (rows are true classes, columns predictions).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierStream {
    class_dist: DVector<f64>,
    confusion: DMatrix<f64>,
    aggregation: ErrorAggregation,
}

/// One prediction and whether it was wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamDraw {
    pub predicted: usize,
    pub error: bool,
}

impl ClassifierStream {
    pub fn new(
        class_dist: DVector<f64>,
        confusion: DMatrix<f64>,
        aggregation: ErrorAggregation,
    ) -> Result<Self> {
        let c = class_dist.len();
        if confusion.nrows() != c || confusion.ncols() != c || c == 0 {
            return Err(Error::Dimension(format!(
                "confusion is {}x{} for {} classes",
                confusion.nrows(),
                confusion.ncols(),
                c
            )));
        }
        check_distribution(&class_dist)?;
        for r in 0..c {
            check_distribution(&confusion.row(r).transpose())?;
        }
        let s = Self {
            class_dist,
            confusion,
            aggregation,
        };
        if s.global_error() >= MAX_GLOBAL_ERROR {
            return Err(Error::Config(format!(
                "global error {} is not below {MAX_GLOBAL_ERROR}",
                s.global_error()
            )));
        }
        Ok(s)
    }

    pub fn n_classes(&self) -> usize {
        self.class_dist.len()
    }

    pub fn class_dist(&self) -> &DVector<f64> {
        &self.class_dist
    }

    pub fn confusion(&self) -> &DMatrix<f64> {
        &self.confusion
    }

    pub fn aggregation(&self) -> ErrorAggregation {
        self.aggregation
    }

    /// `sum_c class_dist[c] (1 - confusion[c, c])`.
    pub fn global_error(&self) -> f64 {
        (0..self.n_classes())
            .map(|c| self.class_dist[c] * (1.0 - self.confusion[(c, c)]))
            .sum()
    }

    /// Per-predicted-class error rates `p_c`.
    pub fn error_rates(&self) -> Vec<f64> {
        let n = self.n_classes();
        match self.aggregation {
            ErrorAggregation::Diagonal => (0..n).map(|c| 1.0 - self.confusion[(c, c)]).collect(),
            ErrorAggregation::Bayes => (0..n)
                .map(|c| {
                    let predicted: f64 = (0..n)
                        .map(|k| self.class_dist[k] * self.confusion[(k, c)])
                        .sum();
                    if predicted > 0.0 {
                        1.0 - self.class_dist[c] * self.confusion[(c, c)] / predicted
                    } else {
                        0.0
                    }
                })
                .collect(),
        }
    }

    pub fn step(&self, rng: &mut dyn RngCore) -> StreamDraw {
        let classes = WeightedIndex::new(self.class_dist.iter().copied()).expect("validated");
        match self.aggregation {
            ErrorAggregation::Bayes => {
                let truth = classes.sample(rng);
                let row = WeightedIndex::new(self.confusion.row(truth).iter().copied())
                    .expect("validated");
                let predicted = row.sample(rng);
                StreamDraw {
                    predicted,
                    error: predicted != truth,
                }
            }
            ErrorAggregation::Diagonal => {
                let predicted = classes.sample(rng);
                StreamDraw {
                    predicted,
                    error: rng.random::<f64>() >= self.confusion[(predicted, predicted)],
                }
            }
        }
    }
}

/// Confusion matrix with per-class error rates `errors`; wrong predictions spread by
/// `spread(k)` over the other classes.
fn confusion_from(errors: &[f64], mut spread: impl FnMut(usize) -> Vec<f64>) -> DMatrix<f64> {
    let c = errors.len();
    let mut m = DMatrix::zeros(c, c);
    for k in 0..c {
        m[(k, k)] = 1.0 - errors[k];
        let w = spread(k);
        for (idx, j) in (0..c).filter(|&j| j != k).enumerate() {
            m[(k, j)] = errors[k] * w[idx];
        }
    }
    m
}

/// Symmetric Dirichlet draw from normalized Gamma variates.
fn dirichlet(concentration: f64, n: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::Config(format!("gamma: {e}")))?;
    loop {
        let v: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            return Ok(v.into_iter().map(|x| x / s).collect());
        }
    }
}

/// Random classifier with global error below [`MAX_GLOBAL_ERROR`].
pub fn generate_classifier(
    n_classes: usize,
    balance: Balance,
    profile: ErrorProfile,
    aggregation: ErrorAggregation,
    rng: &mut dyn RngCore,
) -> Result<ClassifierStream> {
    if n_classes < 2 {
        return Err(Error::Config("need at least two classes".into()));
    }
    let c = n_classes;
    let class_dist = match balance {
        Balance::Balanced => DVector::from_element(c, 1.0 / c as f64),
        Balance::Imbalanced => DVector::from_vec(dirichlet(IMBALANCE_CONCENTRATION, c, rng)?),
    };
    let other = c - 1;
    for _ in 0..MAX_ATTEMPTS {
        let confusion = match profile {
            ErrorProfile::Uniform => {
                let g = rng.random_range(0.0..MAX_GLOBAL_ERROR);
                confusion_from(&vec![g; c], |_| vec![1.0 / other as f64; other])
            }
            ErrorProfile::Nonuniform => {
                let errors: Vec<f64> = (0..c)
                    .map(|_| rng.random_range(0.0..NONUNIFORM_MAX_CLASS_ERROR))
                    .collect();
                let mut weights = Vec::with_capacity(c);
                for _ in 0..c {
                    weights.push(dirichlet(1.0, other, rng)?);
                }
                confusion_from(&errors, |k| weights[k].clone())
            }
        };
        if let Ok(stream) = ClassifierStream::new(class_dist.clone(), confusion, aggregation) {
            return Ok(stream);
        }
    }
    Err(Error::Config(format!(
        "no classifier below {MAX_GLOBAL_ERROR} global error after {MAX_ATTEMPTS} attempts"
    )))
}
