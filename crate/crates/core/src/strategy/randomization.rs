use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which bins share the `1 - eps` head mass of the discretized Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinNormalization {
    /// Gaussian weights of the first `K - 1` bins are normalized among themselves,
    /// leaving exactly `eps` on `rho_K = B`.
    #[default]
    Head,
    /// Weights are divided by the sum over all `K` bins; the last bin takes the
    /// residual, which is larger than `eps`.
    All,
}

/// Truncated, discretized Gaussian over `[A, B]` used to draw confidence scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomizationConfig {
    #[serde(rename = "A", default)]
    pub a_lo: f64,
    #[serde(rename = "K", default = "default_k")]
    pub k_bins: usize,
    #[serde(rename = "eps", default = "default_eps")]
    pub tail_eps: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub normalize: BinNormalization,
}

fn default_k() -> usize {
    5
}

fn default_eps() -> f64 {
    1e-7
}

fn default_sigma() -> f64 {
    1.0
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        Self {
            a_lo: 0.0,
            k_bins: default_k(),
            tail_eps: default_eps(),
            sigma: default_sigma(),
            normalize: BinNormalization::Head,
        }
    }
}

impl RandomizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_bins < 1 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if !(self.tail_eps > 0.0 && self.tail_eps < 1.0) {
            return Err(Error::Config(format!(
                "eps must lie in (0,1), got {}",
                self.tail_eps
            )));
        }
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(Error::Config(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.a_lo.is_nan() || self.a_lo > 0.0 {
            return Err(Error::Config(format!("A must be <= 0, got {}", self.a_lo)));
        }
        Ok(())
    }

    /// Support points `rho_k` and their probabilities for upper bound `b_hi`.
    pub fn bins(&self, b_hi: f64) -> (Vec<f64>, Vec<f64>) {
        let k = self.k_bins;
        if k == 1 || b_hi < self.a_lo {
            return (vec![b_hi], vec![1.0]);
        }
        let step = (b_hi - self.a_lo) / (k - 1) as f64;
        let rho: Vec<f64> = (0..k)
            .map(|i| {
                if i + 1 == k {
                    b_hi
                } else {
                    self.a_lo + step * i as f64
                }
            })
            .collect();
        let dens: Vec<f64> = rho
            .iter()
            .map(|r| (-r * r / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let total: f64 = match self.normalize {
            BinNormalization::Head => dens[..k - 1].iter().sum(),
            BinNormalization::All => dens.iter().sum(),
        };
        let mut p: Vec<f64> = dens[..k - 1]
            .iter()
            .map(|d| (1.0 - self.tail_eps) * d / total)
            .collect();
        let head: f64 = p.iter().sum();
        p.push(1.0 - head);
        (rho, p)
    }
}

/// Draws a confidence scale `Z` from [`RandomizationConfig::bins`].
pub fn sample_z(cfg: &RandomizationConfig, b_hi: f64, rng: &mut dyn RngCore) -> f64 {
    if cfg.k_bins == 1 || b_hi < cfg.a_lo {
        return b_hi;
    }
    let (rho, p) = cfg.bins(b_hi);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (r, q) in rho.iter().zip(&p) {
        acc += q;
        if u < acc {
            return *r;
        }
    }
    b_hi
}
