use serde::{Deserialize, Serialize};

use super::stats::normal_quantile_4dp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaldBudget {
    /// Rounds per class, initialization rounds included.
    pub per_class: u64,
    pub total: u64,
}

/// Worst-case verification budget from the Wald interval at margin `tau / 10`,
/// assuming a per-class error rate of `0.1 / C`.
pub fn wald_budget(tau: f64, n_classes: usize, zeta: f64, n_actions: usize) -> Result<WaldBudget> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Config(format!("tau must lie in (0,1), got {tau}")));
    }
    if n_classes == 0 {
        return Err(Error::Config("need at least one class".into()));
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::Config(format!("zeta must lie in (0,1), got {zeta}")));
    }
    let z = normal_quantile_4dp(zeta);
    let p_bar = 0.1 / n_classes as f64;
    let margin = tau / 10.0;
    let n = (z * z * p_bar * (1.0 - p_bar) / (margin * margin)).ceil() as u64;
    let per_class = n + n_actions as u64;
    Ok(WaldBudget {
        per_class,
        total: per_class * n_classes as u64,
    })
}
