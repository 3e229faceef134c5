use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::monitor::MonitorReport;
use super::run::{summarize, Experiment, ExperimentSummary};
use crate::error::{Error, Result};

pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CurveRow {
    strategy: String,
    run: usize,
    round: u64,
    cum_regret: f64,
}

/// Writes `curves.csv` (every `stride` rounds plus the last), `summary.json` and
/// `config.json` into `dir`.
pub fn write_experiment(exp: &Experiment, dir: &Path, stride: u64) -> Result<()> {
    if stride == 0 {
        return Err(Error::Config("stride must be positive".into()));
    }
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(CURVES_FILE))?;
    for rec in &exp.records {
        let n = rec.cum_regret.len() as u64;
        for (i, &v) in rec.cum_regret.iter().enumerate() {
            let round = i as u64 + 1;
            if round.is_multiple_of(stride) || round == n {
                w.serialize(CurveRow {
                    strategy: rec.strategy.clone(),
                    run: rec.run,
                    round,
                    cum_regret: v,
                })?;
            }
        }
    }
    w.flush()?;
    fs::write(
        dir.join(SUMMARY_FILE),
        serde_json::to_string_pretty(&exp.summary)?,
    )?;
    fs::write(
        dir.join(CONFIG_FILE),
        serde_json::to_string_pretty(&exp.config)?,
    )?;
    Ok(())
}

/// Recomputes the summary from `curves.csv` in `dir`. The reference strategy and
/// confidence-failure counts come from the stored summary when present.
pub fn read_report(dir: &Path) -> Result<ExperimentSummary> {
    let mut r = csv::Reader::from_path(dir.join(CURVES_FILE))?;
    // strategy -> run -> (last round, value)
    let mut last: BTreeMap<String, BTreeMap<usize, (u64, f64)>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for row in r.deserialize() {
        let row: CurveRow = row?;
        if !last.contains_key(&row.strategy) {
            order.push(row.strategy.clone());
        }
        let e = last
            .entry(row.strategy)
            .or_default()
            .entry(row.run)
            .or_insert((0, 0.0));
        if row.round >= e.0 {
            *e = (row.round, row.cum_regret);
        }
    }
    if order.is_empty() {
        return Err(Error::Config(format!(
            "{} has no rows",
            dir.join(CURVES_FILE).display()
        )));
    }
    let stored: Option<ExperimentSummary> = match fs::read_to_string(dir.join(SUMMARY_FILE)) {
        Ok(s) => Some(serde_json::from_str(&s)?),
        Err(_) => None,
    };
    let finals: Vec<Vec<f64>> = order
        .iter()
        .map(|s| last[s].values().map(|&(_, v)| v).collect())
        .collect();
    let horizon = order
        .iter()
        .flat_map(|s| last[s].values().map(|&(r, _)| r))
        .max()
        .unwrap_or(0);
    let failures: Vec<u64> = order
        .iter()
        .map(|s| {
            stored
                .as_ref()
                .and_then(|x| x.get(s))
                .map_or(0, |x| x.confidence_failures)
        })
        .collect();
    let reference = match &stored {
        Some(s) if order.contains(&s.reference) => s.reference.clone(),
        _ => match fs::read_to_string(dir.join(CONFIG_FILE)) {
            Ok(c) => serde_json::from_str::<ExperimentConfig>(&c)?
                .reference
                .unwrap_or_else(|| order[0].clone()),
            Err(_) => order[0].clone(),
        },
    };
    summarize(&order, &finals, &failures, &reference, horizon)
}

fn fmt_p(p: Option<f64>) -> String {
    match p {
        None => "-".into(),
        Some(p) if p < 1e-3 => format!("{p:.2e}"),
        Some(p) => format!("{p:.4}"),
    }
}

/// Plain-text table with one row per strategy.
pub fn format_table(s: &ExperimentSummary) -> String {
    let width = s
        .strategies
        .iter()
        .map(|x| x.strategy.len())
        .max()
        .unwrap_or(8)
        .max(8);
    let mut out = String::new();
    let _ = writeln!(out, "horizon {}  reference {}", s.horizon, s.reference);
    let _ = writeln!(
        out,
        "{:<width$}  {:>5}  {:>12}  {:>12}  {:>12}  {:>10}  {:>10}  {:>5}  {:>8}",
        "strategy", "runs", "mean", "std", "median", "ci99", "p_value", "wins", "failures"
    );
    for x in &s.strategies {
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>12.2}  {:>12.2}  {:>12.2}  {:>10.2}  {:>10}  {:>5}  {:>8}",
            x.strategy,
            x.runs,
            x.mean,
            x.std,
            x.median,
            x.ci99,
            fmt_p(x.p_value),
            x.wins,
            x.confidence_failures
        );
    }
    out
}

pub fn format_monitor_table(r: &MonitorReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14}  {:>6}  {:>8}  {:>7}  {:>7}  {:>7}  {:>11}  {:>11}  {:>9}",
        "strategy", "tau", "budget", "f1", "f1_med", "f1_std", "verif", "verif_med", "verif_std"
    );
    for row in &r.rows {
        let _ = writeln!(
            out,
            "{:<14}  {:>6}  {:>8}  {:>7.3}  {:>7.3}  {:>7.3}  {:>11.1}  {:>11.1}  {:>9.1}",
            row.strategy.name(),
            row.tau,
            row.budget_total,
            row.f1_mean,
            row.f1_median,
            row.f1_std,
            row.verifications_mean,
            row.verifications_median,
            row.verifications_std
        );
    }
    out
}
