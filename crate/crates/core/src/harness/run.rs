use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{
    build_learner, EnvConfig, ExperimentConfig, Learner, PreparedEnv, StrategySpec,
};
use super::stats::{ci99_half_width, mean, median, std_dev, welch_one_sided, win_counts};
use crate::error::{Error, Result};

const INSTANCE_STREAM: u64 = 0;
const OUTCOME_STREAM: u64 = 1;
const STRATEGY_STREAM: u64 = 2;

/// Seeded generator for one of a run's independent streams.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One run of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: String,
    pub run: usize,
    pub seed: u64,
    pub config: serde_json::Value,
    pub actions: Vec<usize>,
    /// Cumulative expected regret after each round.
    pub cum_regret: Vec<f64>,
    pub final_regret: f64,
    pub confidence_failures: u64,
    pub wall_time_secs: f64,
}

/// Plays `horizon` rounds. Instance, outcomes and strategy randomness come from
/// separate streams of `seed`, so two strategies with the same seed face the same
/// instance and outcome sequence.
pub fn run_prepared(
    strategy: &StrategySpec,
    env: &PreparedEnv,
    horizon: u64,
    seed: u64,
    run: usize,
) -> Result<RunRecord> {
    let start = Instant::now();
    let mut instance_rng = stream_rng(seed, INSTANCE_STREAM);
    let mut outcome_rng = stream_rng(seed, OUTCOME_STREAM);
    let mut strategy_rng = stream_rng(seed, STRATEGY_STREAM);
    let mut environment = env.instantiate(&mut instance_rng)?;
    let mut learner = build_learner(&strategy.config, env)?;
    let game = env.game.clone();

    let mut actions = Vec::with_capacity(horizon as usize);
    let mut cum_regret = Vec::with_capacity(horizon as usize);
    let mut total = 0.0;
    for _ in 0..horizon {
        let round = environment.next_round(&mut outcome_rng)?;
        let action = match &mut learner {
            Learner::Policy(p) => p.select(round.context.as_ref(), &mut strategy_rng)?,
            Learner::Oracle => round.optimal_action(&game),
        };
        let step = round.step(&game, action)?;
        if let Learner::Policy(p) = &mut learner {
            p.update(action, round.context.as_ref(), &step.observation)?;
        }
        total += step.regret;
        actions.push(action);
        cum_regret.push(total);
    }
    let confidence_failures = match &learner {
        Learner::Policy(p) => p.confidence_failures(),
        Learner::Oracle => 0,
    };
    Ok(RunRecord {
        strategy: strategy.name(),
        run,
        seed,
        config: serde_json::json!({ "strategy": strategy, "env": env.config }),
        actions,
        cum_regret,
        final_regret: total,
        confidence_failures,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

pub fn run_game(
    strategy: &StrategySpec,
    env: &EnvConfig,
    horizon: u64,
    seed: u64,
) -> Result<RunRecord> {
    run_prepared(strategy, &PreparedEnv::new(env)?, horizon, seed, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub ci99: f64,
    pub wins: usize,
    /// One-sided Welch p-value that the reference has lower mean regret than this
    /// strategy; `None` for the reference itself.
    pub p_value: Option<f64>,
    pub confidence_failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub horizon: u64,
    pub reference: String,
    pub strategies: Vec<StrategySummary>,
}

impl ExperimentSummary {
    pub fn get(&self, strategy: &str) -> Option<&StrategySummary> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }
}

/// Summary statistics from final regrets; `finals[s][r]` is strategy `s` on run `r`.
pub fn summarize(
    names: &[String],
    finals: &[Vec<f64>],
    failures: &[u64],
    reference: &str,
    horizon: u64,
) -> Result<ExperimentSummary> {
    let ref_idx = names
        .iter()
        .position(|n| n == reference)
        .ok_or_else(|| Error::Config(format!("unknown reference strategy {reference:?}")))?;
    let wins = win_counts(finals);
    let strategies = names
        .iter()
        .enumerate()
        .map(|(s, name)| {
            let f = &finals[s];
            StrategySummary {
                strategy: name.clone(),
                runs: f.len(),
                mean: mean(f),
                std: std_dev(f),
                median: median(f),
                ci99: ci99_half_width(f),
                wins: wins[s],
                p_value: (s != ref_idx).then(|| welch_one_sided(&finals[ref_idx], f)),
                confidence_failures: failures.get(s).copied().unwrap_or(0),
            }
        })
        .collect();
    Ok(ExperimentSummary {
        horizon,
        reference: reference.to_string(),
        strategies,
    })
}

pub struct Experiment {
    pub config: ExperimentConfig,
    /// Grouped by strategy in config order, then by run.
    pub records: Vec<RunRecord>,
    pub summary: ExperimentSummary,
}

/// Runs every strategy on `runs` seeds (`seed + r`), in parallel across runs.
pub fn replicate(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let env = PreparedEnv::new(&config.env_config()?)?;
    let jobs: Vec<(usize, usize)> = (0..config.strategies.len())
        .flat_map(|s| (0..config.runs).map(move |r| (s, r)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(s, r)| {
            run_prepared(
                &config.strategies[s],
                &env,
                config.horizon,
                config.seed.wrapping_add(r as u64),
                r,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = config.strategies.iter().map(StrategySpec::name).collect();
    let finals: Vec<Vec<f64>> = records
        .chunks(config.runs)
        .map(|c| c.iter().map(|r| r.final_regret).collect())
        .collect();
    let failures: Vec<u64> = records
        .chunks(config.runs)
        .map(|c| c.iter().map(|r| r.confidence_failures).sum())
        .collect();
    let reference = config.reference.clone().unwrap_or_else(|| names[0].clone());
    let summary = summarize(&names, &finals, &failures, &reference, config.horizon)?;
    Ok(Experiment {
        config: config.clone(),
        records,
        summary,
    })
}
