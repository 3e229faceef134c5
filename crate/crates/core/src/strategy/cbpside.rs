use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    argmax_lowest, candidate_set, check_alpha, sample_z, ExplorationSchedule, PairPlan,
    PlausibleCache, PlausibleSets, Policy, RandomizationConfig, SignedPair, DEFAULT_ALPHA,
};
use crate::error::{Error, Result};
use crate::game::{Game, SymbolObservation};
use crate::numerics::rank1_inverse_update_mut;
use crate::structure::GameStructure;

pub const DEFAULT_LAMBDA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbpSideConfig {
    pub alpha: f64,
    pub lambda: f64,
    /// `None` gives CBPside*; `Some` gives RandCBPside*.
    pub randomization: Option<RandomizationConfig>,
    /// Append a constant 1 to every context before regression.
    #[serde(default)]
    pub intercept: bool,
}

impl Default for CbpSideConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            lambda: DEFAULT_LAMBDA,
            randomization: None,
            intercept: false,
        }
    }
}

impl CbpSideConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if let Some(r) = &self.randomization {
            r.validate()?;
        }
        Ok(())
    }
}

/// `sqrt(max(0, (d + 4) ln t))`.
pub fn deterministic_scale(d: usize, t: u64) -> f64 {
    ((d as f64 + 4.0) * (t as f64).ln()).max(0.0).sqrt()
}

/// Ridge estimator of one action's feedback distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeArm {
    g_inv: DMatrix<f64>,
    cross: DMatrix<f64>,
    plays: u64,
}

impl RidgeArm {
    pub fn new(sigma: usize, d: usize, lambda: f64) -> Self {
        Self {
            g_inv: DMatrix::identity(d, d) / lambda,
            cross: DMatrix::zeros(sigma, d),
            plays: 0,
        }
    }

    pub fn gram_inverse(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    pub fn cross_moment(&self) -> &DMatrix<f64> {
        &self.cross
    }

    pub fn plays(&self) -> u64 {
        self.plays
    }

    pub fn update(&mut self, x: &DVector<f64>, observation: &SymbolObservation) -> Result<()> {
        if observation.one_hot.len() != self.cross.nrows() || x.len() != self.cross.ncols() {
            return Err(Error::Dimension(format!(
                "arm expects {} symbols and {} features, got {} and {}",
                self.cross.nrows(),
                self.cross.ncols(),
                observation.one_hot.len(),
                x.len()
            )));
        }
        rank1_inverse_update_mut(&mut self.g_inv, x)?;
        self.cross.ger(1.0, &observation.one_hot, x, 1.0);
        self.plays += 1;
        Ok(())
    }

    /// `theta_hat = B G^{-1}`.
    pub fn theta_hat(&self) -> DMatrix<f64> {
        &self.cross * &self.g_inv
    }

    /// Unclamped linear prediction `theta_hat x`.
    pub fn predict_pi(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.cross * (&self.g_inv * x)
    }

    /// `x^T G^{-1} x`.
    pub fn quad(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.g_inv * x)).max(0.0)
    }

    /// `1 / x^T G^{-1} x`, infinite for `x = 0`.
    pub fn pseudo_count(&self, x: &DVector<f64>) -> f64 {
        let q = self.quad(x);
        if q == 0.0 {
            f64::INFINITY
        } else {
            1.0 / q
        }
    }

    /// `sigma (scale + sigma) ||x||_{G^{-1}}`.
    pub fn width(&self, x: &DVector<f64>, sigma: usize, scale: f64) -> f64 {
        let s = sigma as f64;
        s * (scale + s) * self.quad(x).sqrt()
    }
}

/// Everything computed for one post-initialization contextual round.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextRoundPlan {
    pub t: u64,
    pub action_widths: Vec<f64>,
    pub delta_hat: Vec<f64>,
    pub widths: Vec<f64>,
    pub confident: Vec<SignedPair>,
    pub plausible: PlausibleSets,
    pub candidates: Vec<usize>,
    pub action: usize,
}

/// CBPside*, or RandCBPside* when the config carries a randomization block.
pub struct CbpSide {
    name: String,
    game: Arc<Game>,
    structure: Arc<GameStructure>,
    cfg: CbpSideConfig,
    plans: Vec<PairPlan>,
    schedule: ExplorationSchedule,
    arms: Vec<RidgeArm>,
    dim: usize,
    rounds: u64,
    cache: PlausibleCache,
}

impl CbpSide {
    pub fn new(
        game: Arc<Game>,
        structure: Arc<GameStructure>,
        dim: usize,
        cfg: CbpSideConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if dim == 0 {
            return Err(Error::Config("context dimension must be positive".into()));
        }
        let plans = PairPlan::from_structure(&structure)?;
        let features = dim + usize::from(cfg.intercept);
        let arms = game
            .sigmas()
            .into_iter()
            .map(|s| RidgeArm::new(s, features, cfg.lambda))
            .collect();
        let name = if cfg.randomization.is_some() {
            "randcbpside"
        } else {
            "cbpside"
        };
        Ok(Self {
            name: name.to_string(),
            schedule: ExplorationSchedule::new(cfg.alpha, structure.weights()),
            cache: PlausibleCache::new(),
            game,
            structure,
            cfg,
            plans,
            arms,
            dim,
            rounds: 0,
        })
    }

    pub fn arm(&self, a: usize) -> &RidgeArm {
        &self.arms[a]
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Context dimension expected from the environment.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Regression dimension: the context dimension plus one with an intercept.
    pub fn feature_dim(&self) -> usize {
        self.dim + usize::from(self.cfg.intercept)
    }

    fn features(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.cfg.intercept && x.len() == self.dim {
            x.clone().push(1.0)
        } else {
            x.clone()
        }
    }

    pub fn pair_plans(&self) -> &[PairPlan] {
        &self.plans
    }

    /// `delta_hat_ij(x) = sum_a v_ija . pi_hat_a(x)`.
    pub fn delta_hat(&self, plan: &PairPlan, x: &DVector<f64>) -> f64 {
        let x = &self.features(x);
        plan.observers
            .iter()
            .filter(|(_, v)| v.amax() > 0.0)
            .map(|(a, v)| v.dot(&self.arms[*a].predict_pi(x)))
            .sum()
    }

    fn check_context(&self, x: Option<&DVector<f64>>) -> Result<DVector<f64>> {
        let x = x.ok_or_else(|| Error::Config(format!("{} needs a context", self.name)))?;
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "context has length {}, expected {}",
                x.len(),
                self.dim
            )));
        }
        Ok(self.features(x))
    }

    /// Full decision for context `x`; `None` during initialization.
    pub fn plan(
        &mut self,
        x: &DVector<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<Option<ContextRoundPlan>> {
        let t = self.rounds + 1;
        if t <= self.game.n_actions() as u64 {
            return Ok(None);
        }
        let x = &self.features(x);
        let bound = deterministic_scale(self.feature_dim(), t);
        let action_widths: Vec<f64> = (0..self.arms.len())
            .map(|a| {
                let scale = match &self.cfg.randomization {
                    Some(r) => sample_z(r, bound, rng),
                    None => bound,
                };
                self.arms[a].width(x, self.game.sigma(a), scale)
            })
            .collect();
        let mut delta_hat = Vec::with_capacity(self.plans.len());
        let mut widths = Vec::with_capacity(self.plans.len());
        let mut confident = Vec::new();
        for plan in &self.plans {
            let d = self.delta_hat(plan, x);
            let c: f64 = plan
                .observers
                .iter()
                .map(|(a, v)| v.norm() * action_widths[*a])
                .sum();
            if d.abs() > c {
                confident.push((plan.i, plan.j, if d > 0.0 { 1 } else { -1 }));
            }
            delta_hat.push(d);
            widths.push(c);
        }
        let plausible = self.cache.lookup(&self.game, &self.structure, &confident);
        let candidates = candidate_set(&plausible, &self.plans, |a| {
            self.arms[a].pseudo_count(x) < self.schedule.threshold(a, t)
        });
        let weights = self.structure.weights();
        let action = argmax_lowest(&candidates, |a| weights[a] * action_widths[a])
            .ok_or_else(|| Error::Invariant("empty candidate set".into()))?;
        Ok(Some(ContextRoundPlan {
            t,
            action_widths,
            delta_hat,
            widths,
            confident,
            plausible,
            candidates,
            action,
        }))
    }
}

impl Policy for CbpSide {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, context: Option<&DVector<f64>>, rng: &mut dyn RngCore) -> Result<usize> {
        let x = self.check_context(context)?;
        match self.plan(&x, rng)? {
            Some(plan) => Ok(plan.action),
            None => Ok(self.rounds as usize),
        }
    }

    fn update(
        &mut self,
        action: usize,
        context: Option<&DVector<f64>>,
        observation: &SymbolObservation,
    ) -> Result<()> {
        let x = self.check_context(context)?;
        self.arms
            .get_mut(action)
            .ok_or(Error::ActionOutOfRange(action))?
            .update(&x, observation)?;
        self.rounds += 1;
        Ok(())
    }

    fn confidence_failures(&self) -> u64 {
        self.cache.fallbacks()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::apple_tasting;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(d: usize, k: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[k] = 1.0;
        v
    }

    fn obs(sym: usize, sigma: usize) -> SymbolObservation {
        SymbolObservation::new(0, sym, sigma)
    }

    #[test]
    fn single_update_closed_form() {
        let x = DVector::from_vec(vec![0.3, 0.9]);
        let mut arm = RidgeArm::new(2, 2, 0.05);
        arm.update(&x, &obs(1, 2)).unwrap();
        let g = DMatrix::identity(2, 2) * 0.05 + &x * x.transpose();
        let e1 = DVector::from_vec(vec![0.0, 1.0]);
        let want = &e1 * x.transpose() * g.try_inverse().unwrap();
        assert_relative_eq!(arm.theta_hat(), want, max_relative = 1e-12);
    }

    #[test]
    fn fifty_updates_match_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 4;
        let mut arm = RidgeArm::new(2, d, 0.05);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..50 {
            let x = DVector::from_fn(d, |_, _| rng.random::<f64>());
            let s = usize::from(rng.random::<f64>() < 0.4);
            arm.update(&x, &obs(s, 2)).unwrap();
            xs.push(x);
            ys.push(s);
        }
        let xm = DMatrix::from_columns(&xs);
        let ym = DMatrix::from_fn(2, 50, |r, c| f64::from(u8::from(ys[c] == r)));
        let g = DMatrix::identity(d, d) * 0.05 + &xm * xm.transpose();
        let want = ym * xm.transpose() * g.try_inverse().unwrap();
        assert!((arm.theta_hat() - want).amax() < 1e-7);
    }

    #[test]
    fn fresh_arm_predicts_zero_and_pseudo_count_lambda() {
        let arm = RidgeArm::new(2, 3, 0.05);
        assert_eq!(arm.predict_pi(&e(3, 1)), DVector::zeros(2));
        assert_relative_eq!(arm.pseudo_count(&e(3, 2)), 0.05, max_relative = 1e-12);
        assert_eq!(arm.pseudo_count(&DVector::zeros(3)), f64::INFINITY);
    }

    #[test]
    fn pseudo_count_after_seven_plays() {
        let mut arm = RidgeArm::new(1, 3, 0.05);
        for _ in 0..7 {
            arm.update(&e(3, 0), &obs(0, 1)).unwrap();
        }
        assert_relative_eq!(arm.pseudo_count(&e(3, 0)), 7.05, max_relative = 1e-12);
        assert_relative_eq!(arm.pseudo_count(&e(3, 1)), 0.05, max_relative = 1e-12);
    }

    #[test]
    fn one_hot_predictions_are_shrunk_frequencies() {
        let mut arm = RidgeArm::new(2, 2, 0.05);
        // 6 plays at e_0 with 4 of symbol 0; 3 plays at e_1 with 1 of symbol 0
        for s in [0, 0, 0, 0, 1, 1] {
            arm.update(&e(2, 0), &obs(s, 2)).unwrap();
        }
        for s in [0, 1, 1] {
            arm.update(&e(2, 1), &obs(s, 2)).unwrap();
        }
        let p0 = arm.predict_pi(&e(2, 0));
        assert_relative_eq!(p0[0], 4.0 / 6.05, max_relative = 1e-12);
        assert_relative_eq!(p0[1], 2.0 / 6.05, max_relative = 1e-12);
        let p1 = arm.predict_pi(&e(2, 1));
        assert_relative_eq!(p1[0], 1.0 / 3.05, max_relative = 1e-12);
    }

    #[test]
    fn width_examples() {
        let arm = RidgeArm::new(2, 10, 0.05);
        let x = e(10, 0);
        let scale = deterministic_scale(10, 100);
        let want = 2.0 * ((14.0 * 100f64.ln()).sqrt() + 2.0) * (1.0f64 / 0.05).sqrt();
        assert_relative_eq!(arm.width(&x, 2, scale), want, max_relative = 1e-12);
        assert_eq!(arm.width(&DVector::zeros(10), 2, scale), 0.0);
        assert_relative_eq!(
            arm.width(&x, 2, 0.0),
            4.0 * 20f64.sqrt(),
            max_relative = 1e-12
        );
        assert_eq!(deterministic_scale(3, 1), 0.0);
    }

    #[test]
    fn update_on_one_action_leaves_others() {
        let g = Arc::new(apple_tasting());
        let s = Arc::new(GameStructure::analyze(&g).unwrap());
        let mut p = CbpSide::new(g.clone(), s, 2, CbpSideConfig::default()).unwrap();
        let before = p.arm(0).clone();
        let x = e(2, 1);
        p.update(1, Some(&x), &g.observe(1, 0)).unwrap();
        assert_eq!(p.arm(0), &before);
        assert_eq!(p.arm(1).plays(), 1);
        assert!(p.select(None, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn one_hot_contexts_learn_per_context_optimum() {
        let g = Arc::new(apple_tasting());
        let s = Arc::new(GameStructure::analyze(&g).unwrap());
        let cfg = CbpSideConfig {
            randomization: Some(RandomizationConfig::default()),
            ..Default::default()
        };
        let mut p = CbpSide::new(g.clone(), s, 2, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut env = ChaCha8Rng::seed_from_u64(4);
        let mut late_regret = 0.0;
        for t in 0..6000 {
            let k = usize::from(env.random::<f64>() < 0.5);
            let pa = if k == 0 { 0.9 } else { 0.1 };
            let x = e(2, k);
            let a = p.select(Some(&x), &mut rng).unwrap();
            let outcome = usize::from(env.random::<f64>() >= pa);
            p.update(a, Some(&x), &g.observe(a, outcome)).unwrap();
            let losses = g.expected_losses(&DVector::from_vec(vec![pa, 1.0 - pa]));
            if t >= 5000 {
                late_regret += losses[a] - losses.min();
            }
        }
        assert!(late_regret < 100.0, "late regret {late_regret}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn gram_inverse_stays_consistent(seed in 0u64..500, d in 1usize..8, n in 1usize..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut arm = RidgeArm::new(1, d, 0.05);
            let mut g = DMatrix::identity(d, d) * 0.05;
            for _ in 0..n {
                let x = DVector::from_fn(d, |_, _| rng.random::<f64>());
                arm.update(&x, &obs(0, 1)).unwrap();
                g += &x * x.transpose();
            }
            let prod = arm.gram_inverse() * g;
            prop_assert!((prod - DMatrix::identity(d, d)).amax() < 1e-7);
        }

        #[test]
        fn width_non_increasing_with_plays(seed in 0u64..500, d in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = DVector::from_fn(d, |_, _| rng.random::<f64>());
            let mut arm = RidgeArm::new(2, d, 0.05);
            let mut prev = arm.width(&x, 2, 1.5);
            for _ in 0..20 {
                arm.update(&x, &obs(0, 2)).unwrap();
                let w = arm.width(&x, 2, 1.5);
                prop_assert!(w <= prev + 1e-12);
                prev = w;
            }
        }
    }
}
