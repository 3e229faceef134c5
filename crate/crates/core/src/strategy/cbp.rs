use std::sync::Arc;

use nalgebra::DVector;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    argmax_lowest, candidate_set, check_alpha, sample_z, ExplorationSchedule, PairPlan,
    PlausibleCache, PlausibleSets, Policy, RandomizationConfig, SignedPair, DEFAULT_ALPHA,
};
use crate::error::{Error, Result};
use crate::game::{Game, SymbolObservation};
use crate::structure::GameStructure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbpConfig {
    pub alpha: f64,
    /// `None` gives CBP; `Some` gives RandCBP.
    pub randomization: Option<RandomizationConfig>,
}

impl Default for CbpConfig {
    fn default() -> Self {
        Self::deterministic(DEFAULT_ALPHA)
    }
}

impl CbpConfig {
    pub fn deterministic(alpha: f64) -> Self {
        Self {
            alpha,
            randomization: None,
        }
    }

    pub fn randomized(alpha: f64, randomization: RandomizationConfig) -> Self {
        Self {
            alpha,
            randomization: Some(randomization),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if let Some(r) = &self.randomization {
            r.validate()?;
        }
        Ok(())
    }
}

/// Play counts and per-symbol tallies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbpState {
    rounds: u64,
    counts: Vec<u64>,
    tallies: Vec<Vec<u64>>,
}

impl CbpState {
    pub fn new(game: &Game) -> Self {
        Self {
            rounds: 0,
            counts: vec![0; game.n_actions()],
            tallies: game.sigmas().into_iter().map(|s| vec![0; s]).collect(),
        }
    }

    /// Completed rounds.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn tallies(&self, a: usize) -> &[u64] {
        &self.tallies[a]
    }

    pub fn update(&mut self, action: usize, observation: &SymbolObservation) -> Result<()> {
        let tally = self
            .tallies
            .get_mut(action)
            .ok_or(Error::ActionOutOfRange(action))?;
        if observation.action != action || observation.symbol_index >= tally.len() {
            return Err(Error::UnknownSymbol {
                action,
                symbol: observation.symbol_index.to_string(),
            });
        }
        tally[observation.symbol_index] += 1;
        self.counts[action] += 1;
        self.rounds += 1;
        Ok(())
    }

    /// `delta_hat_ij = sum_a v_ija . nu_a / n_a`.
    pub fn delta_hat(&self, plan: &PairPlan) -> Result<f64> {
        let mut acc = 0.0;
        for (a, v) in &plan.observers {
            if v.amax() == 0.0 {
                continue;
            }
            let n = self.counts[*a];
            if n == 0 {
                return Err(Error::Invariant(format!(
                    "observer action {a} has no plays"
                )));
            }
            let nu = DVector::from_iterator(v.len(), self.tallies[*a].iter().map(|&c| c as f64));
            acc += v.dot(&nu) / n as f64;
        }
        Ok(acc)
    }

    /// `sum_a ||v_ija||_inf z / sqrt(n_a)`.
    pub fn width(&self, plan: &PairPlan, z: f64) -> f64 {
        plan.observers
            .iter()
            .filter(|(_, v)| v.amax() > 0.0)
            .map(|(a, v)| v.amax() * z / (self.counts[*a] as f64).sqrt())
            .sum()
    }
}

/// Everything computed for one post-initialization round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundPlan {
    pub t: u64,
    pub delta_hat: Vec<f64>,
    pub widths: Vec<f64>,
    pub confident: Vec<SignedPair>,
    pub plausible: PlausibleSets,
    pub candidates: Vec<usize>,
    pub action: usize,
}

/// CBP, or RandCBP when the config carries a randomization block.
pub struct Cbp {
    name: String,
    game: Arc<Game>,
    structure: Arc<GameStructure>,
    cfg: CbpConfig,
    plans: Vec<PairPlan>,
    schedule: ExplorationSchedule,
    state: CbpState,
    cache: PlausibleCache,
}

impl Cbp {
    pub fn new(game: Arc<Game>, structure: Arc<GameStructure>, cfg: CbpConfig) -> Result<Self> {
        cfg.validate()?;
        let plans = PairPlan::from_structure(&structure)?;
        let name = if cfg.randomization.is_some() {
            "randcbp"
        } else {
            "cbp"
        };
        Ok(Self {
            name: name.to_string(),
            schedule: ExplorationSchedule::new(cfg.alpha, structure.weights()),
            state: CbpState::new(&game),
            cache: PlausibleCache::new(),
            game,
            structure,
            cfg,
            plans,
        })
    }

    pub fn state(&self) -> &CbpState {
        &self.state
    }

    pub fn pair_plans(&self) -> &[PairPlan] {
        &self.plans
    }

    pub fn cache(&self) -> &PlausibleCache {
        &self.cache
    }

    /// Full decision for the next round; `None` during initialization.
    pub fn plan(&mut self, rng: &mut dyn RngCore) -> Result<Option<RoundPlan>> {
        let t = self.state.rounds + 1;
        let n = self.game.n_actions() as u64;
        if t <= n {
            return Ok(None);
        }
        let bound = (self.cfg.alpha * (t as f64).ln()).sqrt();
        let mut delta_hat = Vec::with_capacity(self.plans.len());
        let mut widths = Vec::with_capacity(self.plans.len());
        let mut confident = Vec::new();
        for plan in &self.plans {
            let d = self.state.delta_hat(plan)?;
            let z = match &self.cfg.randomization {
                Some(r) => sample_z(r, bound, rng),
                None => bound,
            };
            let c = self.state.width(plan, z);
            if d.abs() > c {
                confident.push((plan.i, plan.j, if d > 0.0 { 1 } else { -1 }));
            }
            delta_hat.push(d);
            widths.push(c);
        }
        let plausible = self.cache.lookup(&self.game, &self.structure, &confident);
        let counts = &self.state.counts;
        let candidates = candidate_set(&plausible, &self.plans, |a| {
            counts[a] as f64 <= self.schedule.threshold(a, t)
        });
        let weights = self.structure.weights();
        let action = argmax_lowest(&candidates, |a| weights[a] * weights[a] / counts[a] as f64)
            .ok_or_else(|| Error::Invariant("empty candidate set".into()))?;
        Ok(Some(RoundPlan {
            t,
            delta_hat,
            widths,
            confident,
            plausible,
            candidates,
            action,
        }))
    }
}

impl Policy for Cbp {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, _: Option<&DVector<f64>>, rng: &mut dyn RngCore) -> Result<usize> {
        match self.plan(rng)? {
            Some(plan) => Ok(plan.action),
            None => Ok(self.state.rounds as usize),
        }
    }

    fn update(
        &mut self,
        action: usize,
        _: Option<&DVector<f64>>,
        observation: &SymbolObservation,
    ) -> Result<()> {
        self.state.update(action, observation)
    }

    fn confidence_failures(&self) -> u64 {
        self.cache.fallbacks()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{apple_tasting, label_efficient, tau_detection, PASS, VERIFY};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(game: Game, cfg: CbpConfig) -> Cbp {
        let structure = Arc::new(GameStructure::analyze(&game).unwrap());
        Cbp::new(Arc::new(game), structure, cfg).unwrap()
    }

    /// Tallies proportional to `S_a p` with `n` plays per action.
    fn exact_state(game: &Game, p: &[f64], n: u64) -> CbpState {
        let mut s = CbpState::new(game);
        let p = DVector::from_row_slice(p);
        for a in 0..game.n_actions() {
            let pi = game.signal_matrix(a) * &p;
            s.tallies[a] = pi.iter().map(|q| (q * n as f64).round() as u64).collect();
            s.counts[a] = n;
        }
        s
    }

    #[test]
    fn delta_hat_apple_tasting_exact_tallies() {
        let g = apple_tasting();
        let cbp = setup(g.clone(), CbpConfig::default());
        let s = exact_state(&g, &[0.8, 0.2], 100);
        let d = s.delta_hat(&cbp.pair_plans()[0]).unwrap();
        assert!((d - 0.6).abs() < 1e-12);
    }

    #[test]
    fn delta_hat_reconstructs_loss_difference() {
        let g = label_efficient();
        let cbp = setup(g.clone(), CbpConfig::default());
        for p in [[0.3, 0.7], [0.5, 0.5], [0.9, 0.1]] {
            let s = exact_state(&g, &p, 1000);
            let plan = &cbp.pair_plans()[0];
            let want = g
                .loss_diff(plan.i, plan.j)
                .dot(&DVector::from_row_slice(&p));
            assert!((s.delta_hat(plan).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_observer_vectors_give_zero() {
        let plan = PairPlan {
            i: 0,
            j: 1,
            nplus: vec![0, 1],
            observer_set: vec![0, 1],
            observers: vec![(0, DVector::zeros(1)), (1, DVector::zeros(2))],
        };
        let s = CbpState::new(&apple_tasting());
        assert_eq!(s.delta_hat(&plan).unwrap(), 0.0);
        assert_eq!(s.width(&plan, 3.0), 0.0);
    }

    #[test]
    fn deterministic_width_examples() {
        let g = apple_tasting();
        let cbp = setup(g.clone(), CbpConfig::default());
        let mut s = CbpState::new(&g);
        s.counts = vec![4, 1];
        let plan = &cbp.pair_plans()[0];
        let z = (1.01f64 * 100f64.ln()).sqrt();
        let want = (1.01f64 * 100f64.ln() / 1.0).sqrt();
        assert!((s.width(plan, z) - want).abs() < 1e-12);
        assert!((s.width(plan, z) - 2.15667).abs() < 1e-5);
        assert_eq!(s.width(plan, 1.0), 1.0);
        assert_eq!(s.width(plan, 0.0), 0.0);
        s.counts = vec![1, 1];
        let e = std::f64::consts::E;
        assert!((s.width(plan, (1.0 * e.ln()).sqrt()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn initialization_plays_each_action_once() {
        let g = label_efficient();
        let mut cbp = setup(g.clone(), CbpConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for t in 0..3 {
            let a = cbp.select(None, &mut rng).unwrap();
            assert_eq!(a, t);
            cbp.update(a, None, &g.observe(a, 0)).unwrap();
        }
    }

    #[test]
    fn update_changes_only_played_action() {
        let g = apple_tasting();
        let mut s = CbpState::new(&g);
        s.update(1, &g.observe(1, 0)).unwrap();
        s.update(1, &g.observe(1, 1)).unwrap();
        s.update(0, &g.observe(0, 1)).unwrap();
        assert_eq!(s.counts(), &[1, 2]);
        assert_eq!(s.tallies(1), &[1, 1]);
        assert_eq!(s.tallies(0), &[1]);
        assert_eq!(s.rounds(), 3);
        assert!(s.update(0, &g.observe(1, 0)).is_err());
    }

    #[test]
    fn apple_tasting_settles_on_optimal_action() {
        let g = apple_tasting();
        let mut cbp = setup(g.clone(), CbpConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut last = Vec::new();
        for t in 0..3000 {
            let a = cbp.select(None, &mut rng).unwrap();
            // p* = [0, 1]: outcome B always, action 0 optimal
            cbp.update(a, None, &g.observe(a, 1)).unwrap();
            if t >= 2900 {
                last.push(a);
            }
        }
        assert!(last.iter().all(|&a| a == 0));
        assert_eq!(cbp.confidence_failures(), 0);
    }

    #[test]
    fn single_bin_randomization_matches_deterministic() {
        let g = label_efficient();
        let k1 = RandomizationConfig {
            k_bins: 1,
            ..Default::default()
        };
        let mut det = setup(g.clone(), CbpConfig::default());
        let mut rnd = setup(g.clone(), CbpConfig::randomized(1.01, k1));
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let mut env = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..2000 {
            let a = det.select(None, &mut r1).unwrap();
            let b = rnd.select(None, &mut r2).unwrap();
            assert_eq!(a, b);
            let outcome = usize::from(env.random::<f64>() < 0.45);
            det.update(a, None, &g.observe(a, outcome)).unwrap();
            rnd.update(b, None, &g.observe(b, outcome)).unwrap();
        }
    }

    #[test]
    fn same_seed_replays() {
        let g = apple_tasting();
        let run = || {
            let mut p = setup(g.clone(), CbpConfig::randomized(1.01, Default::default()));
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let mut env = ChaCha8Rng::seed_from_u64(78);
            (0..500)
                .map(|_| {
                    let a = p.select(None, &mut rng).unwrap();
                    let o = usize::from(env.random::<f64>() < 0.3);
                    p.update(a, None, &g.observe(a, o)).unwrap();
                    a
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn tau_detection_never_passes_when_error_rate_is_high() {
        let g = tau_detection(0.025).unwrap();
        let mut p = setup(g.clone(), CbpConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut env = ChaCha8Rng::seed_from_u64(2);
        let mut passes = 0;
        for _ in 0..2000 {
            let a = p.select(None, &mut rng).unwrap();
            passes += usize::from(a == PASS);
            let o = usize::from(env.random::<f64>() >= 0.3);
            p.update(a, None, &g.observe(a, o)).unwrap();
        }
        assert_eq!(passes, 1);
        assert_eq!(p.structure.weights()[VERIFY], 39.0);
    }

    #[test]
    fn rejects_unobservable_game() {
        let g = Game::new(
            "blind",
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec!["x".into(), "x".into()], vec!["y".into(), "y".into()]],
        )
        .unwrap();
        let s = Arc::new(GameStructure::analyze(&g).unwrap());
        assert!(matches!(
            Cbp::new(Arc::new(g), s, CbpConfig::default()),
            Err(Error::Config(_))
        ));
    }
}
