//! The Peace algorithms and the baselines they are compared with.

mod baselines;
mod elimination;
mod fixed_budget;
mod oracle;

pub use baselines::{clucb, clucb_with, uniform_allocation, uniform_fixed_budget};
pub use elimination::{peace_fc, rage_baseline};
pub use fixed_budget::{epoch_count, peace_fb};
pub use oracle::{peace_oracle, oracle_gamma};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::design_opt::{AllocOptions, GeneralOptions};
use crate::env::trials::{run_trials, TrialSummary};
use crate::env::{rng, Environment, Instance};
use crate::error::{Error, Result};
use crate::item::Item;
use crate::linalg::Design;
use crate::width::DEFAULT_N_MC;

/// Default guard on rounds per run.
pub const MAX_ROUNDS: usize = 64;
/// Default guard on total samples per run.
pub const MAX_SAMPLES: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub k: usize,
    pub n_k: u64,
    /// The round objective (τ_k, γ_k or a baseline's analogue).
    pub objective: f64,
    /// Active items at the start of the round (or a proxy for oracle runs).
    pub active: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub recommendation: Item,
    pub total_samples: u64,
    pub rounds: Vec<RoundRecord>,
    pub succeeded: bool,
    /// Seconds; 0 unless timing is enabled, so transcripts stay reproducible.
    pub wall_time: f64,
}

/// How the oracle algorithm obtains its initial gap scale Γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GapBound {
    /// Γ = 4·ComputeAlloc(0, 0, 1, δ/4) ∨ 1.
    Estimated,
    /// A known bound on the largest gap.
    Known(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FcConfig {
    pub delta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub n_mc: usize,
    /// Seed of the algorithm's internal Monte-Carlo streams. Streams are
    /// derived from this seed and the round's inputs, never from the noise.
    pub seed: u64,
    pub max_rounds: usize,
    pub max_samples: u64,
    /// Minimum pulls per round; `None` means d.
    pub q: Option<u64>,
    pub gap_bound: GapBound,
    pub alloc: AllocOptions,
    pub general: GeneralOptions,
    pub timing: bool,
}

impl Default for FcConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            epsilon: 0.1,
            alpha: 4.0,
            n_mc: DEFAULT_N_MC,
            seed: 0,
            max_rounds: MAX_ROUNDS,
            max_samples: MAX_SAMPLES,
            q: None,
            gap_bound: GapBound::Estimated,
            alloc: AllocOptions::default(),
            general: GeneralOptions::default(),
            timing: false,
        }
    }
}

impl FcConfig {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta = {} outside (0,1)", self.delta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon = {} outside (0,1)", self.epsilon)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument("alpha must be positive".into()));
        }
        if self.n_mc < 2 {
            return Err(Error::InvalidArgument("n_mc must be at least 2".into()));
        }
        Ok(())
    }

    /// ⌈5d/ε²⌉, the minimum round size of the rounding guarantee.
    pub fn strict_q(&self, d: usize) -> u64 {
        (5.0 * d as f64 / (self.epsilon * self.epsilon)).ceil() as u64
    }

    pub(crate) fn q_for(&self, d: usize) -> u64 {
        self.q.unwrap_or(d as u64).max(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FbConfig {
    pub budget: u64,
    pub epsilon: f64,
    pub n_mc: usize,
    pub seed: u64,
    pub q: Option<u64>,
    pub alloc: AllocOptions,
    pub general: GeneralOptions,
    pub timing: bool,
}

impl Default for FbConfig {
    fn default() -> Self {
        Self {
            budget: 1000,
            epsilon: 0.1,
            n_mc: DEFAULT_N_MC,
            seed: 0,
            q: None,
            alloc: AllocOptions::default(),
            general: GeneralOptions::default(),
            timing: false,
        }
    }
}

impl FbConfig {
    pub fn with_budget(budget: u64) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }
}

/// Anytime confidence radius for a mean of t unit-variance observations.
pub trait ConfidenceBound: Send + Sync {
    fn radius(&self, t: u64, delta: f64) -> f64;
}

/// r(t, δ) = √((2/t)(log log₂(2t ∨ 2) + log(10.4/δ))).
#[derive(Clone, Copy, Debug, Default)]
pub struct DoublingBound;

impl ConfidenceBound for DoublingBound {
    fn radius(&self, t: u64, delta: f64) -> f64 {
        let t = t.max(1) as f64;
        let ll = (2.0 * t).max(2.0).log2().ln();
        ((2.0 / t) * (ll + (10.4 / delta).ln())).sqrt()
    }
}

/// A design with its width and worst squared norm at that design.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundPlan {
    pub design: Design,
    pub width: f64,
    pub max_norm_sq: f64,
    /// Objective value reported by the optimizer, when it has one.
    pub value: f64,
}

/// Shares data-independent round plans between trials of one experiment.
/// Plans are computed from streams keyed by their inputs, so a hit returns
/// exactly what a miss would compute.
#[derive(Debug, Default)]
pub struct DesignCache {
    map: Mutex<HashMap<(u8, Vec<u64>), Arc<RoundPlan>>>,
}

impl DesignCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn get_or_try(
        &self,
        tag: u8,
        key: &[u64],
        compute: impl FnOnce() -> Result<RoundPlan>,
    ) -> Result<Arc<RoundPlan>> {
        let k = (tag, key.to_vec());
        if let Some(p) = self.map.lock().expect("cache lock").get(&k) {
            return Ok(p.clone());
        }
        let plan = Arc::new(compute()?);
        Ok(self.map.lock().expect("cache lock").entry(k).or_insert(plan).clone())
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Looks up `key` in an optional cache.
pub(crate) fn cached(
    cache: Option<&DesignCache>,
    tag: u8,
    key: &[u64],
    compute: impl FnOnce() -> Result<RoundPlan>,
) -> Result<Arc<RoundPlan>> {
    match cache {
        Some(c) => c.get_or_try(tag, key, compute),
        None => compute().map(Arc::new),
    }
}

/// Run bookkeeping shared by all algorithms.
pub(crate) struct Transcript {
    start: Option<Instant>,
    pub rounds: Vec<RoundRecord>,
    max_rounds: usize,
    max_samples: u64,
}

impl Transcript {
    pub fn new(timing: bool, max_rounds: usize, max_samples: u64) -> Self {
        Self {
            start: timing.then(Instant::now),
            rounds: Vec::new(),
            max_rounds,
            max_samples,
        }
    }

    pub fn finish(self, env: &Environment<'_>, recommendation: Item) -> RunResult {
        let succeeded = &recommendation == env.instance().z_star();
        RunResult {
            succeeded,
            recommendation,
            total_samples: env.total_samples(),
            rounds: self.rounds,
            wall_time: self.start.map_or(0.0, |s| s.elapsed().as_secs_f64()),
        }
    }

    /// Errors when another round or `next` more samples would break a guard.
    pub fn check(&self, env: &Environment<'_>, next: u64, best: &Item) -> Result<()> {
        if self.rounds.len() >= self.max_rounds {
            return Err(Error::MaxRoundsExceeded {
                max_rounds: self.max_rounds,
                partial: Box::new(self.partial(env, best)),
            });
        }
        if env.total_samples().saturating_add(next) > self.max_samples {
            return Err(Error::MaxSamplesExceeded {
                max_samples: self.max_samples,
                partial: Box::new(self.partial(env, best)),
            });
        }
        Ok(())
    }

    fn partial(&self, env: &Environment<'_>, best: &Item) -> RunResult {
        RunResult {
            succeeded: best == env.instance().z_star(),
            recommendation: best.clone(),
            total_samples: env.total_samples(),
            rounds: self.rounds.clone(),
            wall_time: self.start.map_or(0.0, |s| s.elapsed().as_secs_f64()),
        }
    }
}

/// Stream key for a set of item ids.
pub(crate) fn ids_key(ids: &[usize]) -> Vec<u64> {
    ids.iter().map(|&i| i as u64).collect()
}

/// Stream key for a real vector.
pub(crate) fn vec_key(round: usize, v: &[f64]) -> Vec<u64> {
    std::iter::once(round as u64).chain(v.iter().map(|x| x.to_bits())).collect()
}

pub(crate) fn plan_rng(seed: u64, tag: u8, key: &[u64]) -> rand_chacha::ChaCha8Rng {
    rng::stream(rng::derive_seed(seed, &[tag as u64]), key)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    PeaceFc,
    PeaceOracle,
    PeaceFb,
    Uniform,
    UniformFb,
    Clucb,
    Rage,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::PeaceFc,
        Algorithm::PeaceOracle,
        Algorithm::PeaceFb,
        Algorithm::Uniform,
        Algorithm::UniformFb,
        Algorithm::Clucb,
        Algorithm::Rage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PeaceFc => "peace_fc",
            Algorithm::PeaceOracle => "peace_oracle",
            Algorithm::PeaceFb => "peace_fb",
            Algorithm::Uniform => "uniform",
            Algorithm::UniformFb => "uniform_fb",
            Algorithm::Clucb => "clucb",
            Algorithm::Rage => "rage",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }

    pub fn is_fixed_budget(self) -> bool {
        matches!(self, Algorithm::PeaceFb | Algorithm::UniformFb)
    }
}

/// An algorithm with its configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    pub fc: FcConfig,
    pub fb: FbConfig,
}

impl AlgorithmSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            fc: FcConfig::default(),
            fb: FbConfig::default(),
        }
    }

    /// One run against a fresh environment seeded with `seed`.
    pub fn run(&self, instance: &Instance, seed: u64, cache: Option<&DesignCache>) -> Result<RunResult> {
        let mut env = Environment::new(instance, seed);
        match self.algorithm {
            Algorithm::PeaceFc => peace_fc(&mut env, &self.fc, cache),
            Algorithm::PeaceOracle => peace_oracle(&mut env, &self.fc, cache),
            Algorithm::PeaceFb => peace_fb(&mut env, &self.fb, cache),
            Algorithm::Uniform => uniform_allocation(&mut env, &self.fc, cache),
            Algorithm::UniformFb => uniform_fixed_budget(&mut env, &self.fb),
            Algorithm::Clucb => clucb(&mut env, &self.fc),
            Algorithm::Rage => rage_baseline(&mut env, &self.fc, cache),
        }
    }
}

/// Independent trials of `spec` on `instance`, sharing one design cache.
pub fn run_spec_trials(spec: &AlgorithmSpec, instance: &Instance, n_trials: usize, base_seed: u64) -> Result<TrialSummary> {
    let cache = DesignCache::new();
    run_trials(n_trials, base_seed, |seed| spec.run(instance, seed, Some(&cache)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_bound_shrinks() {
        let b = DoublingBound;
        assert!(b.radius(1, 0.05) > b.radius(100, 0.05));
        assert!(b.radius(100, 0.01) > b.radius(100, 0.05));
        let r1 = b.radius(1, 0.05);
        assert!((r1 - (2.0 * (10.4f64 / 0.05).ln()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(Algorithm::from_name(a.name()).unwrap(), a);
        }
        assert!(Algorithm::from_name("nope").is_err());
    }

    #[test]
    fn cache_returns_first_value() {
        let c = DesignCache::new();
        let plan = |w| RoundPlan {
            design: Design::uniform(2),
            width: w,
            max_norm_sq: 0.0,
            value: 0.0,
        };
        let a = c.get_or_try(0, &[1, 2], || Ok(plan(1.0))).unwrap();
        let b = c.get_or_try(0, &[1, 2], || Ok(plan(2.0))).unwrap();
        assert_eq!(a.width, b.width);
        assert_eq!(c.len(), 1);
    }
}
