//! Fixed-confidence Peace driven only by a linear maximization oracle.

use std::f64::consts::PI;

use super::baselines::oracle_of;
use super::{cached, plan_rng, vec_key, DesignCache, FcConfig, GapBound, RoundPlan, RoundRecord, RunResult, Transcript};
use crate::design_opt::{compute_alloc, round_design, AllocProblem, ItemSource, RoundingPolicy};
use crate::env::{least_squares_with_fallback, Environment};
use crate::error::{Error, Result};
use crate::item::Item;
use crate::oracles::{unique_with_best, ItemOracle};

const TAG_GAMMA: u8 = 3;
const TAG_ROUND: u8 = 4;

/// Γ = 4·ComputeAlloc(0, 0, 1, δ/4) ∨ 1: the pair width of Z bounds four
/// times the squared width of {zᵀu}.
pub fn oracle_gamma(oracle: &ItemOracle, cfg: &FcConfig, cache: Option<&DesignCache>) -> Result<f64> {
    let d = oracle.dim();
    let arms = crate::linalg::ArmSet::canonical(d);
    let plan = cached(cache, TAG_GAMMA, &[], || {
        let problem = AllocProblem::new(Item::zeros(d), vec![0.0; d], 1.0, ItemSource::Oracle(oracle), cfg.delta / 4.0)?;
        let mut rng = plan_rng(cfg.seed, TAG_GAMMA, &[]);
        let (design, value) = compute_alloc(&problem, &arms, &cfg.alloc, &mut rng)?;
        Ok(RoundPlan {
            design,
            width: 0.0,
            max_norm_sq: 0.0,
            value,
        })
    })?;
    Ok((4.0 * plan.value).max(1.0))
}

/// Oracle-based fixed-confidence Peace on canonical arms.
///
/// Round k uses the shift 2^{-k}Γ around the empirical best z̃_k and stops
/// as soon as z̃_k beats every single-element-banned alternative by the
/// shift.
pub fn peace_oracle(env: &mut Environment<'_>, cfg: &FcConfig, cache: Option<&DesignCache>) -> Result<RunResult> {
    cfg.validate()?;
    let arms = env.instance().arms().clone();
    if !arms.is_canonical_basis() {
        return Err(Error::Unsupported("the oracle algorithm needs canonical arms".into()));
    }
    let oracle = oracle_of(env)?;
    let d = arms.dim();
    let q = cfg.q_for(d);
    let gamma = match cfg.gap_bound {
        GapBound::Estimated => oracle_gamma(&oracle, cfg, cache)?,
        GapBound::Known(g) if g > 0.0 => g,
        GapBound::Known(g) => return Err(Error::InvalidArgument(format!("gap bound {g} must be positive"))),
    };
    let mut tr = Transcript::new(cfg.timing, cfg.max_rounds, cfg.max_samples);
    let mut theta = vec![0.0; d];
    for k in 0.. {
        let shift = gamma / 2f64.powi(k as i32);
        let (done, best) = unique_with_best(&oracle, &theta, shift)?;
        if done {
            return Ok(tr.finish(env, best));
        }
        let delta_k = cfg.delta / (2.0 * ((k + 1) as f64).powi(3));
        let alloc_delta = 6.0 * cfg.delta / (4.0 * PI * PI * ((k + 1) * (k + 1)) as f64);
        let key = vec_key(k, &theta);
        let plan = cached(if k == 0 { cache } else { None }, TAG_ROUND, &key, || {
            let problem = AllocProblem::new(best.clone(), theta.clone(), shift, ItemSource::Oracle(&oracle), alloc_delta)?;
            let mut rng = plan_rng(cfg.seed, TAG_ROUND, &key);
            let (design, value) = compute_alloc(&problem, &arms, &cfg.alloc, &mut rng)?;
            Ok(RoundPlan {
                design,
                width: 0.0,
                max_norm_sq: 0.0,
                value,
            })
        })?;
        let tau_k = plan.value;
        let raw = (tau_k * (1.0 / delta_k).ln() * (1.0 + cfg.epsilon)).ceil() * cfg.alpha;
        let n_k = if raw.is_finite() && raw < u64::MAX as f64 { raw.ceil() as u64 } else { u64::MAX }.max(q);
        let alloc = round_design(&plan.design, n_k, RoundingPolicy::Ceiling);
        tr.check(env, alloc.total, &best)?;
        let data = env.pull_counts(&alloc.counts)?;
        theta = least_squares_with_fallback(&data, &arms)?.theta;
        tr.rounds.push(RoundRecord {
            k,
            n_k: data.total(),
            objective: tau_k,
            active: best.support().map_or(d, <[usize]>::len),
        });
    }
    unreachable!("the round loop only exits by returning")
}
