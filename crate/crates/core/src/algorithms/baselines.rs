//! Uniform allocation (fixed confidence and fixed budget) and CLUCB.

use std::f64::consts::PI;

use super::elimination::explicit_view;
use super::{cached, plan_rng, ConfidenceBound, DesignCache, DoublingBound, FbConfig, FcConfig, RoundPlan, RoundRecord, RunResult, Transcript};
use crate::design_opt::{round_design, RoundingPolicy};
use crate::env::{least_squares_with_fallback, Environment, RoundData};
use crate::error::{Error, Result};
use crate::item::argmax_dot;
use crate::linalg::{design_matrix, Design};
use crate::oracles::ItemOracle;
use crate::width::{DirectionSet, EtaBatch};

const TAG_UNIFORM: u8 = 7;

/// Uniform sampling with doubling rounds, stopped by the TIS bound:
/// the empirical best leads every other item by more than
/// (width + √(2·max-norm²·log(k²π²/(3δ))))/√N at the pooled design.
pub fn uniform_allocation(env: &mut Environment<'_>, cfg: &FcConfig, cache: Option<&DesignCache>) -> Result<RunResult> {
    cfg.validate()?;
    let view = explicit_view(env.instance())?;
    let mut tr = Transcript::new(cfg.timing, cfg.max_rounds, cfg.max_samples);
    if view.items.len() == 1 {
        return Ok(tr.finish(env, view.items[0].clone()));
    }
    let arms = &view.red.arms;
    let n_arms = arms.len();
    let plan = cached(cache, TAG_UNIFORM, &[], || {
        let design = Design::uniform(n_arms);
        let info = design_matrix(&design, arms, 0.0)?;
        let dirs = DirectionSet::pairs(&view.red.items)?;
        let mut rng = plan_rng(cfg.seed, TAG_UNIFORM, &[]);
        let width = dirs.width_with(&info, &EtaBatch::draw(arms.dim(), cfg.n_mc, &mut rng))?.mean;
        Ok(RoundPlan {
            design,
            width,
            max_norm_sq: dirs.max_norm_sq(&info)?,
            value: width,
        })
    })?;
    let mut pooled = RoundData::new(n_arms);
    let mut best = view.items[0].clone();
    let mut per_arm = 0u64;
    for k in 1.. {
        let target = 1u64 << (k - 1).min(62);
        let step = target - per_arm;
        tr.check(env, step * n_arms as u64, &best)?;
        let data = env.pull_counts(&vec![step; n_arms])?;
        for x in 0..n_arms {
            pooled.counts[x] += data.counts[x];
            pooled.sums[x] += data.sums[x];
        }
        per_arm = target;
        let theta = least_squares_with_fallback(&pooled, arms)?.theta;
        let n_total = (per_arm * n_arms as u64) as f64;
        let log_term = ((k * k) as f64 * PI * PI / (3.0 * cfg.delta)).ln();
        let threshold = (plan.width + (2.0 * plan.max_norm_sq * log_term).sqrt()) / n_total.sqrt();
        let (mut first, mut second) = ((0, f64::NEG_INFINITY), f64::NEG_INFINITY);
        for (i, z) in view.red.items.iter().enumerate() {
            let v = z.dot(&theta);
            if v > first.1 {
                second = first.1;
                first = (i, v);
            } else if v > second {
                second = v;
            }
        }
        best = view.items[first.0].clone();
        tr.rounds.push(RoundRecord {
            k,
            n_k: data.total(),
            objective: threshold,
            active: view.items.len(),
        });
        if first.1 - second > threshold {
            return Ok(tr.finish(env, best));
        }
    }
    unreachable!("the round loop only exits by returning")
}

/// Spends the whole budget uniformly and returns the empirical best.
pub fn uniform_fixed_budget(env: &mut Environment<'_>, cfg: &FbConfig) -> Result<RunResult> {
    let view = explicit_view(env.instance())?;
    let mut tr = Transcript::new(cfg.timing, usize::MAX, u64::MAX);
    if view.items.len() == 1 {
        return Ok(tr.finish(env, view.items[0].clone()));
    }
    let arms = &view.red.arms;
    let alloc = round_design(&Design::uniform(arms.len()), cfg.budget.max(1), RoundingPolicy::ExactSum);
    let data = env.pull_counts(&alloc.counts)?;
    let theta = least_squares_with_fallback(&data, arms)?.theta;
    let (best, _) = argmax_dot(&view.red.items, &theta).expect("nonempty");
    tr.rounds.push(RoundRecord {
        k: 1,
        n_k: data.total(),
        objective: 0.0,
        active: view.items.len(),
    });
    Ok(tr.finish(env, view.items[best].clone()))
}

pub(crate) fn oracle_of(env: &Environment<'_>) -> Result<ItemOracle> {
    let inst = env.instance();
    match inst.oracle() {
        Some(o) => Ok(o.clone()),
        None => ItemOracle::explicit(inst.explicit_items().expect("explicit items").to_vec()),
    }
}

/// CLUCB with the default doubling-epoch radius.
pub fn clucb(env: &mut Environment<'_>, cfg: &FcConfig) -> Result<RunResult> {
    clucb_with(env, cfg, &DoublingBound)
}

/// CLUCB on canonical arms: perturb the empirical means against the
/// empirical best set, stop when that set stays optimal, otherwise pull the
/// least-sampled coordinate of the symmetric difference.
pub fn clucb_with(env: &mut Environment<'_>, cfg: &FcConfig, bound: &dyn ConfidenceBound) -> Result<RunResult> {
    cfg.validate()?;
    let d = env.instance().dim();
    if !env.instance().arms().is_canonical_basis() {
        return Err(Error::Unsupported("CLUCB needs canonical arms".into()));
    }
    let oracle = oracle_of(env)?;
    let mut tr = Transcript::new(cfg.timing, usize::MAX, cfg.max_samples);
    let per_coord = cfg.delta / d as f64;
    let first = env.pull_counts(&vec![1; d])?;
    let mut counts = first.counts;
    let mut sums = first.sums;
    let mut mark = 0u64;
    let mut next_mark = 2 * d as u64;
    let mut mu = vec![0.0; d];
    let mut tilted = vec![0.0; d];
    let mut radius = vec![0.0; d];
    loop {
        for i in 0..d {
            mu[i] = sums[i] / counts[i] as f64;
            radius[i] = bound.radius(counts[i], per_coord);
        }
        let m = oracle.maximize(&mu)?;
        let support = m.support().ok_or_else(|| Error::Unsupported("CLUCB needs 0/1 items".into()))?;
        for i in 0..d {
            tilted[i] = mu[i] + radius[i];
        }
        for &i in support {
            tilted[i] = mu[i] - radius[i];
        }
        let alt = oracle.maximize(&tilted)?;
        let total = env.total_samples();
        if alt.dot(&tilted) <= m.dot(&tilted) {
            push_epoch(&mut tr, total, &mut mark, &radius, 0);
            return Ok(tr.finish(env, m));
        }
        let diff: Vec<usize> = (0..d).filter(|&i| m.values()[i] != alt.values()[i]).collect();
        let p = *diff
            .iter()
            .max_by(|&&a, &&b| radius[a].total_cmp(&radius[b]).then(b.cmp(&a)))
            .expect("distinct sets differ somewhere");
        if total >= next_mark {
            push_epoch(&mut tr, total, &mut mark, &radius, diff.len());
            next_mark = 2 * total;
        }
        tr.check(env, 1, &m)?;
        let y = env.pull(p)?;
        counts[p] += 1;
        sums[p] += y;
    }
}

fn push_epoch(tr: &mut Transcript, total: u64, mark: &mut u64, radius: &[f64], active: usize) {
    if total == *mark {
        return;
    }
    tr.rounds.push(RoundRecord {
        k: tr.rounds.len() + 1,
        n_k: total - *mark,
        objective: radius.iter().cloned().fold(0.0, f64::max),
        active,
    });
    *mark = total;
}
