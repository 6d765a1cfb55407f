//! Round-based elimination over an explicit item list: fixed-confidence Peace
//! and the union-bound baseline.

use std::sync::Arc;

use rand::Rng;

use super::{cached, ids_key, plan_rng, DesignCache, FcConfig, RoundPlan, RoundRecord, RunResult, Transcript};
use crate::design_opt::{
    general_x_optimize, minimize_max_norm, round_design, smd_optimize_with, AllocProblem, DesignObjective,
    ItemSource, RoundingPolicy, TauRecipe,
};
use crate::env::{least_squares_with_fallback, reduce, Environment, Instance, Reduced};
use crate::error::Result;
use crate::item::Item;
use crate::linalg::{design_matrix, ArmSet};
use crate::width::{DirectionSet, EtaBatch};

/// Largest item set that is enumerated from an oracle.
pub(crate) const ENUM_LIMIT: usize = 1_000_000;

const TAG_FC: u8 = 1;
const TAG_RAGE: u8 = 2;

/// Items in original and arm-span coordinates.
pub(crate) struct ExplicitView {
    pub items: Vec<Item>,
    pub red: Reduced,
}

pub(crate) fn explicit_view(instance: &Instance) -> Result<ExplicitView> {
    let items = instance.items_up_to(ENUM_LIMIT)?;
    let red = reduce(instance.arms(), &items)?;
    Ok(ExplicitView { items, red })
}

fn subset(items: &[Item], ids: &[usize]) -> Vec<Item> {
    ids.iter().map(|&i| items[i].clone()).collect()
}

/// Design for τ(·; Z_k): the half/half mixture of a width-only and a
/// norm-only design.
fn fc_plan<R: Rng + ?Sized>(arms: &ArmSet, sub: &[Item], cfg: &FcConfig, rng: &mut R) -> Result<RoundPlan> {
    let d = arms.dim();
    let dirs = DirectionSet::pairs(sub)?;
    let design = if arms.is_canonical_basis() {
        let problem = AllocProblem::new(sub[0].clone(), vec![0.0; d], 1.0, ItemSource::Items(sub), cfg.delta)?;
        let width_design = smd_optimize_with(&problem, arms, &cfg.alloc, None, rng)?;
        let norm_design = minimize_max_norm(&dirs, arms, &cfg.general, None)?;
        width_design.mix(&norm_design, 0.5)?
    } else {
        let objective = DesignObjective::Tau {
            dirs: &dirs,
            delta_k: cfg.delta / 2.0,
            recipe: TauRecipe::Mixture,
        };
        general_x_optimize(&objective, arms, &cfg.general, rng)?
    };
    let info = design_matrix(&design, arms, 0.0)?;
    let batch = EtaBatch::draw(d, cfg.n_mc, rng);
    let width = dirs.width_with(&info, &batch)?.mean;
    let max_norm_sq = dirs.max_norm_sq(&info)?;
    Ok(RoundPlan {
        design,
        width,
        max_norm_sq,
        value: width * width,
    })
}

fn rage_plan(arms: &ArmSet, sub: &[Item], cfg: &FcConfig) -> Result<RoundPlan> {
    let dirs = DirectionSet::pairs(sub)?;
    let design = minimize_max_norm(&dirs, arms, &cfg.general, None)?;
    let max_norm_sq = dirs.max_norm_sq(&design_matrix(&design, arms, 0.0)?)?;
    Ok(RoundPlan {
        design,
        width: 0.0,
        max_norm_sq,
        value: max_norm_sq,
    })
}

fn tau(plan: &RoundPlan, delta_k: f64) -> f64 {
    plan.width * plan.width + 2.0 * (1.0 / delta_k).ln() * plan.max_norm_sq
}

fn to_count(x: f64) -> u64 {
    if x.is_finite() && x < u64::MAX as f64 {
        x.ceil() as u64
    } else {
        u64::MAX
    }
}

/// Shared loop: each round asks `round` for (plan, N_k, objective, threshold)
/// and drops every item trailing the empirical best by at least the threshold.
fn eliminate(
    env: &mut Environment<'_>,
    cfg: &FcConfig,
    view: &ExplicitView,
    mut round: impl FnMut(usize, &[usize]) -> Result<(Arc<RoundPlan>, u64, f64, f64)>,
) -> Result<RunResult> {
    let mut tr = Transcript::new(cfg.timing, cfg.max_rounds, cfg.max_samples);
    let mut active: Vec<usize> = (0..view.items.len()).collect();
    let mut best = view.items[0].clone();
    let arms = &view.red.arms;
    let mut k = 1;
    while active.len() > 1 {
        let (plan, n_k, objective, threshold) = round(k, &active)?;
        let alloc = round_design(&plan.design, n_k, RoundingPolicy::Ceiling);
        tr.check(env, alloc.total, &best)?;
        let data = env.pull_counts(&alloc.counts)?;
        let theta = least_squares_with_fallback(&data, arms)?.theta;
        let vals: Vec<f64> = active.iter().map(|&i| view.red.items[i].dot(&theta)).collect();
        let (top, vmax) = vals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (j, &v)| if v > b.1 { (j, v) } else { b });
        tr.rounds.push(RoundRecord {
            k,
            n_k: data.total(),
            objective,
            active: active.len(),
        });
        best = view.items[active[top]].clone();
        active = active
            .iter()
            .zip(&vals)
            .filter(|(_, &v)| vmax - v < threshold)
            .map(|(&i, _)| i)
            .collect();
        k += 1;
    }
    Ok(tr.finish(env, view.items[active[0]].clone()))
}

/// Fixed-confidence Peace on an explicit item set.
pub fn peace_fc(env: &mut Environment<'_>, cfg: &FcConfig, cache: Option<&DesignCache>) -> Result<RunResult> {
    cfg.validate()?;
    let view = explicit_view(env.instance())?;
    let arms = view.red.arms.clone();
    let q = cfg.q_for(arms.dim());
    let plan_for = |ids: &[usize]| {
        let key = ids_key(ids);
        cached(cache, TAG_FC, &key, || {
            let mut rng = plan_rng(cfg.seed, TAG_FC, &key);
            fc_plan(&arms, &subset(&view.red.items, ids), cfg, &mut rng)
        })
    };
    let b = if view.items.len() > 1 {
        let all: Vec<usize> = (0..view.items.len()).collect();
        tau(&*plan_for(&all)?, cfg.delta / 2.0).max(1.0)
    } else {
        1.0
    };
    eliminate(env, cfg, &view, |k, ids| {
        let plan = plan_for(ids)?;
        let delta_k = cfg.delta / (2.0 * (k * k) as f64);
        let tau_k = tau(&plan, delta_k);
        let scale = 2f64.powi(k as i32 + 1) / b;
        let n_k = to_count(2.0 * (1.0 + cfg.epsilon) * tau_k * scale * scale).max(q);
        Ok((plan, n_k, tau_k, b / 2f64.powi(k as i32 + 1)))
    })
}

/// Elimination with a union bound over the active pairs: worst-norm design,
/// N_k ∝ max-norm²·4^{k+1}·log(4k²|Z_k|²/δ), threshold 2^{-(k+1)}.
pub fn rage_baseline(env: &mut Environment<'_>, cfg: &FcConfig, cache: Option<&DesignCache>) -> Result<RunResult> {
    cfg.validate()?;
    let view = explicit_view(env.instance())?;
    let arms = view.red.arms.clone();
    let q = cfg.q_for(arms.dim());
    eliminate(env, cfg, &view, |k, ids| {
        let key = ids_key(ids);
        let plan = cached(cache, TAG_RAGE, &key, || rage_plan(&arms, &subset(&view.red.items, ids), cfg))?;
        let n = ids.len() as f64;
        let log_term = (4.0 * (k * k) as f64 * n * n / cfg.delta).ln();
        let scale = 2f64.powi(k as i32 + 1);
        let n_k = to_count(2.0 * (1.0 + cfg.epsilon) * plan.max_norm_sq * scale * scale * log_term).max(q);
        let m = plan.max_norm_sq;
        Ok((plan, n_k, m, 1.0 / scale))
    })
}
