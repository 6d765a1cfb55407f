//! Fixed-budget Peace: R epochs that each halve the width of the active set.

use rand::Rng;

use super::elimination::explicit_view;
use super::{cached, ids_key, plan_rng, vec_key, DesignCache, FbConfig, RoundPlan, RoundRecord, RunResult, Transcript};
use crate::design_opt::{minimize_width, round_design, smd_optimize_with, AllocProblem, ItemSource, RoundingPolicy};
use crate::env::{least_squares_with_fallback, Environment};
use crate::error::{Error, Result};
use crate::item::Item;
use crate::linalg::{design_matrix, ArmSet, DesignInfo};
use crate::width::{DirectionSet, EtaBatch};

const TAG_FB: u8 = 5;
const TAG_PREFIX: u8 = 6;

/// Largest j < |Z_k| whose prefix has squared width at most `full`/2; at least 1.
fn halving_prefix(widths: &[f64], full: f64) -> usize {
    (1..widths.len())
        .rev()
        .find(|&j| widths[j - 1].powi(2) <= full / 2.0)
        .unwrap_or(1)
}

/// R = max(1, ⌈log₂(γ ∨ 2)⌉).
pub fn epoch_count(gamma: f64) -> usize {
    (gamma.max(2.0).log2().ceil() as usize).max(1)
}

/// Design minimizing the width of {sub[0] - z}, with the pair width of
/// `sub` at that design.
fn width_plan<R: Rng + ?Sized>(arms: &ArmSet, sub: &[Item], cfg: &FbConfig, rng: &mut R) -> Result<RoundPlan> {
    let d = arms.dim();
    let dirs = DirectionSet::pairs(sub)?;
    let design = if arms.is_canonical_basis() {
        let problem = AllocProblem::new(sub[0].clone(), vec![0.0; d], 1.0, ItemSource::Items(sub), 0.5)?;
        smd_optimize_with(&problem, arms, &cfg.alloc, None, rng)?
    } else {
        minimize_width(&DirectionSet::anchored(&sub[0], sub)?, arms, &cfg.general, 0.0, None, rng)?
    };
    let info = design_matrix(&design, arms, 0.0)?;
    let width = dirs.width_with(&info, &EtaBatch::draw(d, cfg.n_mc, rng))?.mean;
    Ok(RoundPlan {
        design,
        width,
        max_norm_sq: 0.0,
        value: width * width,
    })
}

/// Mean pair width of every prefix of `ordered` over a shared batch,
/// via running max/min of ⟨z, A^{-1/2}η⟩ along the order.
pub(crate) fn prefix_widths(ordered: &[&Item], info: &DesignInfo, batch: &EtaBatch) -> Vec<f64> {
    let n = ordered.len();
    let mut acc = vec![0.0; n];
    let mut u = vec![0.0; info.dim()];
    for eta in batch.iter() {
        info.apply_inv_sqrt_into(eta, &mut u);
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for (a, z) in acc.iter_mut().zip(ordered) {
            let v = z.dot(&u);
            hi = hi.max(v);
            lo = lo.min(v);
            *a += hi - lo;
        }
    }
    let m = batch.len().max(1) as f64;
    acc.iter().map(|a| a / m).collect()
}

/// Fixed-budget Peace on an explicit item set.
pub fn peace_fb(env: &mut Environment<'_>, cfg: &FbConfig, cache: Option<&DesignCache>) -> Result<RunResult> {
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) || cfg.n_mc < 2 {
        return Err(Error::InvalidArgument("epsilon must lie in (0,1) and n_mc be at least 2".into()));
    }
    let view = explicit_view(env.instance())?;
    let mut tr = Transcript::new(cfg.timing, usize::MAX, u64::MAX);
    if view.items.len() == 1 {
        return Ok(tr.finish(env, view.items[0].clone()));
    }
    let arms = view.red.arms.clone();
    let d = arms.dim();
    let plan_for = |ids: &[usize]| {
        let key = ids_key(ids);
        cached(cache, TAG_FB, &key, || {
            let sub: Vec<Item> = ids.iter().map(|&i| view.red.items[i].clone()).collect();
            width_plan(&arms, &sub, cfg, &mut plan_rng(cfg.seed, TAG_FB, &key))
        })
    };
    let mut active: Vec<usize> = (0..view.items.len()).collect();
    let r = epoch_count(plan_for(&active)?.value);
    let q = cfg.q.unwrap_or(d as u64).max(1);
    let required = r as u64 * q;
    if cfg.budget < required {
        return Err(Error::BudgetTooSmall {
            budget: cfg.budget,
            required,
        });
    }
    let n = cfg.budget / r as u64;
    for k in 1..=r {
        if active.len() == 1 {
            break;
        }
        let plan = plan_for(&active)?;
        let alloc = round_design(&plan.design, n, RoundingPolicy::ExactSum);
        let data = env.pull_counts(&alloc.counts)?;
        let theta = least_squares_with_fallback(&data, &arms)?.theta;
        let vals: Vec<f64> = view.red.items.iter().map(|z| z.dot(&theta)).collect();
        active.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
        let ordered: Vec<&Item> = active.iter().map(|&i| &view.red.items[i]).collect();
        let info = design_matrix(&plan.design, &arms, 0.0)?;
        let batch = EtaBatch::draw(d, cfg.n_mc, &mut plan_rng(cfg.seed, TAG_PREFIX, &vec_key(k, &theta)));
        let widths = prefix_widths(&ordered, &info, &batch);
        let full = widths[widths.len() - 1].powi(2);
        let keep = halving_prefix(&widths, full);
        tr.rounds.push(RoundRecord {
            k,
            n_k: data.total(),
            objective: full,
            active: active.len(),
        });
        active.truncate(keep);
    }
    Ok(tr.finish(env, view.items[active[0]].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Instance;
    use crate::linalg::{ArmSet, Design};

    fn quick(budget: u64) -> FbConfig {
        let mut cfg = FbConfig::with_budget(budget);
        cfg.alloc.iters = 100;
        cfg.n_mc = 500;
        cfg
    }

    #[test]
    fn epochs() {
        assert_eq!(epoch_count(0.3), 1);
        assert_eq!(epoch_count(2.0), 1);
        assert_eq!(epoch_count(2.1), 2);
        assert_eq!(epoch_count(16.0), 4);
    }

    #[test]
    fn prefix_widths_match_direct_pair_widths() {
        let items: Vec<Item> = (0..4).map(|i| Item::from_support(4, [i])).collect();
        let info = design_matrix(&Design::uniform(4), &ArmSet::canonical(4), 0.0).unwrap();
        let batch = EtaBatch::draw(4, 300, &mut plan_rng(0, 0, &[]));
        let refs: Vec<&Item> = items.iter().collect();
        let w = prefix_widths(&refs, &info, &batch);
        assert_eq!(w[0], 0.0);
        for j in 1..=4 {
            let direct = DirectionSet::pairs(&items[..j]).unwrap().width_with(&info, &batch).unwrap().mean;
            assert!((w[j - 1] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_run_returns_best_with_exact_epochs() {
        let d = 6;
        let items: Vec<Item> = (0..d).map(|i| Item::from_support(d, [i])).collect();
        let theta: Vec<f64> = (0..d).map(|i| 1.0 - 0.1 * i as f64).collect();
        let inst = Instance::explicit(ArmSet::canonical(d), items, theta).unwrap().with_noise_sd(0.0).unwrap();
        let r = peace_fb(&mut Environment::new(&inst, 0), &quick(600), None).unwrap();
        assert!(r.succeeded);
        let epochs = r.rounds.len() as u64;
        assert!(r.rounds.iter().all(|x| x.n_k == r.rounds[0].n_k));
        assert!(r.rounds[0].n_k * epochs <= 600);
        assert!(r.rounds.windows(2).all(|w| w[1].active < w[0].active));
    }

    #[test]
    fn tiny_budget_is_rejected() {
        let inst = Instance::explicit(
            ArmSet::canonical(3),
            (0..3).map(|i| Item::from_support(3, [i])).collect(),
            vec![1.0, 0.5, 0.0],
        )
        .unwrap();
        let e = peace_fb(&mut Environment::new(&inst, 0), &quick(2), None).unwrap_err();
        assert!(matches!(e, Error::BudgetTooSmall { .. }));
    }
}
