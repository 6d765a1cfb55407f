//! Quick numerical property checks, run by `peace selftest`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::design_opt::{compute_max, round_design, AllocProblem, ItemSource, RoundingPolicy};
use crate::env::rng;
use crate::error::Result;
use crate::instances::{gen_two_arm, two_network_dag};
use crate::item::Item;
use crate::linalg::{design_matrix, ArmSet, Design};
use crate::oracles::ItemOracle;
use crate::width::{estimate_width, rho_of, DirectionSet};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn normals(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn random_design(r: &mut ChaCha8Rng, n: usize) -> Result<Design> {
    let w: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
    Design::from_unnormalized(&w)
}

fn oracle_vs_enumeration(r: &mut ChaCha8Rng) -> Result<Check> {
    let (dag, _, _) = two_network_dag(2)?;
    let oracles = [
        ItemOracle::top_k(7, 3)?,
        ItemOracle::matching(3)?,
        ItemOracle::dag_path(dag),
    ];
    let mut worst = 0.0f64;
    for o in &oracles {
        let all = o.enumerate(10_000)?;
        for _ in 0..30 {
            let w = normals(r, o.dim());
            let brute = all.iter().map(|z| z.dot(&w)).fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max((o.maximize(&w)?.dot(&w) - brute).abs());
        }
    }
    Ok(Check {
        name: "oracle maximize equals enumeration",
        passed: worst < 1e-9,
        detail: format!("max |difference| {worst:.2e}"),
    })
}

fn compute_max_modes(r: &mut ChaCha8Rng) -> Result<Check> {
    let oracle = ItemOracle::matching(3)?;
    let items = oracle.enumerate(100)?;
    let arms = ArmSet::canonical(9);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let info = design_matrix(&random_design(r, 9)?, &arms, 0.0)?;
        let theta0 = normals(r, 9);
        let anchor = items[r.random_range(0..items.len())].clone();
        // keep every denominator positive
        let spread = items.iter().map(|z| (anchor.dot(&theta0) - z.dot(&theta0)).abs()).fold(0.0, f64::max);
        let shift = spread + r.random_range(0.1..1.0);
        let eta = normals(r, 9);
        let by_oracle = AllocProblem::new(anchor.clone(), theta0.clone(), shift, ItemSource::Oracle(&oracle), 0.1)?;
        let by_items = AllocProblem::new(anchor, theta0, shift, ItemSource::Items(&items), 0.1)?;
        let a = compute_max(&by_oracle, &info, &eta, 1e-9)?.value;
        let b = compute_max(&by_items, &info, &eta, 0.0)?.value;
        worst = worst.max((a - b).abs());
    }
    Ok(Check {
        name: "compute_max oracle mode equals enumeration",
        passed: worst <= 1e-6,
        detail: format!("max |difference| {worst:.2e}"),
    })
}

fn half_normal(r: &mut ChaCha8Rng) -> Result<Check> {
    let items = vec![Item::dense(vec![1.0, -0.5, 2.0]), Item::dense(vec![0.0, 0.5, 1.0])];
    let arms = ArmSet::canonical(3);
    let info = design_matrix(&random_design(r, 3)?, &arms, 0.0)?;
    let norm = info.norm_sq(&items[0].minus(&items[1])).sqrt();
    let w = estimate_width(&DirectionSet::pairs(&items)?, &info, 20_000, r)?;
    let expected = norm * (2.0 / std::f64::consts::PI).sqrt();
    let z = (w.mean - expected).abs() / w.stderr;
    Ok(Check {
        name: "two-item width is half-normal",
        passed: z <= 4.0,
        detail: format!("mean {:.4} vs {expected:.4} ({z:.2} stderr)", w.mean),
    })
}

fn width_dominates_max_norm(r: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let d = r.random_range(2..6);
        let n = r.random_range(2..8);
        let items: Vec<Item> = (0..n).map(|_| Item::dense(normals(r, d))).collect();
        let info = design_matrix(&random_design(r, d)?, &ArmSet::canonical(d), 0.0)?;
        let dirs = DirectionSet::pairs(&items)?;
        let w = estimate_width(&dirs, &info, 4000, r)?;
        let bound = (2.0 / std::f64::consts::PI) * dirs.max_norm_sq(&info)?;
        // slack of four standard errors on the squared mean
        let upper = (w.mean + 4.0 * w.stderr).powi(2);
        worst = worst.min(upper / bound);
    }
    Ok(Check {
        name: "width² ≥ (2/π)·max norm²",
        passed: worst >= 1.0,
        detail: format!("smallest ratio {worst:.3}"),
    })
}

fn rho_two_arm() -> Result<Check> {
    let gap = 0.5;
    let rho = rho_of(&Design::uniform(2), &gen_two_arm(gap)?)?;
    let expected = 4.0 / (gap * gap);
    Ok(Check {
        name: "two-arm ρ at the uniform design is 4/Δ²",
        passed: (rho - expected).abs() <= 1e-12 * expected,
        detail: format!("{rho} vs {expected}"),
    })
}

fn exact_rounding(r: &mut ChaCha8Rng) -> Result<Check> {
    let mut bad = 0;
    for _ in 0..50 {
        let arms = r.random_range(2..20);
        let design = random_design(r, arms)?;
        let n = r.random_range(20..5000);
        if round_design(&design, n, RoundingPolicy::ExactSum).total != n {
            bad += 1;
        }
    }
    Ok(Check {
        name: "exact-sum rounding spends the budget",
        passed: bad == 0,
        detail: format!("{bad} of 50 totals off"),
    })
}

/// Runs every check with noise derived from `seed`.
pub fn run(seed: u64) -> Result<Vec<Check>> {
    let mut r = rng::stream(seed, &[0x5e1f]);
    Ok(vec![
        oracle_vs_enumeration(&mut r)?,
        compute_max_modes(&mut r)?,
        half_normal(&mut r)?,
        width_dominates_max_norm(&mut r)?,
        rho_two_arm()?,
        exact_rounding(&mut r)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run(1).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
