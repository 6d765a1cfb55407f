//! Design optimizers: the oracle-based allocation routine for combinatorial
//! arm sets, a general-X optimizer, and rounding to integer pull counts.

mod general;
mod rounding;
mod smd;

pub use general::{
    complexity_design, general_x_optimize, minimize_max_norm, minimize_width, Complexity, DesignObjective, GeneralOptions,
    TauRecipe,
};
pub use rounding::{round_design, RoundedAllocation, RoundingPolicy};
pub use smd::{compute_alloc, eval_alloc, smd_optimize, smd_optimize_with, AllocOptions};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::item::{argmax_dot, Item};
use crate::linalg::{design_matrix, ArmSet, Design, DesignInfo};
use crate::oracles::ItemOracle;

/// Bisection steps allowed in `compute_max` before giving up.
const MAX_BISECTION_STEPS: usize = 200;
/// Cap on the doubling search for an upper bracket.
const MAX_BRACKET: f64 = 18_446_744_073_709_551_616.0; // 2^64

/// Where the candidate items come from.
#[derive(Clone, Copy, Debug)]
pub enum ItemSource<'a> {
    Oracle(&'a ItemOracle),
    Items(&'a [Item]),
}

/// g(λ; η) = max_z (z₀ - z)ᵀA(λ)^{-1/2}η / (b + θ₀ᵀ(z₀ - z)).
#[derive(Clone, Debug)]
pub struct AllocProblem<'a> {
    pub anchor: Item,
    pub theta0: Vec<f64>,
    pub shift: f64,
    pub source: ItemSource<'a>,
    pub delta: f64,
}

impl<'a> AllocProblem<'a> {
    pub fn new(anchor: Item, theta0: Vec<f64>, shift: f64, source: ItemSource<'a>, delta: f64) -> Result<Self> {
        let d = anchor.dim();
        check_dim(d, theta0.len())?;
        match source {
            ItemSource::Oracle(o) => check_dim(d, o.dim())?,
            ItemSource::Items(items) => {
                if items.is_empty() {
                    return Err(Error::InvalidArgument("allocation problem without items".into()));
                }
                for z in items {
                    check_dim(d, z.dim())?;
                }
            }
        }
        if !(shift > 0.0) || !shift.is_finite() {
            return Err(Error::InvalidArgument(format!("shift b = {shift} must be positive")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta = {delta} outside (0,1)")));
        }
        Ok(Self {
            anchor,
            theta0,
            shift,
            source,
            delta,
        })
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    /// True when Z is a single item equal to the anchor, so g ≡ 0.
    pub fn is_trivial(&self) -> bool {
        matches!(self.source, ItemSource::Items(items) if items.len() == 1 && items[0] == self.anchor)
    }

    fn denominator(&self, z: &Item) -> f64 {
        self.shift + self.anchor.dot(&self.theta0) - z.dot(&self.theta0)
    }
}

/// Result of `compute_max`: the value and an item attaining at least it.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxResult {
    pub value: f64,
    pub item: Item,
}

/// Evaluates g(λ; η) to within `tol`.
pub fn compute_max(problem: &AllocProblem<'_>, info: &DesignInfo, eta: &[f64], tol: f64) -> Result<MaxResult> {
    compute_max_impl(problem, info, eta, tol, None)
}

/// `compute_max` that records the (low, high) bracket after every step.
pub fn compute_max_traced(
    problem: &AllocProblem<'_>,
    info: &DesignInfo,
    eta: &[f64],
    tol: f64,
    trace: &mut Vec<(f64, f64)>,
) -> Result<MaxResult> {
    compute_max_impl(problem, info, eta, tol, Some(trace))
}

fn compute_max_impl(
    problem: &AllocProblem<'_>,
    info: &DesignInfo,
    eta: &[f64],
    tol: f64,
    trace: Option<&mut Vec<(f64, f64)>>,
) -> Result<MaxResult> {
    check_dim(problem.dim(), eta.len())?;
    check_dim(info.dim(), eta.len())?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} < 0")));
    }
    let u = info.apply_inv_sqrt(eta);
    match problem.source {
        ItemSource::Items(items) => explicit_max(problem, items, &u),
        ItemSource::Oracle(oracle) => {
            if tol == 0.0 {
                return Err(Error::InvalidArgument("oracle mode needs a positive tolerance".into()));
            }
            oracle_max(problem, oracle, &u, tol, trace)
        }
    }
}

fn explicit_max(problem: &AllocProblem<'_>, items: &[Item], u: &[f64]) -> Result<MaxResult> {
    let a0 = problem.anchor.dot(u);
    let mut best: Option<(f64, usize)> = None;
    for (i, z) in items.iter().enumerate() {
        let den = problem.denominator(z);
        if !(den > 0.0) {
            return Err(Error::InvalidArgument(format!("non-positive denominator {den} for item {i}")));
        }
        let v = (a0 - z.dot(u)) / den;
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, i));
        }
    }
    let (value, i) = best.expect("nonempty item list");
    Ok(MaxResult {
        value,
        item: items[i].clone(),
    })
}

/// Doubling, then bisection on the root of the decreasing convex function
/// h(r) = max_z zᵀ(rθ₀ - u) + z₀ᵀu - r(b + θ₀ᵀz₀), whose root is g.
///
/// Whenever h(r) ≥ 0 the maximizing item's own ratio is a lower bound that
/// is at least r, so `low` jumps to it.
fn oracle_max(
    problem: &AllocProblem<'_>,
    oracle: &ItemOracle,
    u: &[f64],
    tol: f64,
    mut trace: Option<&mut Vec<(f64, f64)>>,
) -> Result<MaxResult> {
    let theta0 = &problem.theta0;
    let a0 = problem.anchor.dot(u);
    let t0 = problem.anchor.dot(theta0);
    let b = problem.shift;
    let u_l1: f64 = u.iter().map(|v| v.abs()).sum();
    let mut w = vec![0.0; u.len()];
    let mut h = |r: f64| -> Result<(f64, Item)> {
        for ((wi, ui), ti) in w.iter_mut().zip(u).zip(theta0) {
            *wi = r * ti - ui;
        }
        let z = oracle.maximize(&w)?;
        Ok((z.dot(&w) + a0 - r * (b + t0), z))
    };
    let ratio = |z: &Item| -> Result<f64> {
        let den = b + t0 - z.dot(theta0);
        if !(den > 0.0) {
            return Err(Error::InvalidArgument(format!("non-positive denominator {den}")));
        }
        Ok((a0 - z.dot(u)) / den)
    };
    let guard = |steps: usize| Error::NonTermination {
        routine: "compute_max",
        steps,
    };

    let (h0, z0) = h(0.0)?;
    let (mut low, mut best, mut high);
    if h0 >= 0.0 {
        low = ratio(&z0)?;
        best = z0;
        high = (2.0 * low).max(1.0);
        let mut steps = 0;
        loop {
            let (hh, zh) = h(high)?;
            if hh < 0.0 {
                break;
            }
            let r = ratio(&zh)?;
            if r > low {
                low = r;
                best = zh;
            }
            high = (2.0 * high).max(2.0 * low);
            steps += 1;
            if high > MAX_BRACKET {
                return Err(guard(steps));
            }
        }
    } else {
        // g < 0: only possible when the anchor is not itself an item
        high = 0.0;
        let mut probe = -1.0;
        let mut steps = 0;
        let (mut hp, mut zp) = h(probe)?;
        while hp < 0.0 {
            high = probe;
            probe *= 2.0;
            steps += 1;
            if probe < -MAX_BRACKET {
                return Err(guard(steps));
            }
            (hp, zp) = h(probe)?;
        }
        low = ratio(&zp)?.max(probe);
        best = zp;
    }

    for step in 0..MAX_BISECTION_STEPS {
        let (hl, zl) = h(low)?;
        let r = ratio(&zl)?;
        if r > low {
            low = r.min(high);
            best = zl;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push((low, high));
        }
        let scale = 1.0 + a0.abs() + low.abs() * (b + t0.abs()) + u_l1;
        if hl.abs() <= 1e-12 * scale || high - low <= tol {
            return Ok(MaxResult { value: low, item: best });
        }
        let mid = 0.5 * (low + high);
        let (hm, zm) = h(mid)?;
        if hm < 0.0 {
            high = mid;
        } else {
            low = ratio(&zm)?.clamp(mid, high);
            best = zm;
        }
        if step + 1 == MAX_BISECTION_STEPS {
            return Err(guard(step + 1));
        }
    }
    Err(guard(MAX_BISECTION_STEPS))
}

/// Subgradient of λ ↦ g(λ; η) at a diagonal design for an already computed
/// maximizer.
pub(crate) fn gradient_from(problem: &AllocProblem<'_>, diag: &[f64], eta: &[f64], item: &Item) -> Vec<f64> {
    let v = problem.anchor.minus(item);
    let den = problem.denominator(item);
    v.iter()
        .zip(diag)
        .zip(eta)
        .map(|((vi, li), ei)| {
            if *vi == 0.0 {
                0.0
            } else {
                -0.5 * vi * li.powf(-1.5) * ei / den
            }
        })
        .collect()
}

/// Draws η and returns an unbiased subgradient of λ ↦ E g(λ; η).
pub fn estimate_gradient<R: Rng + ?Sized>(
    problem: &AllocProblem<'_>,
    arms: &ArmSet,
    design: &Design,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !arms.is_canonical_basis() {
        return Err(Error::Unsupported("gradient estimation needs canonical arms".into()));
    }
    check_dim(problem.dim(), arms.dim())?;
    let info = design_matrix(design, arms, 0.0)?;
    let eta: Vec<f64> = (0..arms.dim()).map(|_| rng.sample(StandardNormal)).collect();
    gradient_at(problem, &info, &eta)
}

pub(crate) fn gradient_at(problem: &AllocProblem<'_>, info: &DesignInfo, eta: &[f64]) -> Result<Vec<f64>> {
    let diag = info
        .diagonal()
        .ok_or_else(|| Error::Unsupported("gradient estimation needs a diagonal design".into()))?;
    let m = compute_max(problem, info, eta, 1e-9)?;
    Ok(gradient_from(problem, diag, eta, &m.item))
}

/// Anchor used when Z has no estimate yet: the lowest-index maximizer of θ₀.
pub fn default_anchor(items: &[Item], theta0: &[f64]) -> Option<usize> {
    argmax_dot(items, theta0).map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn top1_problem<'a>(items: &'a [Item], oracle: &'a ItemOracle, use_oracle: bool) -> AllocProblem<'a> {
        let src = if use_oracle {
            ItemSource::Oracle(oracle)
        } else {
            ItemSource::Items(items)
        };
        AllocProblem::new(items[0].clone(), vec![1.0, 0.0], 1.0, src, 0.05).unwrap()
    }

    #[test]
    fn top1_example_both_modes() {
        let items = vec![Item::from_support(2, [0]), Item::from_support(2, [1])];
        let oracle = ItemOracle::top_k(2, 1).unwrap();
        let info = design_matrix(&Design::uniform(2), &ArmSet::canonical(2), 0.0).unwrap();
        for mode in [false, true] {
            let p = top1_problem(&items, &oracle, mode);
            let m = compute_max(&p, &info, &[1.0, 0.0], 1e-9).unwrap();
            assert_relative_eq!(m.value, 0.5f64.sqrt(), epsilon = 1e-9);
            assert_eq!(m.item, items[1]);
            let m = compute_max(&p, &info, &[0.0, 0.0], 1e-9).unwrap();
            assert_relative_eq!(m.value, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_example() {
        let items = vec![Item::from_support(2, [0]), Item::from_support(2, [1])];
        let oracle = ItemOracle::top_k(2, 1).unwrap();
        let p = top1_problem(&items, &oracle, true);
        let info = design_matrix(&Design::uniform(2), &ArmSet::canonical(2), 0.0).unwrap();
        let g = gradient_at(&p, &info, &[1.0, 0.0]).unwrap();
        assert_relative_eq!(g[0], -0.5 * 2f64.powf(1.5) / 2.0, epsilon = 1e-12);
        assert_eq!(g[1], 0.0);
        assert_relative_eq!(g[0], -0.70711, epsilon = 1e-5);
    }

    #[test]
    fn inactive_coordinate_has_zero_gradient() {
        let items = vec![Item::from_support(3, [0]), Item::from_support(3, [1]), Item::from_support(3, [2])];
        let p = AllocProblem::new(items[0].clone(), vec![1.0, 0.5, 0.0], 0.5, ItemSource::Items(&items), 0.1).unwrap();
        let info = design_matrix(&Design::uniform(3), &ArmSet::canonical(3), 0.0).unwrap();
        let eta = [0.3, -2.0, 0.1];
        let m = compute_max(&p, &info, &eta, 0.0).unwrap();
        let g = gradient_at(&p, &info, &eta).unwrap();
        let v = items[0].minus(&m.item);
        for i in 0..3 {
            if v[i] == 0.0 {
                assert_eq!(g[i], 0.0);
            }
        }
    }

    #[test]
    fn negative_values_when_anchor_is_outside() {
        // z₀ = 0 is not a top-1 item, so g can be negative
        let oracle = ItemOracle::top_k(3, 1).unwrap();
        let items = oracle.enumerate(10).unwrap();
        let info = design_matrix(&Design::uniform(3), &ArmSet::canonical(3), 0.0).unwrap();
        let eta = [1.0, 2.0, 0.5];
        let po = AllocProblem::new(Item::zeros(3), vec![0.0; 3], 1.0, ItemSource::Oracle(&oracle), 0.1).unwrap();
        let pe = AllocProblem::new(Item::zeros(3), vec![0.0; 3], 1.0, ItemSource::Items(&items), 0.1).unwrap();
        let mut trace = Vec::new();
        let a = compute_max_traced(&po, &info, &eta, 1e-9, &mut trace).unwrap();
        let b = compute_max(&pe, &info, &eta, 0.0).unwrap();
        assert!(b.value < 0.0);
        assert_relative_eq!(a.value, b.value, epsilon = 1e-9);
        for w in trace.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn oracle_mode_rejects_zero_tolerance() {
        let items = vec![Item::from_support(2, [0]), Item::from_support(2, [1])];
        let oracle = ItemOracle::top_k(2, 1).unwrap();
        let p = top1_problem(&items, &oracle, true);
        let info = design_matrix(&Design::uniform(2), &ArmSet::canonical(2), 0.0).unwrap();
        assert!(compute_max(&p, &info, &[1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn estimate_gradient_requires_canonical_arms() {
        let items = vec![Item::from_support(2, [0]), Item::from_support(2, [1])];
        let oracle = ItemOracle::top_k(2, 1).unwrap();
        let p = top1_problem(&items, &oracle, true);
        let arms = ArmSet::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            estimate_gradient(&p, &arms, &Design::uniform(2), &mut rng),
            Err(Error::Unsupported(_))
        ));
        assert!(estimate_gradient(&p, &ArmSet::canonical(2), &Design::uniform(2), &mut rng).is_ok());
    }

    #[test]
    fn problem_validation() {
        let items = vec![Item::from_support(2, [0])];
        assert!(AllocProblem::new(items[0].clone(), vec![0.0; 2], 0.0, ItemSource::Items(&items), 0.1).is_err());
        assert!(AllocProblem::new(items[0].clone(), vec![0.0; 3], 1.0, ItemSource::Items(&items), 0.1).is_err());
        assert!(AllocProblem::new(items[0].clone(), vec![0.0; 2], 1.0, ItemSource::Items(&items), 1.5).is_err());
    }
}
