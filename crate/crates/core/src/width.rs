//! Monte-Carlo Gaussian widths and the design objectives built on them.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::design_opt::{compute_max, AllocProblem};
use crate::env::Instance;
use crate::error::{check_dim, Error, Result};
use crate::item::Item;
use crate::linalg::{design_matrix, ArmSet, Design, DesignInfo};
use crate::pointset::Hull2d;

/// Default number of Monte-Carlo draws per width estimate.
pub const DEFAULT_N_MC: usize = 2000;

/// Item sets at least this large in the plane are queried through their hull.
const HULL_MIN_ITEMS: usize = 32;

/// A batch of standard Gaussian vectors, shared between evaluations that are
/// compared against each other.
#[derive(Clone, Debug)]
pub struct EtaBatch {
    dim: usize,
    data: Vec<f64>,
}

impl EtaBatch {
    pub fn draw<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> Self {
        let data = (0..dim * n).map(|_| rng.sample(StandardNormal)).collect();
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            check_dim(dim, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidthEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// mean², the squared-expectation convention of the objectives.
    pub squared: f64,
}

impl WidthEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            n_samples: n,
            squared: mean * mean,
        }
    }
}

enum Mode<'a> {
    Pairs {
        items: &'a [Item],
    },
    Anchored {
        anchor: &'a Item,
        items: &'a [Item],
        denominators: Option<Vec<f64>>,
        include_zero: bool,
    },
    Oracle {
        problem: &'a AllocProblem<'a>,
        tol: f64,
    },
}

/// Index set of a Gaussian supremum: pair differences, differences from an
/// anchor (optionally gap-normalized), or an oracle-backed normalized set.
pub struct DirectionSet<'a> {
    mode: Mode<'a>,
    hull: Option<Hull2d>,
}

fn plane_hull(items: &[Item]) -> Option<Hull2d> {
    if items.len() < HULL_MIN_ITEMS || items[0].dim() != 2 {
        return None;
    }
    let pts: Vec<[f64; 2]> = items.iter().map(|z| [z.values()[0], z.values()[1]]).collect();
    Some(Hull2d::new(&pts))
}

fn check_items(items: &[Item]) -> Result<usize> {
    let d = items
        .first()
        .map(Item::dim)
        .ok_or_else(|| Error::InvalidArgument("direction set needs at least one item".into()))?;
    for z in items {
        check_dim(d, z.dim())?;
    }
    Ok(d)
}

impl<'a> DirectionSet<'a> {
    /// {z - z' : z, z' ∈ items}.
    pub fn pairs(items: &'a [Item]) -> Result<Self> {
        check_items(items)?;
        Ok(Self {
            hull: plane_hull(items),
            mode: Mode::Pairs { items },
        })
    }

    /// {anchor - z : z ∈ items}.
    pub fn anchored(anchor: &'a Item, items: &'a [Item]) -> Result<Self> {
        check_dim(check_items(items)?, anchor.dim())?;
        Ok(Self {
            hull: plane_hull(items),
            mode: Mode::Anchored {
                anchor,
                items,
                denominators: None,
                include_zero: false,
            },
        })
    }

    /// {(anchor - z)/den_z : z ∈ items}, plus the zero direction when
    /// `include_zero` (the anchor itself).
    pub fn normalized(
        anchor: &'a Item,
        items: &'a [Item],
        denominators: Vec<f64>,
        include_zero: bool,
    ) -> Result<Self> {
        check_dim(check_items(items)?, anchor.dim())?;
        check_dim(items.len(), denominators.len())?;
        if denominators.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("denominators must be positive".into()));
        }
        Ok(Self {
            hull: None,
            mode: Mode::Anchored {
                anchor,
                items,
                denominators: Some(denominators),
                include_zero,
            },
        })
    }

    /// The normalized directions of an allocation problem, evaluated through
    /// `compute_max` with tolerance `tol`.
    pub fn oracle(problem: &'a AllocProblem<'a>, tol: f64) -> Self {
        Self {
            hull: None,
            mode: Mode::Oracle { problem, tol },
        }
    }

    pub fn dim(&self) -> usize {
        match &self.mode {
            Mode::Pairs { items } => items[0].dim(),
            Mode::Anchored { anchor, .. } => anchor.dim(),
            Mode::Oracle { problem, .. } => problem.dim(),
        }
    }

    /// Supremum of ⟨direction, u⟩ for a precomputed u = A^{-1/2}η.
    pub fn sup_at(&self, u: &[f64]) -> f64 {
        match &self.mode {
            Mode::Pairs { items } => match &self.hull {
                Some(h) => {
                    let u2 = [u[0], u[1]];
                    h.max_dot(u2).1 - h.min_dot(u2).1
                }
                None => {
                    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
                    for z in items.iter() {
                        let v = z.dot(u);
                        hi = hi.max(v);
                        lo = lo.min(v);
                    }
                    hi - lo
                }
            },
            Mode::Anchored {
                anchor,
                items,
                denominators,
                include_zero,
            } => {
                let a = anchor.dot(u);
                let mut best = if *include_zero { 0.0 } else { f64::NEG_INFINITY };
                match (denominators, &self.hull) {
                    (Some(den), _) => {
                        for (z, dz) in items.iter().zip(den) {
                            best = best.max((a - z.dot(u)) / dz);
                        }
                    }
                    (None, Some(h)) => best = best.max(a - h.min_dot([u[0], u[1]]).1),
                    (None, None) => {
                        for z in items.iter() {
                            best = best.max(a - z.dot(u));
                        }
                    }
                }
                best
            }
            Mode::Oracle { .. } => unreachable!("oracle mode needs the design"),
        }
    }

    /// Like [`DirectionSet::sup_at`], also returning a maximizing direction.
    pub fn sup_direction_at(&self, u: &[f64]) -> (f64, Vec<f64>) {
        match &self.mode {
            Mode::Pairs { items } => {
                let (hi, lo) = match &self.hull {
                    Some(h) => (h.max_dot([u[0], u[1]]).0, h.min_dot([u[0], u[1]]).0),
                    None => {
                        let (mut hi, mut lo) = ((0, f64::NEG_INFINITY), (0, f64::INFINITY));
                        for (i, z) in items.iter().enumerate() {
                            let v = z.dot(u);
                            if v > hi.1 {
                                hi = (i, v);
                            }
                            if v < lo.1 {
                                lo = (i, v);
                            }
                        }
                        (hi.0, lo.0)
                    }
                };
                let dir = items[hi].minus(&items[lo]);
                (dir.iter().zip(u).map(|(a, b)| a * b).sum(), dir)
            }
            Mode::Anchored {
                anchor,
                items,
                denominators,
                include_zero,
            } => {
                let a = anchor.dot(u);
                let mut best: Option<(f64, usize)> = None;
                for (i, z) in items.iter().enumerate() {
                    let den = denominators.as_ref().map_or(1.0, |d| d[i]);
                    let v = (a - z.dot(u)) / den;
                    if best.is_none_or(|(b, _)| v > b) {
                        best = Some((v, i));
                    }
                }
                let (v, i) = best.expect("nonempty");
                if *include_zero && v < 0.0 {
                    return (0.0, vec![0.0; anchor.dim()]);
                }
                let den = denominators.as_ref().map_or(1.0, |d| d[i]);
                (v, anchor.minus(&items[i]).iter().map(|x| x / den).collect())
            }
            Mode::Oracle { .. } => unreachable!("oracle mode needs the design"),
        }
    }

    /// sup over the direction set of ⟨direction, A^{-1/2}η⟩.
    pub fn sample_sup(&self, info: &DesignInfo, eta: &[f64]) -> Result<f64> {
        check_dim(self.dim(), eta.len())?;
        check_dim(info.dim(), eta.len())?;
        match &self.mode {
            Mode::Oracle { problem, tol } => Ok(compute_max(problem, info, eta, *tol)?.value),
            _ => Ok(self.sup_at(&info.apply_inv_sqrt(eta))),
        }
    }

    /// Per-draw suprema over a shared batch.
    pub fn sups(&self, info: &DesignInfo, batch: &EtaBatch) -> Result<Vec<f64>> {
        check_dim(self.dim(), batch.dim())?;
        check_dim(info.dim(), batch.dim())?;
        let n = batch.len();
        match &self.mode {
            Mode::Oracle { problem, tol } => (0..n)
                .into_par_iter()
                .map(|i| compute_max(problem, info, batch.get(i), *tol).map(|m| m.value))
                .collect(),
            _ => Ok((0..n)
                .into_par_iter()
                .with_min_len(64)
                .map_init(
                    || vec![0.0; batch.dim()],
                    |u, i| {
                        info.apply_inv_sqrt_into(batch.get(i), u);
                        self.sup_at(u)
                    },
                )
                .collect()),
        }
    }

    /// Width estimate over a shared batch.
    pub fn width_with(&self, info: &DesignInfo, batch: &EtaBatch) -> Result<WidthEstimate> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty noise batch".into()));
        }
        Ok(WidthEstimate::from_samples(&self.sups(info, batch)?))
    }

    /// Largest squared A^{-1}-norm over the directions.
    pub fn max_norm_sq(&self, info: &DesignInfo) -> Result<f64> {
        Ok(self.max_norm_direction(info)?.0)
    }

    /// Largest squared A^{-1}-norm and a direction attaining it.
    pub fn max_norm_direction(&self, info: &DesignInfo) -> Result<(f64, Vec<f64>)> {
        check_dim(info.dim(), self.dim())?;
        let inv2 = || {
            let m = info.a_inv();
            [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
        };
        match &self.mode {
            Mode::Pairs { items } => {
                if let Some(h) = &self.hull {
                    let (v, i, j) = h.diameter_pair(inv2());
                    return Ok((v, items[i].minus(&items[j])));
                }
                let (v, i, j) = max_pair_norm(items, info);
                Ok((v, items[i].minus(&items[j])))
            }
            Mode::Anchored {
                anchor,
                items,
                denominators,
                ..
            } => {
                if let (Some(h), None) = (&self.hull, denominators) {
                    let a = anchor.values();
                    let (v, i) = h.farthest([a[0], a[1]], inv2());
                    return Ok((v, anchor.minus(&items[i])));
                }
                let mut best = (0.0, vec![0.0; anchor.dim()]);
                for (i, z) in items.iter().enumerate() {
                    let den = denominators.as_ref().map_or(1.0, |d| d[i]);
                    let v: Vec<f64> = anchor.minus(z).iter().map(|x| x / den).collect();
                    let q = info.norm_sq(&v);
                    if q > best.0 {
                        best = (q, v);
                    }
                }
                Ok(best)
            }
            Mode::Oracle { .. } => Err(Error::Unsupported(
                "max norm over an oracle-backed direction set".into(),
            )),
        }
    }
}

/// max_{z,z'} ‖z - z'‖²_{A^{-1}} by whitening every item once.
pub fn max_pair_norm_sq(items: &[Item], info: &DesignInfo) -> f64 {
    max_pair_norm(items, info).0
}

fn max_pair_norm(items: &[Item], info: &DesignInfo) -> (f64, usize, usize) {
    let d = info.dim();
    let white: Vec<Vec<f64>> = match info.diagonal() {
        Some(diag) => items
            .iter()
            .map(|z| z.values().iter().zip(diag).map(|(v, a)| v / a.sqrt()).collect())
            .collect(),
        None => items.iter().map(|z| info.apply_inv_sqrt(z.values())).collect(),
    };
    let n = white.len();
    (0..n)
        .into_par_iter()
        .with_min_len(16)
        .map(|i| {
            let mut best = (0.0, i, i);
            for j in (i + 1)..n {
                let mut s = 0.0;
                for k in 0..d {
                    let t = white[i][k] - white[j][k];
                    s += t * t;
                }
                if s > best.0 {
                    best = (s, i, j);
                }
            }
            best
        })
        .reduce(|| (0.0, 0, 0), |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a })
}

/// sample_sup over a single η.
pub fn sample_sup(dirs: &DirectionSet<'_>, info: &DesignInfo, eta: &[f64]) -> Result<f64> {
    dirs.sample_sup(info, eta)
}

/// Averages `n` independent suprema. The noise is drawn sequentially from
/// `rng`, so results do not depend on the worker count.
pub fn estimate_width<R: Rng + ?Sized>(
    dirs: &DirectionSet<'_>,
    info: &DesignInfo,
    n: usize,
    rng: &mut R,
) -> Result<WidthEstimate> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 draws, got {n}")));
    }
    let batch = EtaBatch::draw(dirs.dim(), n, rng);
    dirs.width_with(info, &batch)
}

/// Both terms of the round objective at a fixed design.
#[derive(Clone, Copy, Debug)]
pub struct TauValue {
    pub width: WidthEstimate,
    pub max_norm_sq: f64,
    pub value: f64,
}

/// width² + 2 log(1/δ_k)·max-norm² for a direction set.
pub fn tau_terms(dirs: &DirectionSet<'_>, info: &DesignInfo, delta_k: f64, batch: &EtaBatch) -> Result<TauValue> {
    if !(delta_k > 0.0 && delta_k < 1.0) {
        return Err(Error::InvalidArgument(format!("delta_k = {delta_k} outside (0,1)")));
    }
    let width = dirs.width_with(info, batch)?;
    let max_norm_sq = dirs.max_norm_sq(info)?;
    Ok(TauValue {
        width,
        max_norm_sq,
        value: width.squared + 2.0 * (1.0 / delta_k).ln() * max_norm_sq,
    })
}

/// τ(λ; items) with the pair width estimated from `n_mc` draws.
pub fn tau_objective<R: Rng + ?Sized>(
    design: &Design,
    items: &[Item],
    delta_k: f64,
    arms: &ArmSet,
    n_mc: usize,
    rng: &mut R,
) -> Result<f64> {
    if items.len() == 1 {
        return Ok(0.0);
    }
    let info = design_matrix(design, arms, 0.0)?;
    let dirs = DirectionSet::pairs(items)?;
    let batch = EtaBatch::draw(arms.dim(), n_mc.max(2), rng);
    Ok(tau_terms(&dirs, &info, delta_k, &batch)?.value)
}

fn instance_items(instance: &Instance) -> Result<Vec<Item>> {
    instance.items_up_to(1_000_000)
}

/// Items other than z* with their gaps Δ_z, rejecting ties.
pub fn gap_directions(instance: &Instance) -> Result<(Vec<Item>, Vec<f64>)> {
    gaps(instance, &instance_items(instance)?)
}

fn gaps(instance: &Instance, items: &[Item]) -> Result<(Vec<Item>, Vec<f64>)> {
    let theta = instance.theta();
    let best = instance.z_star().dot(theta);
    let mut others = Vec::new();
    let mut gaps = Vec::new();
    for z in items {
        if z == instance.z_star() {
            continue;
        }
        let g = best - z.dot(theta);
        if g <= 1e-12 {
            return Err(Error::DegenerateInstance(format!("item gap {g:e} is not positive")));
        }
        others.push(z.clone());
        gaps.push(g);
    }
    if others.is_empty() {
        return Err(Error::DegenerateInstance("need at least two items".into()));
    }
    Ok((others, gaps))
}

/// ρ(λ) = max_{z ≠ z*} ‖z* - z‖²_{A^{-1}} / Δ_z².
pub fn rho_of(design: &Design, instance: &Instance) -> Result<f64> {
    let items = instance_items(instance)?;
    let (others, gaps) = gaps(instance, &items)?;
    let info = design_matrix(design, instance.arms(), 0.0)?;
    let zs = instance.z_star();
    Ok(others
        .iter()
        .zip(&gaps)
        .map(|(z, g)| info.norm_sq(&zs.minus(z)) / (g * g))
        .fold(0.0, f64::max))
}

/// Width of the gap-normalized directions (z* - z)/Δ_z, including z* itself.
pub fn gamma_of<R: Rng + ?Sized>(
    design: &Design,
    instance: &Instance,
    n_mc: usize,
    rng: &mut R,
) -> Result<WidthEstimate> {
    let items = instance_items(instance)?;
    let (others, gaps) = gaps(instance, &items)?;
    let info = design_matrix(design, instance.arms(), 0.0)?;
    let dirs = DirectionSet::normalized(instance.z_star(), &others, gaps, true)?;
    estimate_width(&dirs, &info, n_mc, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(d: usize, i: usize) -> Item {
        Item::from_support(d, [i])
    }

    fn half_info() -> DesignInfo {
        design_matrix(&Design::uniform(2), &ArmSet::canonical(2), 0.0).unwrap()
    }

    #[test]
    fn single_item_pairs_is_zero() {
        let items = vec![Item::dense(vec![0.3, -1.0])];
        let dirs = DirectionSet::pairs(&items).unwrap();
        assert_eq!(dirs.sample_sup(&half_info(), &[1.3, 0.2]).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = estimate_width(&dirs, &half_info(), 100, &mut rng).unwrap();
        assert_eq!((w.mean, w.stderr), (0.0, 0.0));
    }

    #[test]
    fn anchored_example() {
        let anchor = e(2, 0);
        let items = vec![e(2, 1)];
        let dirs = DirectionSet::anchored(&anchor, &items).unwrap();
        let v = dirs.sample_sup(&half_info(), &[1.0, 0.0]).unwrap();
        assert_relative_eq!(v, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn pairs_example() {
        let items = vec![e(2, 0), e(2, 1)];
        let dirs = DirectionSet::pairs(&items).unwrap();
        // ordered pairs: (e1,e2) gives ⟨(1,-1), √2(1,-1)⟩ = 2√2
        let v = dirs.sample_sup(&half_info(), &[1.0, -1.0]).unwrap();
        assert_relative_eq!(v, 2.0 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn half_normal_mean() {
        // ‖e1 - e2‖_{A^{-1}} = 2 at the half-half design
        let items = vec![e(2, 0), e(2, 1)];
        let dirs = DirectionSet::pairs(&items).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let w = estimate_width(&dirs, &half_info(), 2000, &mut rng).unwrap();
        let expect = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((w.mean - expect).abs() <= 4.0 * w.stderr, "{} vs {expect}", w.mean);
        assert_eq!(w.squared, w.mean * w.mean);
    }

    #[test]
    fn tau_examples() {
        let items = vec![e(2, 0), e(2, 1)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let arms = ArmSet::canonical(2);
        let t = tau_objective(&Design::uniform(2), &items, (-1.0f64).exp(), &arms, 20_000, &mut rng).unwrap();
        // (2√(2/π))² + 2·1·4
        let expect = 8.0 / std::f64::consts::PI + 8.0;
        assert!((t - expect).abs() < 0.1, "{t} vs {expect}");
        assert_eq!(
            tau_objective(&Design::uniform(2), &items[..1], 0.1, &arms, 10, &mut rng).unwrap(),
            0.0
        );
        // permutation invariance under common noise
        let items3 = vec![e(3, 0), e(3, 1), Item::from_support(3, [1, 2])];
        let rev: Vec<Item> = items3.iter().rev().cloned().collect();
        let arms3 = ArmSet::canonical(3);
        let d = Design::new(vec![0.2, 0.3, 0.5], 0.0).unwrap();
        let a = tau_objective(&d, &items3, 0.05, &arms3, 500, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = tau_objective(&d, &rev, 0.05, &arms3, 500, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn anchor_in_items_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let items: Vec<Item> = (0..5).map(|i| Item::from_support(5, [i, (i + 1) % 5])).collect();
        let dirs = DirectionSet::anchored(&items[2], &items).unwrap();
        let info = design_matrix(&Design::uniform(5), &ArmSet::canonical(5), 0.0).unwrap();
        let batch = EtaBatch::draw(5, 200, &mut rng);
        assert!(dirs.sups(&info, &batch).unwrap().iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn pair_sup_is_max_minus_min() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let items: Vec<Item> = (0..6)
            .map(|_| Item::dense((0..3).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let arms = ArmSet::new(vec![vec![1.0, 0.2, 0.0], vec![0.0, 1.0, 0.3], vec![0.5, 0.0, 1.0]]).unwrap();
        let info = design_matrix(&Design::uniform(3), &arms, 0.0).unwrap();
        let dirs = DirectionSet::pairs(&items).unwrap();
        for _ in 0..20 {
            let eta: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let u = info.apply_inv_sqrt(&eta);
            let mut pair_max = f64::NEG_INFINITY;
            for a in &items {
                for b in &items {
                    pair_max = pair_max.max(a.dot(&u) - b.dot(&u));
                }
            }
            assert_relative_eq!(dirs.sample_sup(&info, &eta).unwrap(), pair_max, epsilon = 1e-12);
        }
    }

    #[test]
    fn hull_path_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let items: Vec<Item> = (0..200)
            .map(|_| {
                let t: f64 = 0.785 + rng.random_range(0.0..0.05);
                Item::dense(vec![t.cos(), t.sin()])
            })
            .collect();
        let t = 3.0 * std::f64::consts::FRAC_PI_4;
        let arms = ArmSet::new(vec![vec![1.0, 0.0], vec![t.cos(), t.sin()]]).unwrap();
        let info = design_matrix(&Design::new(vec![0.3, 0.7], 0.0).unwrap(), &arms, 0.0).unwrap();
        let fast = DirectionSet::pairs(&items).unwrap();
        assert!(fast.hull.is_some());
        let brute = max_pair_norm_sq(&items, &info);
        assert_relative_eq!(fast.max_norm_sq(&info).unwrap(), brute, max_relative = 1e-9);
        let anchored = DirectionSet::anchored(&items[0], &items).unwrap();
        let den = vec![1.0; items.len()];
        let slow = DirectionSet::normalized(&items[0], &items, den, false).unwrap();
        assert_relative_eq!(
            anchored.max_norm_sq(&info).unwrap(),
            slow.max_norm_sq(&info).unwrap(),
            max_relative = 1e-9
        );
        let batch = EtaBatch::draw(2, 100, &mut rng);
        let a = anchored.sups(&info, &batch).unwrap();
        let b = slow.sups(&info, &batch).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn parallel_evaluation_is_deterministic() {
        let items: Vec<Item> = (0..10).map(|i| Item::from_support(10, [i])).collect();
        let dirs = DirectionSet::pairs(&items).unwrap();
        let info = design_matrix(&Design::uniform(10), &ArmSet::canonical(10), 0.0).unwrap();
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                estimate_width(&dirs, &info, 1000, &mut ChaCha8Rng::seed_from_u64(4)).unwrap()
            })
        };
        assert_eq!(run(1), run(3));
    }
}
