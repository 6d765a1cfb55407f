//! Stochastic mirror descent on the floored simplex and the median-of-means
//! objective evaluation.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{compute_max, gradient_at, AllocProblem};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{design_matrix, ArmSet, Design};

#[derive(Clone, Debug, PartialEq)]
pub struct AllocOptions {
    pub iters: usize,
    pub batch: usize,
    /// Minimum weight per arm; `None` means 1/(2d).
    pub floor: Option<f64>,
    /// Constant c in T = c·d²/b²·log(1/δ).
    pub eval_c: f64,
    /// Upper limit on T.
    pub eval_cap: usize,
    pub eval_tol: f64,
}

impl Default for AllocOptions {
    fn default() -> Self {
        Self {
            iters: 1000,
            batch: 10,
            floor: None,
            eval_c: 864.0,
            eval_cap: 10_000,
            eval_tol: 0.5,
        }
    }
}

impl AllocOptions {
    /// The untruncated T of the analysis.
    pub fn strict() -> Self {
        Self {
            eval_cap: usize::MAX,
            ..Self::default()
        }
    }

    fn floor_for(&self, d: usize) -> f64 {
        self.floor.unwrap_or(1.0 / (2.0 * d as f64))
    }
}

/// Entropic mirror descent with `iters` steps of `batch` averaged gradient
/// draws; returns the iterate average.
pub fn smd_optimize<R: Rng + ?Sized>(
    problem: &AllocProblem<'_>,
    arms: &ArmSet,
    iters: usize,
    batch: usize,
    rng: &mut R,
) -> Result<Design> {
    let opts = AllocOptions {
        iters,
        batch,
        ..AllocOptions::default()
    };
    smd_optimize_with(problem, arms, &opts, None, rng)
}

/// SMD with explicit options and an optional starting design.
pub fn smd_optimize_with<R: Rng + ?Sized>(
    problem: &AllocProblem<'_>,
    arms: &ArmSet,
    opts: &AllocOptions,
    start: Option<&Design>,
    rng: &mut R,
) -> Result<Design> {
    if !arms.is_canonical_basis() {
        return Err(Error::Unsupported("mirror descent needs canonical arms".into()));
    }
    check_dim(problem.dim(), arms.dim())?;
    if opts.iters == 0 || opts.batch == 0 {
        return Err(Error::InvalidArgument("iters and batch must be positive".into()));
    }
    let d = arms.dim();
    let floor = opts.floor_for(d);
    if floor * d as f64 >= 1.0 {
        return Err(Error::InvalidArgument(format!("floor {floor} leaves no free mass")));
    }
    if d == 1 || problem.is_trivial() {
        return Design::new(vec![1.0 / d as f64; d], floor.min(1.0 / d as f64));
    }
    let free = 1.0 - floor * d as f64;
    // λ = floor + free·μ with μ on the simplex; iterate in log-space
    let mut log_mu: Vec<f64> = match start {
        Some(s) => {
            check_dim(d, s.len())?;
            s.weights()
                .iter()
                .map(|w| (((w - floor) / free).max(1e-12)).ln())
                .collect()
        }
        None => vec![0.0; d],
    };
    let mut mu = vec![0.0; d];
    let mut lambda = vec![0.0; d];
    let mut avg = vec![0.0; d];
    let mut g_scale: f64 = 0.0;
    let base_step = (2.0 * (d as f64).ln() / opts.iters as f64).sqrt();
    let mut etas = vec![0.0; d * opts.batch];
    for _ in 0..opts.iters {
        let m = log_mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (mi, li) in mu.iter_mut().zip(&log_mu) {
            *mi = (li - m).exp();
            total += *mi;
        }
        for ((lam, mi), a) in lambda.iter_mut().zip(mu.iter_mut()).zip(avg.iter_mut()) {
            *mi /= total;
            *lam = floor + free * *mi;
            *a += *lam;
        }
        let design = Design::new(lambda.clone(), 0.0)?;
        let info = design_matrix(&design, arms, 0.0)?;
        for e in etas.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        let grads: Vec<Vec<f64>> = etas
            .par_chunks(d)
            .map(|eta| gradient_at(problem, &info, eta))
            .collect::<Result<_>>()?;
        let mut grad = vec![0.0; d];
        for g in &grads {
            for (a, b) in grad.iter_mut().zip(g) {
                *a += free * b / opts.batch as f64;
            }
        }
        let gmax = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        g_scale = g_scale.max(gmax);
        if g_scale > 0.0 {
            let step = base_step / g_scale;
            for (l, g) in log_mu.iter_mut().zip(&grad) {
                *l -= step * g;
            }
        }
    }
    let weights: Vec<f64> = avg.iter().map(|a| a / opts.iters as f64).collect();
    let total: f64 = weights.iter().sum();
    Design::new(weights.iter().map(|w| w / total).collect(), floor * (1.0 - 1e-9))
}

/// Median-of-means estimate of E g(λ; η), returned as (estimate + 1)².
pub fn eval_alloc<R: Rng + ?Sized>(
    problem: &AllocProblem<'_>,
    arms: &ArmSet,
    design: &Design,
    delta: f64,
    opts: &AllocOptions,
    rng: &mut R,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} outside (0,1)")));
    }
    check_dim(problem.dim(), arms.dim())?;
    if problem.is_trivial() {
        return Ok(1.0);
    }
    let d = arms.dim() as f64;
    let log_inv = (1.0 / delta).ln();
    let groups = ((8.0 * log_inv).ceil() as usize).max(1);
    let wanted = (opts.eval_c * d * d / (problem.shift * problem.shift) * log_inv).ceil();
    let t = if wanted.is_finite() && wanted < opts.eval_cap as f64 {
        wanted as usize
    } else {
        opts.eval_cap
    }
    .max(groups);
    let info = design_matrix(design, arms, 0.0)?;
    let dim = arms.dim();
    let etas: Vec<f64> = (0..t * dim).map(|_| rng.sample(StandardNormal)).collect();
    let samples: Vec<f64> = etas
        .par_chunks(dim)
        .map(|eta| compute_max(problem, &info, eta, opts.eval_tol).map(|m| m.value))
        .collect::<Result<_>>()?;
    let per = samples.len() / groups;
    let mut means: Vec<f64> = samples
        .chunks_exact(per)
        .take(groups)
        .map(|c| c.iter().sum::<f64>() / per as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let mid = means.len() / 2;
    let mom = if means.len() % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    };
    Ok((mom + 1.0).powi(2))
}

/// Mirror-descent design followed by its median-of-means objective value.
pub fn compute_alloc<R: Rng + ?Sized>(
    problem: &AllocProblem<'_>,
    arms: &ArmSet,
    opts: &AllocOptions,
    rng: &mut R,
) -> Result<(Design, f64)> {
    let design = smd_optimize_with(problem, arms, opts, None, rng)?;
    let tau = eval_alloc(problem, arms, &design, problem.delta, opts, rng)?;
    Ok((design, tau))
}
