//! Design optimization for arbitrary arm sets.
//!
//! Small arm sets use exponentiated-gradient steps with central finite
//! differences under a fixed noise batch; large ones use pathwise stochastic
//! gradients from the representation A^{-1/2}η ~ A^{-1}Σ_x √λ_x g_x x.
//! Worst-case norm objectives use their exact subgradient.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::Instance;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{design_matrix, ArmSet, Design, DesignInfo};
use crate::width::{gamma_of, gap_directions, rho_of, DirectionSet, EtaBatch};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TauRecipe {
    /// Minimize width + √(2 log(1/δ_k))·max-norm jointly.
    Sum,
    /// Average of the width-only and norm-only minimizers.
    #[default]
    Mixture,
}

pub enum DesignObjective<'a, 'b> {
    /// E sup over the direction set.
    Width(&'b DirectionSet<'a>),
    /// Worst squared A^{-1}-norm over the direction set (ρ for gap-normalized
    /// directions).
    MaxNorm(&'b DirectionSet<'a>),
    /// The round objective width² + 2 log(1/δ_k)·max-norm².
    Tau {
        dirs: &'b DirectionSet<'a>,
        delta_k: f64,
        recipe: TauRecipe,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralOptions {
    pub iters: usize,
    /// Noise draws shared by all finite-difference evaluations.
    pub n_mc: usize,
    /// Draws per pathwise gradient step.
    pub batch: usize,
    pub floor: f64,
    /// Above this many arms the width uses pathwise gradients.
    pub max_fd_arms: usize,
    /// Initial step in log-weight units.
    pub step: f64,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        Self {
            iters: 100,
            n_mc: 1000,
            batch: 10,
            floor: 1e-3,
            max_fd_arms: 16,
            step: 0.5,
        }
    }
}

fn info_for(weights: &[f64], arms: &ArmSet) -> Result<DesignInfo> {
    let total: f64 = weights.iter().sum();
    let d = Design::new(weights.iter().map(|w| w / total).collect(), 0.0)?;
    design_matrix(&d, arms, 0.0)
}

/// Mirror-descent state: λ = floor + (1 - n·floor)·softmax(log_mu).
struct Simplex {
    floor: f64,
    free: f64,
    log_mu: Vec<f64>,
}

impl Simplex {
    fn new(n: usize, floor: f64, start: Option<&Design>) -> Result<Self> {
        let floor = floor.min(0.5 / n as f64);
        let free = 1.0 - floor * n as f64;
        let log_mu = match start {
            Some(s) => {
                check_dim(n, s.len())?;
                s.weights()
                    .iter()
                    .map(|w| ((w - floor) / free).max(1e-12).ln())
                    .collect()
            }
            None => vec![0.0; n],
        };
        Ok(Self { floor, free, log_mu })
    }

    fn weights(&self) -> Vec<f64> {
        let m = self.log_mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = self.log_mu.iter().map(|l| (l - m).exp()).collect();
        let t: f64 = e.iter().sum();
        e.iter().map(|v| self.floor + self.free * v / t).collect()
    }

    /// Exponentiated-gradient step of size `step` against the sup-normalized
    /// gradient.
    fn step(&mut self, grad: &[f64], step: f64) {
        let g = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if g > 0.0 && g.is_finite() {
            for (l, gi) in self.log_mu.iter_mut().zip(grad) {
                *l -= step * gi / g;
            }
        }
    }

    fn design(&self, weights: &[f64]) -> Result<Design> {
        let t: f64 = weights.iter().sum();
        Design::new(weights.iter().map(|w| w / t).collect(), self.floor * (1.0 - 1e-9))
    }
}

/// Which instance complexity a design targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Complexity {
    /// max_z ‖z* - z‖²_{A^{-1}} / Δ_z²
    Rho,
    /// Squared width of {(z* - z)/Δ_z} ∪ {0}.
    Gamma,
}

/// Design minimizing ρ(λ) or γ(λ) under the instance's true gaps, and the
/// value reached (γ estimated with `n_mc` fresh draws).
pub fn complexity_design<R: Rng + ?Sized>(
    instance: &Instance,
    which: Complexity,
    opts: &GeneralOptions,
    n_mc: usize,
    rng: &mut R,
) -> Result<(Design, f64)> {
    let (others, gaps) = gap_directions(instance)?;
    let arms = instance.arms();
    let zs = instance.z_star();
    let design = match which {
        Complexity::Rho => {
            let dirs = DirectionSet::normalized(zs, &others, gaps, false)?;
            minimize_max_norm(&dirs, arms, opts, None)?
        }
        Complexity::Gamma => {
            let dirs = DirectionSet::normalized(zs, &others, gaps, true)?;
            minimize_width(&dirs, arms, opts, 0.0, None, rng)?
        }
    };
    let value = match which {
        Complexity::Rho => rho_of(&design, instance)?,
        Complexity::Gamma => gamma_of(&design, instance, n_mc, rng)?.squared,
    };
    Ok((design, value))
}

/// Optimizes a design objective over the floored simplex on `arms`.
pub fn general_x_optimize<R: Rng + ?Sized>(
    objective: &DesignObjective<'_, '_>,
    arms: &ArmSet,
    opts: &GeneralOptions,
    rng: &mut R,
) -> Result<Design> {
    match objective {
        DesignObjective::Width(dirs) => minimize_width(dirs, arms, opts, 0.0, None, rng),
        DesignObjective::MaxNorm(dirs) => minimize_max_norm(dirs, arms, opts, None),
        DesignObjective::Tau { dirs, delta_k, recipe } => {
            if !(*delta_k > 0.0 && *delta_k < 1.0) {
                return Err(Error::InvalidArgument(format!("delta_k = {delta_k} outside (0,1)")));
            }
            let c = (2.0 * (1.0 / delta_k).ln()).sqrt();
            match recipe {
                TauRecipe::Sum => minimize_width(dirs, arms, opts, c, None, rng),
                TauRecipe::Mixture => {
                    let a = minimize_width(dirs, arms, opts, 0.0, None, rng)?;
                    let b = minimize_max_norm(dirs, arms, opts, None)?;
                    a.mix(&b, 0.5)
                }
            }
        }
    }
}

/// Minimizes E sup + `norm_weight`·√max-norm² over the floored simplex.
pub fn minimize_width<R: Rng + ?Sized>(
    dirs: &DirectionSet<'_>,
    arms: &ArmSet,
    opts: &GeneralOptions,
    norm_weight: f64,
    start: Option<&Design>,
    rng: &mut R,
) -> Result<Design> {
    check_dim(arms.dim(), dirs.dim())?;
    let n = arms.len();
    if n == 1 {
        return Ok(Design::uniform(1));
    }
    if arms.len() <= opts.max_fd_arms {
        fd_width(dirs, arms, opts, norm_weight, start, rng)
    } else {
        pathwise_width(dirs, arms, opts, norm_weight, start, rng)
    }
}

fn fd_width<R: Rng + ?Sized>(
    dirs: &DirectionSet<'_>,
    arms: &ArmSet,
    opts: &GeneralOptions,
    norm_weight: f64,
    start: Option<&Design>,
    rng: &mut R,
) -> Result<Design> {
    let n = arms.len();
    let batch = EtaBatch::draw(arms.dim(), opts.n_mc.max(2), rng);
    let objective = |w: &[f64]| -> Result<f64> {
        let info = info_for(w, arms)?;
        let mut v = dirs.width_with(&info, &batch)?.mean;
        if norm_weight > 0.0 {
            v += norm_weight * dirs.max_norm_sq(&info)?.sqrt();
        }
        Ok(v)
    };
    let mut state = Simplex::new(n, opts.floor, start)?;
    let h = 0.5 * state.floor;
    let mut best_w = state.weights();
    let mut best_f = objective(&best_w)?;
    let mut grad = vec![0.0; n];
    for t in 0..opts.iters {
        let w = state.weights();
        if t > 0 {
            let f = objective(&w)?;
            if f < best_f {
                best_f = f;
                best_w = w.clone();
            }
        }
        for i in 0..n {
            let mut plus = w.clone();
            plus[i] += h;
            let mut minus = w.clone();
            minus[i] -= h;
            grad[i] = (objective(&plus)? - objective(&minus)?) / (2.0 * h);
        }
        state.step(&grad, opts.step / ((t + 1) as f64).sqrt());
    }
    let w = state.weights();
    if objective(&w)? < best_f {
        best_w = w;
    }
    state.design(&best_w)
}

fn pathwise_width<R: Rng + ?Sized>(
    dirs: &DirectionSet<'_>,
    arms: &ArmSet,
    opts: &GeneralOptions,
    norm_weight: f64,
    start: Option<&Design>,
    rng: &mut R,
) -> Result<Design> {
    let n = arms.len();
    let d = arms.dim();
    let x = arms.arms();
    let mut state = Simplex::new(n, opts.floor, start)?;
    let mut avg = vec![0.0; n];
    let mut g_draw = vec![0.0; n];
    let mut s = vec![0.0; d];
    for t in 0..opts.iters {
        let w = state.weights();
        for (a, wi) in avg.iter_mut().zip(&w) {
            *a += wi;
        }
        let info = info_for(&w, arms)?;
        let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
        let mut grad = vec![0.0; n];
        for _ in 0..opts.batch.max(1) {
            for g in g_draw.iter_mut() {
                *g = rng.sample(StandardNormal);
            }
            s.iter_mut().for_each(|v| *v = 0.0);
            for ((xi, sw), g) in x.iter().zip(&sqrt_w).zip(&g_draw) {
                let c = sw * g;
                for (sj, xij) in s.iter_mut().zip(xi) {
                    *sj += c * xij;
                }
            }
            let xi_vec = info.apply_inv(&s);
            let (_, v) = dirs.sup_direction_at(&xi_vec);
            if v.iter().all(|c| *c == 0.0) {
                continue;
            }
            let wv = info.apply_inv(&v);
            for (k, (xk, gk)) in x.iter().zip(&g_draw).enumerate() {
                let xw: f64 = xk.iter().zip(&wv).map(|(a, b)| a * b).sum();
                if xw == 0.0 {
                    continue;
                }
                let xx: f64 = xk.iter().zip(&xi_vec).map(|(a, b)| a * b).sum();
                grad[k] += xw * (gk / (2.0 * sqrt_w[k]) - xx);
            }
        }
        let b = opts.batch.max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= b);
        if norm_weight > 0.0 {
            let (m, v) = dirs.max_norm_direction(&info)?;
            if m > 0.0 {
                let wv = info.apply_inv(&v);
                for (gk, xk) in grad.iter_mut().zip(x) {
                    let xw: f64 = xk.iter().zip(&wv).map(|(a, b)| a * b).sum();
                    *gk -= norm_weight * xw * xw / (2.0 * m.sqrt());
                }
            }
        }
        state.step(&grad, opts.step / ((t + 1) as f64).sqrt());
    }
    let w: Vec<f64> = avg.iter().map(|a| a / opts.iters.max(1) as f64).collect();
    state.design(&w)
}

/// Minimizes the worst squared A^{-1}-norm over the directions with exact
/// subgradients -(xᵀA^{-1}v)², keeping the best iterate.
pub fn minimize_max_norm(
    dirs: &DirectionSet<'_>,
    arms: &ArmSet,
    opts: &GeneralOptions,
    start: Option<&Design>,
) -> Result<Design> {
    check_dim(arms.dim(), dirs.dim())?;
    let n = arms.len();
    if n == 1 {
        return Ok(Design::uniform(1));
    }
    let x = arms.arms();
    let mut state = Simplex::new(n, opts.floor, start)?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let iters = opts.iters.max(1) * 3;
    for t in 0..iters {
        let w = state.weights();
        let info = info_for(&w, arms)?;
        let (m, v) = dirs.max_norm_direction(&info)?;
        if best.as_ref().is_none_or(|(b, _)| m < *b) {
            best = Some((m, w.clone()));
        }
        if m == 0.0 {
            break;
        }
        let wv = info.apply_inv(&v);
        let grad: Vec<f64> = x
            .iter()
            .map(|xk| {
                let xw: f64 = xk.iter().zip(&wv).map(|(a, b)| a * b).sum();
                -xw * xw
            })
            .collect();
        state.step(&grad, opts.step / ((t + 1) as f64).sqrt());
    }
    let (_, w) = best.expect("at least one iterate");
    state.design(&w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::item::Item;
    use crate::linalg::quad_norm_sq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_arm_rho_design_is_half_half() {
        let gap = 0.5;
        let inst = Instance::explicit(
            ArmSet::canonical(2),
            vec![Item::from_support(2, [0]), Item::from_support(2, [1])],
            vec![gap, 0.0],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (design, rho) = complexity_design(&inst, Complexity::Rho, &GeneralOptions::default(), 200, &mut rng).unwrap();
        assert!((rho - 4.0 / (gap * gap)).abs() <= 0.05 * 4.0 / (gap * gap), "{rho}");
        assert!((design.weights()[0] - 0.5).abs() < 0.05);
        let (_, gamma) = complexity_design(&inst, Complexity::Gamma, &GeneralOptions::default(), 2000, &mut rng).unwrap();
        assert!(gamma > 0.0);
    }

    #[test]
    fn rho_optimum_is_half_half() {
        // X = Z = {e1, e2}, θ = (1, 0): ρ(λ) = 1/λ₁ + 1/λ₂
        let zs = Item::from_support(2, [0]);
        let others = vec![Item::from_support(2, [1])];
        let dirs = DirectionSet::normalized(&zs, &others, vec![1.0], false).unwrap();
        let arms = ArmSet::canonical(2);
        let d = minimize_max_norm(&dirs, &arms, &GeneralOptions::default(), None).unwrap();
        assert!(d.total_variation(&Design::uniform(2)) < 0.05, "{:?}", d.weights());
        let info = design_matrix(&d, &arms, 0.0).unwrap();
        assert!(quad_norm_sq(&[1.0, -1.0], &info).unwrap() <= 4.0 * 1.05);
    }

    #[test]
    fn single_item_keeps_uniform() {
        let items = vec![Item::dense(vec![0.3, 0.9])];
        let dirs = DirectionSet::pairs(&items).unwrap();
        let arms = ArmSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let obj = DesignObjective::Tau {
            dirs: &dirs,
            delta_k: 0.1,
            recipe: TauRecipe::Mixture,
        };
        let d = general_x_optimize(&obj, &arms, &GeneralOptions::default(), &mut rng).unwrap();
        assert!(d.total_variation(&Design::uniform(3)) < 1e-9);
    }

    #[test]
    fn width_moves_weight_to_informative_arm() {
        // items differ only in coordinate 0, so arm e1 carries all the signal
        let items = vec![Item::dense(vec![0.0, 0.0]), Item::dense(vec![1.0, 0.0])];
        let dirs = DirectionSet::pairs(&items).unwrap();
        let arms = ArmSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = minimize_width(&dirs, &arms, &GeneralOptions::default(), 0.0, None, &mut rng).unwrap();
        assert!(d.weights()[0] > 0.9, "{:?}", d.weights());
    }

    #[test]
    fn pathwise_matches_finite_differences_direction() {
        let items: Vec<Item> = (0..4).map(|i| Item::from_support(4, [i])).collect();
        let dirs = DirectionSet::anchored(&items[0], &items).unwrap();
        let arms = ArmSet::new(vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0, 0.0],
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fd = minimize_width(&dirs, &arms, &GeneralOptions::default(), 0.0, None, &mut rng).unwrap();
        let opts = GeneralOptions {
            max_fd_arms: 0,
            iters: 400,
            ..GeneralOptions::default()
        };
        let pw = minimize_width(&dirs, &arms, &opts, 0.0, None, &mut rng).unwrap();
        let batch = EtaBatch::draw(4, 20_000, &mut rng);
        let eval = |d: &Design| dirs.width_with(&design_matrix(d, &arms, 0.0).unwrap(), &batch).unwrap().mean;
        let uniform = eval(&Design::uniform(5));
        assert!(eval(&fd) < uniform);
        assert!(eval(&pw) < uniform);
        assert!((eval(&pw) - eval(&fd)).abs() < 0.05 * uniform);
    }
}
