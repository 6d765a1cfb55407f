//! Problem instances, the Gaussian observation model and least squares.

pub mod rng;
pub mod trials;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::item::{argmax_dot, Item};
use crate::linalg::ArmSet;
use crate::oracles::{unique, ItemOracle};

/// Gaps at or below this are treated as ties.
pub const GAP_TOL: f64 = 1e-12;

/// The candidate set Z.
#[derive(Clone, Debug)]
pub enum ItemSet {
    Explicit(Vec<Item>),
    Oracle(ItemOracle),
}

/// A problem (X, Z, θ) with Gaussian observation noise.
#[derive(Clone, Debug)]
pub struct Instance {
    arms: ArmSet,
    items: ItemSet,
    theta: Vec<f64>,
    noise_sd: f64,
    z_star: Item,
}

impl Instance {
    /// Explicit items; the best item under θ must be unique.
    pub fn explicit(arms: ArmSet, items: Vec<Item>, theta: Vec<f64>) -> Result<Self> {
        check_dim(arms.dim(), theta.len())?;
        if items.is_empty() {
            return Err(Error::InvalidArgument("instance has no items".into()));
        }
        for z in &items {
            check_dim(arms.dim(), z.dim())?;
        }
        let (best, value) = argmax_dot(&items, &theta).expect("nonempty");
        for (i, z) in items.iter().enumerate() {
            if i != best && value - z.dot(&theta) <= GAP_TOL {
                return Err(Error::DegenerateInstance(format!(
                    "items {best} and {i} both attain the maximum {value}"
                )));
            }
        }
        Ok(Self {
            z_star: items[best].clone(),
            arms,
            items: ItemSet::Explicit(items),
            theta,
            noise_sd: 1.0,
        })
    }

    /// Oracle-backed items; uniqueness is checked by single-element bans.
    pub fn with_oracle(arms: ArmSet, oracle: ItemOracle, theta: Vec<f64>) -> Result<Self> {
        check_dim(arms.dim(), theta.len())?;
        check_dim(arms.dim(), oracle.dim())?;
        if let Some(items) = oracle.explicit_items() {
            let inst = Self::explicit(arms, items.to_vec(), theta)?;
            return Ok(Self {
                items: ItemSet::Oracle(oracle),
                ..inst
            });
        }
        let z_star = oracle.maximize(&theta)?;
        if !unique(&oracle, &theta, GAP_TOL)? {
            return Err(Error::DegenerateInstance("best item is not unique".into()));
        }
        Ok(Self {
            arms,
            items: ItemSet::Oracle(oracle),
            theta,
            noise_sd: 1.0,
            z_star,
        })
    }

    pub fn with_noise_sd(mut self, sd: f64) -> Result<Self> {
        if !(sd >= 0.0) || !sd.is_finite() {
            return Err(Error::InvalidArgument(format!("noise sd {sd} must be finite and >= 0")));
        }
        self.noise_sd = sd;
        Ok(self)
    }

    pub fn arms(&self) -> &ArmSet {
        &self.arms
    }

    pub fn items(&self) -> &ItemSet {
        &self.items
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn z_star(&self) -> &Item {
        &self.z_star
    }

    pub fn dim(&self) -> usize {
        self.arms.dim()
    }

    pub fn oracle(&self) -> Option<&ItemOracle> {
        match &self.items {
            ItemSet::Oracle(o) => Some(o),
            ItemSet::Explicit(_) => None,
        }
    }

    pub fn explicit_items(&self) -> Option<&[Item]> {
        match &self.items {
            ItemSet::Explicit(v) => Some(v),
            ItemSet::Oracle(o) => o.explicit_items(),
        }
    }

    /// All items, enumerating the oracle when needed; fails past `limit`.
    pub fn items_up_to(&self, limit: usize) -> Result<Vec<Item>> {
        match &self.items {
            ItemSet::Explicit(v) if v.len() <= limit => Ok(v.clone()),
            ItemSet::Explicit(v) => Err(Error::InvalidArgument(format!(
                "{} items exceed the limit {limit}",
                v.len()
            ))),
            ItemSet::Oracle(o) => o.enumerate(limit),
        }
    }

    /// Δ_z = θᵀ(z* - z).
    pub fn gap(&self, z: &Item) -> f64 {
        self.z_star.dot(&self.theta) - z.dot(&self.theta)
    }
}

/// Items and arms written in orthonormal coordinates of span(X).
///
/// Observations only depend on θ through its projection onto span(X), so
/// algorithms can run in the reduced space whenever Z ⊂ span(X).
#[derive(Clone, Debug)]
pub struct Reduced {
    pub arms: ArmSet,
    pub items: Vec<Item>,
}

pub fn reduce(arms: &ArmSet, items: &[Item]) -> Result<Reduced> {
    let Some(sub) = arms.subspace() else {
        return Ok(Reduced {
            arms: arms.clone(),
            items: items.to_vec(),
        });
    };
    let new_arms = ArmSet::new(arms.arms().iter().map(|a| sub.project(a)).collect())?;
    let mut new_items = Vec::with_capacity(items.len());
    for z in items {
        let p = sub.project(z.values());
        let residual = z.norm_sq() - p.iter().map(|v| v * v).sum::<f64>();
        if residual > 1e-8 * z.norm_sq().max(1.0) {
            return Err(Error::Unsupported("an item lies outside the span of the arms".into()));
        }
        new_items.push(Item::dense(p));
    }
    Ok(Reduced {
        arms: new_arms,
        items: new_items,
    })
}

/// y = ⟨x, θ⟩ + noise_sd·g.
pub fn observe<R: Rng + ?Sized>(instance: &Instance, arm: usize, rng: &mut R) -> Result<f64> {
    let x = instance.arms.arm(arm)?;
    let mean: f64 = x.iter().zip(&instance.theta).map(|(a, b)| a * b).sum();
    let g: f64 = rng.sample(StandardNormal);
    Ok(mean + instance.noise_sd * g)
}

/// Sufficient statistics of one round: pull counts and observation sums per arm.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoundData {
    pub counts: Vec<u64>,
    pub sums: Vec<f64>,
}

impl RoundData {
    pub fn new(n_arms: usize) -> Self {
        Self {
            counts: vec![0; n_arms],
            sums: vec![0.0; n_arms],
        }
    }

    pub fn add(&mut self, arm: usize, y: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += y;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Pull records: batched rounds as sufficient statistics, single pulls as
/// (arm, y) pairs.
#[derive(Clone, Debug, Default)]
pub struct PullLog {
    pub rounds: Vec<RoundData>,
    pub pulls: Vec<(usize, f64)>,
}

/// A seeded environment over an instance. Algorithms see the arms and items
/// through [`Environment::instance`] but only learn about θ through pulls.
pub struct Environment<'a> {
    instance: &'a Instance,
    rng: ChaCha8Rng,
    total: u64,
    log: PullLog,
}

impl<'a> Environment<'a> {
    pub fn new(instance: &'a Instance, seed: u64) -> Self {
        Self {
            instance,
            rng: rng::stream(seed, &[]),
            total: 0,
            log: PullLog::default(),
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn total_samples(&self) -> u64 {
        self.total
    }

    pub fn log(&self) -> &PullLog {
        &self.log
    }

    /// One observation of `arm`.
    pub fn pull(&mut self, arm: usize) -> Result<f64> {
        let y = observe(self.instance, arm, &mut self.rng)?;
        self.total += 1;
        self.log.pulls.push((arm, y));
        Ok(y)
    }

    /// Pulls arm x `counts[x]` times. The sum of c independent observations
    /// is drawn directly as c⟨x,θ⟩ + noise_sd·√c·g.
    pub fn pull_counts(&mut self, counts: &[u64]) -> Result<RoundData> {
        check_dim(self.instance.arms.len(), counts.len())?;
        let mut r = RoundData::new(counts.len());
        for (x, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let arm = self.instance.arms.arm(x)?;
            let mean: f64 = arm.iter().zip(&self.instance.theta).map(|(a, b)| a * b).sum();
            let g: f64 = self.rng.sample(StandardNormal);
            r.counts[x] = c;
            r.sums[x] = c as f64 * mean + self.instance.noise_sd * (c as f64).sqrt() * g;
        }
        self.total += r.total();
        self.log.rounds.push(r.clone());
        Ok(r)
    }
}

/// Least-squares fit; `ridge_used` records whether the fallback engaged.
#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquares {
    pub theta: Vec<f64>,
    pub ridge_used: bool,
}

/// Normal-equations solution (Σ c_x x xᵀ)^{-1} Σ s_x x.
pub fn least_squares(data: &RoundData, arms: &ArmSet) -> Result<Vec<f64>> {
    solve_normal(data, arms, 0.0)
}

/// Least squares that falls back to a small ridge when the pulled arms do
/// not span R^d.
pub fn least_squares_with_fallback(data: &RoundData, arms: &ArmSet) -> Result<LeastSquares> {
    match solve_normal(data, arms, 0.0) {
        Ok(theta) => Ok(LeastSquares {
            theta,
            ridge_used: false,
        }),
        Err(Error::RankDeficient(_)) => {
            let total = data.total().max(1) as f64;
            let theta = solve_normal(data, arms, 1e-8 * total)?;
            Ok(LeastSquares {
                theta,
                ridge_used: true,
            })
        }
        Err(e) => Err(e),
    }
}

fn solve_normal(data: &RoundData, arms: &ArmSet, ridge: f64) -> Result<Vec<f64>> {
    check_dim(arms.len(), data.counts.len())?;
    check_dim(arms.len(), data.sums.len())?;
    let d = arms.dim();
    if arms.is_canonical_basis() {
        return data
            .counts
            .iter()
            .zip(&data.sums)
            .map(|(&c, &s)| {
                let den = c as f64 + ridge;
                if den > 0.0 {
                    Ok(s / den)
                } else {
                    Err(Error::RankDeficient("an arm was never pulled".into()))
                }
            })
            .collect();
    }
    let mut g = DMatrix::<f64>::identity(d, d) * ridge;
    let mut r = DVector::<f64>::zeros(d);
    for ((x, &c), &s) in arms.arms().iter().zip(&data.counts).zip(&data.sums) {
        if c == 0 {
            continue;
        }
        let v = DVector::from_column_slice(x);
        g += (c as f64) * &v * v.transpose();
        r += s * v;
    }
    let scale = g.diagonal().max().max(f64::MIN_POSITIVE);
    let eig = g.clone().symmetric_eigen();
    if eig.eigenvalues.min() <= 1e-12 * scale {
        return Err(Error::RankDeficient("pulled arms do not span the space".into()));
    }
    let chol = g
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("normal equations are not positive definite".into()))?;
    Ok(chol.solve(&r).as_slice().to_vec())
}
