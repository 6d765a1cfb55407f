//! Arm sets, designs and the information matrix A(λ) = Σ λ_x x xᵀ.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

/// Relative eigenvalue threshold below which an unregularized design is
/// considered singular.
const SINGULAR_RTOL: f64 = 1e-12;

/// The measurement set X. Arms are addressed by their position (stable id).
#[derive(Clone, Debug, PartialEq)]
pub struct ArmSet {
    arms: Vec<Vec<f64>>,
    dim: usize,
    canonical: bool,
}

impl ArmSet {
    pub fn new(arms: Vec<Vec<f64>>) -> Result<Self> {
        let dim = arms
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("arm set is empty".into()))?;
        if dim == 0 {
            return Err(Error::InvalidArgument("arms have dimension 0".into()));
        }
        for a in &arms {
            check_dim(dim, a.len())?;
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("arm has a non-finite entry".into()));
            }
        }
        let canonical = arms.len() == dim
            && arms.iter().enumerate().all(|(i, a)| {
                a.iter()
                    .enumerate()
                    .all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 })
            });
        Ok(Self {
            arms,
            dim,
            canonical,
        })
    }

    /// X = {e_1, ..., e_d}.
    pub fn canonical(dim: usize) -> Self {
        let arms = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
        Self {
            arms,
            dim,
            canonical: true,
        }
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_canonical_basis(&self) -> bool {
        self.canonical
    }

    pub fn arm(&self, id: usize) -> Result<&[f64]> {
        self.arms
            .get(id)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownArm(id))
    }

    pub fn arms(&self) -> &[Vec<f64>] {
        &self.arms
    }

    /// Orthonormal basis of span(X) when it is a proper subspace of R^d.
    pub fn subspace(&self) -> Option<Subspace> {
        let d = self.dim;
        let mut gram = DMatrix::<f64>::zeros(d, d);
        for a in &self.arms {
            let v = DVector::from_column_slice(a);
            gram += &v * v.transpose();
        }
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..d)
            .filter(|&i| eig.eigenvalues[i] > 1e-10 * top.max(1e-300))
            .collect();
        if keep.len() == d {
            return None;
        }
        let basis = DMatrix::from_fn(d, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
        Some(Subspace { basis })
    }
}

/// Orthonormal coordinates for a subspace of R^d.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Coordinates of the orthogonal projection of `v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        (self.basis.transpose() * v).as_slice().to_vec()
    }
}

/// A probability vector over arms, optionally with a minimum weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    weights: Vec<f64>,
    support_floor: f64,
}

impl Design {
    pub fn new(weights: Vec<f64>, support_floor: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("design has no weights".into()));
        }
        if !(support_floor >= 0.0) || support_floor * weights.len() as f64 > 1.0 + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "support floor {support_floor} infeasible for {} arms",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("design weights must be finite and >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("design weights sum to {total}")));
        }
        if support_floor > 0.0 && weights.iter().any(|&w| w < support_floor - 1e-12) {
            return Err(Error::InvalidArgument("design weight below its support floor".into()));
        }
        Ok(Self {
            weights,
            support_floor,
        })
    }

    /// Normalizes nonnegative weights.
    pub fn from_unnormalized(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidArgument("weights do not have a positive sum".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect(), 0.0)
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
            support_floor: 0.0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support_floor(&self) -> f64 {
        self.support_floor
    }

    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if self.weights.iter().any(|&w| w < floor - 1e-12) {
            return Err(Error::InvalidArgument("design weight below requested floor".into()));
        }
        self.support_floor = floor;
        Ok(self)
    }

    /// (1 - t)·self + t·other.
    pub fn mix(&self, other: &Design, t: f64) -> Result<Design> {
        check_dim(self.len(), other.len())?;
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        Ok(Design {
            weights,
            support_floor: (1.0 - t) * self.support_floor + t * other.support_floor,
        })
    }

    pub fn total_variation(&self, other: &Design) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Diagonal {
        diag: Vec<f64>,
        inv_sqrt: Vec<f64>,
    },
    Dense {
        a: DMatrix<f64>,
        a_inv: DMatrix<f64>,
        a_inv_sqrt: DMatrix<f64>,
    },
}

/// A(λ) together with its inverse and inverse square root.
#[derive(Clone, Debug)]
pub struct DesignInfo {
    repr: Repr,
    ridge: f64,
    dim: usize,
}

/// Builds A(λ) + ridge·I. Canonical arm sets take the diagonal path.
pub fn design_matrix(design: &Design, arms: &ArmSet, ridge: f64) -> Result<DesignInfo> {
    check_dim(arms.len(), design.len())?;
    if !(ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!("ridge {ridge} < 0")));
    }
    let d = arms.dim();
    if arms.is_canonical_basis() {
        let diag: Vec<f64> = design.weights().iter().map(|w| w + ridge).collect();
        if let Some(i) = diag.iter().position(|&v| v <= 0.0) {
            return Err(Error::RankDeficient(format!("arm {i} has zero weight")));
        }
        let inv_sqrt = diag.iter().map(|v| v.sqrt().recip()).collect();
        return Ok(DesignInfo {
            repr: Repr::Diagonal { diag, inv_sqrt },
            ridge,
            dim: d,
        });
    }
    let mut a = DMatrix::<f64>::identity(d, d) * ridge;
    for (x, &w) in arms.arms().iter().zip(design.weights()) {
        if w == 0.0 {
            continue;
        }
        for r in 0..d {
            let wr = w * x[r];
            if wr == 0.0 {
                continue;
            }
            for c in 0..d {
                a[(r, c)] += wr * x[c];
            }
        }
    }
    from_matrix(a, ridge)
}

/// Uses the unregularized matrix when it is well conditioned and otherwise
/// falls back to ridge = 1e-10·trace(A)/d.
pub fn design_matrix_auto(design: &Design, arms: &ArmSet) -> Result<DesignInfo> {
    match design_matrix(design, arms, 0.0) {
        Err(Error::RankDeficient(_)) => {
            let trace: f64 = arms
                .arms()
                .iter()
                .zip(design.weights())
                .map(|(x, w)| w * x.iter().map(|v| v * v).sum::<f64>())
                .sum();
            design_matrix(design, arms, 1e-10 * trace / arms.dim() as f64)
        }
        other => other,
    }
}

fn from_matrix(a: DMatrix<f64>, ridge: f64) -> Result<DesignInfo> {
    let d = a.nrows();
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if top <= 0.0 {
        return Err(Error::RankDeficient("design matrix is zero".into()));
    }
    let floor = if ridge > 0.0 {
        ridge
    } else {
        let low = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if low <= SINGULAR_RTOL * top {
            return Err(Error::RankDeficient(format!(
                "smallest eigenvalue {low:e} vs largest {top:e}"
            )));
        }
        0.0
    };
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(floor)).collect();
    let q = &eig.eigenvectors;
    let scaled = |f: &dyn Fn(f64) -> f64| {
        let mut m = q.clone();
        for (j, &v) in vals.iter().enumerate() {
            let s = f(v);
            m.column_mut(j).scale_mut(s);
        }
        let out = &m * q.transpose();
        // symmetrize against round-off
        (&out + out.transpose()) * 0.5
    };
    let a_inv = scaled(&|v| 1.0 / v);
    let a_inv_sqrt = scaled(&|v| 1.0 / v.sqrt());
    let a = (&a + a.transpose()) * 0.5;
    Ok(DesignInfo {
        repr: Repr::Dense {
            a,
            a_inv,
            a_inv_sqrt,
        },
        ridge,
        dim: d,
    })
}

impl DesignInfo {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal { .. })
    }

    /// Diagonal of A on the fast path.
    pub fn diagonal(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Diagonal { diag, .. } => Some(diag),
            Repr::Dense { .. } => None,
        }
    }

    pub fn a(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Diagonal { diag, .. } => DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
            Repr::Dense { a, .. } => a.clone(),
        }
    }

    pub fn a_inv(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Diagonal { diag, .. } => {
                DMatrix::from_diagonal(&DVector::from_iterator(diag.len(), diag.iter().map(|v| 1.0 / v)))
            }
            Repr::Dense { a_inv, .. } => a_inv.clone(),
        }
    }

    pub fn a_inv_sqrt(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Diagonal { inv_sqrt, .. } => {
                DMatrix::from_diagonal(&DVector::from_column_slice(inv_sqrt))
            }
            Repr::Dense { a_inv_sqrt, .. } => a_inv_sqrt.clone(),
        }
    }

    /// A^{-1/2} η.
    pub fn apply_inv_sqrt(&self, eta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply_inv_sqrt_into(eta, &mut out);
        out
    }

    pub fn apply_inv_sqrt_into(&self, eta: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::Diagonal { inv_sqrt, .. } => {
                for ((o, e), s) in out.iter_mut().zip(eta).zip(inv_sqrt) {
                    *o = e * s;
                }
            }
            Repr::Dense { a_inv_sqrt, .. } => mat_vec(a_inv_sqrt, eta, out),
        }
    }

    /// A^{-1} v.
    pub fn apply_inv(&self, v: &[f64]) -> Vec<f64> {
        match &self.repr {
            Repr::Diagonal { diag, .. } => v.iter().zip(diag).map(|(x, a)| x / a).collect(),
            Repr::Dense { a_inv, .. } => {
                let mut out = vec![0.0; self.dim];
                mat_vec(a_inv, v, &mut out);
                out
            }
        }
    }

    /// vᵀ A^{-1} v without dimension checks.
    pub fn norm_sq(&self, v: &[f64]) -> f64 {
        match &self.repr {
            Repr::Diagonal { diag, .. } => v.iter().zip(diag).map(|(x, a)| x * x / a).sum(),
            Repr::Dense { a_inv, .. } => {
                let d = self.dim;
                let mut s = 0.0;
                for r in 0..d {
                    if v[r] == 0.0 {
                        continue;
                    }
                    let mut row = 0.0;
                    for c in 0..d {
                        row += a_inv[(r, c)] * v[c];
                    }
                    s += v[r] * row;
                }
                s.max(0.0)
            }
        }
    }
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    let d = m.nrows();
    out.iter_mut().for_each(|o| *o = 0.0);
    // column-major storage: accumulate column by column
    for c in 0..m.ncols() {
        let vc = v[c];
        if vc == 0.0 {
            continue;
        }
        let col = m.column(c);
        for r in 0..d {
            out[r] += col[r] * vc;
        }
    }
}

/// ‖v‖²_{A(λ)^{-1}}.
pub fn quad_norm_sq(v: &[f64], info: &DesignInfo) -> Result<f64> {
    check_dim(info.dim(), v.len())?;
    Ok(info.norm_sq(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rotated() -> ArmSet {
        let t = 3.0 * std::f64::consts::FRAC_PI_4;
        ArmSet::new(vec![vec![1.0, 0.0], vec![t.cos(), t.sin()]]).unwrap()
    }

    #[test]
    fn diagonal_half_half() {
        let info = design_matrix(&Design::uniform(2), &ArmSet::canonical(2), 0.0).unwrap();
        assert!(info.is_diagonal());
        let s = info.a_inv_sqrt();
        assert_relative_eq!(s[(0, 0)], 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(s[(1, 1)], 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(info.a()[(0, 0)], 0.5);
    }

    #[test]
    fn zero_column_is_rank_deficient() {
        let d = Design::new(vec![1.0, 0.0], 0.0).unwrap();
        let err = design_matrix(&d, &ArmSet::canonical(2), 0.0).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
        // same through the dense path
        let arms = ArmSet::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            design_matrix(&d, &arms, 0.0),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn rotated_pair_matches_hand_arithmetic() {
        let info = design_matrix(&Design::uniform(2), &rotated(), 0.0).unwrap();
        let a = info.a();
        // 0.5·e1e1ᵀ + 0.5·(c,s)(c,s)ᵀ with c = -s = -1/√2
        assert_relative_eq!(a[(0, 0)], 0.75, epsilon = 1e-12);
        assert_relative_eq!(a[(0, 1)], -0.25, epsilon = 1e-12);
        assert_relative_eq!(a[(1, 0)], -0.25, epsilon = 1e-12);
        assert_relative_eq!(a[(1, 1)], 0.25, epsilon = 1e-12);
        let s = info.a_inv_sqrt();
        let err = (&s * &s - info.a_inv()).norm() / info.a_inv().norm();
        assert!(err < 1e-6);
        // closed-form 2×2 inverse
        let det = 0.75 * 0.25 - 0.25 * 0.25;
        assert_relative_eq!(info.a_inv()[(0, 0)], 0.25 / det, epsilon = 1e-9);
        assert_relative_eq!(info.a_inv()[(0, 1)], 0.25 / det, epsilon = 1e-9);
    }

    #[test]
    fn quad_norm_examples() {
        let info = design_matrix(&Design::uniform(2), &ArmSet::canonical(2), 0.0).unwrap();
        assert_eq!(quad_norm_sq(&[0.0, 0.0], &info).unwrap(), 0.0);
        assert_relative_eq!(quad_norm_sq(&[1.0, -1.0], &info).unwrap(), 4.0, epsilon = 1e-12);
        assert!(matches!(
            quad_norm_sq(&[1.0], &info),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn random_problem(rng: &mut ChaCha8Rng, d: usize, n: usize) -> (ArmSet, Design) {
        let arms: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        (ArmSet::new(arms).unwrap(), Design::from_unnormalized(&w).unwrap())
    }

    #[test]
    fn quad_norm_matches_linear_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let (arms, design) = random_problem(&mut rng, 4, 7);
            let info = design_matrix(&design, &arms, 0.0).unwrap();
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            // independent oracle: LU solve of the raw matrix
            let mut a = DMatrix::<f64>::zeros(4, 4);
            for (x, w) in arms.arms().iter().zip(design.weights()) {
                let x = DVector::from_column_slice(x);
                a += &x * x.transpose() * *w;
            }
            let vv = DVector::from_column_slice(&v);
            let y = a.lu().solve(&vv).unwrap();
            let expect = vv.dot(&y);
            let got = quad_norm_sq(&v, &info).unwrap();
            assert_relative_eq!(got, expect, max_relative = 1e-8);
        }
    }

    #[test]
    fn inverse_sqrt_is_symmetric_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (arms, design) = random_problem(&mut rng, 5, 9);
            let info = design_matrix(&design, &arms, 0.0).unwrap();
            let s = info.a_inv_sqrt();
            assert!((&s - s.transpose()).norm() < 1e-9);
            let inv = info.a_inv();
            assert!((&s * &s - &inv).norm() / inv.norm() < 1e-6);
            let a = info.a();
            assert!((&a - a.transpose()).norm() < 1e-9);
        }
    }

    #[test]
    fn mixing_with_uniform_at_most_doubles_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (arms, design) = random_problem(&mut rng, 3, 6);
            let mixed = design.mix(&Design::uniform(6), 0.5).unwrap();
            let i0 = design_matrix(&design, &arms, 0.0).unwrap();
            let i1 = design_matrix(&mixed, &arms, 0.0).unwrap();
            for _ in 0..10 {
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                assert!(i1.norm_sq(&v) <= 2.0 * i0.norm_sq(&v) * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn diagonal_and_dense_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let canon = ArmSet::canonical(4);
        // same vectors, but flagged as a general set by appending a duplicate arm with zero weight
        let mut rows = canon.arms().to_vec();
        rows.push(vec![1.0, 0.0, 0.0, 0.0]);
        let general = ArmSet::new(rows).unwrap();
        assert!(!general.is_canonical_basis());
        for _ in 0..10 {
            let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0)).collect();
            let d4 = Design::from_unnormalized(&w).unwrap();
            let mut w5 = d4.weights().to_vec();
            w5.push(0.0);
            let d5 = Design::new(w5, 0.0).unwrap();
            let fast = design_matrix(&d4, &canon, 0.0).unwrap();
            let slow = design_matrix(&d5, &general, 0.0).unwrap();
            assert!((fast.a_inv_sqrt() - slow.a_inv_sqrt()).norm() < 1e-9);
            assert!((fast.a_inv() - slow.a_inv()).norm() < 1e-9);
        }
    }

    #[test]
    fn auto_ridge_handles_rank_deficient_sets() {
        let arms = ArmSet::new(vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let info = design_matrix_auto(&Design::uniform(2), &arms).unwrap();
        assert!(info.ridge() > 0.0);
        let sub = arms.subspace().unwrap();
        assert_eq!(sub.rank(), 2);
        assert!(ArmSet::canonical(3).subspace().is_none());
    }

    #[test]
    fn design_validation() {
        assert!(Design::new(vec![0.5, 0.6], 0.0).is_err());
        assert!(Design::new(vec![-0.1, 1.1], 0.0).is_err());
        assert!(Design::new(vec![0.1, 0.9], 0.25).is_err());
        assert!(Design::new(vec![0.3, 0.7], 0.25).is_ok());
        assert!(ArmSet::new(vec![]).is_err());
        assert!(ArmSet::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
