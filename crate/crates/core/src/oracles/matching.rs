//! Maximum-weight perfect matching on K_{n,n} (edge u→v has id u·n + v).

use crate::error::{Error, Result};

/// Assignment of rows to columns maximizing Σ w[row·n + col].
///
/// Shortest augmenting path Hungarian method with potentials, O(n³).
pub fn max_weight_assignment(n: usize, w: &[f64]) -> Result<Vec<usize>> {
    if w.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: w.len(),
        });
    }
    if n == 0 {
        return Err(Error::InfeasibleStructure("empty bipartite graph".into()));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Oracle("non-finite edge weight".into()));
    }
    // minimize cost = -w; 1-based rows/cols with a virtual column 0
    let cost = |i: usize, j: usize| -w[(i - 1) * n + (j - 1)];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == 0 {
                return Err(Error::Oracle("assignment search stalled".into()));
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    Ok(assign)
}

/// Calls `f` on every permutation of 0..n (row → column), stopping early when
/// `f` returns false.
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize]) -> bool) {
    fn rec(k: usize, perm: &mut Vec<usize>, used: &mut [bool], f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        let n = used.len();
        if k == n {
            return f(perm);
        }
        for c in 0..n {
            if used[c] {
                continue;
            }
            used[c] = true;
            perm.push(c);
            let go = rec(k + 1, perm, used, f);
            perm.pop();
            used[c] = false;
            if !go {
                return false;
            }
        }
        true
    }
    let mut used = vec![false; n];
    rec(0, &mut Vec::with_capacity(n), &mut used, &mut f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_by_two_diagonal() {
        assert_eq!(max_weight_assignment(2, &[1.0, 0.0, 0.0, 1.0]).unwrap(), vec![0, 1]);
        assert_eq!(max_weight_assignment(2, &[0.0, 1.0, 1.0, 0.0]).unwrap(), vec![1, 0]);
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=5 {
            for _ in 0..30 {
                let w: Vec<f64> = (0..n * n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let a = max_weight_assignment(n, &w).unwrap();
                let got: f64 = a.iter().enumerate().map(|(r, &c)| w[r * n + c]).sum();
                let mut best = f64::NEG_INFINITY;
                for_each_permutation(n, |p| {
                    let s: f64 = p.iter().enumerate().map(|(r, &c)| w[r * n + c]).sum();
                    best = best.max(s);
                    true
                });
                assert!((got - best).abs() < 1e-9, "n={n}: {got} vs {best}");
            }
        }
    }

    #[test]
    fn permutation_count() {
        let mut c = 0;
        for_each_permutation(4, |_| {
            c += 1;
            true
        });
        assert_eq!(c, 24);
    }
}
