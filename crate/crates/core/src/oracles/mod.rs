//! Linear maximization oracles over item sets: argmax_{z ∈ Z} ⟨z, w⟩.

pub mod dag;
pub mod matching;

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::item::{argmax_dot, Item};

pub use dag::Dag;

type IndependenceFn = dyn Fn(&[usize]) -> bool + Send + Sync;

/// A matroid on ground set {0..n} given by an independence test. Items are
/// its bases.
#[derive(Clone)]
pub struct Matroid {
    ground: usize,
    independent: Arc<IndependenceFn>,
}

impl Matroid {
    pub fn new(ground: usize, independent: impl Fn(&[usize]) -> bool + Send + Sync + 'static) -> Self {
        Self {
            ground,
            independent: Arc::new(independent),
        }
    }

    pub fn uniform(ground: usize, rank: usize) -> Self {
        Self::new(ground, move |s| s.len() <= rank)
    }

    /// `block[e]` names the block of element e; at most `capacity[b]`
    /// elements may be taken from block b.
    pub fn partition(block: Vec<usize>, capacity: Vec<usize>) -> Self {
        let ground = block.len();
        Self::new(ground, move |s| {
            let mut used = vec![0usize; capacity.len()];
            s.iter().all(|&e| {
                used[block[e]] += 1;
                used[block[e]] <= capacity[block[e]]
            })
        })
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        (self.independent)(set)
    }

    /// Greedy maximum-weight basis; heavier elements first, lower index on ties.
    pub fn greedy(&self, w: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.ground).collect();
        order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        let mut basis = Vec::new();
        for e in order {
            basis.push(e);
            if !self.is_independent(&basis) {
                basis.pop();
            }
        }
        basis.sort_unstable();
        basis
    }
}

impl fmt::Debug for Matroid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matroid{{ground: {}}}", self.ground)
    }
}

#[derive(Clone, Debug)]
pub enum OracleKind {
    Explicit(Vec<Item>),
    TopK { k: usize },
    MatroidGreedy(Matroid),
    /// Perfect matchings of K_{side,side}; edge u→v is coordinate u·side + v.
    BipartiteMatching { side: usize },
    DagPath(Dag),
}

/// Answers argmax_{z ∈ Z} ⟨z, w⟩ for a fixed item family Z ⊂ R^d.
#[derive(Clone, Debug)]
pub struct ItemOracle {
    kind: OracleKind,
    dim: usize,
}

impl ItemOracle {
    pub fn explicit(items: Vec<Item>) -> Result<Self> {
        let dim = items
            .first()
            .map(Item::dim)
            .ok_or_else(|| Error::InvalidArgument("empty item list".into()))?;
        for z in &items {
            check_dim(dim, z.dim())?;
        }
        Ok(Self {
            kind: OracleKind::Explicit(items),
            dim,
        })
    }

    pub fn top_k(dim: usize, k: usize) -> Result<Self> {
        if k == 0 || k > dim {
            return Err(Error::InfeasibleStructure(format!("top-{k} of {dim} elements")));
        }
        Ok(Self {
            kind: OracleKind::TopK { k },
            dim,
        })
    }

    pub fn matroid(matroid: Matroid) -> Self {
        let dim = matroid.ground();
        Self {
            kind: OracleKind::MatroidGreedy(matroid),
            dim,
        }
    }

    pub fn matching(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::InfeasibleStructure("matching needs at least one node per side".into()));
        }
        Ok(Self {
            kind: OracleKind::BipartiteMatching { side },
            dim: side * side,
        })
    }

    pub fn dag_path(dag: Dag) -> Self {
        let dim = dag.n_edges();
        Self {
            kind: OracleKind::DagPath(dag),
            dim,
        }
    }

    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.kind, OracleKind::Explicit(_))
    }

    pub fn explicit_items(&self) -> Option<&[Item]> {
        match &self.kind {
            OracleKind::Explicit(items) => Some(items),
            _ => None,
        }
    }

    /// A maximizer of ⟨z, w⟩ over Z.
    pub fn maximize(&self, w: &[f64]) -> Result<Item> {
        check_dim(self.dim, w.len())?;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Oracle("non-finite weight vector".into()));
        }
        let d = self.dim;
        match &self.kind {
            OracleKind::Explicit(items) => {
                let (i, _) = argmax_dot(items, w).expect("nonempty");
                Ok(items[i].clone())
            }
            OracleKind::TopK { k } => {
                let mut order: Vec<usize> = (0..d).collect();
                order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
                Ok(Item::from_support(d, order.into_iter().take(*k)))
            }
            OracleKind::MatroidGreedy(m) => Ok(Item::from_support(d, m.greedy(w))),
            OracleKind::BipartiteMatching { side } => {
                let a = matching::max_weight_assignment(*side, w)?;
                Ok(Item::from_support(
                    d,
                    a.iter().enumerate().map(|(u, &v)| u * side + v),
                ))
            }
            OracleKind::DagPath(g) => Ok(Item::from_support(d, g.longest_path(w)?)),
        }
    }

    /// Every member of Z, failing when there are more than `limit`.
    pub fn enumerate(&self, limit: usize) -> Result<Vec<Item>> {
        let d = self.dim;
        let too_many = || Error::InvalidArgument(format!("item set has more than {limit} members"));
        match &self.kind {
            OracleKind::Explicit(items) => {
                if items.len() > limit {
                    return Err(too_many());
                }
                Ok(items.clone())
            }
            OracleKind::TopK { k } => {
                let m = Matroid::uniform(d, *k);
                enumerate_bases(&m, limit)
            }
            OracleKind::MatroidGreedy(m) => enumerate_bases(m, limit),
            OracleKind::BipartiteMatching { side } => {
                let mut out = Vec::new();
                let mut overflow = false;
                matching::for_each_permutation(*side, |p| {
                    if out.len() >= limit {
                        overflow = true;
                        return false;
                    }
                    out.push(Item::from_support(d, p.iter().enumerate().map(|(u, &v)| u * side + v)));
                    true
                });
                if overflow {
                    return Err(too_many());
                }
                Ok(out)
            }
            OracleKind::DagPath(g) => Ok(g
                .enumerate_paths(limit)?
                .into_iter()
                .map(|p| Item::from_support(d, p))
                .collect()),
        }
    }
}

fn enumerate_bases(m: &Matroid, limit: usize) -> Result<Vec<Item>> {
    let n = m.ground();
    if n > 24 {
        return Err(Error::Unsupported(format!("enumerating bases over {n} elements")));
    }
    let mut independent: Vec<Vec<usize>> = Vec::new();
    let mut rank = 0;
    for mask in 0u32..(1u32 << n) {
        let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if m.is_independent(&set) {
            rank = rank.max(set.len());
            independent.push(set);
        }
    }
    let mut bases: Vec<Vec<usize>> = independent.into_iter().filter(|s| s.len() == rank).collect();
    bases.sort();
    if bases.len() > limit {
        return Err(Error::InvalidArgument(format!("item set has more than {limit} members")));
    }
    Ok(bases.into_iter().map(|s| Item::from_support(n, s)).collect())
}

/// Coordinate value that keeps a banned element out of every maximizer.
pub fn exclusion_sentinel(theta: &[f64]) -> f64 {
    let big = theta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    -(1.0 + theta.len() as f64 * big) * 4.0
}

/// Checks that the empirical best item beats every single-element-banned
/// alternative by more than `b`.
///
/// Elements whose ban cannot be honored (every item contains them) are
/// skipped.
pub fn unique(oracle: &ItemOracle, theta: &[f64], b: f64) -> Result<bool> {
    Ok(unique_with_best(oracle, theta, b)?.0)
}

/// Like [`unique`], also returning the empirical best item.
pub fn unique_with_best(oracle: &ItemOracle, theta: &[f64], b: f64) -> Result<(bool, Item)> {
    if !(b >= 0.0) {
        return Err(Error::InvalidArgument(format!("margin {b} < 0")));
    }
    let best = oracle.maximize(theta)?;
    let support = best
        .support()
        .ok_or_else(|| Error::Unsupported("uniqueness test needs 0/1 items".into()))?
        .to_vec();
    let sentinel = exclusion_sentinel(theta);
    let best_val = best.dot(theta);
    let mut banned = theta.to_vec();
    for i in support {
        banned[i] = sentinel;
        let alt = oracle.maximize(&banned)?;
        banned[i] = theta[i];
        if alt.values()[i] != 0.0 {
            continue;
        }
        if best_val - alt.dot(theta) - b <= 0.0 {
            return Ok((false, best));
        }
    }
    Ok((true, best))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_sorts_and_takes() {
        let o = ItemOracle::top_k(4, 2).unwrap();
        let z = o.maximize(&[3.0, 1.0, 2.0, 0.0]).unwrap();
        assert_eq!(z.support().unwrap(), &[0, 2]);
        // ties go to lower indices
        let z = o.maximize(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(z.support().unwrap(), &[0, 1]);
    }

    #[test]
    fn matching_two_by_two() {
        let o = ItemOracle::matching(2).unwrap();
        let z = o.maximize(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(z.support().unwrap(), &[0, 3]);
        assert_eq!(o.enumerate(10).unwrap().len(), 2);
        assert!(o.enumerate(1).is_err());
    }

    #[test]
    fn unique_top1() {
        let o = ItemOracle::top_k(2, 1).unwrap();
        assert!(unique(&o, &[1.0, 0.5], 0.4).unwrap());
        assert!(!unique(&o, &[1.0, 0.5], 0.6).unwrap());
    }

    #[test]
    fn unique_top2_binding_swap() {
        let o = ItemOracle::top_k(4, 2).unwrap();
        let theta = [4.0, 3.0, 2.0, 1.0];
        assert!(unique(&o, &theta, 0.9).unwrap());
        assert!(!unique(&o, &theta, 1.1).unwrap());
        // enumeration: smallest gap to any other pair
        let items = o.enumerate(100).unwrap();
        let best = o.maximize(&theta).unwrap().dot(&theta);
        let gap = items
            .iter()
            .map(|z| best - z.dot(&theta))
            .filter(|g| *g > 0.0)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(gap, 1.0);
    }

    #[test]
    fn unique_skips_forced_elements() {
        // k = d leaves a single item; nothing can be banned
        let o = ItemOracle::top_k(3, 3).unwrap();
        assert!(unique(&o, &[1.0, 2.0, 3.0], 10.0).unwrap());
    }

    #[test]
    fn sentinel_magnitude() {
        assert_eq!(exclusion_sentinel(&[1.0, -2.0]), -(1.0 + 2.0 * 2.0) * 4.0);
    }

    #[test]
    fn partition_matroid_greedy() {
        let m = Matroid::partition(vec![0, 0, 1, 1, 1], vec![1, 2]);
        let basis = m.greedy(&[1.0, 2.0, -1.0, 5.0, 0.0]);
        assert_eq!(basis, vec![1, 3, 4]);
        assert_eq!(enumerate_bases(&m, 100).unwrap().len(), 2 * 3);
    }

    #[test]
    fn infeasible_structures() {
        assert!(matches!(ItemOracle::top_k(3, 0), Err(Error::InfeasibleStructure(_))));
        assert!(matches!(ItemOracle::matching(0), Err(Error::InfeasibleStructure(_))));
        let o = ItemOracle::top_k(3, 1).unwrap();
        assert!(matches!(o.maximize(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }
}
