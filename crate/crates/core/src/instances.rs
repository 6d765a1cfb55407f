//! Generators for the benchmark instances: bipartite matchings, paths through
//! two feed-forward networks, multivariate layouts, the arc-shaped linear
//! bandit and planted bicliques.

use std::f64::consts::PI;

use rand::Rng;

use crate::algorithms::Algorithm;
use crate::env::Instance;
use crate::error::{Error, Result};
use crate::item::Item;
use crate::linalg::ArmSet;
use crate::oracles::{Dag, ItemOracle};

/// Largest explicit item family a generator will enumerate.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

fn check_gap(h: f64) -> Result<()> {
    if h.is_nan() || h >= 1.0 {
        return Err(Error::InvalidArgument(format!("gap h = {h} must lie in (0,1)")));
    }
    if h <= 0.0 {
        return Err(Error::DegenerateInstance(format!("gap h = {h} leaves the best item tied")));
    }
    Ok(())
}

/// Two arms e₁, e₂ with θ = (Δ, 0); the items are the arms themselves.
pub fn gen_two_arm(gap: f64) -> Result<Instance> {
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::DegenerateInstance(format!("gap {gap} must be positive")));
    }
    Instance::explicit(
        ArmSet::canonical(2),
        vec![Item::from_support(2, [0]), Item::from_support(2, [1])],
        vec![gap, 0.0],
    )
}

/// Perfect matchings of K_{side,side}. Edge (u, v) is coordinate u·side + v.
/// The identity matching has weight 1 per edge, its cyclic shift by one has
/// 1 - h, and every other edge 0.
pub fn gen_matching(side: usize, h: f64) -> Result<Instance> {
    if side < 2 {
        return Err(Error::InvalidArgument("matching needs side >= 2".into()));
    }
    check_gap(h)?;
    let mut theta = vec![0.0; side * side];
    for u in 0..side {
        theta[u * side + u] = 1.0;
        theta[u * side + (u + 1) % side] = 1.0 - h;
    }
    Instance::with_oracle(ArmSet::canonical(side * side), ItemOracle::matching(side)?, theta)
}

/// Edge list of source → two networks of `layers` width-2 layers → sink.
/// Node 0 is the source, node 1 the sink, and node 2 + 2(n·layers + l) + p
/// sits at position p of layer l in network n. Returns the edges with the
/// ids of the all-bottom path of network 0 and the all-top path of network 1.
pub fn two_network_dag(layers: usize) -> Result<(Dag, Vec<usize>, Vec<usize>)> {
    if layers == 0 {
        return Err(Error::InvalidArgument("need at least one layer".into()));
    }
    let node = |n: usize, l: usize, p: usize| 2 + 2 * (n * layers + l) + p;
    let mut edges = Vec::with_capacity(2 * (4 * layers));
    let mut paths = [Vec::new(), Vec::new()];
    for n in 0..2 {
        let keep = n; // position followed by the marked path of this network
        for p in 0..2 {
            if p == keep {
                paths[n].push(edges.len());
            }
            edges.push((0, node(n, 0, p)));
        }
        for l in 1..layers {
            for a in 0..2 {
                for b in 0..2 {
                    if a == keep && b == keep {
                        paths[n].push(edges.len());
                    }
                    edges.push((node(n, l - 1, a), node(n, l, b)));
                }
            }
        }
        for p in 0..2 {
            if p == keep {
                paths[n].push(edges.len());
            }
            edges.push((node(n, layers - 1, p), 1));
        }
    }
    let [p1, p2] = paths;
    Ok((Dag::new(2 + 4 * layers, edges, 0, 1)?, p1, p2))
}

/// Source-sink paths through two disjoint width-2 networks; θ is 1 on one
/// path, 1 - h on a path of the other network and -1 on all other edges.
pub fn gen_shortest_path(layers: usize, h: f64) -> Result<Instance> {
    check_gap(h)?;
    let (dag, p1, p2) = two_network_dag(layers)?;
    let mut theta = vec![-1.0; dag.n_edges()];
    for &e in &p1 {
        theta[e] = 1.0;
    }
    for &e in &p2 {
        theta[e] = 1.0 - h;
    }
    let d = dag.n_edges();
    Instance::with_oracle(ArmSet::canonical(d), ItemOracle::dag_path(dag), theta)
}

/// Sparse reward weights of a multivariate layout model. Options and levels
/// are 0-based.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LayoutWeights {
    pub intercept: f64,
    /// ((option, level), weight)
    pub main: Vec<((usize, usize), f64)>,
    /// ((option i, option j, level of i, level of j), weight) with i < j
    pub pair: Vec<((usize, usize, usize, usize), f64)>,
}

impl LayoutWeights {
    /// 0.8 on levels (0, 0) of options (0, 1) and 0.1 on levels (0, 0) of
    /// options (1, 2).
    pub fn benchmark() -> Self {
        Self {
            intercept: 0.0,
            main: Vec::new(),
            pair: vec![((0, 1, 0, 0), 0.8), ((1, 2, 0, 0), 0.1)],
        }
    }
}

/// Feature layout of the multivariate model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayoutFeatures {
    pub options: usize,
    pub levels: usize,
}

impl LayoutFeatures {
    pub fn dim(&self) -> usize {
        1 + self.options * self.levels + self.options * (self.options - 1) / 2 * self.levels * self.levels
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        // pairs (i, j), i < j, in lexicographic order
        i * self.options - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn main_coord(&self, option: usize, level: usize) -> usize {
        1 + option * self.levels + level
    }

    pub fn pair_coord(&self, i: usize, j: usize, li: usize, lj: usize) -> usize {
        let l = self.levels;
        1 + self.options * l + self.pair_index(i, j) * l * l + li * l + lj
    }

    pub fn features(&self, layout: &[usize]) -> Vec<f64> {
        let mut f = vec![0.0; self.dim()];
        f[0] = 1.0;
        for (i, &li) in layout.iter().enumerate() {
            f[self.main_coord(i, li)] = 1.0;
            for (j, &lj) in layout.iter().enumerate().skip(i + 1) {
                f[self.pair_coord(i, j, li, lj)] = 1.0;
            }
        }
        f
    }

    /// All levels^options layouts, last option varying fastest.
    pub fn layouts(&self) -> Vec<Vec<usize>> {
        let n = self.levels.pow(self.options as u32);
        (0..n)
            .map(|mut c| {
                let mut layout = vec![0; self.options];
                for slot in layout.iter_mut().rev() {
                    *slot = c % self.levels;
                    c /= self.levels;
                }
                layout
            })
            .collect()
    }
}

/// Every layout of `options` slots with `levels` choices each; features are
/// intercept, per-slot one-hots and per-slot-pair one-hots, and X = Z.
pub fn gen_multivariate(options: usize, levels: usize, weights: &LayoutWeights) -> Result<Instance> {
    if options < 2 || levels < 2 {
        return Err(Error::InvalidArgument("need at least two options and two levels".into()));
    }
    let count = (levels as f64).powi(options as i32);
    if count > ENUMERATION_LIMIT as f64 {
        return Err(Error::InvalidArgument(format!("{count} layouts exceed the enumeration limit")));
    }
    let fm = LayoutFeatures { options, levels };
    let mut theta = vec![0.0; fm.dim()];
    theta[0] = weights.intercept;
    for &((i, l), w) in &weights.main {
        if i >= options || l >= levels {
            return Err(Error::InvalidArgument(format!("main weight ({i}, {l}) out of range")));
        }
        theta[fm.main_coord(i, l)] = w;
    }
    for &((i, j, li, lj), w) in &weights.pair {
        if i >= j || j >= options || li >= levels || lj >= levels {
            return Err(Error::InvalidArgument(format!("pair weight ({i}, {j}, {li}, {lj}) out of range")));
        }
        theta[fm.pair_coord(i, j, li, lj)] = w;
    }
    let rows: Vec<Vec<f64>> = fm.layouts().iter().map(|l| fm.features(l)).collect();
    let items = rows.iter().cloned().map(Item::dense).collect();
    Instance::explicit(ArmSet::new(rows)?, items, theta)
}

/// Arms e₁ and (cos 3π/4, sin 3π/4); items on the unit circle at angles
/// π/4 + φ with φ ~ U[0, spread]; θ = e₁.
pub fn gen_linear_bandit<R: Rng + ?Sized>(n_items: usize, spread: f64, rng: &mut R) -> Result<Instance> {
    if n_items < 2 {
        return Err(Error::InvalidArgument("need at least two items".into()));
    }
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(Error::DegenerateInstance(format!("spread {spread} must be positive")));
    }
    let arms = ArmSet::new(vec![vec![1.0, 0.0], vec![(3.0 * PI / 4.0).cos(), (3.0 * PI / 4.0).sin()]])?;
    let items = (0..n_items)
        .map(|_| {
            let a = PI / 4.0 + rng.random_range(0.0..spread);
            Item::dense(vec![a.cos(), a.sin()])
        })
        .collect();
    Instance::explicit(arms, items, vec![1.0, 0.0])
}

/// Combinations of `k` out of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut c: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
            return out;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `clique_side`×`clique_side` bicliques of K_{side,side} as explicit
/// items. B₁ uses the first `clique_side` nodes on both sides and has weight
/// 1 per edge; B₂ uses the last ones and has 1 - h on edges not in B₁.
pub fn gen_biclique(side: usize, clique_side: usize, h: f64) -> Result<Instance> {
    if clique_side == 0 || clique_side > side {
        return Err(Error::InvalidArgument("need 1 <= clique_side <= side".into()));
    }
    check_gap(h)?;
    let count = binomial(side, clique_side).powi(2);
    if count > ENUMERATION_LIMIT as f64 {
        return Err(Error::InvalidArgument(format!("{count} bicliques exceed the enumeration limit")));
    }
    let d = side * side;
    let mut theta = vec![0.0; d];
    for u in side - clique_side..side {
        for v in side - clique_side..side {
            theta[u * side + v] = 1.0 - h;
        }
    }
    for u in 0..clique_side {
        for v in 0..clique_side {
            theta[u * side + v] = 1.0;
        }
    }
    let subsets = combinations(side, clique_side);
    let mut items = Vec::with_capacity(subsets.len() * subsets.len());
    for left in &subsets {
        for right in &subsets {
            items.push(Item::from_support(
                d,
                left.iter().flat_map(|&u| right.iter().map(move |&v| u * side + v)),
            ));
        }
    }
    Instance::explicit(ArmSet::canonical(d), items, theta)
}

/// Algorithms that can run on an instance.
pub fn supports(instance: &Instance, algorithm: Algorithm) -> bool {
    let canonical = instance.arms().is_canonical_basis();
    match algorithm {
        Algorithm::PeaceOracle | Algorithm::Clucb => canonical && instance_binary(instance),
        _ => true,
    }
}

fn instance_binary(instance: &Instance) -> bool {
    match instance.explicit_items() {
        Some(items) => items.iter().all(Item::is_binary),
        None => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::matching::for_each_permutation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_best(inst: &Instance) -> (Item, f64, f64) {
        let items = inst.items_up_to(10_000).unwrap();
        let mut vals: Vec<(f64, &Item)> = items.iter().map(|z| (z.dot(inst.theta()), z)).collect();
        vals.sort_by(|a, b| b.0.total_cmp(&a.0));
        (vals[0].1.clone(), vals[0].0, vals[0].0 - vals[1].0)
    }

    #[test]
    fn matching_two_by_two() {
        let inst = gen_matching(2, 0.5).unwrap();
        assert_eq!(inst.theta(), &[1.0, 0.5, 0.5, 1.0]);
        assert_eq!(inst.z_star(), &Item::from_support(4, [0, 3]));
    }

    #[test]
    fn matching_three_gap_matches_enumeration() {
        let h = 0.1;
        let inst = gen_matching(3, h).unwrap();
        let mut vals = Vec::new();
        for_each_permutation(3, |p| {
            vals.push(p.iter().enumerate().map(|(u, &v)| inst.theta()[u * 3 + v]).sum::<f64>());
            true
        });
        assert_eq!(vals.len(), 6);
        vals.sort_by(|a, b| b.total_cmp(a));
        let (z, best, gap) = brute_best(&inst);
        assert_eq!(&z, inst.z_star());
        assert!((best - vals[0]).abs() < 1e-12);
        assert!((gap - (vals[0] - vals[1])).abs() < 1e-12);
        assert!((gap - 3.0 * h).abs() < 1e-12);
    }

    #[test]
    fn matching_dimension() {
        assert_eq!(gen_matching(14, 0.1).unwrap().dim(), 196);
        assert!(matches!(gen_matching(3, 0.0), Err(Error::DegenerateInstance(_))));
    }

    #[test]
    fn path_network_counts() {
        for layers in 1..5 {
            let (dag, p1, p2) = two_network_dag(layers).unwrap();
            assert_eq!(dag.n_edges(), 2 * (2 + 4 * (layers - 1) + 2));
            assert_eq!(p1.len(), layers + 1);
            assert_eq!(p2.len(), layers + 1);
            let paths = dag.enumerate_paths(1 << 12).unwrap();
            assert_eq!(paths.len(), 2 << layers);
        }
    }

    #[test]
    fn path_best_is_the_unit_path() {
        for (layers, h) in [(1, 0.3), (3, 0.05), (6, 0.2)] {
            let inst = gen_shortest_path(layers, h).unwrap();
            let (_, p1, _) = two_network_dag(layers).unwrap();
            let p1_item = Item::from_support(inst.dim(), p1);
            assert_eq!(inst.z_star(), &p1_item);
            let (z, _, gap) = brute_best(&inst);
            assert_eq!(z, p1_item);
            assert!((gap - h * (layers + 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn multivariate_counts_and_best() {
        let fm = LayoutFeatures { options: 3, levels: 6 };
        assert_eq!(fm.dim(), 127);
        let inst = gen_multivariate(3, 6, &LayoutWeights::benchmark()).unwrap();
        assert_eq!(inst.explicit_items().unwrap().len(), 216);
        assert_eq!(inst.dim(), 127);
        let (z, best, gap) = brute_best(&inst);
        assert_eq!(&z, inst.z_star());
        assert_eq!(z.values(), fm.features(&[0, 0, 0]).as_slice());
        assert!((best - 0.9).abs() < 1e-12);
        assert!((gap - 0.1).abs() < 1e-12);
    }

    #[test]
    fn multivariate_coordinates_are_distinct() {
        let fm = LayoutFeatures { options: 4, levels: 3 };
        let mut seen = vec![false; fm.dim()];
        seen[0] = true;
        for i in 0..4 {
            for l in 0..3 {
                assert!(!std::mem::replace(&mut seen[fm.main_coord(i, l)], true));
            }
            for j in i + 1..4 {
                for a in 0..3 {
                    for b in 0..3 {
                        assert!(!std::mem::replace(&mut seen[fm.pair_coord(i, j, a, b)], true));
                    }
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn multivariate_rejections() {
        assert!(matches!(
            gen_multivariate(3, 2, &LayoutWeights::default()),
            Err(Error::DegenerateInstance(_))
        ));
        let bad = LayoutWeights {
            pair: vec![((1, 0, 0, 0), 1.0)],
            ..LayoutWeights::default()
        };
        assert!(gen_multivariate(3, 2, &bad).is_err());
    }

    #[test]
    fn linear_bandit_gaps_are_trigonometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inst = gen_linear_bandit(200, 0.05, &mut rng).unwrap();
        let items = inst.explicit_items().unwrap();
        let phi = |z: &Item| z.values()[1].atan2(z.values()[0]) - PI / 4.0;
        let min_phi = items.iter().map(phi).fold(f64::INFINITY, f64::min);
        assert!((phi(inst.z_star()) - min_phi).abs() < 1e-15);
        for z in items {
            let p = phi(z);
            assert!((0.0..=0.05).contains(&p));
            let direct = inst.gap(z);
            let trig = (PI / 4.0 + min_phi).cos() - (PI / 4.0 + p).cos();
            assert!((direct - trig).abs() < 1e-12);
        }
        assert!(gen_linear_bandit(10, 0.0, &mut rng).is_err());
    }

    #[test]
    fn biclique_counts() {
        let inst = gen_biclique(8, 2, 0.1).unwrap();
        assert_eq!(inst.dim(), 64);
        assert_eq!(inst.explicit_items().unwrap().len(), 784);
        let small = gen_biclique(3, 2, 0.2).unwrap();
        assert_eq!(small.explicit_items().unwrap().len(), 9);
        assert_eq!(small.z_star(), &Item::from_support(9, [0, 1, 3, 4]));
        let (z, _, _) = brute_best(&small);
        assert_eq!(&z, small.z_star());
        assert!(matches!(gen_biclique(8, 2, 0.0), Err(Error::DegenerateInstance(_))));
    }

    #[test]
    fn combinations_enumerate_binomials() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(4, 4), vec![vec![0, 1, 2, 3]]);
        assert_eq!(binomial(8, 2), 28.0);
    }
}
