//! Extreme-point queries over planar point sets via the convex hull.
//!
//! Linear functionals and convex quadratics over a finite set attain their
//! maximum at a hull vertex, so large 2-d item sets reduce to their hull.

use std::f64::consts::TAU;

#[derive(Clone, Debug)]
pub struct Hull2d {
    /// Hull vertices in counter-clockwise order.
    pts: Vec<[f64; 2]>,
    /// Original index of each hull vertex.
    ids: Vec<usize>,
    /// Unwrapped, nondecreasing angle of edge i → i+1.
    angles: Vec<f64>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl Hull2d {
    /// Andrew's monotone chain; collinear boundary points are dropped.
    pub fn new(points: &[[f64; 2]]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[a][0]
                .total_cmp(&points[b][0])
                .then(points[a][1].total_cmp(&points[b][1]))
                .then(a.cmp(&b))
        });
        order.dedup_by(|a, b| points[*a] == points[*b]);
        let mut ids: Vec<usize> = Vec::new();
        if order.len() <= 2 {
            ids = order;
        } else {
            for pass in 0..2 {
                let start = ids.len();
                let seq: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
                    Box::new(order.iter())
                } else {
                    Box::new(order.iter().rev())
                };
                for &i in seq {
                    while ids.len() >= start + 2
                        && cross(points[ids[ids.len() - 2]], points[ids[ids.len() - 1]], points[i]) <= 0.0
                    {
                        ids.pop();
                    }
                    ids.push(i);
                }
                ids.pop();
            }
            if ids.is_empty() {
                ids.push(order[0]);
            }
        }
        let pts: Vec<[f64; 2]> = ids.iter().map(|&i| points[i]).collect();
        let h = pts.len();
        let mut angles = Vec::with_capacity(h);
        if h >= 3 {
            for i in 0..h {
                let a = pts[i];
                let b = pts[(i + 1) % h];
                let mut t = (b[1] - a[1]).atan2(b[0] - a[0]);
                if let Some(&prev) = angles.last() {
                    while t < prev {
                        t += TAU;
                    }
                }
                angles.push(t);
            }
        }
        Self { pts, ids, angles }
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn vertex_ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.pts
    }

    /// Hull position maximizing ⟨p, u⟩.
    fn argmax_pos(&self, u: [f64; 2]) -> usize {
        let h = self.pts.len();
        let dot = |p: [f64; 2]| p[0] * u[0] + p[1] * u[1];
        if h < 3 || (u[0] == 0.0 && u[1] == 0.0) {
            let mut best = 0;
            for i in 1..h {
                if dot(self.pts[i]) > dot(self.pts[best]) {
                    best = i;
                }
            }
            return best;
        }
        // vertex i is optimal when u's angle + π/2 lies between the angles of
        // edges i-1 and i
        let base = self.angles[0];
        let mut t = u[1].atan2(u[0]) + std::f64::consts::FRAC_PI_2;
        while t < base {
            t += TAU;
        }
        while t >= base + TAU {
            t -= TAU;
        }
        let i = self.angles.partition_point(|&a| a < t) % h;
        // guard against round-off at cone boundaries
        let mut best = i;
        for j in [(i + h - 1) % h, (i + 1) % h] {
            if dot(self.pts[j]) > dot(self.pts[best]) {
                best = j;
            }
        }
        best
    }

    /// (original index, value) maximizing ⟨p, u⟩.
    pub fn max_dot(&self, u: [f64; 2]) -> (usize, f64) {
        let i = self.argmax_pos(u);
        let p = self.pts[i];
        (self.ids[i], p[0] * u[0] + p[1] * u[1])
    }

    /// (original index, value) minimizing ⟨p, u⟩.
    pub fn min_dot(&self, u: [f64; 2]) -> (usize, f64) {
        let i = self.argmax_pos([-u[0], -u[1]]);
        let p = self.pts[i];
        (self.ids[i], p[0] * u[0] + p[1] * u[1])
    }

    /// max over pairs of (p - q)ᵀ M (p - q) for symmetric PSD M (rotating
    /// calipers on the hull mapped by M^{1/2}).
    pub fn diameter_sq(&self, m: [[f64; 2]; 2]) -> f64 {
        self.diameter_pair(m).0
    }

    /// Like [`Hull2d::diameter_sq`], also returning the original indices of
    /// a farthest pair.
    pub fn diameter_pair(&self, m: [[f64; 2]; 2]) -> (f64, usize, usize) {
        let root = sqrt_psd_2x2(m);
        let pts: Vec<[f64; 2]> = self
            .pts
            .iter()
            .map(|p| {
                [
                    root[0][0] * p[0] + root[0][1] * p[1],
                    root[1][0] * p[0] + root[1][1] * p[1],
                ]
            })
            .collect();
        let h = pts.len();
        let d2 = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        match h {
            0 => (0.0, 0, 0),
            1 => (0.0, self.ids[0], self.ids[0]),
            2 => (d2(pts[0], pts[1]), self.ids[0], self.ids[1]),
            _ => {
                let mut best = (0.0, self.ids[0], self.ids[0]);
                let mut j = 1;
                for i in 0..h {
                    let ni = (i + 1) % h;
                    let edge = [pts[ni][0] - pts[i][0], pts[ni][1] - pts[i][1]];
                    let mut guard = 0;
                    loop {
                        let nj = (j + 1) % h;
                        let step = [pts[nj][0] - pts[j][0], pts[nj][1] - pts[j][1]];
                        if edge[0] * step[1] - edge[1] * step[0] > 0.0 && guard < h {
                            j = nj;
                            guard += 1;
                        } else {
                            break;
                        }
                    }
                    for (a, b) in [(i, j), (ni, j)] {
                        let v = d2(pts[a], pts[b]);
                        if v > best.0 {
                            best = (v, self.ids[a], self.ids[b]);
                        }
                    }
                }
                best
            }
        }
    }

    /// max over hull vertices p of (a - p)ᵀ M (a - p).
    pub fn farthest_sq(&self, a: [f64; 2], m: [[f64; 2]; 2]) -> f64 {
        self.farthest(a, m).0
    }

    /// (value, original index) of the vertex farthest from `a` under M.
    pub fn farthest(&self, a: [f64; 2], m: [[f64; 2]; 2]) -> (f64, usize) {
        let mut best = (0.0, self.ids.first().copied().unwrap_or(0));
        for (p, &id) in self.pts.iter().zip(&self.ids) {
            let v = [a[0] - p[0], a[1] - p[1]];
            let q = v[0] * (m[0][0] * v[0] + m[0][1] * v[1]) + v[1] * (m[1][0] * v[0] + m[1][1] * v[1]);
            if q > best.0 {
                best = (q, id);
            }
        }
        best
    }
}

/// Symmetric square root of a 2×2 PSD matrix.
pub fn sqrt_psd_2x2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let (a, b, c) = (m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]);
    let det = (a * c - b * b).max(0.0);
    let s = det.sqrt();
    let t = (a + c + 2.0 * s).max(0.0).sqrt();
    if t == 0.0 {
        return [[0.0; 2]; 2];
    }
    [[(a + s) / t, b / t], [b / t, (c + s) / t]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_max(points: &[[f64; 2]], u: [f64; 2]) -> f64 {
        points
            .iter()
            .map(|p| p[0] * u[0] + p[1] * u[1])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn square_hull() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.5, 0.0]];
        let h = Hull2d::new(&pts);
        assert_eq!(h.len(), 4);
        assert_eq!(h.max_dot([1.0, 1.0]), (2, 2.0));
        assert_eq!(h.min_dot([1.0, 1.0]).1, 0.0);
        let id = [[1.0, 0.0], [0.0, 1.0]];
        assert!((h.diameter_sq(id) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn queries_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..40 {
            let n = 3 + trial * 7;
            let pts: Vec<[f64; 2]> = if trial % 2 == 0 {
                (0..n)
                    .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                    .collect()
            } else {
                // points on a short arc, like the linear-bandit item sets
                (0..n)
                    .map(|_| {
                        let t: f64 = 0.785 + rng.random_range(0.0..0.05);
                        [t.cos(), t.sin()]
                    })
                    .collect()
            };
            let h = Hull2d::new(&pts);
            for _ in 0..50 {
                let u = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let (id, v) = h.max_dot(u);
                let b = brute_max(&pts, u);
                assert!((v - b).abs() <= 1e-12 * (1.0 + b.abs()), "{v} vs {b}");
                assert!((pts[id][0] * u[0] + pts[id][1] * u[1] - v).abs() < 1e-15);
                let (_, lo) = h.min_dot(u);
                assert!((lo + brute_max(&pts, [-u[0], -u[1]])).abs() <= 1e-12 * (1.0 + lo.abs()));
            }
            let a: f64 = rng.random_range(0.1..2.0);
            let c = rng.random_range(0.1..2.0);
            let b = rng.random_range(-0.5f64..0.5) * (a * c).sqrt();
            let m = [[a, b], [b, c]];
            let q = |v: [f64; 2]| v[0] * (a * v[0] + b * v[1]) + v[1] * (b * v[0] + c * v[1]);
            let mut best: f64 = 0.0;
            for p in &pts {
                for r in &pts {
                    best = best.max(q([p[0] - r[0], p[1] - r[1]]));
                }
            }
            let got = h.diameter_sq(m);
            assert!((got - best).abs() <= 1e-9 * (1.0 + best), "{got} vs {best}");
            let anchor = pts[0];
            let far = pts
                .iter()
                .map(|p| q([anchor[0] - p[0], anchor[1] - p[1]]))
                .fold(0.0, f64::max);
            assert!((h.farthest_sq(anchor, m) - far).abs() <= 1e-9 * (1.0 + far));
        }
    }

    #[test]
    fn psd_root_squares_back() {
        let m = [[2.0, 0.3], [0.3, 0.5]];
        let r = sqrt_psd_2x2(m);
        let sq = [
            [r[0][0] * r[0][0] + r[0][1] * r[1][0], r[0][0] * r[0][1] + r[0][1] * r[1][1]],
            [r[1][0] * r[0][0] + r[1][1] * r[1][0], r[1][0] * r[0][1] + r[1][1] * r[1][1]],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!((sq[i][j] - m[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_sets() {
        let h = Hull2d::new(&[[1.0, 1.0], [1.0, 1.0]]);
        assert_eq!(h.len(), 1);
        assert_eq!(h.diameter_sq([[1.0, 0.0], [0.0, 1.0]]), 0.0);
        let h = Hull2d::new(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
        assert_eq!(h.len(), 2);
        assert_eq!(h.max_dot([1.0, 0.0]).0, 2);
    }
}
