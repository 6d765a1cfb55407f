//! Item vectors (members of the candidate set Z).
//!
//! Combinatorial items are 0/1 vectors; they keep their support so that inner
//! products cost O(|support|) instead of O(d).

use std::fmt;

#[derive(Clone, PartialEq)]
pub struct Item {
    values: Vec<f64>,
    support: Option<Vec<usize>>,
}

impl Item {
    /// Builds an item from dense coordinates. 0/1 vectors are detected and
    /// stored with their support.
    pub fn dense(values: Vec<f64>) -> Self {
        let binary = values.iter().all(|&v| v == 0.0 || v == 1.0);
        let support = binary.then(|| {
            values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 1.0)
                .map(|(i, _)| i)
                .collect()
        });
        Self { values, support }
    }

    /// Builds the 0/1 indicator of `support` in dimension `dim`.
    pub fn from_support(dim: usize, support: impl IntoIterator<Item = usize>) -> Self {
        let mut support: Vec<usize> = support.into_iter().collect();
        support.sort_unstable();
        support.dedup();
        let mut values = vec![0.0; dim];
        for &i in &support {
            values[i] = 1.0;
        }
        Self {
            values,
            support: Some(support),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_support(dim, [])
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Support of a 0/1 item, `None` for general real items.
    pub fn support(&self) -> Option<&[usize]> {
        self.support.as_deref()
    }

    pub fn is_binary(&self) -> bool {
        self.support.is_some()
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.values.len());
        match &self.support {
            Some(s) => s.iter().map(|&i| w[i]).sum(),
            None => self.values.iter().zip(w).map(|(a, b)| a * b).sum(),
        }
    }

    /// `self - other` as a dense vector.
    pub fn minus(&self, other: &Item) -> Vec<f64> {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect()
    }

    pub fn norm_sq(&self) -> f64 {
        match &self.support {
            Some(s) => s.len() as f64,
            None => self.values.iter().map(|v| v * v).sum(),
        }
    }
}

impl fmt::Debug for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.support {
            Some(s) => write!(f, "Item{{support: {s:?}, d: {}}}", self.values.len()),
            None => write!(f, "Item{:?}", self.values),
        }
    }
}

/// Index of the item maximizing `<z, w>`, lowest index on ties.
pub fn argmax_dot(items: &[Item], w: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in items.iter().enumerate() {
        let v = z.dot(w);
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}
