use crate::linalg::Design;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RoundingPolicy {
    /// κ_x = ⌈Nλ_x⌉; may exceed N by fewer than |X|.
    #[default]
    Ceiling,
    /// Ceiling, then trim the largest excesses until Σκ = max(N, |support|).
    ExactSum,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundedAllocation {
    pub counts: Vec<u64>,
    pub total: u64,
}

/// Integer pull counts for `n` samples from a design.
pub fn round_design(design: &Design, n: u64, policy: RoundingPolicy) -> RoundedAllocation {
    let n = n.max(1);
    let w = design.weights();
    let scaled: Vec<f64> = w.iter().map(|l| l * n as f64).collect();
    let mut counts: Vec<u64> = scaled
        .iter()
        .zip(w)
        .map(|(s, &l)| if l > 0.0 { s.ceil().max(1.0) as u64 } else { 0 })
        .collect();
    if policy == RoundingPolicy::ExactSum {
        let support = counts.iter().filter(|&&c| c > 0).count() as u64;
        let target = n.max(support);
        let mut total: u64 = counts.iter().sum();
        while total > target {
            // largest excess over the exact share among coordinates above 1
            let mut pick: Option<(usize, f64)> = None;
            for (i, (&c, &s)) in counts.iter().zip(&scaled).enumerate() {
                if c <= 1 {
                    continue;
                }
                let excess = c as f64 - s;
                if pick.is_none_or(|(_, e)| excess > e) {
                    pick = Some((i, excess));
                }
            }
            match pick {
                Some((i, _)) => {
                    counts[i] -= 1;
                    total -= 1;
                }
                None => break,
            }
        }
    }
    let total = counts.iter().sum();
    RoundedAllocation { counts, total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn design(w: &[f64]) -> Design {
        Design::new(w.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn examples() {
        let r = round_design(&design(&[0.5, 0.5]), 10, RoundingPolicy::Ceiling);
        assert_eq!(r.counts, vec![5, 5]);
        let r = round_design(&design(&[0.25, 0.75]), 2, RoundingPolicy::Ceiling);
        assert_eq!((r.counts.clone(), r.total), (vec![1, 2], 3));
        let r = round_design(&design(&[0.25, 0.75]), 2, RoundingPolicy::ExactSum);
        assert_eq!((r.counts.clone(), r.total), (vec![1, 1], 2));
        let r = round_design(&design(&[1.0, 0.0]), 3, RoundingPolicy::Ceiling);
        assert_eq!(r.counts, vec![3, 0]);
    }

    proptest! {
        #[test]
        fn ceiling_bounds(raw in prop::collection::vec(0.0f64..1.0, 1..12), n in 1u64..5000) {
            prop_assume!(raw.iter().sum::<f64>() > 1e-6);
            let d = Design::from_unnormalized(&raw).unwrap();
            let r = round_design(&d, n, RoundingPolicy::Ceiling);
            prop_assert!(r.total >= n);
            prop_assert!(r.total <= n + d.len() as u64);
            for (c, w) in r.counts.iter().zip(d.weights()) {
                prop_assert!(*c as f64 >= n as f64 * w - 1e-9);
            }
        }

        #[test]
        fn exact_sum_hits_target(raw in prop::collection::vec(0.0f64..1.0, 1..12), n in 1u64..5000) {
            prop_assume!(raw.iter().sum::<f64>() > 1e-6);
            let d = Design::from_unnormalized(&raw).unwrap();
            let r = round_design(&d, n, RoundingPolicy::ExactSum);
            let support = d.weights().iter().filter(|&&w| w > 0.0).count() as u64;
            prop_assert_eq!(r.total, n.max(support));
            for (c, w) in r.counts.iter().zip(d.weights()) {
                prop_assert_eq!(*c > 0, *w > 0.0);
            }
        }
    }
}
