//! Independent seeded trials and their aggregate metrics.

use rand::Rng;
use rayon::prelude::*;

use super::rng;
use crate::algorithms::RunResult;
use crate::error::{Error, Result};

/// One trial's outcome. Errored trials keep their partial sample count and
/// count as failures.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub samples: u64,
    pub rounds: usize,
    pub succeeded: bool,
    pub wall_time: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSummary {
    pub rows: Vec<TrialRow>,
    pub median_samples: f64,
    pub mean_samples: f64,
    pub failures: usize,
    pub errors: usize,
    /// Bootstrap 95% percentile interval of the mean sample count.
    pub mean_ci: (f64, f64),
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Seed of trial `t` under `base_seed`.
pub fn trial_seed(base_seed: u64, t: usize) -> u64 {
    rng::derive_seed(base_seed, &[t as u64])
}

fn row_of(trial: usize, seed: u64, r: Result<RunResult>) -> TrialRow {
    match r {
        Ok(res) => TrialRow {
            trial,
            seed,
            samples: res.total_samples,
            rounds: res.rounds.len(),
            succeeded: res.succeeded,
            wall_time: res.wall_time,
            error: None,
        },
        Err(e) => {
            let (samples, rounds, wall_time) = match &e {
                Error::MaxRoundsExceeded { partial, .. } | Error::MaxSamplesExceeded { partial, .. } => {
                    (partial.total_samples, partial.rounds.len(), partial.wall_time)
                }
                _ => (0, 0, 0.0),
            };
            TrialRow {
                trial,
                seed,
                samples,
                rounds,
                succeeded: false,
                wall_time,
                error: Some(e.to_string()),
            }
        }
    }
}

/// Runs `n_trials` independent trials of `run(seed)` in parallel. Rows come
/// back in trial order, so the summary depends only on the inputs.
pub fn run_trials<F>(n_trials: usize, base_seed: u64, run: F) -> Result<TrialSummary>
where
    F: Fn(u64) -> Result<RunResult> + Sync,
{
    if n_trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let rows: Vec<TrialRow> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(base_seed, t);
            row_of(t, seed, run(seed))
        })
        .collect();
    Ok(summarize(rows, base_seed))
}

pub fn summarize(rows: Vec<TrialRow>, base_seed: u64) -> TrialSummary {
    let samples: Vec<f64> = rows.iter().map(|r| r.samples as f64).collect();
    let mut boot_rng = rng::stream(base_seed, &[u64::MAX]);
    TrialSummary {
        median_samples: median(&samples),
        mean_samples: mean(&samples),
        failures: rows.iter().filter(|r| !r.succeeded).count(),
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        mean_ci: bootstrap_mean_ci(&samples, BOOTSTRAP_RESAMPLES, 0.95, &mut boot_rng),
        rows,
    }
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    quantile(v, 0.5)
}

/// Linear-interpolation quantile.
pub fn quantile(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_mean_ci<R: Rng + ?Sized>(values: &[f64], resamples: usize, level: f64, rng: &mut R) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let means: Vec<f64> = (0..resamples.max(1))
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let a = (1.0 - level) / 2.0;
    (quantile(&means, a), quantile(&means, 1.0 - a))
}

/// Bootstrap percentile interval for the median.
pub fn bootstrap_median_ci<R: Rng + ?Sized>(values: &[f64], resamples: usize, level: f64, rng: &mut R) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let meds: Vec<f64> = (0..resamples.max(1))
        .map(|_| {
            let s: Vec<f64> = (0..n).map(|_| values[rng.random_range(0..n)]).collect();
            median(&s)
        })
        .collect();
    let a = (1.0 - level) / 2.0;
    (quantile(&meds, a), quantile(&meds, 1.0 - a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::item::Item;

    fn fake(seed: u64) -> Result<RunResult> {
        Ok(RunResult {
            recommendation: Item::zeros(1),
            total_samples: seed % 1000,
            rounds: Vec::new(),
            succeeded: seed % 7 != 0,
            wall_time: 0.0,
        })
    }

    #[test]
    fn single_trial_aggregates_equal_the_row() {
        let s = run_trials(1, 5, fake).unwrap();
        assert_eq!(s.rows.len(), 1);
        let v = s.rows[0].samples as f64;
        assert_eq!(s.median_samples, v);
        assert_eq!(s.mean_samples, v);
        assert_eq!(s.mean_ci, (v, v));
    }

    #[test]
    fn reproducible_under_base_seed() {
        let a = run_trials(50, 11, fake).unwrap();
        let b = run_trials(50, 11, fake).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.windows(2).all(|w| w[0].trial < w[1].trial));
    }

    #[test]
    fn errors_are_recorded_as_failures() {
        let s = run_trials(3, 0, |_| Err(Error::Oracle("boom".into()))).unwrap();
        assert_eq!(s.failures, 3);
        assert_eq!(s.errors, 3);
    }

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let mut r = rng::stream(0, &[]);
        let (lo, hi) = bootstrap_mean_ci(&[1.0, 2.0, 3.0, 4.0, 5.0], 1000, 0.95, &mut r);
        assert!(lo < 3.0 && hi > 3.0 && lo >= 1.0 && hi <= 5.0);
    }
}
