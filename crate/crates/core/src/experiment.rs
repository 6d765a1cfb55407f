//! Experiment runner: builds instances from a config, runs every algorithm
//! over seeded trials, and renders the metrics and summary CSVs.

use crate::algorithms::{run_spec_trials, Algorithm, AlgorithmSpec};
use crate::config::{ExperimentConfig, ExperimentKind, SweepParam};
use crate::env::rng;
use crate::env::trials::TrialSummary;
use crate::env::Instance;
use crate::error::{Error, Result};
use crate::instance_file::parse_instance;
use crate::instances::{
    gen_biclique, gen_linear_bandit, gen_matching, gen_multivariate, gen_shortest_path, gen_two_arm, supports,
};

/// Stream tag of generated linear-bandit instances.
const TAG_LINEAR: u64 = 0x11;

pub const METRICS_HEADER: [&str; 8] = [
    "experiment",
    "algorithm",
    "trial",
    "seed",
    "samples",
    "rounds",
    "succeeded",
    "wall_time_s",
];

pub const SUMMARY_HEADER: [&str; 13] = [
    "experiment",
    "algorithm",
    "param",
    "value",
    "trials",
    "median_samples",
    "mean_samples",
    "mean_ci_low",
    "mean_ci_high",
    "failures",
    "errors",
    "success_rate",
    "ratio",
];

/// One (sweep point, algorithm) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub label: String,
    pub point: Option<f64>,
    pub algorithm: Algorithm,
    pub summary: TrialSummary,
}

/// Config with the sweep parameter set to `point`.
pub fn at_point(cfg: &ExperimentConfig, point: Option<f64>) -> ExperimentConfig {
    let mut c = cfg.clone();
    if let (Some(s), Some(v)) = (&cfg.sweep, point) {
        match s.param {
            SweepParam::Gap => c.gap = v,
            SweepParam::NItems => c.n_items = v as usize,
            SweepParam::Budget => c.budget = v as u64,
        }
    }
    c
}

/// The instance a config describes.
pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let inst = match cfg.experiment {
        ExperimentKind::TwoArm => gen_two_arm(cfg.gap)?,
        ExperimentKind::Matching => gen_matching(cfg.side, cfg.gap)?,
        ExperimentKind::ShortestPath => gen_shortest_path(cfg.layers, cfg.gap)?,
        ExperimentKind::Multivariate => gen_multivariate(cfg.options, cfg.levels, &cfg.weights)?,
        ExperimentKind::LinearBandit => {
            let mut r = rng::stream(cfg.seed, &[TAG_LINEAR, cfg.n_items as u64]);
            gen_linear_bandit(cfg.n_items, cfg.spread, &mut r)?
        }
        ExperimentKind::Biclique => gen_biclique(cfg.side, cfg.clique_side, cfg.gap)?,
        ExperimentKind::File => {
            let path = cfg
                .instance_file
                .as_ref()
                .ok_or_else(|| Error::Config("no instance_file".into()))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_instance(&text)?
        }
    };
    inst.with_noise_sd(cfg.noise_sd)
}

/// Algorithm settings taken from a config.
pub fn algorithm_spec(cfg: &ExperimentConfig, algorithm: Algorithm) -> AlgorithmSpec {
    let mut s = AlgorithmSpec::new(algorithm);
    s.fc.delta = cfg.delta;
    s.fc.epsilon = cfg.epsilon;
    s.fc.n_mc = cfg.n_mc;
    s.fc.seed = cfg.seed;
    s.fc.max_samples = cfg.max_samples;
    s.fc.timing = cfg.timing;
    s.fc.alloc.iters = cfg.smd_iters;
    s.fc.alloc.eval_cap = cfg.eval_cap;
    s.fb.budget = cfg.budget;
    s.fb.epsilon = cfg.epsilon;
    s.fb.n_mc = cfg.n_mc;
    s.fb.seed = cfg.seed;
    s.fb.timing = cfg.timing;
    s.fb.alloc = s.fc.alloc.clone();
    s
}

fn label(cfg: &ExperimentConfig, point: Option<f64>) -> String {
    match (&cfg.sweep, point) {
        (Some(s), Some(v)) => format!("{}:{}={v}", cfg.experiment.name(), s.param.name()),
        _ => cfg.experiment.name().to_string(),
    }
}

/// Runs every algorithm at every sweep point. Trials at one point share
/// their seeds across algorithms.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    cfg.validate()?;
    let points: Vec<Option<f64>> = match &cfg.sweep {
        Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let mut cells = Vec::new();
    for (j, &point) in points.iter().enumerate() {
        let c = at_point(cfg, point);
        let inst = build_instance(&c)?;
        for &a in &cfg.algorithms {
            if !supports(&inst, a) {
                return Err(Error::Config(format!(
                    "{} does not run on {} instances",
                    a.name(),
                    cfg.experiment.name()
                )));
            }
        }
        let base = rng::derive_seed(cfg.seed, &[j as u64]);
        for &a in &cfg.algorithms {
            let summary = run_spec_trials(&algorithm_spec(&c, a), &inst, c.trials, base)?;
            cells.push(Cell {
                label: label(cfg, point),
                point,
                algorithm: a,
                summary,
            });
        }
    }
    Ok(cells)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// One row per trial.
pub fn metrics_csv(cells: &[Cell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER).map_err(csv_err)?;
    for c in cells {
        for r in &c.summary.rows {
            w.write_record([
                c.label.clone(),
                c.algorithm.name().to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.samples.to_string(),
                r.rounds.to_string(),
                r.succeeded.to_string(),
                r.wall_time.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    into_string(w)
}

/// One row per cell; `ratio` is the cell's median samples over the
/// reference algorithm's median at the same point.
pub fn summary_csv(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<String> {
    let reference = cfg.reference.unwrap_or(cfg.algorithms[0]);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for c in cells {
        let s = &c.summary;
        let ref_median = cells
            .iter()
            .find(|o| o.point == c.point && o.algorithm == reference)
            .map(|o| o.summary.median_samples);
        let ratio = match ref_median {
            Some(m) if m > 0.0 => (s.median_samples / m).to_string(),
            _ => String::new(),
        };
        let n = s.rows.len();
        w.write_record([
            c.label.clone(),
            c.algorithm.name().to_string(),
            cfg.sweep.as_ref().map_or("", |sw| sw.param.name()).to_string(),
            c.point.map_or(String::new(), |v| v.to_string()),
            n.to_string(),
            s.median_samples.to_string(),
            s.mean_samples.to_string(),
            s.mean_ci.0.to_string(),
            s.mean_ci.1.to_string(),
            s.failures.to_string(),
            s.errors.to_string(),
            ((n - s.failures) as f64 / n as f64).to_string(),
            ratio,
        ])
        .map_err(csv_err)?;
    }
    into_string(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Sweep;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            experiment: ExperimentKind::TwoArm,
            gap: 1.0,
            trials: 3,
            algorithms: vec![Algorithm::Uniform, Algorithm::Clucb],
            n_mc: 200,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn metrics_have_one_row_per_trial() {
        let cfg = tiny();
        let cells = run_experiment(&cfg).unwrap();
        let csv = metrics_csv(&cells).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], METRICS_HEADER.join(","));
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert!(lines[1].starts_with("two_arm,uniform,0,"));
    }

    #[test]
    fn sweep_summary_has_ratio_per_point() {
        let mut cfg = tiny();
        cfg.sweep = Some(Sweep {
            param: SweepParam::Gap,
            values: vec![1.0, 0.5],
        });
        let cells = run_experiment(&cfg).unwrap();
        let csv = summary_csv(&cfg, &cells).unwrap();
        let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert_eq!(r[2], "gap");
            if r[1] == "uniform" {
                assert_eq!(r[12], "1");
            }
        }
        assert_eq!(rows[2][0], "two_arm:gap=0.5");
    }

    #[test]
    fn identical_configs_give_identical_csv() {
        let cfg = tiny();
        let a = metrics_csv(&run_experiment(&cfg).unwrap()).unwrap();
        let b = metrics_csv(&run_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unsupported_pairs_are_config_errors() {
        let cfg = ExperimentConfig {
            experiment: ExperimentKind::LinearBandit,
            n_items: 10,
            algorithms: vec![Algorithm::Clucb],
            ..ExperimentConfig::default()
        };
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    }
}
