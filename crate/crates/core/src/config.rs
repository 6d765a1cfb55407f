//! Experiment configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment and blank lines are
//! ignored. Lists are comma-separated. Layout weights are `;`-separated terms
//! of the form `const=w`, `i:l=w` (option i at level l) or `i-j:a-b=w`
//! (options i < j at levels a and b), or the word `benchmark`.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::algorithms::Algorithm;
use crate::error::{Error, Result};
use crate::instances::LayoutWeights;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    TwoArm,
    Matching,
    ShortestPath,
    Multivariate,
    LinearBandit,
    Biclique,
    /// Instance read from `instance_file`.
    File,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::TwoArm,
        ExperimentKind::Matching,
        ExperimentKind::ShortestPath,
        ExperimentKind::Multivariate,
        ExperimentKind::LinearBandit,
        ExperimentKind::Biclique,
        ExperimentKind::File,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TwoArm => "two_arm",
            ExperimentKind::Matching => "matching",
            ExperimentKind::ShortestPath => "shortest_path",
            ExperimentKind::Multivariate => "multivariate",
            ExperimentKind::LinearBandit => "linear_bandit",
            ExperimentKind::Biclique => "biclique",
            ExperimentKind::File => "file",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// The instance parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Gap,
    NItems,
    Budget,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gap => "gap",
            SweepParam::NItems => "n_items",
            SweepParam::Budget => "budget",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        [SweepParam::Gap, SweepParam::NItems, SweepParam::Budget]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep parameter '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// h for the combinatorial families, Δ for two_arm.
    pub gap: f64,
    /// Nodes per side (matching, biclique).
    pub side: usize,
    pub clique_side: usize,
    pub layers: usize,
    pub options: usize,
    pub levels: usize,
    pub weights: LayoutWeights,
    pub n_items: usize,
    pub spread: f64,
    pub instance_file: Option<PathBuf>,
    pub noise_sd: f64,
    pub algorithms: Vec<Algorithm>,
    /// Denominator of the summary ratio column; the first algorithm if unset.
    pub reference: Option<Algorithm>,
    pub delta: f64,
    pub epsilon: f64,
    pub budget: u64,
    pub trials: usize,
    pub seed: u64,
    pub n_mc: usize,
    pub smd_iters: usize,
    pub eval_cap: usize,
    pub max_samples: u64,
    pub timing: bool,
    pub sweep: Option<Sweep>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Matching,
            gap: 0.2,
            side: 5,
            clique_side: 2,
            layers: 6,
            options: 3,
            levels: 6,
            weights: LayoutWeights::benchmark(),
            n_items: 1000,
            spread: 0.05,
            instance_file: None,
            noise_sd: 1.0,
            algorithms: vec![Algorithm::PeaceOracle, Algorithm::Clucb],
            reference: None,
            delta: 0.05,
            epsilon: 0.1,
            budget: 1000,
            trials: 20,
            seed: 0,
            n_mc: crate::width::DEFAULT_N_MC,
            smd_iters: 1000,
            eval_cap: 10_000,
            max_samples: crate::algorithms::MAX_SAMPLES,
            timing: false,
            sweep: None,
            out: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'")))
}

fn parse_weights(v: &str) -> Result<LayoutWeights> {
    if v == "benchmark" {
        return Ok(LayoutWeights::benchmark());
    }
    let bad = |t: &str| Error::Config(format!("invalid weight term '{t}'"));
    let mut w = LayoutWeights::default();
    for term in v.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let (lhs, rhs) = term.split_once('=').ok_or_else(|| bad(term))?;
        let value: f64 = rhs.trim().parse().map_err(|_| bad(term))?;
        let lhs = lhs.trim();
        if lhs == "const" {
            w.intercept = value;
            continue;
        }
        let (opts, lvls) = lhs.split_once(':').ok_or_else(|| bad(term))?;
        let nums = |s: &str| -> Result<Vec<usize>> {
            s.split('-').map(|x| x.trim().parse().map_err(|_| bad(term))).collect()
        };
        match (nums(opts)?.as_slice(), nums(lvls)?.as_slice()) {
            ([i], [l]) => w.main.push(((*i, *l), value)),
            ([i, j], [a, b]) => w.pair.push(((*i, *j, *a, *b), value)),
            _ => return Err(bad(term)),
        }
    }
    Ok(w)
}

fn emit_weights(w: &LayoutWeights) -> String {
    let mut terms = Vec::new();
    if w.intercept != 0.0 {
        terms.push(format!("const={}", w.intercept));
    }
    terms.extend(w.main.iter().map(|((i, l), v)| format!("{i}:{l}={v}")));
    terms.extend(w.pair.iter().map(|((i, j, a, b), v)| format!("{i}-{j}:{a}-{b}={v}")));
    terms.join("; ")
}

fn parse_list<T>(v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid value '{v}' for '{key}'"))),
    }
}

impl ExperimentConfig {
    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut sweep_param = None;
        let mut sweep_values = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "sweep" => sweep_param = Some(SweepParam::from_name(value)?),
                "sweep_values" => sweep_values = Some(parse_list(value, |s| parse_num("sweep_values", s))?),
                _ => cfg
                    .set(key, value)
                    .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip(&e))))?,
            }
        }
        cfg.sweep = match (sweep_param, sweep_values) {
            (Some(param), Some(values)) => Some(Sweep { param, values }),
            (None, None) => None,
            _ => return Err(Error::Config("'sweep' and 'sweep_values' go together".into())),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = ExperimentKind::from_name(v)?,
            "gap" | "h" => self.gap = parse_num(key, v)?,
            "side" => self.side = parse_num(key, v)?,
            "clique_side" => self.clique_side = parse_num(key, v)?,
            "layers" => self.layers = parse_num(key, v)?,
            "options" => self.options = parse_num(key, v)?,
            "levels" => self.levels = parse_num(key, v)?,
            "weights" => self.weights = parse_weights(v)?,
            "n_items" => self.n_items = parse_num(key, v)?,
            "spread" => self.spread = parse_num(key, v)?,
            "instance_file" => self.instance_file = Some(PathBuf::from(v)),
            "noise_sd" => self.noise_sd = parse_num(key, v)?,
            "algorithms" => self.algorithms = parse_list(v, Algorithm::from_name)?,
            "reference" => self.reference = Some(Algorithm::from_name(v)?),
            "delta" => self.delta = parse_num(key, v)?,
            "epsilon" => self.epsilon = parse_num(key, v)?,
            "budget" => self.budget = parse_num(key, v)?,
            "trials" => self.trials = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "n_mc" => self.n_mc = parse_num(key, v)?,
            "smd_iters" => self.smd_iters = parse_num(key, v)?,
            "eval_cap" => self.eval_cap = parse_num(key, v)?,
            "max_samples" => self.max_samples = parse_num(key, v)?,
            "timing" => self.timing = parse_bool(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::Config(m.into()));
        if self.algorithms.is_empty() {
            return err("no algorithms listed");
        }
        if [self.side, self.clique_side, self.layers, self.options, self.levels, self.n_items, self.trials]
            .contains(&0)
        {
            return err("sizes and trial counts must be at least 1");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return err("delta must lie in (0,1)");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return err("epsilon must lie in (0,1)");
        }
        if self.experiment != ExperimentKind::TwoArm && !(self.gap > 0.0 && self.gap < 1.0) {
            return err("gap h must lie in (0,1)");
        }
        if !(self.noise_sd >= 0.0) {
            return err("noise_sd must be nonnegative");
        }
        if self.budget == 0 || self.n_mc < 2 {
            return err("budget must be positive and n_mc at least 2");
        }
        if self.experiment == ExperimentKind::File && self.instance_file.is_none() {
            return err("experiment 'file' needs instance_file");
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return err("sweep_values is empty");
            }
            if s.param != SweepParam::Gap && s.values.iter().any(|v| !(*v >= 1.0) || v.fract() != 0.0) {
                return err("n_items and budget sweeps take positive integers");
            }
        }
        Ok(())
    }

    /// The config in file form; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let names = |a: &[Algorithm]| a.iter().map(|x| x.name()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment", self.experiment.name().into());
        kv("gap", self.gap.to_string());
        kv("side", self.side.to_string());
        kv("clique_side", self.clique_side.to_string());
        kv("layers", self.layers.to_string());
        kv("options", self.options.to_string());
        kv("levels", self.levels.to_string());
        kv("weights", emit_weights(&self.weights));
        kv("n_items", self.n_items.to_string());
        kv("spread", self.spread.to_string());
        if let Some(p) = &self.instance_file {
            kv("instance_file", p.display().to_string());
        }
        kv("noise_sd", self.noise_sd.to_string());
        kv("algorithms", names(&self.algorithms));
        if let Some(r) = self.reference {
            kv("reference", r.name().into());
        }
        kv("delta", self.delta.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("budget", self.budget.to_string());
        kv("trials", self.trials.to_string());
        kv("seed", self.seed.to_string());
        kv("n_mc", self.n_mc.to_string());
        kv("smd_iters", self.smd_iters.to_string());
        kv("eval_cap", self.eval_cap.to_string());
        kv("max_samples", self.max_samples.to_string());
        kv("timing", self.timing.to_string());
        if let Some(sw) = &self.sweep {
            kv("sweep", sw.param.name().into());
            kv(
                "sweep_values",
                sw.values.iter().map(f64::to_string).collect::<Vec<_>>().join(", "),
            );
        }
        if let Some(p) = &self.out {
            kv("out", p.display().to_string());
        }
        s
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
