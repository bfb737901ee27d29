use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::acquisition::OmegaSchedule;
use crate::error::{Error, Result};
use crate::gp::theory_lambda;
use crate::kernels::{FamilyName, KernelSpec};
use crate::optimizers::{default_omega, Algorithm, InfoGainSource, RunConfig};
use crate::testbed::StandardName;

/// Environment variable overriding `output_dir` from a config file.
pub const OUTPUT_DIR_ENV: &str = "GPEI_OUTPUT_DIR";

/// Every config key with its default and help text. Each key is also a
/// `--key` flag of `run` and `diag` (underscores become dashes).
pub const KEYS: &[(&str, &str, &str)] = &[
    ("objective", "rkhs", "rkhs, hartmann3, shekel, hartmann6 or ackley10"),
    ("rkhs_file", "", "load the RKHS target from this file instead of generating it"),
    ("rkhs_dim", "2", "dimension of a generated RKHS target"),
    ("rkhs_centers", "500", "number of centers of a generated RKHS target"),
    ("rkhs_seed", "0", "seed of a generated RKHS target"),
    ("rkhs_optimum_budget", "100000", "random-search budget certifying the RKHS optimum"),
    ("kernel", "matern", "matern or se"),
    ("nu", "2.5", "Matérn smoothness"),
    ("lengthscale", "0.2", "kernel lengthscale"),
    ("algorithms", "gp-ei,modified-gp-ei,improved-gp-ei,pi-gp-ucb", "comma-separated variants"),
    ("horizon", "100", "iterations per run"),
    ("horizons", "50,100,200", "horizons swept by diag"),
    ("repeats", "15", "runs per variant"),
    ("seed_base", "0", "run seeds are seed_base + repeat"),
    ("delta", "0.05", "confidence parameter"),
    ("lambda", "0.01", "GP regularizer, or 'theory' for 1 + 2/T"),
    ("omega_value", "1.0", "omega of the fixed-scale GP-EI variant"),
    ("info_gain", "selected", "selected or analytic"),
    ("noise_stddev", "0.1", "observation noise standard deviation"),
    ("acq_candidates", "auto", "acquisition candidates, 'auto' for 4096 d"),
    ("acq_refinements", "30", "refinement rounds of the acquisition maximizer"),
    ("rkhs_bound", "1.0", "B of the UCB baseline"),
    ("noise_bound", "1.0", "R of the UCB baseline"),
    ("metric", "both", "log-distance, cumulative-regret or both"),
    ("output_dir", "gpei-out", "directory for traces and summaries"),
    ("threads", "0", "worker threads, 0 for all cores"),
];

/// A named optimizer setting of a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// GP-EI with constant `omega_value`.
    GpEi,
    /// GP-EI with the information-gain schedule.
    ModifiedGpEi,
    ImprovedGpEi,
    PiGpUcb,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::GpEi => "gp-ei",
            Variant::ModifiedGpEi => "modified-gp-ei",
            Variant::ImprovedGpEi => "improved-gp-ei",
            Variant::PiGpUcb => "pi-gp-ucb",
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Variant::GpEi | Variant::ModifiedGpEi => Algorithm::GpEi,
            Variant::ImprovedGpEi => Algorithm::ImprovedGpEi,
            Variant::PiGpUcb => Algorithm::PiGpUcbBaseline,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gp-ei" | "gpei" => Ok(Variant::GpEi),
            "modified-gp-ei" | "theory-gp-ei" => Ok(Variant::ModifiedGpEi),
            "improved-gp-ei" | "improved" => Ok(Variant::ImprovedGpEi),
            "pi-gp-ucb" | "ucb" => Ok(Variant::PiGpUcb),
            other => Err(Error::Config(format!("unknown algorithm variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSpec {
    Rkhs {
        dim: usize,
        centers: usize,
        seed: u64,
        optimum_budget: usize,
    },
    RkhsFile(PathBuf),
    Standard(StandardName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    LogDistance,
    CumulativeRegret,
    Both,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "log-distance" => Ok(Metric::LogDistance),
            "cumulative-regret" => Ok(Metric::CumulativeRegret),
            "both" => Ok(Metric::Both),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSetting {
    Value(f64),
    Theory,
}

impl LambdaSetting {
    pub fn resolve(&self, horizon: usize) -> f64 {
        match *self {
            LambdaSetting::Value(v) => v,
            LambdaSetting::Theory => theory_lambda(horizon),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub objective: ObjectiveSpec,
    pub kernel: KernelSpec,
    pub variants: Vec<Variant>,
    pub horizon: usize,
    pub horizons: Vec<usize>,
    pub repeats: usize,
    pub seed_base: u64,
    pub delta: f64,
    pub lambda: LambdaSetting,
    pub omega_value: f64,
    pub info_gain: InfoGainSource,
    pub noise_stddev: f64,
    pub acq_candidates: Option<usize>,
    pub acq_refinements: usize,
    pub rkhs_bound: f64,
    pub noise_bound: f64,
    pub metric: Metric,
    pub output_dir: PathBuf,
    pub threads: usize,
    /// Resolved key-value pairs, echoed into the manifest.
    pairs: BTreeMap<String, String>,
}

impl BenchConfig {
    /// Defaults overlaid with `pairs`.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut all: BTreeMap<String, String> = KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect();
        for (k, v) in pairs {
            if !all.contains_key(k) {
                return Err(Error::Config(format!("unknown key {k:?}")));
            }
            all.insert(k.clone(), v.trim().to_string());
        }
        let get = |k: &str| all[k].as_str();

        let objective = match get("objective").to_ascii_lowercase().as_str() {
            "rkhs" if !get("rkhs_file").is_empty() => ObjectiveSpec::RkhsFile(PathBuf::from(get("rkhs_file"))),
            "rkhs" => ObjectiveSpec::Rkhs {
                dim: parse(get("rkhs_dim"), "rkhs_dim")?,
                centers: parse(get("rkhs_centers"), "rkhs_centers")?,
                seed: parse(get("rkhs_seed"), "rkhs_seed")?,
                optimum_budget: parse(get("rkhs_optimum_budget"), "rkhs_optimum_budget")?,
            },
            other => ObjectiveSpec::Standard(other.parse().map_err(|e: Error| Error::Config(e.to_string()))?),
        };
        let lengthscale: f64 = parse(get("lengthscale"), "lengthscale")?;
        let kernel = match get("kernel").parse::<FamilyName>().map_err(|e| Error::Config(e.to_string()))? {
            FamilyName::SquaredExponential => KernelSpec::squared_exponential(lengthscale)?,
            FamilyName::Matern => KernelSpec::matern(parse(get("nu"), "nu")?, lengthscale)?,
        };
        let variants = get("algorithms")
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Variant>>>()?;
        if variants.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        let horizons = get("horizons")
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse(s, "horizons"))
            .collect::<Result<Vec<usize>>>()?;
        let lambda = match get("lambda") {
            "theory" => LambdaSetting::Theory,
            v => LambdaSetting::Value(parse(v, "lambda")?),
        };
        let acq_candidates = match get("acq_candidates") {
            "auto" => None,
            v => Some(parse(v, "acq_candidates")?),
        };
        let cfg = Self {
            objective,
            kernel,
            variants,
            horizon: parse(get("horizon"), "horizon")?,
            horizons,
            repeats: parse(get("repeats"), "repeats")?,
            seed_base: parse(get("seed_base"), "seed_base")?,
            delta: parse(get("delta"), "delta")?,
            lambda,
            omega_value: parse(get("omega_value"), "omega_value")?,
            info_gain: get("info_gain").parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            noise_stddev: parse(get("noise_stddev"), "noise_stddev")?,
            acq_candidates,
            acq_refinements: parse(get("acq_refinements"), "acq_refinements")?,
            rkhs_bound: parse(get("rkhs_bound"), "rkhs_bound")?,
            noise_bound: parse(get("noise_bound"), "noise_bound")?,
            metric: get("metric").parse()?,
            output_dir: PathBuf::from(get("output_dir")),
            threads: parse(get("threads"), "threads")?,
            pairs: all.clone(),
        };
        if cfg.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if cfg.horizon == 0 || cfg.horizons.contains(&0) {
            return Err(Error::Config("horizons must be at least 1".into()));
        }
        if !(cfg.noise_stddev.is_finite() && cfg.noise_stddev >= 0.0) {
            return Err(Error::Config("noise_stddev must be nonnegative".into()));
        }
        Ok(cfg)
    }

    /// Reads a config file, then applies `overrides` (CLI flags) and the
    /// output-dir environment variable. Precedence for `output_dir` is flag,
    /// then environment, then file.
    pub fn load(path: Option<&Path>, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut pairs = match path {
            Some(p) => parse_config_text(&std::fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                pairs.insert("output_dir".into(), dir);
            }
        }
        pairs.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
        Self::from_pairs(&pairs)
    }

    /// Every key with its resolved value.
    pub fn pairs(&self) -> &BTreeMap<String, String> {
        &self.pairs
    }

    /// The resolved config in file syntax.
    pub fn to_text(&self) -> String {
        self.pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = dir.into();
        self.pairs.insert("output_dir".into(), self.output_dir.display().to_string());
        self
    }

    /// Run settings for one variant at horizon `horizon` and seed `seed`.
    pub fn run_config(&self, variant: Variant, horizon: usize, seed: u64) -> Result<RunConfig> {
        let algorithm = variant.algorithm();
        let mut c = RunConfig::new(algorithm, horizon, self.kernel);
        c.omega = match variant {
            Variant::GpEi => OmegaSchedule::fixed(self.omega_value)?,
            Variant::ModifiedGpEi => OmegaSchedule::theory_ei(self.delta)?,
            _ => default_omega(algorithm, horizon),
        };
        c.delta = self.delta;
        c.lambda = self.lambda.resolve(horizon);
        c.seed = seed;
        c.acq_candidates = self.acq_candidates;
        c.acq_refinements = self.acq_refinements;
        c.rkhs_bound = self.rkhs_bound;
        c.noise_bound = self.noise_bound;
        c.info_gain_source = self.info_gain;
        Ok(c)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {k:?}", n + 1)));
        }
    }
    Ok(out)
}

fn parse<T: FromStr>(s: &str, key: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value {s:?} for {key}")))
}
