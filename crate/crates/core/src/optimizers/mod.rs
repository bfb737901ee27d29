//! Run loops: GP-EI, Improved-GP-EI on the adaptive cover, and a UCB
//! baseline that reuses the cover.

mod maximize;
mod run;

pub use maximize::maximize_acquisition;
pub use run::{run, run_gp_ei, run_improved_gp_ei, run_pi_ucb_baseline, Run};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acquisition::OmegaSchedule;
use crate::error::{Error, Result};
use crate::gp::EXPERIMENT_LAMBDA;
use crate::kernels::KernelSpec;

/// Floor applied to regrets before taking `log10`.
pub const REGRET_FLOOR: f64 = 1e-12;

/// Default refinement rounds of the acquisition maximizer.
pub const DEFAULT_REFINEMENTS: usize = 30;

/// Default candidate count per dimension.
pub const CANDIDATES_PER_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    GpEi,
    ImprovedGpEi,
    PiGpUcbBaseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::GpEi, Algorithm::ImprovedGpEi, Algorithm::PiGpUcbBaseline];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::GpEi => "gp-ei",
            Algorithm::ImprovedGpEi => "improved-gp-ei",
            Algorithm::PiGpUcbBaseline => "pi-gp-ucb",
        }
    }

    pub fn uses_cover(&self) -> bool {
        !matches!(self, Algorithm::GpEi)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.trim().to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match key.as_str() {
            "gpei" => Ok(Algorithm::GpEi),
            "improvedgpei" | "improved" => Ok(Algorithm::ImprovedGpEi),
            "pigpucb" | "pigpucbbaseline" | "ucb" => Ok(Algorithm::PiGpUcbBaseline),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// What stands in for the maximum information gain inside the schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InfoGainSource {
    /// Information gain of the points actually selected.
    #[default]
    Selected,
    /// The analytic growth rate in `t`.
    AnalyticRate,
}

impl FromStr for InfoGainSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "selected" => Ok(InfoGainSource::Selected),
            "analytic" | "analytic-rate" => Ok(InfoGainSource::AnalyticRate),
            _ => Err(Error::InvalidArgument(format!("unknown info gain source {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub omega: OmegaSchedule,
    pub delta: f64,
    pub lambda: f64,
    pub kernel: KernelSpec,
    pub seed: u64,
    /// `None` means `4096 * d`.
    pub acq_candidates: Option<usize>,
    pub acq_refinements: usize,
    /// RKHS norm bound `B` of the UCB baseline.
    pub rkhs_bound: f64,
    /// Sub-Gaussian noise scale `R` of the UCB baseline.
    pub noise_bound: f64,
    pub info_gain_source: InfoGainSource,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, horizon: usize, kernel: KernelSpec) -> Self {
        Self {
            algorithm,
            horizon,
            omega: default_omega(algorithm, horizon),
            delta: 0.05,
            lambda: EXPERIMENT_LAMBDA,
            kernel,
            seed: 0,
            acq_candidates: None,
            acq_refinements: DEFAULT_REFINEMENTS,
            rkhs_bound: 1.0,
            noise_bound: 1.0,
            info_gain_source: InfoGainSource::Selected,
        }
    }

    pub fn candidates_for(&self, dim: usize) -> usize {
        self.acq_candidates.unwrap_or(CANDIDATES_PER_DIM * dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if self.acq_candidates == Some(0) {
            return Err(Error::InvalidArgument("need at least one acquisition candidate".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.rkhs_bound > 0.0 && self.noise_bound > 0.0) {
            return Err(Error::InvalidArgument("B and R must be positive".into()));
        }
        match self.algorithm {
            Algorithm::ImprovedGpEi => match self.kernel.nu() {
                Some(nu) if nu > 1.0 => {}
                _ => {
                    return Err(Error::InvalidArgument(
                        "Improved-GP-EI needs a Matérn kernel with nu > 1".into(),
                    ))
                }
            },
            Algorithm::PiGpUcbBaseline if self.kernel.nu().is_none() => {
                return Err(Error::InvalidArgument("the cover baseline needs a Matérn kernel".into()));
            }
            _ => {}
        }
        self.omega.omega_at(1, 0.0)?;
        Ok(())
    }
}

/// Fixed 1 for GP-EI and the baseline (where it is unused), the poly-log
/// scale for Improved-GP-EI once `T >= 16` and Fixed 1 below that.
pub fn default_omega(algorithm: Algorithm, horizon: usize) -> OmegaSchedule {
    match algorithm {
        Algorithm::ImprovedGpEi if horizon >= 16 => OmegaSchedule::PolyLogT { horizon },
        _ => OmegaSchedule::Fixed { value: 1.0 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub x: Vec<f64>,
    /// Noisy observation at `x`.
    pub y: f64,
    /// Reported point.
    pub x_plus: Vec<f64>,
    /// Noiseless value at the reported point.
    pub f_best: f64,
    pub log10_distance: f64,
    pub instant_regret: f64,
    pub cum_regret: f64,
    /// `omega_t` for the EI runs, the winning cell's `beta` for the baseline.
    pub omega: f64,
    pub info_gain: f64,
    pub cell_count: usize,
    pub wallclock_ms: f64,
    /// Posterior standard deviation at `x` before observing it.
    pub selected_stddev: f64,
    /// The regret was not positive and was clamped before the log.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSummary {
    pub cells_final: usize,
    pub cells_ever: usize,
    pub max_depth: u32,
    pub cells_per_side: usize,
    pub b: f64,
    pub q: f64,
    pub splits: usize,
    pub max_cell_info_gain: f64,
    pub cell_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub run_id: String,
    /// Grouping label, the algorithm name unless the harness sets one.
    pub label: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub horizon: usize,
    pub dim: usize,
    pub lambda: f64,
    pub true_optimum: f64,
    pub rows: Vec<TraceRow>,
    pub cover: Option<CoverSummary>,
}

impl RunTrace {
    pub fn final_cum_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn flagged_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }

    /// Sum of the pre-observation standard deviations at the selected points.
    pub fn sum_selected_stddev(&self) -> f64 {
        self.rows.iter().map(|r| r.selected_stddev).sum()
    }

    pub fn mean_wallclock_ms(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.wallclock_ms).sum::<f64>() / self.rows.len() as f64
    }
}
