use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::{Algorithm, RunTrace};

/// Upper bound on `sum_t sigma_{t-1}(x_t)` given the selected-points
/// information gain: `sqrt(2 C lambda T gain)` with
/// `C = max(2, s / ln(1 + s))`, `s = 1 / lambda`. For `lambda = 1 + 2/T`
/// this is `sqrt(4 (T + 2) gain)`.
pub fn sigma_sum_bound(horizon: usize, lambda: f64, gain: f64) -> f64 {
    let s = 1.0 / lambda;
    let c = (s / s.ln_1p()).max(2.0);
    (2.0 * c * lambda * horizon as f64 * gain).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonStats {
    pub horizon: usize,
    pub runs: usize,
    pub mean_cum_regret: f64,
    pub mean_wallclock_ms: f64,
    /// Smallest `bound - sum sigma` over the runs (global-model runs only).
    pub sigma_margin: Option<f64>,
    pub max_cell_info_gain: Option<f64>,
    /// `max_cell_info_gain / (ln T ln ln T)`, defined for `T >= 16`.
    pub c_prime: Option<f64>,
    /// Largest `cells_ever / T^q` over the runs.
    pub cover_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDiagnostics {
    pub label: String,
    pub algorithm: Algorithm,
    pub horizons: Vec<HorizonStats>,
    /// Least-squares slope of `ln mean R_T` against `ln T`.
    pub slope: Option<f64>,
    /// Set when some mean `R_T` is not positive, leaving the slope undefined.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub groups: Vec<GroupDiagnostics>,
    /// Mean per-iteration wallclock of Improved-GP-EI over that of GP-EI,
    /// at the largest horizon both ran.
    pub wallclock_ratio: Option<f64>,
}

impl DiagnosticsReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            let _ = writeln!(out, "[{}]", g.label);
            for h in &g.horizons {
                let _ = write!(
                    out,
                    "  T={:<5} runs={:<3} mean R_T={:.6e} ms/iter={:.3}",
                    h.horizon, h.runs, h.mean_cum_regret, h.mean_wallclock_ms
                );
                if let Some(m) = h.sigma_margin {
                    let _ = write!(out, " sigma_margin={m:.4e}");
                }
                if let Some(c) = h.cover_ratio {
                    let _ = write!(out, " C={c:.4}");
                }
                if let Some(g) = h.max_cell_info_gain {
                    let _ = write!(out, " max_cell_gain={g:.4}");
                }
                if let Some(c) = h.c_prime {
                    let _ = write!(out, " C'={c:.4}");
                }
                out.push('\n');
            }
            match (g.slope, g.degenerate) {
                (_, true) => out.push_str("  slope: degenerate (R_T <= 0)\n"),
                (Some(s), false) => {
                    let _ = writeln!(out, "  slope of log R_T vs log T: {s:.4}");
                }
                (None, false) => out.push_str("  slope: single horizon\n"),
            }
        }
        if let Some(r) = self.wallclock_ratio {
            let _ = writeln!(out, "wallclock improved-gp-ei / gp-ei: {r:.4}");
        }
        out
    }
}

/// Growth-rate and bound diagnostics over traces spanning at least two
/// horizons, grouped by trace label.
pub fn diagnostics_report(traces: &[RunTrace]) -> Result<DiagnosticsReport> {
    let horizons: BTreeSet<usize> = traces.iter().map(|t| t.horizon).collect();
    if horizons.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "diagnostics need at least two distinct horizons, got {}",
            horizons.len()
        )));
    }
    let mut groups: BTreeMap<&str, BTreeMap<usize, Vec<&RunTrace>>> = BTreeMap::new();
    for t in traces {
        groups.entry(&t.label).or_default().entry(t.horizon).or_default().push(t);
    }
    let mut out = Vec::new();
    for (label, by_h) in groups {
        let algorithm = by_h.values().next().expect("nonempty group")[0].algorithm;
        let mut stats = Vec::new();
        for (&horizon, runs) in &by_h {
            let n = runs.len() as f64;
            let mean_cum_regret = runs.iter().map(|t| t.final_cum_regret()).sum::<f64>() / n;
            let mean_wallclock_ms = runs.iter().map(|t| t.mean_wallclock_ms()).sum::<f64>() / n;
            let sigma_margin = (algorithm == Algorithm::GpEi).then(|| {
                runs.iter()
                    .map(|t| {
                        let gain = t.rows.last().map_or(0.0, |r| r.info_gain);
                        sigma_sum_bound(t.horizon, t.lambda, gain) - t.sum_selected_stddev()
                    })
                    .fold(f64::INFINITY, f64::min)
            });
            let covers: Vec<_> = runs.iter().filter_map(|t| t.cover.as_ref()).collect();
            let max_gain = (!covers.is_empty())
                .then(|| covers.iter().map(|c| c.max_cell_info_gain).fold(0.0, f64::max));
            let c_prime = max_gain.filter(|_| horizon >= 16).map(|g| {
                let l = (horizon as f64).ln();
                g / (l * l.ln())
            });
            let cover_ratio = (!covers.is_empty()).then(|| {
                covers
                    .iter()
                    .map(|c| c.cells_ever as f64 / (horizon as f64).powf(c.q))
                    .fold(0.0, f64::max)
            });
            stats.push(HorizonStats {
                horizon,
                runs: runs.len(),
                mean_cum_regret,
                mean_wallclock_ms,
                sigma_margin,
                max_cell_info_gain: max_gain,
                c_prime,
                cover_ratio,
            });
        }
        let degenerate = stats.iter().any(|s| !(s.mean_cum_regret > 0.0));
        let slope = (!degenerate && stats.len() >= 2).then(|| {
            let pts: Vec<(f64, f64)> = stats
                .iter()
                .map(|s| ((s.horizon as f64).ln(), s.mean_cum_regret.ln()))
                .collect();
            least_squares_slope(&pts)
        });
        out.push(GroupDiagnostics {
            label: label.to_string(),
            algorithm,
            horizons: stats,
            slope,
            degenerate,
        });
    }
    let wallclock_ratio = wallclock_ratio(&out);
    Ok(DiagnosticsReport {
        groups: out,
        wallclock_ratio,
    })
}

fn wallclock_ratio(groups: &[GroupDiagnostics]) -> Option<f64> {
    let find = |alg: Algorithm| groups.iter().find(|g| g.algorithm == alg);
    let (ei, imp) = (find(Algorithm::GpEi)?, find(Algorithm::ImprovedGpEi)?);
    imp.horizons
        .iter()
        .rev()
        .find_map(|h| {
            ei.horizons
                .iter()
                .find(|e| e.horizon == h.horizon)
                .map(|e| h.mean_wallclock_ms / e.mean_wallclock_ms)
        })
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
