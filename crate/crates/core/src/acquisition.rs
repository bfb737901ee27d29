//! Expected-improvement and UCB scores, and the exploration scale schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{normal_cdf, normal_pdf};

/// Below this argument `tau` switches to the asymptotic tail series.
const TAU_SERIES_CUTOFF: f64 = -8.0;
/// Below this argument only the leading tail term is kept.
const TAU_LEADING_CUTOFF: f64 = -38.0;

/// `tau(z) = z Phi(z) + phi(z)`.
///
/// For negative `z` the direct formula cancels catastrophically, so the left
/// tail uses `phi(z) (1/z^2 - 3/z^4 + 15/z^6 - ...)`.
pub fn tau(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z == f64::INFINITY {
        return f64::INFINITY;
    }
    if z > 0.0 {
        // tau(z) = z + tau(-z) keeps the small correction exact
        return z + tau(-z);
    }
    if z >= TAU_SERIES_CUTOFF {
        return z * normal_cdf(z) + normal_pdf(z);
    }
    if z < TAU_LEADING_CUTOFF {
        // phi(z) underflows to (sub)normal range here; keep the leading term.
        return normal_pdf(z) / (z * z);
    }
    let inv2 = 1.0 / (z * z);
    let mut term = inv2;
    let mut sum = 0.0;
    for k in 1..40 {
        sum += term;
        let next = -term * (2 * k + 1) as f64 * inv2;
        if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
            break;
        }
        term = next;
    }
    normal_pdf(z) * sum
}

/// Closed-form EI `rho(u, v)` with `u = mean - incumbent` and `v` the
/// already-scaled standard deviation.
pub fn ei_score(mean: f64, incumbent: f64, scaled_stddev: f64) -> Result<f64> {
    if !(mean.is_finite() && incumbent.is_finite() && scaled_stddev.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ei_score: non-finite input ({mean}, {incumbent}, {scaled_stddev})"
        )));
    }
    if scaled_stddev < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ei_score: negative scale {scaled_stddev}"
        )));
    }
    let u = mean - incumbent;
    if scaled_stddev == 0.0 {
        return Ok(u.max(0.0));
    }
    let z = u / scaled_stddev;
    let score = match z {
        z if z == f64::INFINITY => u,
        z if z == f64::NEG_INFINITY => 0.0,
        // v tau(z) = u + v tau(-z); the split keeps u exact for z > 0
        z if z > 0.0 => u + scaled_stddev * tau(-z),
        z => scaled_stddev * tau(z),
    };
    Ok(score.max(u.max(0.0)))
}

pub fn ucb_score(mean: f64, stddev: f64, beta: f64) -> f64 {
    mean + beta * stddev
}

/// Confidence width `B + R sqrt(2 (gamma + 1 + ln(1/delta)))`.
pub fn confidence_beta(rkhs_bound: f64, noise_bound: f64, info_gain: f64, delta: f64) -> f64 {
    rkhs_bound + noise_bound * (2.0 * (info_gain + 1.0 + (1.0 / delta).ln())).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OmegaSchedule {
    /// Constant scale.
    Fixed { value: f64 },
    /// `sqrt(gamma_{t-1} + 1 + ln(1/delta))`.
    TheoryEi { delta: f64 },
    /// `sqrt(ln T ln ln T)`, constant over the run.
    PolyLogT { horizon: usize },
}

impl OmegaSchedule {
    pub fn fixed(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "fixed omega must be positive, got {value}"
            )));
        }
        Ok(Self::Fixed { value })
    }

    pub fn theory_ei(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self::TheoryEi { delta })
    }

    pub fn poly_log(horizon: usize) -> Result<Self> {
        poly_log_omega(horizon)?;
        Ok(Self::PolyLogT { horizon })
    }

    /// Scale for iteration `t` (1-based); `info_gain_prev` is the information
    /// gain after `t - 1` observations and is ignored by the constant modes.
    pub fn omega_at(&self, t: usize, info_gain_prev: f64) -> Result<f64> {
        if t == 0 {
            return Err(Error::InvalidArgument("iterations are 1-based".into()));
        }
        match *self {
            OmegaSchedule::Fixed { value } => Ok(value),
            OmegaSchedule::TheoryEi { delta } => {
                check_delta(delta)?;
                if !(info_gain_prev.is_finite() && info_gain_prev >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "information gain must be nonnegative, got {info_gain_prev}"
                    )));
                }
                Ok((info_gain_prev + 1.0 + (1.0 / delta).ln()).sqrt())
            }
            OmegaSchedule::PolyLogT { horizon } => poly_log_omega(horizon),
        }
    }
}

pub fn omega_at(schedule: &OmegaSchedule, t: usize, info_gain_prev: f64) -> Result<f64> {
    schedule.omega_at(t, info_gain_prev)
}

fn poly_log_omega(horizon: usize) -> Result<f64> {
    if horizon < 16 {
        return Err(Error::InvalidArgument(format!(
            "poly-log omega needs a horizon of at least 16, got {horizon}"
        )));
    }
    let ln_t = (horizon as f64).ln();
    Ok((ln_t * ln_t.ln()).sqrt())
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// Analytic growth rate standing in for the maximum information gain:
/// `t^(d/(2 nu + d)) ln(1 + t)` for Matérn, `ln(1 + t)^(d + 1)` for SE.
pub fn analytic_info_gain(t: usize, dim: usize, nu: Option<f64>) -> f64 {
    let t = t as f64;
    let d = dim as f64;
    match nu {
        Some(nu) => t.powf(d / (2.0 * nu + d)) * t.ln_1p(),
        None => t.ln_1p().powf(d + 1.0),
    }
}
