//! Stationary unit-variance covariance functions.
//!
//! Both families are isotropic in the Euclidean distance `r = |x - y|`:
//!
//! * squared exponential, `exp(-r^2 / (2 l^2))`
//! * Matérn, `2^(1-nu) / Gamma(nu) * s^nu * K_nu(s)` with `s = sqrt(2 nu) r / l`
//!
//! For `nu` in {1/2, 3/2, 5/2} the Matérn kernel has an elementary closed
//! form, which is used instead of the Bessel route.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::special::{ln_bessel_k, ln_gamma};

/// Distances below this multiple of the lengthscale are treated as zero.
pub const ZERO_DISTANCE_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    SquaredExponential,
    Matern { nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernelSpec", into = "RawKernelSpec")]
pub struct KernelSpec {
    family: KernelFamily,
    lengthscale: f64,
    form: Form,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    SquaredExponential,
    MaternHalf,
    MaternThreeHalves,
    MaternFiveHalves,
    MaternGeneral { log_norm: f64, scale: f64 },
}

impl KernelSpec {
    pub fn squared_exponential(lengthscale: f64) -> Result<Self> {
        check_lengthscale(lengthscale)?;
        Ok(Self {
            family: KernelFamily::SquaredExponential,
            lengthscale,
            form: Form::SquaredExponential,
        })
    }

    pub fn matern(nu: f64, lengthscale: f64) -> Result<Self> {
        check_lengthscale(lengthscale)?;
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "matern smoothness must be positive and finite, got {nu}"
            )));
        }
        let form = if nu == 0.5 {
            Form::MaternHalf
        } else if nu == 1.5 {
            Form::MaternThreeHalves
        } else if nu == 2.5 {
            Form::MaternFiveHalves
        } else {
            general_form(nu)
        };
        Ok(Self {
            family: KernelFamily::Matern { nu },
            lengthscale,
            form,
        })
    }

    /// Matérn kernel that always goes through the Bessel function, even for
    /// half-integer smoothness.
    pub fn matern_via_bessel(nu: f64, lengthscale: f64) -> Result<Self> {
        let mut spec = Self::matern(nu, lengthscale)?;
        spec.form = general_form(nu);
        Ok(spec)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    /// Matérn smoothness, `None` for the squared exponential.
    pub fn nu(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Matern { nu } => Some(nu),
            KernelFamily::SquaredExponential => None,
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument(format!(
                "kernel arguments have dimensions {} and {}",
                x.len(),
                y.len()
            )));
        }
        check_finite(x, "kernel argument")?;
        check_finite(y, "kernel argument")?;
        self.eval_distance(euclidean(x, y))
    }

    /// Covariance as a function of the Euclidean distance.
    pub fn eval_distance(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid distance {r}")));
        }
        let r = r / self.lengthscale;
        if r < ZERO_DISTANCE_SNAP {
            return Ok(1.0);
        }
        let v = match self.form {
            Form::SquaredExponential => (-0.5 * r * r).exp(),
            Form::MaternHalf => (-r).exp(),
            Form::MaternThreeHalves => {
                let s = 3f64.sqrt() * r;
                (1.0 + s) * (-s).exp()
            }
            Form::MaternFiveHalves => {
                let s = 5f64.sqrt() * r;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
            Form::MaternGeneral { log_norm, scale } => {
                let s = scale * r;
                let nu = self.nu().unwrap_or_default();
                let ln_k = log_norm + nu * s.ln() + ln_bessel_k(nu, s)?;
                ln_k.exp().min(1.0)
            }
        };
        Ok(v)
    }

    /// Gram matrix `[k(p_i, p_j)]`, row-major.
    pub fn gram_matrix(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("gram matrix of zero points".into()));
        }
        let n = points.len();
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            out[i][i] = self.eval(&points[i], &points[i])?;
            for j in 0..i {
                let v = self.eval(&points[i], &points[j])?;
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        Ok(out)
    }
}

/// Closed-form Matérn covariance at scaled distance `r / l`, when one exists.
pub fn matern_closed_form(nu: f64, scaled_r: f64) -> Option<f64> {
    KernelSpec::matern(nu, 1.0)
        .ok()
        .filter(|k| !matches!(k.form, Form::MaternGeneral { .. }))
        .and_then(|k| k.eval_distance(scaled_r).ok())
}

/// Bessel-route Matérn covariance at scaled distance `r / l`.
pub fn matern_bessel_form(nu: f64, scaled_r: f64) -> Result<f64> {
    KernelSpec::matern_via_bessel(nu, 1.0)?.eval_distance(scaled_r)
}

fn general_form(nu: f64) -> Form {
    Form::MaternGeneral {
        log_norm: (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu),
        scale: (2.0 * nu).sqrt(),
    }
}

fn check_lengthscale(l: f64) -> Result<()> {
    if l.is_finite() && l > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "lengthscale must be positive and finite, got {l}"
        )))
    }
}

pub(crate) fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            KernelFamily::SquaredExponential => write!(f, "se(l={})", self.lengthscale),
            KernelFamily::Matern { nu } => write!(f, "matern(nu={nu}, l={})", self.lengthscale),
        }
    }
}

/// Kernel family name as used in config files: `se` or `matern`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    SquaredExponential,
    Matern,
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "se" | "rbf" | "squared_exponential" | "squared-exponential" => {
                Ok(FamilyName::SquaredExponential)
            }
            "matern" => Ok(FamilyName::Matern),
            other => Err(Error::InvalidArgument(format!("unknown kernel family {other:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawKernelSpec {
    #[serde(flatten)]
    family: KernelFamily,
    lengthscale: f64,
}

impl TryFrom<RawKernelSpec> for KernelSpec {
    type Error = Error;

    fn try_from(raw: RawKernelSpec) -> Result<Self> {
        match raw.family {
            KernelFamily::SquaredExponential => KernelSpec::squared_exponential(raw.lengthscale),
            KernelFamily::Matern { nu } => KernelSpec::matern(nu, raw.lengthscale),
        }
    }
}

impl From<KernelSpec> for RawKernelSpec {
    fn from(k: KernelSpec) -> Self {
        RawKernelSpec {
            family: k.family,
            lengthscale: k.lengthscale,
        }
    }
}
