use std::fmt;
use std::str::FromStr;

use super::{compass_search, Objective};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StandardName {
    Hartmann3,
    Shekel,
    Hartmann6,
    Ackley10,
}

impl StandardName {
    pub const ALL: [StandardName; 4] = [
        StandardName::Hartmann3,
        StandardName::Shekel,
        StandardName::Hartmann6,
        StandardName::Ackley10,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StandardName::Hartmann3 => "hartmann3",
            StandardName::Shekel => "shekel",
            StandardName::Hartmann6 => "hartmann6",
            StandardName::Ackley10 => "ackley10",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            StandardName::Hartmann3 => 3,
            StandardName::Shekel => 4,
            StandardName::Hartmann6 => 6,
            StandardName::Ackley10 => 10,
        }
    }
}

impl fmt::Display for StandardName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StandardName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.trim().to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match key.as_str() {
            "hartmann3" => Ok(StandardName::Hartmann3),
            "shekel" | "shekel10" => Ok(StandardName::Shekel),
            "hartmann6" => Ok(StandardName::Hartmann6),
            "ackley" | "ackley10" => Ok(StandardName::Ackley10),
            _ => Err(Error::InvalidArgument(format!("unknown test function {s:?}"))),
        }
    }
}

/// A classic benchmark in maximization form, with its input rescaled from
/// the canonical box to `[0, 1]^d`.
#[derive(Debug, Clone)]
pub struct StandardFunction {
    name: StandardName,
    lower: f64,
    upper: f64,
    optimum_value: f64,
    optimum_point: Vec<f64>,
}

impl StandardFunction {
    pub fn name(&self) -> StandardName {
        self.name
    }

    /// Canonical (pre-rescale) domain, the same interval on every axis.
    pub fn canonical_domain(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    /// Certified maximum value.
    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    /// Maximizer in unit-box coordinates.
    pub fn optimum_point(&self) -> &[f64] {
        &self.optimum_point
    }

    /// Value at a canonical-domain point.
    pub fn canonical_value(&self, z: &[f64]) -> f64 {
        match self.name {
            StandardName::Hartmann3 => hartmann(z, &H3_A, &H3_P),
            StandardName::Hartmann6 => hartmann(z, &H6_A, &H6_P),
            StandardName::Shekel => shekel(z),
            StandardName::Ackley10 => ackley(z),
        }
    }
}

impl Objective for StandardFunction {
    fn dim(&self) -> usize {
        self.name.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "{} takes {} inputs, got {}",
                self.name,
                self.dim(),
                x.len()
            )));
        }
        let z: Vec<f64> = x.iter().map(|u| self.lower + u * (self.upper - self.lower)).collect();
        Ok(self.canonical_value(&z))
    }
}

/// Returns the named benchmark with its optimum certified by a local
/// search started at the published maximizer. The certified value is what
/// this implementation attains; it must agree with the published one to
/// 1e-4 relative.
pub fn standard_function(name: StandardName) -> Result<StandardFunction> {
    let (lower, upper, published_value, published_point): (f64, f64, f64, Vec<f64>) = match name {
        StandardName::Hartmann3 => (0.0, 1.0, 3.862_78, vec![0.114_614, 0.555_649, 0.852_547]),
        StandardName::Hartmann6 => (
            0.0,
            1.0,
            3.322_37,
            vec![0.201_69, 0.150_011, 0.476_874, 0.275_332, 0.311_652, 0.657_3],
        ),
        StandardName::Shekel => (0.0, 10.0, 10.536_4, vec![0.4; 4]),
        StandardName::Ackley10 => (-32.768, 32.768, 0.0, vec![0.5; 10]),
    };
    let mut f = StandardFunction {
        name,
        lower,
        upper,
        optimum_value: f64::NAN,
        optimum_point: published_point.clone(),
    };
    let (v, p) = compass_search(&f, &published_point, 1e-3, 1e-13, 200_000)?;
    if (v - published_value).abs() > 1e-4 * published_value.abs().max(1.0) {
        return Err(Error::NumericRange(format!(
            "{name}: certified optimum {v} disagrees with the published {published_value}"
        )));
    }
    f.optimum_value = v;
    f.optimum_point = p;
    Ok(f)
}

const H3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];
const H3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];
const H6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const H6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];
const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

fn hartmann<const D: usize>(z: &[f64], a: &[[f64; D]; 4], p: &[[f64; D]; 4]) -> f64 {
    (0..4)
        .map(|i| {
            let inner: f64 = (0..D).map(|j| a[i][j] * (z[j] - p[i][j]).powi(2)).sum();
            HARTMANN_ALPHA[i] * (-inner).exp()
        })
        .sum()
}

const SHEKEL_BETA: [f64; 10] = [0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5];
const SHEKEL_C: [[f64; 4]; 10] = [
    [4.0, 4.0, 4.0, 4.0],
    [1.0, 1.0, 1.0, 1.0],
    [8.0, 8.0, 8.0, 8.0],
    [6.0, 6.0, 6.0, 6.0],
    [3.0, 7.0, 3.0, 7.0],
    [2.0, 9.0, 2.0, 9.0],
    [5.0, 3.0, 5.0, 3.0],
    [8.0, 1.0, 8.0, 1.0],
    [6.0, 2.0, 6.0, 2.0],
    [7.0, 3.6, 7.0, 3.6],
];

fn shekel(z: &[f64]) -> f64 {
    SHEKEL_C
        .iter()
        .zip(SHEKEL_BETA)
        .map(|(c, beta)| {
            let d: f64 = c.iter().zip(z).map(|(ci, zi)| (zi - ci).powi(2)).sum();
            1.0 / (d + beta)
        })
        .sum()
}

fn ackley(z: &[f64]) -> f64 {
    let (a, b, c) = (20.0, 0.2, std::f64::consts::TAU);
    let n = z.len() as f64;
    let rms = (z.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let mean_cos = z.iter().map(|v| (c * v).cos()).sum::<f64>() / n;
    // written so that the origin gives exactly zero
    -(a * (1.0 - (-b * rms).exp()) + (1f64.exp() - mean_cos.exp()))
}
