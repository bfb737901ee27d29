use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{estimate_optimum, Objective};
use crate::error::{check_finite, Error, Result};
use crate::kernels::{euclidean, KernelSpec};

pub const DEFAULT_OPTIMUM_BUDGET: usize = 100_000;

/// `f(x) = sum_i a_i k(c_i, x)`, a finite kernel expansion whose RKHS norm
/// is `sqrt(a^T K a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkhsFunction {
    pub kernel: KernelSpec,
    pub dim: usize,
    pub centers: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub rkhs_norm_sq: f64,
    pub optimum_value: f64,
    pub optimum_point: Vec<f64>,
    /// Random-search budget behind `optimum_value`.
    pub optimum_budget: usize,
}

impl RkhsFunction {
    /// Expansion with the given centers and weights; the optimum fields are
    /// left unset (`-inf`) until [`RkhsFunction::certify_optimum`] runs.
    pub fn from_parts(kernel: KernelSpec, centers: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if centers.is_empty() || centers.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "need matching nonempty centers and weights, got {} and {}",
                centers.len(),
                weights.len()
            )));
        }
        let dim = centers[0].len();
        for c in &centers {
            if c.len() != dim {
                return Err(Error::InvalidArgument("centers differ in dimension".into()));
            }
            check_finite(c, "center")?;
        }
        check_finite(&weights, "weight")?;
        let mut norm_sq = 0.0;
        for i in 0..centers.len() {
            let mut row = 0.0;
            for j in 0..centers.len() {
                row += weights[j] * kernel.eval_distance(euclidean(&centers[j], &centers[i]))?;
            }
            norm_sq += weights[i] * row;
        }
        Ok(Self {
            kernel,
            dim,
            centers,
            weights,
            rkhs_norm_sq: norm_sq,
            optimum_value: f64::NEG_INFINITY,
            optimum_point: vec![0.5; dim],
            optimum_budget: 0,
        })
    }

    pub fn rkhs_norm(&self) -> f64 {
        self.rkhs_norm_sq.max(0.0).sqrt()
    }

    pub fn certify_optimum<R: Rng>(&mut self, budget: usize, rng: &mut R) -> Result<()> {
        let (v, p) = estimate_optimum(self, budget, rng)?;
        self.optimum_value = v;
        self.optimum_point = p;
        self.optimum_budget = budget;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let f: RkhsFunction = serde_json::from_str(&text)?;
        if f.centers.len() != f.weights.len() || f.centers.iter().any(|c| c.len() != f.dim) {
            return Err(Error::InvalidArgument(format!(
                "{}: inconsistent RKHS function file",
                path.display()
            )));
        }
        Ok(f)
    }
}

impl Objective for RkhsFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, function has {}",
                x.len(),
                self.dim
            )));
        }
        let mut s = 0.0;
        for (c, a) in self.centers.iter().zip(&self.weights) {
            s += a * self.kernel.eval_distance(euclidean(c, x))?;
        }
        Ok(s)
    }
}

/// Random target: `m` centers uniform on `[0, 1]^d`, weights uniform on
/// `[-1, 1]`, optimum certified with [`DEFAULT_OPTIMUM_BUDGET`] samples.
pub fn make_rkhs_function<R: Rng>(kernel: KernelSpec, dim: usize, m: usize, rng: &mut R) -> Result<RkhsFunction> {
    make_rkhs_function_with_budget(kernel, dim, m, DEFAULT_OPTIMUM_BUDGET, rng)
}

pub fn make_rkhs_function_with_budget<R: Rng>(
    kernel: KernelSpec,
    dim: usize,
    m: usize,
    optimum_budget: usize,
    rng: &mut R,
) -> Result<RkhsFunction> {
    if m == 0 || dim == 0 {
        return Err(Error::InvalidArgument("need at least one center and one dimension".into()));
    }
    let centers: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    let weights: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mut f = RkhsFunction::from_parts(kernel, centers, weights)?;
    f.certify_optimum(optimum_budget, rng)?;
    Ok(f)
}
