//! Objective functions with known optima and the noisy observation channel.
//!
//! Every objective is defined on the unit box `[0, 1]^d` and is maximized.

mod rkhs;
mod standard;

pub use rkhs::{make_rkhs_function, make_rkhs_function_with_budget, RkhsFunction, DEFAULT_OPTIMUM_BUDGET};
pub use standard::{standard_function, StandardFunction, StandardName};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Default observation noise standard deviation (variance 0.01).
pub const DEFAULT_NOISE_STDDEV: f64 = 0.1;

pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;
}

/// Objective backed by a closure.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.f)(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// `f(x) + noise`.
    pub noisy: f64,
    /// `f(x)`.
    pub truth: f64,
}

/// Returns `f(x) + eps`, `eps ~ N(0, sd^2)` i.i.d. Gaussian noise is
/// sub-Gaussian with parameter `R = sd`.
pub struct NoisyOracle<'a> {
    target: &'a dyn Objective,
    noise: Option<Normal<f64>>,
    noise_stddev: f64,
    rng: ChaCha8Rng,
}

impl<'a> NoisyOracle<'a> {
    pub fn new(target: &'a dyn Objective, noise_stddev: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(noise_stddev.is_finite() && noise_stddev >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise standard deviation must be nonnegative, got {noise_stddev}"
            )));
        }
        let noise = if noise_stddev > 0.0 {
            Some(Normal::new(0.0, noise_stddev).map_err(|e| Error::InvalidArgument(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            target,
            noise,
            noise_stddev,
            rng,
        })
    }

    /// Oracle whose noise stream is derived from `seed`.
    pub fn seeded(target: &'a dyn Objective, noise_stddev: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NOISE_STREAM);
        Self::new(target, noise_stddev, rng)
    }

    pub fn target(&self) -> &'a dyn Objective {
        self.target
    }

    pub fn noise_stddev(&self) -> f64 {
        self.noise_stddev
    }

    pub fn observe(&mut self, x: &[f64]) -> Result<Observation> {
        let truth = self.target.value(x)?;
        let eps = self.noise.map_or(0.0, |n| n.sample(&mut self.rng));
        Ok(Observation {
            noisy: truth + eps,
            truth,
        })
    }
}

pub(crate) const NOISE_STREAM: u64 = 1;

/// Certified maximum by dense random search over the unit box followed by a
/// compass search from the ten best samples.
///
/// The value is a numerical certificate; rerun with a larger budget to
/// tighten it.
pub fn estimate_optimum<R: Rng>(f: &dyn Objective, budget: usize, rng: &mut R) -> Result<(f64, Vec<f64>)> {
    const STARTS: usize = 10;
    if budget < 1000 {
        return Err(Error::InvalidArgument(format!(
            "optimum search needs a budget of at least 1000, got {budget}"
        )));
    }
    let d = f.dim();
    // (value, point), sorted descending, earliest sample wins ties
    let mut top: Vec<(f64, Vec<f64>)> = Vec::with_capacity(STARTS + 1);
    let mut x = vec![0.0; d];
    for _ in 0..budget {
        x.iter_mut().for_each(|v| *v = rng.random::<f64>());
        let v = f.value(&x)?;
        if v.is_nan() {
            return Err(Error::NanScore { point: x });
        }
        if top.len() < STARTS || v > top[top.len() - 1].0 {
            let pos = top.iter().position(|(tv, _)| v > *tv).unwrap_or(top.len());
            top.insert(pos, (v, x.clone()));
            top.truncate(STARTS);
        }
    }
    let mut best = top[0].clone();
    for (_, start) in &top {
        let (v, p) = compass_search(f, start, 0.05, 1e-12, 50_000)?;
        if v > best.0 {
            best = (v, p);
        }
    }
    Ok(best)
}

/// Coordinate pattern search inside the unit box: try `±step` along each
/// axis, accept strict improvements, halve the step when none is found.
pub fn compass_search(
    f: &dyn Objective,
    start: &[f64],
    initial_step: f64,
    min_step: f64,
    max_evals: usize,
) -> Result<(f64, Vec<f64>)> {
    let mut x = start.to_vec();
    let mut fx = f.value(&x)?;
    let mut step = initial_step;
    let mut evals = 1;
    while step > min_step && evals < max_evals {
        let mut improved = false;
        for j in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] = (x[j] + sign * step).clamp(0.0, 1.0);
                if y[j] == x[j] {
                    continue;
                }
                let fy = f.value(&y)?;
                evals += 1;
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((fx, x))
}
