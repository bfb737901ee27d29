//! Exact Gaussian-process regression with a zero prior mean.
//!
//! The model keeps the lower Cholesky factor `L` of `K + lambda I` and the
//! whitened targets `w = L^-1 y`. A new observation extends `L` by one row,
//! so conditioning on `t` points costs `O(t^2)` per update instead of a
//! cubic refit. Posterior queries need one forward solve `v = L^-1 k(x)`:
//!
//! ```text
//! mean(x) = v . w
//! var(x)  = k(x, x) - v . v
//! ```

use crate::error::{check_finite, Error, Result};
use crate::kernels::KernelSpec;

/// Diagonal jitter tried, in order, when the factor cannot be extended.
pub const JITTER_LADDER: [f64; 3] = [1e-10, 1e-8, 1e-6];

/// Regularizer used by the regret analysis, `1 + 2/T`.
pub fn theory_lambda(horizon: usize) -> f64 {
    1.0 + 2.0 / horizon as f64
}

/// Regularizer used in the synthetic-function experiments.
pub const EXPERIMENT_LAMBDA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelSpec,
    lambda: f64,
    dim: usize,
    /// Row-major `n x dim`.
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Packed lower triangle, row `i` holds `i + 1` entries.
    chol: Vec<f64>,
    whitened: Vec<f64>,
    jitter: f64,
    info_gain: f64,
}

impl GpModel {
    pub fn new(kernel: KernelSpec, lambda: f64, dim: usize) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "regularizer must be positive and finite, got {lambda}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self {
            kernel,
            lambda,
            dim,
            xs: Vec::new(),
            ys: Vec::new(),
            chol: Vec::new(),
            whitened: Vec::new(),
            jitter: 0.0,
            info_gain: 0.0,
        })
    }

    /// Builds a model from a whole dataset with a single dense factorization.
    pub fn fit(
        kernel: KernelSpec,
        lambda: f64,
        dim: usize,
        points: &[Vec<f64>],
        ys: &[f64],
    ) -> Result<Self> {
        let mut model = Self::new(kernel, lambda, dim)?;
        if points.len() != ys.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} observations",
                points.len(),
                ys.len()
            )));
        }
        for (p, &y) in points.iter().zip(ys) {
            model.check_point(p)?;
            check_finite(&[y], "observation")?;
            model.xs.extend_from_slice(p);
            model.ys.push(y);
        }
        model.refactor_with_ladder()?;
        Ok(model)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.xs.chunks_exact(self.dim)
    }

    pub fn observations(&self) -> &[f64] {
        &self.ys
    }

    /// Jitter currently added to the diagonal on top of lambda (0 unless a
    /// fallback refit was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `½ Σ ln(1 + σ²_{i-1}(x_i) / λ)`, which equals `½ ln det(I + K/λ)`.
    pub fn accumulated_info_gain(&self) -> f64 {
        self.info_gain
    }

    /// Dense copy of the lower Cholesky factor of `K + (lambda + jitter) I`.
    pub fn cholesky_factor(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut row = self.chol_row(i).to_vec();
                row.resize(n, 0.0);
                row
            })
            .collect()
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Posterior> {
        self.check_point(x)?;
        self.posterior_unchecked(x)
    }

    /// Posterior mean and standard deviation at many points.
    pub fn posterior_many<'a, I>(&self, xs: I) -> Result<Vec<Posterior>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        xs.into_iter().map(|x| self.posterior(x)).collect()
    }

    /// Posterior without the dimension and finiteness checks.
    pub(crate) fn posterior_unchecked(&self, x: &[f64]) -> Result<Posterior> {
        let (v, prior) = self.whiten_cross(x)?;
        let mean = dot(&v, &self.whitened);
        let var = prior - dot(&v, &v);
        Ok(Posterior {
            mean,
            stddev: var.max(0.0).sqrt(),
        })
    }

    /// Posterior means at every training point.
    pub fn means_at_data(&self) -> Result<Vec<f64>> {
        self.points()
            .map(|p| self.posterior_unchecked(p).map(|q| q.mean))
            .collect()
    }

    /// Conditions the model on one more observation.
    ///
    /// The factor grows by a single row; if the new pivot is not positive the
    /// whole factor is rebuilt with increasing diagonal jitter.
    pub fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.check_point(x)?;
        check_finite(&[y], "observation")?;
        let (v, prior) = self.whiten_cross(x)?;
        let vv = dot(&v, &v);
        let pivot_sq = prior + self.lambda + self.jitter - vv;

        self.xs.extend_from_slice(x);
        self.ys.push(y);

        if pivot_sq > 0.0 && pivot_sq.is_finite() {
            let pivot = pivot_sq.sqrt();
            let w_new = (y - dot(&v, &self.whitened)) / pivot;
            self.chol.extend_from_slice(&v);
            self.chol.push(pivot);
            self.whitened.push(w_new);
            let prev_var = (prior - vv).max(0.0);
            self.info_gain += 0.5 * (prev_var / self.lambda).ln_1p();
            Ok(())
        } else {
            let res = self.refactor_with_ladder();
            if res.is_err() {
                self.xs.truncate(self.xs.len() - self.dim);
                self.ys.pop();
            }
            res
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, model expects {}",
                x.len(),
                self.dim
            )));
        }
        check_finite(x, "query point")
    }

    fn chol_row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.chol[start..start + i + 1]
    }

    /// Returns `L^-1 k(X, x)` and `k(x, x)`.
    fn whiten_cross(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.len();
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let k = self
                .kernel
                .eval_distance(crate::kernels::euclidean(self.point(i), x))?;
            let row = self.chol_row(i);
            let s = k - dot(&row[..i], &v);
            v.push(s / row[i]);
        }
        Ok((v, self.kernel.eval_distance(0.0)?))
    }

    fn refactor_with_ladder(&mut self) -> Result<()> {
        let mut last = None;
        for jitter in std::iter::once(0.0).chain(JITTER_LADDER) {
            match self.refactor(jitter) {
                Ok(()) => return Ok(()),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or(Error::Factorization { pivot: 0 }))
    }

    /// Dense Cholesky-Banachiewicz factorization of `K + (lambda + jitter) I`.
    fn refactor(&mut self, jitter: f64) -> Result<()> {
        let n = self.len();
        let mut chol = vec![0.0; n * (n + 1) / 2];
        let idx = |i: usize, j: usize| i * (i + 1) / 2 + j;
        for i in 0..n {
            for j in 0..=i {
                let k = self
                    .kernel
                    .eval_distance(crate::kernels::euclidean(self.point(i), self.point(j)))?;
                let mut s = if i == j { k + self.lambda + jitter } else { k };
                for m in 0..j {
                    s -= chol[idx(i, m)] * chol[idx(j, m)];
                }
                if i == j {
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(Error::Factorization { pivot: i });
                    }
                    chol[idx(i, i)] = s.sqrt();
                } else {
                    chol[idx(i, j)] = s / chol[idx(j, j)];
                }
            }
        }
        let mut whitened = Vec::with_capacity(n);
        for i in 0..n {
            let row = &chol[idx(i, 0)..=idx(i, i)];
            let s = self.ys[i] - dot(&row[..i], &whitened);
            whitened.push(s / row[i]);
        }
        // ½ ln det(I + K/λ) = Σ ln L_ii - (n/2) ln λ
        let info_gain = (0..n).map(|i| chol[idx(i, i)].ln()).sum::<f64>()
            - 0.5 * n as f64 * self.lambda.ln();
        self.chol = chol;
        self.whitened = whitened;
        self.jitter = jitter;
        self.info_gain = info_gain.max(0.0);
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
