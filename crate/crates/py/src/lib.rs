//! Python bindings for `gpei`.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use gpei::acquisition::{self, OmegaSchedule};
use gpei::optimizers::{self, Algorithm, RunConfig, RunTrace};
use gpei::testbed::{self, NoisyOracle, Objective};
use gpei::{Error, GpModel, KernelSpec, RkhsFunction, StandardFunction, StandardName};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Json(_) => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

#[pyclass(name = "KernelSpec", frozen, from_py_object)]
#[derive(Clone)]
struct PyKernelSpec {
    inner: KernelSpec,
}

#[pymethods]
impl PyKernelSpec {
    #[staticmethod]
    fn squared_exponential(lengthscale: f64) -> PyResult<Self> {
        Ok(Self {
            inner: KernelSpec::squared_exponential(lengthscale).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn matern(nu: f64, lengthscale: f64) -> PyResult<Self> {
        Ok(Self {
            inner: KernelSpec::matern(nu, lengthscale).map_err(to_py)?,
        })
    }

    #[getter]
    fn lengthscale(&self) -> f64 {
        self.inner.lengthscale()
    }

    #[getter]
    fn nu(&self) -> Option<f64> {
        self.inner.nu()
    }

    fn eval(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&x, &y).map_err(to_py)
    }

    fn gram_matrix(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.inner.gram_matrix(&points).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("KernelSpec({})", self.inner)
    }
}

#[pyclass(name = "GpModel")]
struct PyGpModel {
    inner: GpModel,
}

#[pymethods]
impl PyGpModel {
    #[new]
    #[pyo3(signature = (kernel, lambda_, dim))]
    fn new(kernel: PyKernelSpec, lambda_: f64, dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: GpModel::new(kernel.inner, lambda_, dim).map_err(to_py)?,
        })
    }

    fn update(&mut self, x: Vec<f64>, y: f64) -> PyResult<()> {
        self.inner.update(&x, y).map_err(to_py)
    }

    /// Returns `(mean, stddev)`.
    fn posterior(&self, x: Vec<f64>) -> PyResult<(f64, f64)> {
        let p = self.inner.posterior(&x).map_err(to_py)?;
        Ok((p.mean, p.stddev))
    }

    fn accumulated_info_gain(&self) -> f64 {
        self.inner.accumulated_info_gain()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
fn tau(z: f64) -> f64 {
    acquisition::tau(z)
}

#[pyfunction]
fn ei_score(mean: f64, incumbent: f64, scaled_stddev: f64) -> PyResult<f64> {
    acquisition::ei_score(mean, incumbent, scaled_stddev).map_err(to_py)
}

#[pyfunction]
fn ucb_score(mean: f64, stddev: f64, beta: f64) -> f64 {
    acquisition::ucb_score(mean, stddev, beta)
}

#[pyfunction]
#[pyo3(signature = (info_gain, delta = 0.05, rkhs_bound = 1.0, noise_bound = 1.0))]
fn confidence_beta(info_gain: f64, delta: f64, rkhs_bound: f64, noise_bound: f64) -> f64 {
    acquisition::confidence_beta(rkhs_bound, noise_bound, info_gain, delta)
}

/// `mode` is `"fixed"`, `"theory-ei"` or `"poly-log"`.
#[pyfunction]
#[pyo3(signature = (mode, t, info_gain_prev = 0.0, value = 1.0, delta = 0.05, horizon = 100))]
fn omega_at(mode: &str, t: usize, info_gain_prev: f64, value: f64, delta: f64, horizon: usize) -> PyResult<f64> {
    let schedule = parse_omega(mode, value, delta, horizon)?;
    schedule.omega_at(t, info_gain_prev).map_err(to_py)
}

fn parse_omega(mode: &str, value: f64, delta: f64, horizon: usize) -> PyResult<OmegaSchedule> {
    match mode {
        "fixed" => OmegaSchedule::fixed(value),
        "theory-ei" | "theory" => OmegaSchedule::theory_ei(delta),
        "poly-log" | "polylog" => OmegaSchedule::poly_log(horizon),
        _ => return Err(PyValueError::new_err(format!("unknown omega mode {mode:?}"))),
    }
    .map_err(to_py)
}

#[pyclass(name = "RkhsFunction", frozen)]
struct PyRkhsFunction {
    inner: RkhsFunction,
}

#[pymethods]
impl PyRkhsFunction {
    #[staticmethod]
    #[pyo3(signature = (kernel, dim, m = 500, seed = 0, optimum_budget = 100_000))]
    fn generate(kernel: PyKernelSpec, dim: usize, m: usize, seed: u64, optimum_budget: usize) -> PyResult<Self> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let inner = testbed::make_rkhs_function_with_budget(kernel.inner, dim, m, optimum_budget, &mut rng)
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: RkhsFunction::load(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn rkhs_norm(&self) -> f64 {
        self.inner.rkhs_norm()
    }

    #[getter]
    fn optimum_value(&self) -> f64 {
        self.inner.optimum_value
    }

    #[getter]
    fn optimum_point(&self) -> Vec<f64> {
        self.inner.optimum_point.clone()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.value(&x).map_err(to_py)
    }
}

#[pyclass(name = "StandardFunction", frozen)]
struct PyStandardFunction {
    inner: StandardFunction,
}

#[pymethods]
impl PyStandardFunction {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        let name: StandardName = name.parse().map_err(to_py)?;
        Ok(Self {
            inner: testbed::standard_function(name).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name().as_str()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn optimum_value(&self) -> f64 {
        self.inner.optimum_value()
    }

    #[getter]
    fn optimum_point(&self) -> Vec<f64> {
        self.inner.optimum_point().to_vec()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.value(&x).map_err(to_py)
    }
}

#[pyclass(name = "RunTrace", frozen)]
struct PyRunTrace {
    inner: RunTrace,
}

#[pymethods]
impl PyRunTrace {
    #[getter]
    fn algorithm(&self) -> &'static str {
        self.inner.algorithm.as_str()
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        self.inner.rows.iter().map(|r| r.x.clone()).collect()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.column(|r| r.y)
    }

    #[getter]
    fn f_best(&self) -> Vec<f64> {
        self.column(|r| r.f_best)
    }

    #[getter]
    fn log10_distance(&self) -> Vec<f64> {
        self.column(|r| r.log10_distance)
    }

    #[getter]
    fn instant_regret(&self) -> Vec<f64> {
        self.column(|r| r.instant_regret)
    }

    #[getter]
    fn cum_regret(&self) -> Vec<f64> {
        self.column(|r| r.cum_regret)
    }

    #[getter]
    fn omega(&self) -> Vec<f64> {
        self.column(|r| r.omega)
    }

    #[getter]
    fn info_gain(&self) -> Vec<f64> {
        self.column(|r| r.info_gain)
    }

    #[getter]
    fn cell_count(&self) -> Vec<usize> {
        self.inner.rows.iter().map(|r| r.cell_count).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }
}

impl PyRunTrace {
    fn column(&self, f: impl Fn(&optimizers::TraceRow) -> f64) -> Vec<f64> {
        self.inner.rows.iter().map(f).collect()
    }
}

enum Target {
    Rkhs(RkhsFunction),
    Standard(StandardFunction),
}

/// Runs one optimizer on an `RkhsFunction` or `StandardFunction`.
#[pyfunction]
#[pyo3(signature = (
    algorithm, target, horizon = 100, seed = 0, noise_stddev = 0.1, kernel = None,
    omega = None, omega_value = 1.0, delta = 0.05, lambda_ = 0.01,
    acq_candidates = None, acq_refinements = 30
))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    algorithm: &str,
    target: &Bound<'_, PyAny>,
    horizon: usize,
    seed: u64,
    noise_stddev: f64,
    kernel: Option<PyKernelSpec>,
    omega: Option<&str>,
    omega_value: f64,
    delta: f64,
    lambda_: f64,
    acq_candidates: Option<usize>,
    acq_refinements: usize,
) -> PyResult<PyRunTrace> {
    let algorithm: Algorithm = algorithm.parse().map_err(to_py)?;
    let target = if let Ok(f) = target.cast::<PyRkhsFunction>() {
        Target::Rkhs(f.get().inner.clone())
    } else if let Ok(f) = target.cast::<PyStandardFunction>() {
        Target::Standard(f.get().inner.clone())
    } else {
        return Err(PyValueError::new_err("target must be an RkhsFunction or StandardFunction"));
    };
    let kernel = match kernel {
        Some(k) => k.inner,
        None => KernelSpec::matern(2.5, 0.2).map_err(to_py)?,
    };
    let mut config = RunConfig::new(algorithm, horizon, kernel);
    if let Some(mode) = omega {
        config.omega = parse_omega(mode, omega_value, delta, horizon)?;
    }
    config.seed = seed;
    config.delta = delta;
    config.lambda = lambda_;
    config.acq_candidates = acq_candidates;
    config.acq_refinements = acq_refinements;
    let trace = py
        .detach(move || {
            let (objective, optimum): (&dyn Objective, f64) = match &target {
                Target::Rkhs(f) => (f, f.optimum_value),
                Target::Standard(f) => (f, f.optimum_value()),
            };
            let oracle = NoisyOracle::seeded(objective, noise_stddev, seed)?;
            optimizers::run(config, oracle, optimum)
        })
        .map_err(to_py)?;
    Ok(PyRunTrace { inner: trace })
}

#[pymodule]
#[pyo3(name = "gpei")]
fn gpei_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernelSpec>()?;
    m.add_class::<PyGpModel>()?;
    m.add_class::<PyRkhsFunction>()?;
    m.add_class::<PyStandardFunction>()?;
    m.add_class::<PyRunTrace>()?;
    m.add_function(wrap_pyfunction!(tau, m)?)?;
    m.add_function(wrap_pyfunction!(ei_score, m)?)?;
    m.add_function(wrap_pyfunction!(ucb_score, m)?)?;
    m.add_function(wrap_pyfunction!(confidence_beta, m)?)?;
    m.add_function(wrap_pyfunction!(omega_at, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
