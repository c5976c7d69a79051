//! Python bindings for `lsrbf`.
//!
//! Settings dictionaries accept the same keys as the CLI configuration files;
//! values are converted with `str()`.

use std::cell::RefCell;
use std::collections::HashMap;

use pyo3::exceptions::{PyNotImplementedError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lsrbf::experiments::{
    reports_to_csv, run_single, run_sweep, ApproximationReport, ConfigMap, PdeConfig, PdeReport, SweepConfig,
};
use lsrbf::faer::Mat;
use lsrbf::geometry::{self, Interval};
use lsrbf::kernels::RbfKernel;
use lsrbf::lssolver::{self, Factorization, LsSolution, SolverConfig, SystemMeta, ThresholdMode};
use lsrbf::{scaling, Error};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        Error::NotImplemented(_) => PyNotImplementedError::new_err(err.to_string()),
        Error::Factorization(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for lsrbf::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn parse<T: std::str::FromStr>(value: &str, what: &str) -> PyResult<T> {
    value.parse().map_err(|_| PyValueError::new_err(format!("unknown {what} `{value}`")))
}

fn solver_config(tau: f64, threshold_mode: &str, factorization: &str) -> PyResult<SolverConfig> {
    let mode = match threshold_mode {
        "relative" => ThresholdMode::RelativeToSigma1,
        "absolute" => ThresholdMode::Absolute,
        other => return Err(PyValueError::new_err(format!("unknown threshold mode `{other}`"))),
    };
    let fact = match factorization {
        "svd" => Factorization::TruncatedSvd,
        "qr" => Factorization::PivotedQr,
        other => return Err(PyValueError::new_err(format!("unknown factorization `{other}`"))),
    };
    let config = SolverConfig::new(tau).with_mode(mode).with_factorization(fact);
    config.validate().py()?;
    Ok(config)
}

fn settings(map: HashMap<String, Bound<'_, PyAny>>) -> PyResult<ConfigMap> {
    map.into_iter()
        .map(|(k, v)| Ok((k.replace('-', "_"), v.str()?.to_string())))
        .collect()
}

fn solution_dict<'py>(py: Python<'py>, s: &LsSolution) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("coefficients", s.coefficients.clone())?;
    d.set_item("coeff_norm", s.coeff_norm)?;
    d.set_item("residual_norm", s.residual_norm)?;
    d.set_item("rank", s.effective_rank)?;
    d.set_item("sigma1", s.sigma1)?;
    d.set_item("zero_rank", s.warning.is_some())?;
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &ApproximationReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("N", r.n)?;
    d.set_item("M", r.m)?;
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("err_l2", r.err_l2)?;
    d.set_item("err_max", r.err_max)?;
    d.set_item("coeff_norm", r.coeff_norm)?;
    d.set_item("ratio", r.ratio)?;
    d.set_item("rank", r.rank)?;
    d.set_item("sigma1", r.sigma1)?;
    d.set_item("predicted_limit", r.predicted_limit)?;
    d.set_item("zero_rank", r.warning.is_some())?;
    Ok(d)
}

fn pde_report_dict<'py>(py: Python<'py>, r: &PdeReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("N", r.n)?;
    d.set_item("M_interior", r.m_interior)?;
    d.set_item("M_boundary", r.m_boundary)?;
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("err_max", r.err_max)?;
    d.set_item("err_l2", r.err_l2)?;
    d.set_item("coeff_norm", r.coeff_norm)?;
    d.set_item("residual_norm", r.residual_norm)?;
    d.set_item("rank", r.rank)?;
    Ok(d)
}

/// Value of the kernel profile `φ(t)`; `kernel` is one of GA, MQ, IQ, IMQ.
#[pyfunction]
fn kernel_profile(kernel: &str, t: f64) -> PyResult<f64> {
    Ok(parse::<RbfKernel>(kernel, "kernel")?.profile(t))
}

/// The `2n + 1` equispaced centers on `[-extension, extension]`.
#[pyfunction]
fn centers_1d(n: usize, extension: f64) -> PyResult<Vec<f64>> {
    Ok(geometry::centers_1d(n, extension).py()?.coords().to_vec())
}

/// `m` equispaced samples on `[a, b]`, endpoints included.
#[pyfunction]
#[pyo3(signature = (m, a=-1.0, b=1.0))]
fn samples_1d(m: usize, a: f64, b: f64) -> PyResult<Vec<f64>> {
    let iv = Interval::with_confined_centers(a, b, a.abs().max(b.abs())).py()?;
    Ok(geometry::samples_1d(m, &iv).py()?.coords().to_vec())
}

#[pyfunction]
fn optimal_c(extension: f64, tau: f64) -> PyResult<f64> {
    scaling::optimal_c(extension, tau).py()
}

#[pyfunction]
fn optimal_c_constrained(extension: f64, tau: f64) -> PyResult<f64> {
    scaling::optimal_c_constrained(extension, tau).py()
}

#[pyfunction]
fn limiting_accuracy(c: f64, extension: f64, tau: f64) -> PyResult<f64> {
    scaling::limiting_accuracy(c, extension, tau).py()
}

#[pyfunction]
fn min_n_linear(c: f64, extension: f64, radius: f64, tau: f64) -> PyResult<usize> {
    scaling::min_n_linear(c, extension, radius, tau).py()
}

#[pyfunction]
fn epsilon_lower_bound(extension: f64, radius: f64, n: usize, tau: f64) -> PyResult<f64> {
    scaling::epsilon_lower_bound(extension, radius, n, tau).py()
}

/// Regularized least-squares solve of a dense system given as a list of rows.
#[pyfunction]
#[pyo3(signature = (matrix, rhs, tau=1e-10, threshold_mode="relative", factorization="svd"))]
fn solve_least_squares<'py>(
    py: Python<'py>,
    matrix: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    tau: f64,
    threshold_mode: &str,
    factorization: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let config = solver_config(tau, threshold_mode, factorization)?;
    let ncols = matrix.first().map_or(0, Vec::len);
    if matrix.iter().any(|row| row.len() != ncols) {
        return Err(PyValueError::new_err("matrix rows have different lengths"));
    }
    let a = Mat::from_fn(matrix.len(), ncols, |i, j| matrix[i][j]);
    let solution = py.detach(|| lssolver::solve_dense(a.as_ref(), &rhs, &config)).py()?;
    solution_dict(py, &solution)
}

/// Least-squares fit of a Python callable on `[a, b]` with centers on `[-extension, extension]`.
#[pyclass(frozen)]
struct Approximant {
    meta: SystemMeta,
    solution: LsSolution,
}

#[pymethods]
impl Approximant {
    /// Fits `f` with `2n + 1` centers and `⌈γ(2n + 1)⌉` samples.
    /// `epsilon` defaults to the optimal linear scaling applied to the center count.
    #[staticmethod]
    #[pyo3(signature = (f, n, a=-1.0, b=1.0, extension=1.5, epsilon=None, tau=1e-10, gamma=2.0, kernel="GA"))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        f: Bound<'_, PyAny>,
        n: usize,
        a: f64,
        b: f64,
        extension: f64,
        epsilon: Option<f64>,
        tau: f64,
        gamma: f64,
        kernel: &str,
    ) -> PyResult<Self> {
        let kernel = parse::<RbfKernel>(kernel, "kernel")?;
        let iv = Interval::new(a, b, extension).py()?;
        let centers = geometry::centers_1d(n, extension).py()?;
        let epsilon = match epsilon {
            Some(e) => e,
            None => scaling::optimal_c(extension, tau).py()? * centers.len() as f64,
        };
        let m = geometry::oversample_count_total(centers.len(), gamma).py()?;
        let samples = geometry::samples_1d(m, &iv).py()?;
        let failure = RefCell::new(None);
        let sample = |x: &[f64]| match f.call1((x[0],)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let system = lssolver::assemble(&centers, &samples, kernel, epsilon, sample, iv.length());
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let system = system.py()?;
        let solution = lssolver::solve(&system, &SolverConfig::new(tau)).py()?;
        Ok(Approximant { meta: system.meta().clone(), solution })
    }

    fn __call__(&self, xs: Vec<f64>) -> PyResult<Vec<f64>> {
        let points = geometry::NodeSet::from_points_1d(xs, geometry::NodeRole::InteriorSample).py()?;
        lssolver::evaluate_approximant(&self.solution.coefficients, &self.meta, &points).py()
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.solution.coefficients.clone()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.meta.epsilon
    }

    #[getter]
    fn rank(&self) -> usize {
        self.solution.effective_rank
    }

    #[getter]
    fn coeff_norm(&self) -> f64 {
        self.solution.coeff_norm
    }

    #[getter]
    fn residual_norm(&self) -> f64 {
        self.solution.residual_norm
    }

    fn __repr__(&self) -> String {
        format!(
            "Approximant(centers={}, epsilon={:.6e}, rank={})",
            self.meta.centers.len(),
            self.meta.epsilon,
            self.solution.effective_rank
        )
    }
}

/// One approximation at center parameter `n`, configured by a settings dict.
#[pyfunction]
fn approximate<'py>(
    py: Python<'py>,
    config: HashMap<String, Bound<'py, PyAny>>,
    n: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let config = SweepConfig::from_settings(&settings(config)?).py()?;
    let report = py.detach(|| run_single(&config, n)).py()?;
    report_dict(py, &report)
}

/// Sweep over `n_min..=n_max`; returns one dict per N.
#[pyfunction]
fn sweep<'py>(py: Python<'py>, config: HashMap<String, Bound<'py, PyAny>>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = SweepConfig::from_settings(&settings(config)?).py()?;
    let reports = py.detach(|| run_sweep(&config)).py()?;
    reports.iter().map(|r| report_dict(py, r)).collect()
}

/// Same as `sweep` but returns the CSV text.
#[pyfunction]
fn sweep_csv(py: Python<'_>, config: HashMap<String, Bound<'_, PyAny>>) -> PyResult<String> {
    let config = SweepConfig::from_settings(&settings(config)?).py()?;
    let reports = py.detach(|| run_sweep(&config)).py()?;
    Ok(reports_to_csv(&reports))
}

/// Poisson collocation sweep; `problem` is runge1d or runge2d.
#[pyfunction]
fn poisson_sweep<'py>(
    py: Python<'py>,
    config: HashMap<String, Bound<'py, PyAny>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = PdeConfig::from_settings(&settings(config)?).py()?;
    let reports = py.detach(|| config.run_sweep()).py()?;
    reports.iter().map(|r| pde_report_dict(py, r)).collect()
}

#[pymodule]
#[pyo3(name = "lsrbf")]
fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(kernel_profile, m)?)?;
    m.add_function(wrap_pyfunction!(centers_1d, m)?)?;
    m.add_function(wrap_pyfunction!(samples_1d, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_c, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_c_constrained, m)?)?;
    m.add_function(wrap_pyfunction!(limiting_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(min_n_linear, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(solve_least_squares, m)?)?;
    m.add_function(wrap_pyfunction!(approximate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_sweep, m)?)?;
    m.add_class::<Approximant>()?;
    Ok(())
}
