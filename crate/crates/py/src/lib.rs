//! Python bindings for `tracest_core`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tracest_core::harness::{self, ExperimentRecord};
use tracest_core::linop::mtx::read_matrix_market_file;
use tracest_core::{bounds, specialfn, BoundReport, MatrixProperties, ProbeDistribution, TolerancePair};

fn py_err(e: tracest_core::Error) -> PyErr {
    if e.exit_code() == 3 {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn tol(eps: f64, delta: f64) -> PyResult<TolerancePair> {
    TolerancePair::new(eps, delta).map_err(py_err)
}

fn method(name: &str) -> PyResult<ProbeDistribution> {
    name.parse().map_err(py_err)
}

fn record_dict<'py>(py: Python<'py>, r: &ExperimentRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("method", r.method.name())?;
    d.set_item("n", r.n)?;
    d.set_item("samples", r.samples)?;
    d.set_item("trials", r.trials)?;
    d.set_item("successes", r.successes)?;
    d.set_item("success_prob", r.success_prob)?;
    d.set_item("eps", r.eps)?;
    d.set_item("delta", r.delta)?;
    d.set_item("seed", r.seed)?;
    d.set_item("wilson", r.wilson(1.96))?;
    Ok(d)
}

/// Square matrix-free operator.
#[pyclass(frozen, module = "tracest")]
struct Operator {
    inner: tracest_core::ImplicitOperator,
    label: String,
}

#[pymethods]
impl Operator {
    /// Build from a generator spec such as `"gram-gaussian:n=500,m=50"`.
    #[staticmethod]
    #[pyo3(signature = (spec, seed = 0))]
    fn generate(spec: &str, seed: u64) -> PyResult<Self> {
        let s = tracest_core::GeneratorSpec::parse(spec, seed).map_err(py_err)?;
        let inner = tracest_core::generate(&s).map_err(py_err)?;
        Ok(Self { inner, label: s.to_string() })
    }

    /// Load a Matrix Market file.
    #[staticmethod]
    fn from_mtx(path: &str) -> PyResult<Self> {
        let inner = read_matrix_market_file(path).map_err(py_err)?;
        Ok(Self { inner, label: path.to_string() })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn matvec(&self, v: Vec<f64>) -> PyResult<Vec<f64>> {
        tracest_core::matvec(&self.inner, &v).map_err(py_err)
    }

    fn trace(&self) -> f64 {
        tracest_core::exact_trace(&self.inner)
    }

    fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal_entries()
    }

    /// Row-major dense copy.
    fn to_dense(&self) -> Vec<Vec<f64>> {
        let m = self.inner.to_dense();
        (0..m.dim()).map(|k| m.row(k).to_vec()).collect()
    }

    #[pyo3(signature = (materialize = false, bins = 50, seed = 0))]
    fn diagnostics<'py>(&self, py: Python<'py>, materialize: bool, bins: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let opts = tracest_core::DiagnosticsOptions { materialize, bins, seed, ..Default::default() };
        let d = tracest_core::MatrixDiagnostics::compute(&self.inner, opts).map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("n", d.n)?;
        out.set_item("trace", d.trace)?;
        out.set_item("k_h", d.k_h)?;
        out.set_item("k_g", d.k_g)?;
        out.set_item("k_u", d.k_u)?;
        out.set_item("spectral_norm", d.spectral_norm)?;
        out.set_item("rank_estimate", d.rank_estimate)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("Operator({:?}, dim={})", self.label, self.inner.dim())
    }
}

#[pyfunction]
#[pyo3(signature = (op, method = "gaussian", samples = 100, seed = 0))]
fn estimate_trace(op: &Operator, method: &str, samples: usize, seed: u64) -> PyResult<f64> {
    let est = tracest_core::estimate_trace(&op.inner, self::method(method)?, samples, tracest_core::SeededStream::new(seed))
        .map_err(py_err)?;
    Ok(est.value)
}

#[pyfunction]
fn hutchinson_bound(eps: f64, delta: f64) -> PyResult<u64> {
    Ok(bounds::hutchinson_sufficient(tol(eps, delta)?))
}

#[pyfunction]
fn gaussian_bound(eps: f64, delta: f64) -> PyResult<u64> {
    Ok(bounds::gaussian_sufficient(tol(eps, delta)?))
}

#[pyfunction]
fn gaussian_necessary(rank: u64, eps: f64, delta: f64) -> PyResult<u64> {
    bounds::gaussian_necessary_min_n(rank, tol(eps, delta)?).map_err(py_err)
}

#[pyfunction]
fn projection_rank_samples(rank: u64, delta: f64) -> PyResult<u64> {
    bounds::projection_rank_samples(rank, delta).map_err(py_err)
}

/// All applicable bounds as a dict keyed by rule name.
#[pyfunction]
#[pyo3(signature = (eps, delta, k_h = None, k_g = None, k_u = None, n = None, rank = None))]
fn bound_report<'py>(
    py: Python<'py>,
    eps: f64,
    delta: f64,
    k_h: Option<f64>,
    k_g: Option<f64>,
    k_u: Option<f64>,
    n: Option<u64>,
    rank: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = BoundReport::compute(tol(eps, delta)?, MatrixProperties { k_h, k_g, k_u, n, rank }).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("c", r.c_factor)?;
    d.set_item("hutchinson", r.hutchinson_simple)?;
    d.set_item("gaussian", r.gaussian_simple)?;
    d.set_item("hutchinson_matrix", r.hutchinson_matrix)?;
    d.set_item("gaussian_matrix", r.gaussian_matrix)?;
    d.set_item("unit", r.unit_with_repl)?;
    d.set_item("unit_noreplace", r.unit_without_repl)?;
    d.set_item("gaussian_necessary", r.gaussian_necessary)?;
    d.set_item("hutchinson_effective", r.hutchinson_effective)?;
    d.set_item("gaussian_effective", r.gaussian_effective)?;
    Ok(d)
}

#[pyfunction]
fn phi(theta: f64, x: f64) -> PyResult<f64> {
    bounds::phi(theta, x).map_err(py_err)
}

#[pyfunction]
fn reg_gamma_p(a: f64, x: f64) -> PyResult<f64> {
    specialfn::reg_gamma_p(a, x).map_err(py_err)
}

#[pyfunction]
fn reg_gamma_q(a: f64, x: f64) -> PyResult<f64> {
    specialfn::reg_gamma_q(a, x).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (op, method, samples, eps, delta, trials = 500, seed = 0))]
fn success_probability<'py>(
    py: Python<'py>,
    op: &Operator,
    method: &str,
    samples: u64,
    eps: f64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = self::method(method)?;
    let t = tol(eps, delta)?;
    let inner = op.inner.clone();
    let rec = py
        .detach(move || harness::success_probability(&inner, m, samples, t, trials, seed))
        .map_err(py_err)?;
    record_dict(py, &rec)
}

/// Smallest `N` reaching success rate `1 - delta`; `None` when censored at `n_max`.
#[pyfunction]
#[pyo3(signature = (op, method, eps, delta, trials = 500, seed = 0, n_max = 10000))]
fn min_sample_size(
    py: Python<'_>,
    op: &Operator,
    method: &str,
    eps: f64,
    delta: f64,
    trials: u64,
    seed: u64,
    n_max: u64,
) -> PyResult<Option<u64>> {
    let m = self::method(method)?;
    let t = tol(eps, delta)?;
    let inner = op.inner.clone();
    let res = py
        .detach(move || harness::min_sample_size(&inner, m, t, trials, seed, n_max))
        .map_err(py_err)?;
    Ok(res.n_star)
}

#[pymodule]
fn tracest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Operator>()?;
    m.add_function(wrap_pyfunction!(estimate_trace, m)?)?;
    m.add_function(wrap_pyfunction!(hutchinson_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_necessary, m)?)?;
    m.add_function(wrap_pyfunction!(projection_rank_samples, m)?)?;
    m.add_function(wrap_pyfunction!(bound_report, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(reg_gamma_p, m)?)?;
    m.add_function(wrap_pyfunction!(reg_gamma_q, m)?)?;
    m.add_function(wrap_pyfunction!(success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(min_sample_size, m)?)?;
    Ok(())
}
