//! Python bindings. Shapes and tolerances are classes; compound results come
//! back as plain dicts and lists.

use nptorus::asymptotics;
use nptorus::geometry::{SurfacePoint, TorusShape};
use nptorus::modes::{self, RangeMethod};
use nptorus::quadrature::QuadratureSpec;
use nptorus::spectral::{self, ModeSpectrum};
use nptorus::Error;
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } | Error::Eigen { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::InvalidShape(_) | Error::Domain(_) | Error::InvalidSpec(_) | Error::CoincidentPoints { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Round-trip through JSON so nested records arrive as dicts.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

#[pyclass(name = "TorusShape", frozen)]
#[derive(Clone)]
struct PyShape(TorusShape);

#[pymethods]
impl PyShape {
    #[new]
    #[pyo3(signature = (xi, big_r0 = 1.0))]
    fn new(xi: f64, big_r0: f64) -> PyResult<Self> {
        TorusShape::new(xi, big_r0).map(PyShape).map_err(to_py_err)
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.0.xi()
    }

    #[getter]
    fn major_radius(&self) -> f64 {
        self.0.major_radius()
    }

    #[getter]
    fn minor_radius(&self) -> f64 {
        self.0.minor_radius()
    }

    fn psi(&self, eta: f64) -> f64 {
        self.0.psi(eta)
    }

    fn mu(&self, dphi: f64) -> f64 {
        self.0.mu(dphi)
    }

    fn surface_area(&self) -> f64 {
        self.0.surface_area()
    }

    fn to_cartesian(&self, eta: f64, phi: f64) -> [f64; 3] {
        self.0.to_cartesian(SurfacePoint::new(eta, phi))
    }

    fn kernel_single(&self, eta: f64, eta_p: f64, dphi: f64) -> PyResult<f64> {
        self.0.kernel_single(eta, eta_p, dphi).map_err(to_py_err)
    }

    fn kernel_np(&self, eta: f64, eta_p: f64, dphi: f64) -> PyResult<f64> {
        self.0.kernel_np(eta, eta_p, dphi).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("TorusShape(xi={}, big_r0={})", self.0.xi(), self.0.big_r0())
    }
}

#[pyclass(name = "QuadratureSpec", frozen)]
#[derive(Clone)]
struct PySpec(QuadratureSpec);

#[pymethods]
impl PySpec {
    #[new]
    #[pyo3(signature = (rel_tol = 1e-9, abs_tol = 1e-12))]
    fn new(rel_tol: f64, abs_tol: f64) -> PyResult<Self> {
        QuadratureSpec::with_tolerances(rel_tol, abs_tol).map(PySpec).map_err(to_py_err)
    }

    #[getter]
    fn rel_tol(&self) -> f64 {
        self.0.rel_tol
    }

    #[getter]
    fn abs_tol(&self) -> f64 {
        self.0.abs_tol
    }
}

fn spec_of(spec: Option<PySpec>) -> QuadratureSpec {
    spec.map(|s| s.0).unwrap_or_default()
}

#[pyclass(name = "ModeSpectrum", frozen)]
struct PyModeSpectrum(ModeSpectrum);

#[pymethods]
impl PyModeSpectrum {
    #[getter]
    fn k(&self) -> i64 {
        self.0.k
    }

    #[getter(L)]
    fn l_trunc(&self) -> usize {
        self.0.l_trunc
    }

    /// Neumann-Poincare eigenvalues, descending.
    #[getter]
    fn lambda_np(&self) -> Vec<f64> {
        self.0.lambda_np().collect()
    }

    #[getter]
    fn lambda_a(&self) -> Vec<f64> {
        self.0.records.iter().map(|r| r.lambda_a).collect()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.0.records.iter().map(|r| r.residual).collect()
    }

    #[getter]
    fn build_err_np(&self) -> f64 {
        self.0.build_err_np
    }

    fn contained(&self) -> bool {
        self.0.contained()
    }

    #[pyo3(signature = (resolution = spectral::RESOLVED_THRESHOLD))]
    fn counts(&self, py: Python<'_>, resolution: f64) -> PyResult<PyObject> {
        to_py(py, &self.0.counts_at(resolution))
    }
}

/// `(value, err_estimate)` of the single-layer coefficient `s_{k,l}`.
#[pyfunction]
#[pyo3(signature = (shape, k, l, spec = None))]
fn s_kl(shape: &PyShape, k: i64, l: i64, spec: Option<PySpec>) -> PyResult<(f64, f64)> {
    let r = modes::s_kl(&shape.0, k, l, &spec_of(spec)).map_err(to_py_err)?;
    Ok((r.value, r.err_estimate))
}

/// `(value, err_estimate)` of the `xi`-derivative `s'_{k,l}`.
#[pyfunction]
#[pyo3(signature = (shape, k, l, spec = None))]
fn ds_kl(shape: &PyShape, k: i64, l: i64, spec: Option<PySpec>) -> PyResult<(f64, f64)> {
    let r = modes::ds_kl(&shape.0, k, l, &spec_of(spec)).map_err(to_py_err)?;
    Ok((r.value, r.err_estimate))
}

/// Numerical range `I_{k,l}` with its ingredients, as a dict.
#[pyfunction]
#[pyo3(signature = (shape, k, l, method = "spectral", spec = None))]
fn numerical_range(
    py: Python<'_>,
    shape: &PyShape,
    k: i64,
    l: i64,
    method: &str,
    spec: Option<PySpec>,
) -> PyResult<PyObject> {
    let method: RangeMethod = method.parse().map_err(PyValueError::new_err)?;
    let r = py
        .allow_threads(|| modes::numerical_range_record(&shape.0, k, l, method, &spec_of(spec)))
        .map_err(to_py_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (shape, k, l_trunc, spec = None))]
fn mode_spectrum(py: Python<'_>, shape: &PyShape, k: i64, l_trunc: usize, spec: Option<PySpec>) -> PyResult<PyModeSpectrum> {
    py.allow_threads(|| spectral::mode_spectrum(&shape.0, k, l_trunc, &spec_of(spec)))
        .map(PyModeSpectrum)
        .map_err(to_py_err)
}

/// Sign certificates along `l = 0` and for each fixed `k` in `ks`, as a dict.
#[pyfunction]
#[pyo3(signature = (shape, k_scan_max, l_scan_max, ks = vec![0, 3, 12], spec = None))]
fn certify_signs(
    py: Python<'_>,
    shape: &PyShape,
    k_scan_max: i64,
    l_scan_max: i64,
    ks: Vec<i64>,
    spec: Option<PySpec>,
) -> PyResult<PyObject> {
    let c = py
        .allow_threads(|| asymptotics::certify_signs(&shape.0, k_scan_max, l_scan_max, &ks, &spec_of(spec)))
        .map_err(to_py_err)?;
    to_py(py, &c)
}

#[pyfunction]
fn lead_i_k0(k: i64) -> PyResult<f64> {
    modes::lead_i_k0(k).map_err(to_py_err)
}

#[pyfunction]
fn lead_i_l(shape: &PyShape, l: i64) -> PyResult<f64> {
    modes::lead_i_l(&shape.0, l).map_err(to_py_err)
}

#[pymodule]
fn nptorus_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyShape>()?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyModeSpectrum>()?;
    m.add_function(wrap_pyfunction!(s_kl, m)?)?;
    m.add_function(wrap_pyfunction!(ds_kl, m)?)?;
    m.add_function(wrap_pyfunction!(numerical_range, m)?)?;
    m.add_function(wrap_pyfunction!(mode_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(certify_signs, m)?)?;
    m.add_function(wrap_pyfunction!(lead_i_k0, m)?)?;
    m.add_function(wrap_pyfunction!(lead_i_l, m)?)?;
    Ok(())
}
