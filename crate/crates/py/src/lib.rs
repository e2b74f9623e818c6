//! Python bindings. Structured results come back as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use gffperc::greens::{green as green_fn, highdim_scalars as scalars_fn, GreenMethod};
use gffperc::harness::{run, ExperimentSpec};
use gffperc::perc::{estimate_crossing as crossing_fn, Margin};
use gffperc::renorm::{peierls_sum as peierls_fn, slab_pipeline as slab_fn, vtilde as vtilde_fn};
use gffperc::Point;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// g(x) for the point `x`; the dimension is its length.
#[pyfunction]
#[pyo3(signature = (point, tol = 1e-10, method = "quadrature"))]
fn green(point: Vec<i64>, tol: f64, method: &str) -> PyResult<f64> {
    let m: GreenMethod = method.parse().map_err(err)?;
    Ok(green_fn(&Point::new(point), tol, m).map_err(err)?.value)
}

#[pyfunction]
fn highdim_scalars(py: Python<'_>, d: usize) -> PyResult<Py<PyAny>> {
    to_py(py, &scalars_fn(d).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (d, l, h, n, seed, margin = "0.25L"))]
fn estimate_crossing(py: Python<'_>, d: usize, l: u64, h: f64, n: u64, seed: u64, margin: &str) -> PyResult<Py<PyAny>> {
    let m: Margin = margin.parse().map_err(err)?;
    to_py(py, &crossing_fn(d, l, h, n, seed, m).map_err(err)?)
}

#[pyfunction]
fn slab_pipeline(py: Python<'_>, h0: f64, big_l0: u64, p_site: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &slab_fn(h0, big_l0, p_site).map_err(err)?)
}

/// `(numerator, denominator)` of the exact Peierls sum.
#[pyfunction]
fn peierls_sum(n: u32) -> PyResult<(String, String)> {
    let r = peierls_fn(n).map_err(err)?;
    Ok((r.numer().to_string(), r.denom().to_string()))
}

#[pyfunction]
fn vtilde(u: f64) -> f64 {
    vtilde_fn(u)
}

/// Runs a flat `key = value` spec and returns its record.
#[pyfunction]
#[pyo3(signature = (text, workers = 0))]
fn run_spec(py: Python<'_>, text: &str, workers: usize) -> PyResult<Py<PyAny>> {
    let mut spec = ExperimentSpec::parse(text).map_err(err)?;
    spec.workers = workers;
    let rec = py.detach(|| run(&spec)).map_err(err)?;
    to_py(py, &rec)
}

#[pymodule]
fn gffperc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(green, m)?)?;
    m.add_function(wrap_pyfunction!(highdim_scalars, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_crossing, m)?)?;
    m.add_function(wrap_pyfunction!(slab_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(peierls_sum, m)?)?;
    m.add_function(wrap_pyfunction!(vtilde, m)?)?;
    m.add_function(wrap_pyfunction!(run_spec, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
