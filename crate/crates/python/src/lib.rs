//! Python bindings. Every analysis returns a plain dict holding the serialized
//! result structure of the core crate.

use infdensity::asymptotics::{density_at_infinity_with, density_at_point_with, profile_with, LimitOptions};
use infdensity::classify::{classify as classify_scene, ClassifyOptions};
use infdensity::cones::{tangent_cone_at_point, tangent_cone_infinity, ConeOptions};
use infdensity::measure::MeasureOptions;
use infdensity::metric::{lne_at_infinity, GraphOptions, LneOptions};
use infdensity::multiplicity::{kr_check as kr, multiplicity_auto, relative_multiplicity, MultiplicityOptions};
use infdensity::scene::{builtin_names, load_scene, parse_scene, Scene};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

fn scene(spec: &str) -> PyResult<Scene> {
    let found = if spec.contains('{') {
        parse_scene(spec)
    } else {
        load_scene(spec)
    };
    found.map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let json = PyModule::import(py, "json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

fn failed(e: infdensity::Error) -> PyErr {
    match e {
        infdensity::Error::InvalidArgument(_) | infdensity::Error::PointNotOnSet(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Names of the built-in scenes.
#[pyfunction]
fn builtins() -> Vec<&'static str> {
    builtin_names()
}

/// Density at infinity, or at `at_point` when given.
#[pyfunction]
#[pyo3(signature = (scene_spec, at_point=None, tol=1e-3, seed=0))]
fn density(py: Python<'_>, scene_spec: &str, at_point: Option<Vec<f64>>, tol: f64, seed: u64) -> PyResult<Py<PyAny>> {
    let s = scene(scene_spec)?;
    let analysis = py
        .detach(|| match &at_point {
            Some(p) => density_at_point_with(&s, &LimitOptions { seed, ..LimitOptions::at_point(p, tol) }),
            None => density_at_infinity_with(&s, &LimitOptions { seed, ..LimitOptions::at_infinity(&s, tol) }),
        })
        .map_err(failed)?;
    to_py(py, &analysis)
}

/// Density ratio on `k` log-spaced radii in `[rmin, rmax]`.
#[pyfunction]
#[pyo3(signature = (scene_spec, center=None, rmin=1.0, rmax=100.0, k=16, tol=1e-3, seed=0))]
#[allow(clippy::too_many_arguments)]
fn profile(
    py: Python<'_>,
    scene_spec: &str,
    center: Option<Vec<f64>>,
    rmin: f64,
    rmax: f64,
    k: usize,
    tol: f64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let s = scene(scene_spec)?;
    let c = center.unwrap_or_else(|| vec![0.0; s.ambient_dim]);
    let opts = MeasureOptions { tol, seed, ..Default::default() };
    let prof = py.detach(|| profile_with(&s, &c, rmin, rmax, k, &opts)).map_err(failed)?;
    to_py(py, &prof)
}

/// Tangent cone at infinity, or at `at_point`.
#[pyfunction]
#[pyo3(signature = (scene_spec, at_point=None, tol=0.05, seed=0))]
fn cone(py: Python<'_>, scene_spec: &str, at_point: Option<Vec<f64>>, tol: f64, seed: u64) -> PyResult<Py<PyAny>> {
    let s = scene(scene_spec)?;
    let est = py
        .detach(|| match &at_point {
            Some(p) => tangent_cone_at_point(&s, p, &ConeOptions::at_point(tol, seed)),
            None => tangent_cone_infinity(&s, &ConeOptions::at_infinity(tol, seed)),
        })
        .map_err(failed)?;
    to_py(py, &est)
}

/// Relative multiplicity along `direction`; the shell radius grows until stable when `r` is omitted.
#[pyfunction]
#[pyo3(signature = (scene_spec, direction, eta=0.2, r=None, samples=4000, seed=0))]
fn multiplicity(
    py: Python<'_>,
    scene_spec: &str,
    direction: Vec<f64>,
    eta: f64,
    r: Option<f64>,
    samples: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let s = scene(scene_spec)?;
    let report = py
        .detach(|| match r {
            Some(r) => relative_multiplicity(&s, &direction, eta, r, samples, seed),
            None => multiplicity_auto(&s, &direction, &MultiplicityOptions { eta, samples, seed, ..Default::default() }),
        })
        .map_err(failed)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (scene_spec, tol=1e-3, seed=0))]
fn kr_check(py: Python<'_>, scene_spec: &str, tol: f64, seed: u64) -> PyResult<Py<PyAny>> {
    let s = scene(scene_spec)?;
    let report = py.detach(|| kr(&s, tol, seed)).map_err(failed)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (scene_spec, levels=None, samples=20_000, seed=0))]
fn lne(py: Python<'_>, scene_spec: &str, levels: Option<Vec<f64>>, samples: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let s = scene(scene_spec)?;
    let mut opts = LneOptions {
        graph: GraphOptions { samples, seed, ..Default::default() },
        ..Default::default()
    };
    if let Some(l) = levels {
        opts.levels = l;
    }
    let report = py.detach(|| lne_at_infinity(&s, &opts)).map_err(failed)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (scene_spec, tol=1e-3, seed=0))]
fn classify(py: Python<'_>, scene_spec: &str, tol: f64, seed: u64) -> PyResult<Py<PyAny>> {
    let s = scene(scene_spec)?;
    let opts = ClassifyOptions { tol, seed, ..Default::default() };
    let c = py.detach(|| classify_scene(&s, &opts)).map_err(failed)?;
    to_py(py, &c)
}

/// Closed-form reference values as `(quantity, value)` pairs.
#[pyfunction]
fn oracle(name: &str) -> PyResult<Vec<(String, f64)>> {
    infdensity::oracle::oracle_values(name)
        .map(|v| v.into_iter().map(|o| (o.quantity, o.value)).collect())
        .ok_or_else(|| PyValueError::new_err(format!("unknown oracle `{name}`")))
}

#[pymodule]
pub fn infdensity_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(builtins, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(cone, m)?)?;
    m.add_function(wrap_pyfunction!(multiplicity, m)?)?;
    m.add_function(wrap_pyfunction!(kr_check, m)?)?;
    m.add_function(wrap_pyfunction!(lne, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
