use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyModule>)>(f: F) {
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(infdensity_py::infdensity_py)(py);
        f(py, m.bind(py).cast::<PyModule>().unwrap());
    });
}

#[test]
fn density_returns_a_dict() {
    with_module(|_, m| {
        let d = m.call_method1("density", ("parabola",)).unwrap();
        let d = d.cast::<PyDict>().unwrap();
        let verdict = d.get_item("verdict").unwrap().unwrap();
        let kind: String = verdict.get_item("kind").unwrap().extract().unwrap();
        let value: f64 = verdict.get_item("value").unwrap().extract().unwrap();
        assert_eq!(kind, "converges");
        assert!((value - 1.0).abs() < 1e-2);
        let radii = d.get_item("profile").unwrap().unwrap().get_item("radii").unwrap();
        assert!(radii.cast::<PyList>().unwrap().len() >= 8);
    });
}

#[test]
fn keyword_arguments_and_errors() {
    with_module(|py, m| {
        let kw = PyDict::new(py);
        kw.set_item("at_point", vec![0.0, 0.0, 0.0]).unwrap();
        let d = m.getattr("density").unwrap().call(("plane",), Some(&kw)).unwrap();
        let value: f64 = d.get_item("verdict").unwrap().get_item("value").unwrap().extract().unwrap();
        assert!((value - 1.0).abs() < 1e-2);

        let err = m.call_method1("density", ("no_such_scene",)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let err = m.call_method1("oracle", ("nope",)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}

#[test]
fn oracle_and_builtins() {
    with_module(|_, m| {
        let names: Vec<String> = m.call_method0("builtins").unwrap().extract().unwrap();
        assert!(names.iter().any(|n| n == "catenoid"));
        let mu: Vec<(String, f64)> = m.call_method1("oracle", ("mu",)).unwrap().extract().unwrap();
        assert!(mu.iter().any(|(q, v)| q == "mu_2" && (*v - std::f64::consts::PI).abs() < 1e-15));
    });
}
