//! Python bindings: operators, domains, radial and grid solvers, eigenvalue brackets and checks.
//! Structured results are returned as plain dicts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use degen_eigen::barrier::lambda_threshold as threshold;
use degen_eigen::eigen::{estimate_lambda as bracket, lambda_derivative_check as derivative_check};
use degen_eigen::grid::{self, FieldState, GridDomain, Shape, SolveOptions};
use degen_eigen::radial::{self, RadialOutcome, RadialProblem};
use degen_eigen::{verify, Error, OperatorSpec};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::Input(_) | Error::Unsupported(_) | Error::MissingParameter(_) | Error::Domain(_) | Error::Precondition(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Serializes through JSON into Python objects.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Operator", frozen)]
struct PyOperator {
    inner: OperatorSpec,
}

#[pymethods]
impl PyOperator {
    #[staticmethod]
    fn laplacian(n: usize) -> Self {
        PyOperator { inner: OperatorSpec::laplacian(n) }
    }

    #[staticmethod]
    #[pyo3(signature = (n, q = 0.0, a = 0.0))]
    fn plap_type(n: usize, q: f64, a: f64) -> PyResult<Self> {
        Ok(PyOperator { inner: OperatorSpec::plap_type(n, q, a).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, p, q = 0.0))]
    fn pseudo_plap(n: usize, p: f64, q: f64) -> PyResult<Self> {
        Ok(PyOperator { inner: OperatorSpec::pseudo_plap(n, p, q).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, q = 0.0))]
    fn inf_type(n: usize, q: f64) -> PyResult<Self> {
        Ok(PyOperator { inner: OperatorSpec::inf_type(n, q).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, lam, lam_big, q = 0.0))]
    fn pucci_plus(n: usize, lam: f64, lam_big: f64, q: f64) -> PyResult<Self> {
        Ok(PyOperator { inner: OperatorSpec::pucci_plus(n, lam, lam_big, q).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, lam, lam_big, q = 0.0))]
    fn pucci_minus(n: usize, lam: f64, lam_big: f64, q: f64) -> PyResult<Self> {
        Ok(PyOperator { inner: OperatorSpec::pucci_minus(n, lam, lam_big, q).map_err(err)? })
    }

    /// The nine built-in operators in dimension n.
    #[staticmethod]
    fn builtins(n: usize) -> Vec<Self> {
        degen_eigen::operator::builtins(n).into_iter().map(|inner| PyOperator { inner }).collect()
    }

    /// Parses the JSON form {"family", "n", "params"}.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyOperator { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("serializable")
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn symmetric(&self) -> bool {
        self.inner.symmetric()
    }

    fn signature<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.signature())
    }

    /// H(p, X) for a gradient p and a symmetric matrix X given as rows.
    fn eval(&self, p: Vec<f64>, x: Vec<Vec<f64>>) -> PyResult<f64> {
        let n = self.inner.n();
        if p.len() != n || x.len() != n || x.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err(format!("expected a length-{n} gradient and an {n}x{n} matrix")));
        }
        let m = DMatrix::from_fn(n, n, |i, j| x[i][j]);
        self.inner.eval(&DVector::from_vec(p), &m).map_err(err)
    }

    /// Radial form G(r, v', v'') for rotation-invariant operators.
    fn radial_eval(&self, r: f64, v1: f64, v2: f64) -> PyResult<f64> {
        self.inner.radial_eval(r, v1, v2).map_err(err)
    }

    fn classify_case<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.classify_case().map_err(err)?)
    }

    #[pyo3(signature = (seed = 0, trials = 2000))]
    fn check_conditions<'py>(&self, py: Python<'py>, seed: u64, trials: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.check_conditions(seed, trials))
    }

    fn __repr__(&self) -> String {
        self.inner.to_string()
    }
}

#[pyclass(name = "Domain", frozen)]
struct PyDomain {
    inner: GridDomain,
}

fn domain(shape: Shape, h: f64, boundary: f64, weight: f64, directions: usize) -> PyResult<PyDomain> {
    let inner = grid::build_domain(&shape, h, grid::constant_fn(boundary), grid::constant_fn(weight), directions).map_err(err)?;
    Ok(PyDomain { inner })
}

#[pymethods]
impl PyDomain {
    #[staticmethod]
    #[pyo3(signature = (radius, h, boundary = 1.0, weight = 1.0, directions = 16))]
    fn disk(radius: f64, h: f64, boundary: f64, weight: f64, directions: usize) -> PyResult<Self> {
        domain(Shape::Disk { radius }, h, boundary, weight, directions)
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, h, boundary = 1.0, weight = 1.0, directions = 16))]
    fn rectangle(a: f64, b: f64, h: f64, boundary: f64, weight: f64, directions: usize) -> PyResult<Self> {
        domain(Shape::Rectangle { a, b }, h, boundary, weight, directions)
    }

    /// Mask text: rows of 0/1/2 for exterior/interior/boundary nodes.
    #[staticmethod]
    #[pyo3(signature = (text, h, boundary = 1.0, weight = 1.0, directions = 16))]
    fn from_mask(text: &str, h: f64, boundary: f64, weight: f64, directions: usize) -> PyResult<Self> {
        domain(Shape::load_mask(text).map_err(err)?, h, boundary, weight, directions)
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn n_interior(&self) -> usize {
        self.inner.n_interior()
    }

    /// Interior node positions in field order.
    fn positions(&self) -> Vec<(f64, f64)> {
        self.inner.interior.iter().map(|&l| self.inner.position(l)).collect()
    }

    /// λ below which positive solutions are guaranteed, as a bound report.
    #[pyo3(signature = (op, rho = None))]
    fn lambda_threshold<'py>(&self, py: Python<'py>, op: &PyOperator, rho: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
        let (_, nu) = self.inner.weight_bounds();
        let rep = threshold(&op.inner, nu, self.inner.diameter(), rho.or(self.inner.default_rho())).map_err(err)?;
        to_py(py, &rep)
    }
}

#[pyclass(name = "Field", frozen)]
struct PyField {
    inner: FieldState,
}

#[pymethods]
impl PyField {
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.u.clone()
    }

    #[getter]
    fn status(&self) -> PyResult<String> {
        let v = serde_json::to_value(self.inner.status).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(v.as_str().unwrap_or_default().to_string())
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.status == grid::Status::Converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iteration
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lam
    }

    fn sup(&self) -> f64 {
        self.inner.sup()
    }

    fn inf(&self) -> f64 {
        self.inner.inf()
    }

    fn to_csv(&self, dom: &PyDomain) -> String {
        self.inner.to_csv(&dom.inner)
    }
}

#[pyfunction]
#[pyo3(signature = (op, radius = 1.0, tol = 1e-9))]
fn eigen_radial<'py>(py: Python<'py>, op: &PyOperator, radius: f64, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &radial::eigen_radial(&op.inner, radius, tol).map_err(err)?)
}

/// Radial profile dict, or None when no positive solution exists.
#[pyfunction]
#[pyo3(signature = (op, lam, radius = 1.0, delta = 1.0))]
fn solve_radial<'py>(py: Python<'py>, op: &PyOperator, lam: f64, radius: f64, delta: f64) -> PyResult<Option<Bound<'py, PyAny>>> {
    match radial::solve_radial_bvp(&RadialProblem::new(op.inner, radius, delta, lam)).map_err(err)? {
        RadialOutcome::Solved(s) => Ok(Some(to_py(py, &s)?)),
        RadialOutcome::Infeasible { .. } => Ok(None),
    }
}

#[pyfunction]
#[pyo3(signature = (op, radii, tol = 1e-3))]
fn scaling_invariant_check<'py>(py: Python<'py>, op: &PyOperator, radii: Vec<f64>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &radial::scaling_invariant_check(&op.inner, &radii, tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (op, dom, lam, tol = 1e-8))]
fn solve_grid(py: Python<'_>, op: &PyOperator, dom: &PyDomain, lam: f64, tol: f64) -> PyResult<PyField> {
    let opts = SolveOptions { tol, ..SolveOptions::default() };
    let inner = py.detach(|| grid::solve_grid_bvp(&op.inner, &dom.inner, lam, &opts)).map_err(err)?;
    Ok(PyField { inner })
}

#[pyfunction]
#[pyo3(signature = (op, dom, delta = 1.0, tol = 0.02))]
fn estimate_lambda<'py>(py: Python<'py>, op: &PyOperator, dom: &PyDomain, delta: f64, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let b = py.detach(|| bracket(&op.inner, &dom.inner, delta, tol)).map_err(err)?;
    to_py(py, &b)
}

#[pyfunction]
#[pyo3(signature = (op, dom, lambdas, probes, delta = 1.0))]
fn lambda_derivative_check<'py>(
    py: Python<'py>,
    op: &PyOperator,
    dom: &PyDomain,
    lambdas: Vec<f64>,
    probes: Vec<(f64, f64)>,
    delta: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| derivative_check(&op.inner, &dom.inner, delta, &lambdas, &probes, &SolveOptions::default()))
        .map_err(err)?;
    to_py(py, &r)
}

/// Full verification battery on a converged field.
#[pyfunction]
fn verify_solution<'py>(py: Python<'py>, op: &PyOperator, field: &PyField, dom: &PyDomain) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &verify::verify_solution(&op.inner, &field.inner, &dom.inner).map_err(err)?)
}

#[pymodule]
fn degen_eigen_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOperator>()?;
    m.add_class::<PyDomain>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(eigen_radial, m)?)?;
    m.add_function(wrap_pyfunction!(solve_radial, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_invariant_check, m)?)?;
    m.add_function(wrap_pyfunction!(solve_grid, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_derivative_check, m)?)?;
    m.add_function(wrap_pyfunction!(verify_solution, m)?)?;
    Ok(())
}
