//! Python bindings: shape models, Cauchy data and marching, the cylinder
//! family and the elliptic functions.

use std::f64::consts::PI;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use membrane_cauchy::cauchy::{self, CauchyData, CauchyError, Fiber};
use membrane_cauchy::curve::CurveSpec;
use membrane_cauchy::cylinder::{self, CylinderError, CylinderParams, SeparationOptions};
use membrane_cauchy::elliptic;
use membrane_cauchy::shape::{self, MaterialParams, ShapeModel};
use membrane_cauchy::strip::{self, MarchOptions, Scheme};
use membrane_cauchy::xfunc::XExpr;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cyl_err(e: CylinderError) -> PyErr {
    match e {
        CylinderError::InvalidParams(_) | CylinderError::OutOfFamily { .. } => value_err(e),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn cauchy_err(e: CauchyError) -> PyErr {
    match e {
        CauchyError::Inadmissible { .. } | CauchyError::TooFewSamples { .. } => value_err(e),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Serialize through JSON into plain Python objects.
fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Material constants of the bending energy.
#[pyclass(name = "Material", module = "membrane_py", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PyMaterial {
    k: f64,
    kbar: f64,
    c0: f64,
    pressure: f64,
    lambda_: f64,
}

#[pymethods]
impl PyMaterial {
    #[new]
    #[pyo3(signature = (k=1.0, kbar=0.0, c0=0.0, pressure=0.0, lambda_=0.0))]
    fn new(k: f64, kbar: f64, c0: f64, pressure: f64, lambda_: f64) -> Self {
        Self { k, kbar, c0, pressure, lambda_ }
    }

    /// Constants for which the unit-circle cylinder with h = 1/2 is stationary.
    #[staticmethod]
    fn circle_gauge() -> Self {
        MaterialParams::circle_gauge().into()
    }

    fn __repr__(&self) -> String {
        format!(
            "Material(k={}, kbar={}, c0={}, pressure={}, lambda_={})",
            self.k, self.kbar, self.c0, self.pressure, self.lambda_
        )
    }
}

impl From<MaterialParams> for PyMaterial {
    fn from(m: MaterialParams) -> Self {
        Self { k: m.k, kbar: m.kbar, c0: m.c0, pressure: m.pressure, lambda_: m.lambda }
    }
}

impl From<&PyMaterial> for MaterialParams {
    fn from(m: &PyMaterial) -> Self {
        Self { k: m.k, kbar: m.kbar, c0: m.c0, pressure: m.pressure, lambda: m.lambda_ }
    }
}

/// Right-hand side Φ of ΔH = Φ(a, c) with its derived coefficients.
#[pyclass(name = "ShapeModel", module = "membrane_py", frozen)]
struct PyShapeModel {
    inner: ShapeModel,
}

fn fiber_from(v: [f64; 10]) -> Fiber {
    Fiber::from_array(v)
}

#[pymethods]
impl PyShapeModel {
    #[staticmethod]
    fn willmore() -> Self {
        Self { inner: ShapeModel::willmore() }
    }

    #[staticmethod]
    fn helfrich(material: &PyMaterial) -> PyResult<Self> {
        Ok(Self { inner: ShapeModel::helfrich(material.into()).map_err(value_err)? })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.model.name()
    }

    fn phi(&self, a: f64, c: f64) -> f64 {
        self.inner.phi(a, c)
    }

    /// [B1, B2, D1, D2] at a fiber point (p, q, a, c, p1, q2, r, a1, c2, l).
    fn bd(&self, fiber: [f64; 10]) -> [f64; 4] {
        self.inner.bd(&fiber_from(fiber))
    }

    /// Expression text of B1, B2, D1, D2.
    fn coefficients(&self) -> PyResult<Vec<(String, String)>> {
        self.inner
            .coefficients
            .exprs()
            .into_iter()
            .map(|(n, e)| Ok((n.to_string(), e.to_poly().map_err(value_err)?.to_text())))
            .collect()
    }
}

fn cauchy_data(curve: &str, h: &str, hw: &str, x0: f64, a0: Option<f64>) -> PyResult<CauchyData> {
    let spec: CurveSpec = serde_json::from_str(curve).map_err(value_err)?;
    let c = spec.build().map_err(value_err)?;
    let h = XExpr::parse(h).map_err(value_err)?;
    let hw = XExpr::parse(hw).map_err(value_err)?;
    Ok(CauchyData::new(c, Arc::new(h), Arc::new(hw), x0, a0.unwrap_or(-PI / 2.0)))
}

/// Sampled integral curve built from Cauchy data.
#[pyclass(name = "IntegralCurve", module = "membrane_py", frozen)]
struct PyIntegralCurve {
    inner: cauchy::IntegralCurve,
}

#[pymethods]
impl PyIntegralCurve {
    #[getter]
    fn xs(&self) -> Vec<f64> {
        self.inner.xs.clone()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx
    }

    fn positions(&self) -> Vec<[f64; 3]> {
        self.inner.points.iter().map(|p| [p.pos[0], p.pos[1], p.pos[2]]).collect()
    }

    fn fibers(&self) -> Vec<[f64; 10]> {
        self.inner.points.iter().map(|p| p.fiber.to_array()).collect()
    }

    fn mean_curvature_defect(&self) -> f64 {
        self.inner.mean_curvature_defect()
    }

    fn hw_defect(&self) -> f64 {
        self.inner.hw_defect()
    }

    /// Max residual of each generator form.
    fn residuals(&self, model: &PyShapeModel) -> Vec<(String, f64)> {
        let r = cauchy::verify_integral_curve(&self.inner, &model.inner);
        r.forms.into_iter().map(|f| (f.form, f.max)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.points.len()
    }
}

/// Build the canonical integral curve; `curve` is a JSON curve spec.
#[pyfunction]
#[pyo3(signature = (curve, h, model, hw="0", n=128, x0=0.0, a0=None))]
fn build_integral_curve(
    curve: &str,
    h: &str,
    model: &PyShapeModel,
    hw: &str,
    n: usize,
    x0: f64,
    a0: Option<f64>,
) -> PyResult<PyIntegralCurve> {
    let data = cauchy_data(curve, h, hw, x0, a0)?;
    let inner = cauchy::build_integral_curve(&data, &model.inner, n).map_err(cauchy_err)?;
    Ok(PyIntegralCurve { inner })
}

/// Marched principal patch.
#[pyclass(name = "Patch", module = "membrane_py", frozen)]
struct PyPatch {
    patch: shape::PrincipalPatch,
    #[pyo3(get)]
    truncated: bool,
    #[pyo3(get)]
    monitor: Vec<f64>,
}

#[pymethods]
impl PyPatch {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.patch.ny, self.patch.nx)
    }

    /// Node positions as rows of [x, y, z] lists.
    fn positions(&self) -> Vec<Vec<[f64; 3]>> {
        (0..self.patch.ny)
            .map(|j| self.patch.row(j).iter().map(|n| [n.pos[0], n.pos[1], n.pos[2]]).collect())
            .collect()
    }

    fn principal_curvatures(&self) -> Vec<Vec<(f64, f64)>> {
        (0..self.patch.ny)
            .map(|j| self.patch.row(j).iter().map(|n| (n.fiber.a, n.fiber.c)).collect())
            .collect()
    }

    /// Interior maxima of the structure-equation residuals.
    #[pyo3(signature = (model, margin=1))]
    fn residuals(&self, model: &PyShapeModel, margin: usize) -> Vec<(String, f64)> {
        strip::validate_patch(&self.patch, &model.inner).summary(margin)
    }

    fn to_json(&self) -> PyResult<String> {
        self.patch.to_json().map_err(value_err)
    }
}

#[pyfunction]
#[pyo3(signature = (curve, model, dy, rows, scheme="rk4"))]
fn march(curve: &PyIntegralCurve, model: &PyShapeModel, dy: f64, rows: usize, scheme: &str) -> PyResult<PyPatch> {
    let scheme: Scheme = scheme.parse().map_err(PyValueError::new_err)?;
    let r = strip::march(&curve.inner, &model.inner, &MarchOptions::new(dy, rows, scheme))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(PyPatch { patch: r.patch, truncated: r.truncated, monitor: r.monitor })
}

/// Constants of one member of the cylinder family.
#[pyclass(name = "FamilyConstants", module = "membrane_py", frozen)]
struct PyFamilyConstants {
    inner: cylinder::FamilyConstants,
}

#[pymethods]
impl PyFamilyConstants {
    #[new]
    fn new(varsigma: f64, varrho: f64) -> PyResult<Self> {
        Ok(Self { inner: cylinder::FamilyConstants::new(varsigma, varrho).map_err(cyl_err)? })
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    #[getter]
    fn modulus(&self) -> f64 {
        self.inner.m
    }

    fn kappa(&self, s: f64) -> f64 {
        self.inner.kappa(s)
    }

    /// κ, κ′, κ″, κ‴ at arclength s.
    fn kappa_jet(&self, s: f64) -> [f64; 4] {
        self.inner.kappa_jet(s)
    }

    fn closure_index(&self) -> PyResult<f64> {
        self.inner.closure_index().map_err(cyl_err)
    }

    #[pyo3(signature = (n=256, eps=1.0))]
    fn ode_residuals(&self, py: Python<'_>, n: usize, eps: f64) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.ode_residuals(n, eps))
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }
}

/// ς closing the directrix with turning number μ and υ-fold symmetry.
#[pyfunction]
#[pyo3(signature = (upsilon, rho, mu=1))]
fn solve_varsigma(upsilon: u32, rho: f64, mu: u32) -> PyResult<f64> {
    cylinder::solve_phi_mu(upsilon, mu, rho, None).map_err(cyl_err)
}

fn params(upsilon: u32, rho: f64, mu: u32) -> PyResult<CylinderParams> {
    let s = solve_varsigma(upsilon, rho, mu)?;
    let mut p = CylinderParams::new(s, rho, upsilon);
    p.mu = mu;
    p.validate().map_err(cyl_err)?;
    Ok(p)
}

/// Closed directrix as a list of (x, y) points.
#[pyfunction]
#[pyo3(signature = (upsilon, rho, mu=1, samples=600))]
fn directrix(upsilon: u32, rho: f64, mu: u32, samples: usize) -> PyResult<Vec<[f64; 2]>> {
    let c = cylinder::synthesize_curve(&params(upsilon, rho, mu)?, samples).map_err(cyl_err)?;
    Ok(c.polyline.points)
}

/// Convexity, inflections, self-intersections and symmetry of a member.
#[pyfunction]
#[pyo3(signature = (upsilon, rho, mu=1, samples=600))]
fn classify(py: Python<'_>, upsilon: u32, rho: f64, mu: u32, samples: usize) -> PyResult<Py<PyAny>> {
    let c = cylinder::synthesize_curve(&params(upsilon, rho, mu)?, samples).map_err(cyl_err)?;
    let r = cylinder::analyze_curve(&c, upsilon, 1e-5).map_err(cyl_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (upsilon, rho_max=0.98, scan_step=0.01))]
fn separating_values(py: Python<'_>, upsilon: u32, rho_max: f64, scan_step: f64) -> PyResult<Py<PyAny>> {
    let opts = SeparationOptions { rho_max, scan_step, ..Default::default() };
    let sv = py.detach(|| cylinder::separating_values(upsilon, opts)).map_err(cyl_err)?;
    to_py(py, &sv)
}

#[pyfunction]
fn complete_k(m: f64) -> PyResult<f64> {
    elliptic::complete_k(m).map_err(value_err)
}

/// (sn, cn, dn) at u for parameter m.
#[pyfunction]
fn jacobi(u: f64, m: f64) -> PyResult<(f64, f64, f64)> {
    let t = elliptic::jacobi(u, m).map_err(value_err)?;
    Ok((t.sn, t.cn, t.dn))
}

#[pymodule]
fn membrane_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMaterial>()?;
    m.add_class::<PyShapeModel>()?;
    m.add_class::<PyIntegralCurve>()?;
    m.add_class::<PyPatch>()?;
    m.add_class::<PyFamilyConstants>()?;
    m.add_function(wrap_pyfunction!(build_integral_curve, m)?)?;
    m.add_function(wrap_pyfunction!(march, m)?)?;
    m.add_function(wrap_pyfunction!(solve_varsigma, m)?)?;
    m.add_function(wrap_pyfunction!(directrix, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(separating_values, m)?)?;
    m.add_function(wrap_pyfunction!(complete_k, m)?)?;
    m.add_function(wrap_pyfunction!(jacobi, m)?)?;
    Ok(())
}
