//! Python module `sglab`.
//!
//! Fields cross the boundary as flat row-major lists of length `n * n`;
//! structured results come back as JSON strings so they can be fed to
//! `json.loads` without a parallel class hierarchy.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sglab::elliptic::{self, SolveOptions};
use sglab::inequalities;
use sglab::lab::{self, InitialData, ParsedConfig, Preset, RunConfig};
use sglab::spectral::{self, ScalarField as CoreField, TorusGrid};
use sglab::transport;
use sglab::wasserstein::{self, DensityOnTorus};

fn err(e: sglab::Error) -> PyErr {
    match e {
        sglab::Error::Parse { .. } | sglab::Error::Precondition(_) | sglab::Error::Shape(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// A real field sampled on the uniform `n x n` grid of the unit torus.
#[pyclass(name = "ScalarField", module = "sglab", from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: CoreField,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(n: usize, values: Vec<f64>) -> PyResult<Self> {
        let grid = TorusGrid::new(n).map_err(err)?;
        let inner = CoreField::from_values(&grid, values).map_err(err)?;
        Ok(Self { inner })
    }

    /// Samples one of the named initial densities (`default`, `steep`,
    /// `shear`), multiplied by `scale`.
    #[staticmethod]
    #[pyo3(signature = (n, name, scale=1.0))]
    fn preset(n: usize, name: &str, scale: f64) -> PyResult<Self> {
        let preset: Preset = serde_json::from_value(serde_json::Value::from(name))
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let grid = TorusGrid::new(n).map_err(err)?;
        Ok(Self {
            inner: InitialData::Scaled { preset, scale }.sample(&grid),
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.grid().n()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    /// Norm by name: `l2`, `linf`, `grad_linf`, `hminus1`.
    fn norm(&self, kind: &str) -> PyResult<f64> {
        let f = &self.inner;
        Ok(match kind {
            "l2" => spectral::l2(f),
            "linf" => spectral::linf(f),
            "grad_linf" => spectral::grad_linf(f),
            "hminus1" => spectral::hminus1_unchecked(&f.mean_free()),
            other => return Err(PyValueError::new_err(format!("unknown norm {other:?}"))),
        })
    }

    fn inv_laplacian(&self) -> PyResult<Self> {
        Ok(Self {
            inner: spectral::inv_laplacian(&self.inner).map_err(err)?,
        })
    }

    fn laplacian(&self) -> Self {
        Self {
            inner: spectral::laplacian(&self.inner),
        }
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.sub(&other.inner).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "ScalarField(n={}, mean={:.3e})",
            self.n(),
            self.inner.mean()
        )
    }
}

/// Solves `Delta psi + eps det D2 psi = rho`; returns `(psi, report_json)`.
#[pyfunction]
#[pyo3(signature = (rho, eps, tol=1e-10, max_iter=50))]
fn solve_sg_potential(
    rho: &PyField,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<(PyField, String)> {
    let (psi, report) =
        elliptic::solve_sg_potential(&rho.inner, eps, SolveOptions { tol, max_iter })
            .map_err(err)?;
    Ok((PyField { inner: psi }, to_json(&report)?))
}

/// Runs a JSON run configuration and returns the diagnostics records and the
/// exit reason as JSON strings. The GIL is released while integrating.
#[pyfunction]
fn run(py: Python<'_>, config_json: &str) -> PyResult<(Vec<String>, String, PyField)> {
    let cfg: RunConfig = match lab::parse_config(config_json).map_err(err)? {
        ParsedConfig::Run(c) => c,
        ParsedConfig::Experiment(_) => {
            return Err(PyValueError::new_err("expected a run configuration"))
        }
    };
    let traj = py.detach(|| transport::run_simulation(&cfg)).map_err(err)?;
    let diags = traj
        .diagnostics
        .iter()
        .map(to_json)
        .collect::<PyResult<Vec<_>>>()?;
    Ok((
        diags,
        to_json(&traj.exit)?,
        PyField {
            inner: traj.last().rho.clone(),
        },
    ))
}

/// Runs an experiment specification; returns the report as JSON.
#[pyfunction]
fn experiment(py: Python<'_>, spec_json: &str) -> PyResult<String> {
    let spec = match lab::parse_config(spec_json).map_err(err)? {
        ParsedConfig::Experiment(s) => s,
        ParsedConfig::Run(_) => {
            return Err(PyValueError::new_err(
                "expected an experiment specification",
            ))
        }
    };
    let report = py.detach(|| lab::run_experiment(&spec)).map_err(err)?;
    to_json(&report)
}

/// Debiased Sinkhorn `W2` between the probability measures `1 + eps a` and `1 + eps b`.
#[pyfunction]
#[pyo3(signature = (a, b, eps, reg=wasserstein::DEFAULT_REG, max_side=64))]
fn w2_sinkhorn(a: &PyField, b: &PyField, eps: f64, reg: f64, max_side: usize) -> PyResult<f64> {
    let da = DensityOnTorus::physical(&a.inner, eps, max_side).map_err(err)?;
    let db = DensityOnTorus::physical(&b.inner, eps, max_side).map_err(err)?;
    Ok(wasserstein::w2_sinkhorn(&da, &db, reg)
        .map_err(err)?
        .distance)
}

/// Exact discrete `W2` on block averages of side `side` (at most 16).
#[pyfunction]
#[pyo3(signature = (a, b, eps, side=16))]
fn w2_exact(a: &PyField, b: &PyField, eps: f64, side: usize) -> PyResult<f64> {
    let da = DensityOnTorus::physical(&a.inner, eps, side).map_err(err)?;
    let db = DensityOnTorus::physical(&b.inner, eps, side).map_err(err)?;
    Ok(wasserstein::w2_exact_small(&da, &db).map_err(err)?.distance)
}

#[pyfunction]
fn check_wente(psi: &PyField) -> PyResult<String> {
    to_json(&inequalities::check_wente(&psi.inner).map_err(err)?)
}

#[pyfunction]
fn check_det_lip(f: &PyField, g: &PyField) -> PyResult<String> {
    to_json(&inequalities::check_det_lip(&f.inner, &g.inner).map_err(err)?)
}

/// Randomized inequality suite; returns NDJSON lines.
#[pyfunction]
fn run_suite(py: Python<'_>, seed: u64, count: usize) -> PyResult<String> {
    let report = py
        .detach(|| inequalities::run_suite(seed, count))
        .map_err(err)?;
    let mut buf = Vec::new();
    report.write_ndjson(&mut buf).map_err(err)?;
    String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
#[pyo3(name = "sglab")]
fn sglab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(solve_sg_potential, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(experiment, m)?)?;
    m.add_function(wrap_pyfunction!(w2_sinkhorn, m)?)?;
    m.add_function(wrap_pyfunction!(w2_exact, m)?)?;
    m.add_function(wrap_pyfunction!(check_wente, m)?)?;
    m.add_function(wrap_pyfunction!(check_det_lip, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
