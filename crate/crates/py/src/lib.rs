//! Python bindings for the core types and pipelines.
//!
//! Matrices cross the boundary as plain lists of rows; signatures as
//! `(neg, zero, pos)` tuples.

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use nilric::{
    act, attainable_set, builtin, builtin_names, conjectured_set, load, minimize, profile, realize,
    ricci, sample_metrics, save, signature, standard_decomposition, verify_kernel, FlowOptions,
    MetricFrame, RealizeOptions, Signature,
};

fn err<T>(result: nilric::Result<T>) -> PyResult<T> {
    result.map_err(|e| PyValueError::new_err(e.to_string()))
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix rows must form a square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn sig_tuple(s: Signature) -> (usize, usize, usize) {
    (s.neg, s.zero, s.pos)
}

/// Structure-constant tensor of a nilpotent Lie algebra.
#[pyclass(name = "StructureTensor")]
struct PyStructureTensor {
    inner: nilric::StructureTensor,
}

#[pymethods]
impl PyStructureTensor {
    /// Build from 0-based sparse brackets `(i, j, k, value)` with i < j.
    #[staticmethod]
    fn from_brackets(dim: usize, brackets: Vec<(usize, usize, usize, f64)>) -> PyResult<Self> {
        Ok(Self {
            inner: err(nilric::StructureTensor::new(dim, &brackets))?,
        })
    }

    /// Parse the structure-constant text format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: err(load(text))?,
        })
    }

    /// Load a built-in catalog algebra by name.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        let entry = err(builtin(name))?;
        Ok(Self {
            inner: err(entry.tensor())?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn coefficient(&self, i: usize, j: usize, k: usize) -> f64 {
        self.inner.tensor().get(i, j, k)
    }

    /// Serialise to the text format.
    fn to_text(&self) -> String {
        save(&self.inner)
    }

    /// Structural invariants `(u, a, z, m)`.
    fn profile(&self) -> PyResult<(usize, usize, usize, usize)> {
        let p = err(profile(&self.inner))?;
        Ok((p.u, p.a, p.z, p.m))
    }

    /// Ricci endomorphism of the background metric, as rows.
    fn ricci(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(ricci(&self.inner).matrix())
    }

    /// Dimensions of the descending central series, ending at 0.
    fn central_series_dims(&self) -> PyResult<Vec<usize>> {
        Ok(err(self.inner.central_series())?
            .iter()
            .map(|s| s.dim())
            .collect())
    }

    /// Dimension of the derivation algebra.
    fn derivation_dim(&self) -> usize {
        self.inner.derivations().len()
    }

    /// Bracket tensor after the change of basis encoded by `frame`.
    fn act(&self, frame: Vec<Vec<f64>>) -> PyResult<Self> {
        let h = err(MetricFrame::new(matrix_from_rows(&frame)?))?;
        Ok(Self {
            inner: err(act(&h, &self.inner))?,
        })
    }

    /// Signature of the Ricci endomorphism for the metric given by `frame`
    /// (identity when omitted).
    #[pyo3(signature = (frame = None, tol = 1e-8))]
    fn ricci_signature(
        &self,
        frame: Option<Vec<Vec<f64>>>,
        tol: f64,
    ) -> PyResult<(usize, usize, usize)> {
        let nu = match frame {
            Some(rows) => {
                let h = err(MetricFrame::new(matrix_from_rows(&rows)?))?;
                err(act(&h, &self.inner))?
            }
            None => self.inner.clone(),
        };
        Ok(sig_tuple(err(signature(ricci(&nu).matrix(), tol))?))
    }

    /// Every attainable Ricci signature, sorted.
    fn attainable_signatures(&self) -> PyResult<Vec<(usize, usize, usize)>> {
        let p = err(profile(&self.inner))?;
        Ok(attainable_set(&p).into_iter().map(sig_tuple).collect())
    }

    /// The weaker historical signature set, sorted.
    fn conjectured_signatures(&self) -> PyResult<Vec<(usize, usize, usize)>> {
        let p = err(profile(&self.inner))?;
        Ok(conjectured_set(&p).into_iter().map(sig_tuple).collect())
    }

    fn __repr__(&self) -> String {
        format!("StructureTensor(dim={})", self.inner.dim())
    }
}

/// Outcome of a realisation run.
#[pyclass(name = "Realization")]
struct PyRealization {
    #[pyo3(get)]
    frame: Vec<Vec<f64>>,
    #[pyo3(get)]
    achieved: (usize, usize, usize),
    #[pyo3(get)]
    eigen_gap: f64,
    #[pyo3(get)]
    newton_residual: f64,
    #[pyo3(get)]
    delta: f64,
}

/// Outcome of an orbit-norm minimisation.
#[pyclass(name = "Flow")]
struct PyFlow {
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    residual: f64,
    #[pyo3(get)]
    kernel_verified: bool,
    #[pyo3(get)]
    signature: (usize, usize, usize),
    #[pyo3(get)]
    final_norm_sq: f64,
}

/// Names of the built-in catalog algebras.
#[pyfunction]
fn catalog_names() -> Vec<String> {
    builtin_names()
}

/// Construct a frame whose metric realises `target`, which must lie in the
/// attainable set.
#[pyfunction]
fn realize_signature(
    tensor: &PyStructureTensor,
    target: (usize, usize, usize),
) -> PyResult<PyRealization> {
    let target = Signature::new(target.0, target.1, target.2);
    let out = err(realize(&tensor.inner, &target, &RealizeOptions::default()))?;
    Ok(PyRealization {
        frame: matrix_to_rows(out.frame.matrix()),
        achieved: sig_tuple(out.achieved),
        eigen_gap: out.eigen_gap,
        newton_residual: out.newton_residual,
        delta: out.delta,
    })
}

/// Minimise the orbit norm over the canonical structure-preserving subgroup.
#[pyfunction]
fn orbit_flow(tensor: &PyStructureTensor) -> PyResult<PyFlow> {
    let spec = err(standard_decomposition(&tensor.inner))?;
    let report = err(minimize(&tensor.inner, &spec, &FlowOptions::default()))?;
    let sig = err(signature(ricci(&report.final_mu).matrix(), 1e-8))?;
    Ok(PyFlow {
        converged: report.converged,
        iterations: report.iterations,
        residual: report.residual,
        kernel_verified: verify_kernel(&report, &spec),
        signature: sig_tuple(sig),
        final_norm_sq: *report.norm_history.last().unwrap(),
    })
}

type SignatureCounts = Vec<((usize, usize, usize), usize)>;

/// Draw seeded random metrics; returns (signature -> count, violation count).
#[pyfunction]
fn sample_signatures(
    tensor: &PyStructureTensor,
    n: usize,
    seed: u64,
) -> PyResult<(SignatureCounts, usize)> {
    let report = err(sample_metrics(&tensor.inner, "python", n, seed))?;
    let counts = report
        .counts
        .iter()
        .map(|(s, c)| (sig_tuple(*s), *c))
        .collect();
    Ok((counts, report.violations.len()))
}

/// Signature of a symmetric matrix given as rows.
#[pyfunction]
#[pyo3(signature = (matrix, tol = 1e-8))]
fn matrix_signature(matrix: Vec<Vec<f64>>, tol: f64) -> PyResult<(usize, usize, usize)> {
    let m = matrix_from_rows(&matrix)?;
    Ok(sig_tuple(err(signature(&m, tol))?))
}

#[pymodule]
fn nilric_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStructureTensor>()?;
    m.add_class::<PyRealization>()?;
    m.add_class::<PyFlow>()?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    m.add_function(wrap_pyfunction!(realize_signature, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_flow, m)?)?;
    m.add_function(wrap_pyfunction!(sample_signatures, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_signature, m)?)?;
    Ok(())
}
