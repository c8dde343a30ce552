//! Python module `qtsqrt`. Matrices cross the boundary as lists of rows.

use faer::Mat;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qtsqrt::instances::{Instance as CoreInstance, InstanceSpec};
use qtsqrt::pipeline::{self, Method, RunOptions};
use qtsqrt::qt::{CorrectionBlock, QtMatrix as CoreQt, DEFAULT_THRESHOLD};
use qtsqrt::symbol::LaurentSymbol;
use qtsqrt::{dense, symbolsqrt, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Hypothesis(_) | Error::Parse(_) | Error::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Rows of equal length to a dense matrix.
pub fn rows_to_mat(rows: &[Vec<f64>]) -> Result<Mat<f64>, String> {
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("rows have different lengths".into());
    }
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn mat_to_rows(m: faer::MatRef<'_, f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Laurent polynomial given by coefficients `neg = [a_-1, a_-2, ...]` and
/// `pos = [a_0, a_1, ...]`.
#[pyclass(name = "LaurentSymbol", module = "qtsqrt", from_py_object)]
#[derive(Clone)]
struct PySymbol(LaurentSymbol);

#[pymethods]
impl PySymbol {
    #[new]
    #[pyo3(signature = (neg, pos))]
    fn new(neg: Vec<f64>, pos: Vec<f64>) -> Self {
        PySymbol(LaurentSymbol::new(neg, pos))
    }

    #[getter]
    fn neg(&self) -> Vec<f64> {
        self.0.neg().to_vec()
    }

    #[getter]
    fn pos(&self) -> Vec<f64> {
        self.0.pos().to_vec()
    }

    fn coeff(&self, j: isize) -> f64 {
        self.0.coeff(j)
    }

    fn band(&self) -> usize {
        self.0.band()
    }

    fn wiener_norm(&self) -> f64 {
        self.0.wiener_norm()
    }

    /// Value at `z = exp(i theta)` as `(re, im)`.
    fn eval_on_circle(&self, theta: f64) -> PyResult<(f64, f64)> {
        let v = self
            .0
            .eval(qtsqrt::symbol::Complex64::from_polar(1.0, theta))
            .map_err(py_err)?;
        Ok((v.re, v.im))
    }

    fn __add__(&self, o: &Self) -> Self {
        PySymbol(self.0.add(&o.0))
    }

    fn __sub__(&self, o: &Self) -> Self {
        PySymbol(self.0.sub(&o.0))
    }

    fn __mul__(&self, o: &Self) -> Self {
        PySymbol(self.0.mul(&o.0))
    }

    fn __repr__(&self) -> String {
        format!("LaurentSymbol(neg={:?}, pos={:?})", self.0.neg(), self.0.pos())
    }
}

/// Semi-infinite quasi-Toeplitz matrix `T(a) + E`.
#[pyclass(name = "QtMatrix", module = "qtsqrt", from_py_object)]
#[derive(Clone)]
struct PyQt(CoreQt);

#[pymethods]
impl PyQt {
    #[new]
    #[pyo3(signature = (neg, pos, correction = Vec::new(), threshold = DEFAULT_THRESHOLD))]
    fn new(neg: Vec<f64>, pos: Vec<f64>, correction: Vec<Vec<f64>>, threshold: f64) -> PyResult<Self> {
        let e = rows_to_mat(&correction).map_err(PyValueError::new_err)?;
        Ok(PyQt(CoreQt::new(LaurentSymbol::new(neg, pos), CorrectionBlock::from_dense(e), threshold)))
    }

    #[staticmethod]
    #[pyo3(signature = (threshold = DEFAULT_THRESHOLD))]
    fn identity(threshold: f64) -> Self {
        PyQt(CoreQt::identity(threshold))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(PyQt)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn symbol(&self) -> PySymbol {
        PySymbol(self.0.symbol.clone())
    }

    #[getter]
    fn correction(&self) -> Vec<Vec<f64>> {
        mat_to_rows(self.0.correction.dense().as_ref())
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.0.threshold
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.0.entry(i, j)
    }

    fn norm_inf(&self) -> f64 {
        self.0.norm_inf()
    }

    #[pyo3(signature = (tol = 0.0))]
    fn is_nonnegative(&self, tol: f64) -> bool {
        self.0.is_nonnegative(tol)
    }

    /// Leading `n x n` block.
    fn truncate(&self, n: usize) -> Vec<Vec<f64>> {
        mat_to_rows(self.0.truncate_dense(n).as_ref())
    }

    fn scale(&self, s: f64) -> Self {
        PyQt(self.0.scale(s))
    }

    fn __add__(&self, o: &Self) -> Self {
        PyQt(self.0.add(&o.0))
    }

    fn __sub__(&self, o: &Self) -> Self {
        PyQt(self.0.sub(&o.0))
    }

    fn __mul__(&self, o: &Self) -> Self {
        PyQt(self.0.mul(&o.0))
    }

    fn __repr__(&self) -> String {
        let s = self.0.correction_stats(0.0);
        format!("QtMatrix(band={}, correction={}x{})", s.band, s.rows, s.cols)
    }
}

/// `A = gamma (I - A1)` with `A1 >= 0` and `||A1||_inf < 1`.
#[pyclass(name = "Instance", module = "qtsqrt", from_py_object)]
#[derive(Clone)]
struct PyInstance(CoreInstance);

#[pymethods]
impl PyInstance {
    /// Instance with `gamma` equal to the largest diagonal entry of `a`.
    #[new]
    fn new(a: &PyQt) -> Self {
        PyInstance(CoreInstance::from_matrix(a.0.clone()))
    }

    /// Builds a generator instance from a JSON spec such as
    /// `{"family": "example1", "seed": 1, "band_neg": 4, "band_pos": 4, "corr_dim": 8}`.
    #[staticmethod]
    fn generate(spec: &str) -> PyResult<Self> {
        let spec: InstanceSpec = serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
        spec.generate().map(PyInstance).map_err(py_err)
    }

    #[getter]
    fn a(&self) -> PyQt {
        PyQt(self.0.a.clone())
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }

    #[getter]
    fn a1(&self) -> PyQt {
        PyQt(self.0.a1())
    }

    fn check_hypotheses(&self) -> PyResult<()> {
        self.0.check_hypotheses().map_err(py_err)
    }
}

/// Result of [`sqrt`].
#[pyclass(name = "SqrtResult", module = "qtsqrt", get_all)]
struct PyResultObj {
    method: String,
    /// `B` with `(I - B)^2 = A / gamma`.
    root: PyQt,
    correction: PyQt,
    iterations: usize,
    residuals: Vec<f64>,
    final_residual: f64,
    residual: f64,
    wall_time_s: f64,
    symbol_n: usize,
    k: Option<usize>,
}

/// Square root of `A / gamma` written as `I - B`.
#[pyfunction]
#[pyo3(signature = (instance, method = "sda", tol = 1e-13, threshold = DEFAULT_THRESHOLD, max_iter = 500))]
fn sqrt(instance: &PyInstance, method: &str, tol: f64, threshold: f64, max_iter: usize) -> PyResult<PyResultObj> {
    let method: Method = method.parse().map_err(py_err)?;
    let opts = RunOptions {
        tol,
        threshold,
        max_iter,
        ..RunOptions::default()
    };
    let inst = &instance.0;
    inst.check_hypotheses().map_err(py_err)?;
    let part = pipeline::toeplitz_part(inst, &opts).map_err(py_err)?;
    let out = pipeline::run_with(inst, &part, method, &opts).map_err(py_err)?;
    Ok(PyResultObj {
        method: out.method.to_string(),
        root: PyQt(out.root),
        correction: PyQt(out.correction),
        iterations: out.report.iterations,
        residuals: out.report.residuals,
        final_residual: out.report.final_residual,
        residual: out.residual,
        wall_time_s: out.report.wall_time_s,
        symbol_n: part.symbol.n_final,
        k: out.k,
    })
}

/// Coefficients `(neg, pos, n)` of `1 - sqrt(a / gamma)`.
#[pyfunction]
#[pyo3(signature = (a, gamma = 1.0, eps = 1e-13, n_max = symbolsqrt::DEFAULT_N_MAX))]
fn sqrt_symbol(a: &PySymbol, gamma: f64, eps: f64, n_max: usize) -> PyResult<(PySymbol, usize)> {
    let r = symbolsqrt::sqrt_symbol(&a.0, gamma, eps, n_max).map_err(py_err)?;
    Ok((PySymbol(r.bhat), r.n_final))
}

/// Principal square root of a dense M-matrix (Denman-Beavers).
#[pyfunction]
#[pyo3(signature = (m, tol = 1e-14))]
fn dense_sqrt(m: Vec<Vec<f64>>, tol: f64) -> PyResult<Vec<Vec<f64>>> {
    let m = rows_to_mat(&m).map_err(PyValueError::new_err)?;
    if m.nrows() != m.ncols() {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let s = dense::dense_sqrt_oracle(m.as_ref(), tol).map_err(py_err)?;
    Ok(mat_to_rows(s.as_ref()))
}

#[pymodule]
#[pyo3(name = "qtsqrt")]
fn qtsqrt_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymbol>()?;
    m.add_class::<PyQt>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyResultObj>()?;
    m.add_function(wrap_pyfunction!(sqrt, m)?)?;
    m.add_function(wrap_pyfunction!(sqrt_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(dense_sqrt, m)?)?;
    m.add("METHODS", Method::ALL.iter().map(|m| m.name()).collect::<Vec<_>>())?;
    Ok(())
}
