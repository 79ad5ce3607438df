use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qec_chi_core::analysis;
use qec_chi_core::approximator::{self, Variant};
use qec_chi_core::channels;
use qec_chi_core::cli::parse_channel;
use qec_chi_core::error::Error;
use qec_chi_core::linalg::ComplexMatrix;
use qec_chi_core::metrics::{self, Metric};
use qec_chi_core::qec;

fn py_err(e: Error) -> PyErr {
    if e.is_solver_failure() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// A single-qubit process matrix in the normalized Pauli basis (trace 2).
#[pyclass(name = "ChiMatrix", module = "qec_chi", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChi(channels::ChiMatrix);

#[pymethods]
impl PyChi {
    #[new]
    fn new(entries: Vec<Vec<Complex64>>) -> PyResult<Self> {
        if entries.len() != 4 || entries.iter().any(|r| r.len() != 4) {
            return Err(PyValueError::new_err("χ must be 4x4"));
        }
        let m = ComplexMatrix::from_vec(4, 4, entries.into_iter().flatten().collect()).map_err(py_err)?;
        channels::ChiMatrix::new(m).map(PyChi).map_err(py_err)
    }

    #[staticmethod]
    fn identity() -> Self {
        PyChi(channels::ChiMatrix::identity())
    }

    #[staticmethod]
    fn pauli(px: f64, py: f64, pz: f64) -> PyResult<Self> {
        channels::ChiMatrix::pauli([px, py, pz]).map(PyChi).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        serde_json::from_str(s).map(PyChi).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("χ serializes")
    }

    fn entries(&self) -> Vec<Vec<Complex64>> {
        (0..4).map(|m| (0..4).map(|n| self.0.get(m, n)).collect()).collect()
    }

    fn __getitem__(&self, idx: (usize, usize)) -> PyResult<Complex64> {
        if idx.0 >= 4 || idx.1 >= 4 {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.0.get(idx.0, idx.1))
    }

    fn diagonal(&self) -> [f64; 4] {
        self.0.diagonal()
    }

    fn pauli_probabilities(&self) -> [f64; 4] {
        self.0.pauli_probabilities()
    }

    fn twirl(&self) -> Self {
        PyChi(channels::twirl(&self.0))
    }

    fn __repr__(&self) -> String {
        format!("ChiMatrix(diagonal={:?})", self.0.diagonal())
    }
}

/// A parametrized noise family.
#[pyclass(name = "ChannelModel", module = "qec_chi", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel(channels::ChannelModel);

#[pymethods]
impl PyModel {
    /// Family by name (adc, pol, rz, rh, rx, dc, flip, identity,
    /// pauli:PX,PY,PZ) at `strength`.
    #[new]
    #[pyo3(signature = (name, strength = 0.0))]
    fn new(name: &str, strength: f64) -> PyResult<Self> {
        let m = parse_channel(name).map_err(py_err)?;
        if m.tag.has_strength() {
            PyModel(m).at(strength)
        } else {
            Ok(PyModel(m))
        }
    }

    #[staticmethod]
    fn pauli(px: f64, py: f64, pz: f64) -> PyResult<Self> {
        let m = channels::ChannelModel::pauli([px, py, pz]);
        m.validate().map_err(py_err)?;
        Ok(PyModel(m))
    }

    fn at(&self, strength: f64) -> PyResult<Self> {
        let m = self.0.at(strength).map_err(py_err)?;
        m.validate().map_err(py_err)?;
        Ok(PyModel(m))
    }

    fn chi(&self) -> PyResult<PyChi> {
        self.0.chi().map(PyChi).map_err(py_err)
    }

    #[getter]
    fn strength(&self) -> f64 {
        self.0.strength
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label()
    }

    fn __repr__(&self) -> String {
        format!("ChannelModel({})", self.0.label())
    }
}

/// A stabilizer code encoding one logical qubit.
#[pyclass(name = "CodeSpec", module = "qec_chi", frozen, skip_from_py_object)]
struct PyCode(qec::CodeSpec);

#[pymethods]
impl PyCode {
    /// Built-in code: bitflip3 or steane7.
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        qec::build_code(name).map(PyCode).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        serde_json::from_str(s).map(PyCode).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("code serializes")
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    fn stabilizer_generators(&self) -> Vec<String> {
        self.0.stabilizer_generators().iter().map(|g| g.to_string()).collect()
    }

    fn logical_chi(&self, chi: &PyChi) -> PyResult<PyChi> {
        qec::logical_chi(&self.0, &chi.0).map(PyChi).map_err(py_err)
    }

    /// Density-matrix simulation of perfect EC. Returns (χ, leakage).
    fn simulate(&self, model: &PyModel) -> PyResult<(PyChi, f64)> {
        let r = qec::logical_channel(&self.0, &model.0, model.0.strength).map_err(py_err)?;
        Ok((PyChi(r.chi), r.codespace_leakage))
    }

    fn __repr__(&self) -> String {
        format!("CodeSpec({}, n={})", self.0.name(), self.0.n_qubits())
    }
}

#[pyclass(name = "Approximation", module = "qec_chi", frozen, get_all)]
struct PyApprox {
    variant: String,
    member_ids: Vec<String>,
    weights: Vec<f64>,
    chi: PyChi,
    hs_distance: f64,
    honest: bool,
    honesty_margin: f64,
}

#[pymethods]
impl PyApprox {
    fn __repr__(&self) -> String {
        format!(
            "Approximation({}, hs_distance={:.3e}, honest={})",
            self.variant, self.hs_distance, self.honest
        )
    }
}

/// Fit a stabilizer-simulable approximation: pca, pcw, cmca, cmcw or dc.
#[pyfunction]
fn approximate(chi: &PyChi, variant: &str) -> PyResult<PyApprox> {
    let v: Variant = parse(variant)?;
    let r = approximator::approximate(&chi.0, v).map_err(py_err)?;
    Ok(PyApprox {
        variant: r.variant.name().to_string(),
        member_ids: r.member_ids,
        weights: r.weights,
        chi: PyChi(r.chi),
        hs_distance: r.hs_distance,
        honest: r.honest,
        honesty_margin: r.honesty_margin,
    })
}

/// Average error rate, average trace distance (each as (mean, std)) and
/// diamond distance.
#[pyfunction]
#[pyo3(signature = (chi, n_states = metrics::DEFAULT_STATES))]
fn metric_report<'py>(py: Python<'py>, chi: &PyChi, n_states: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = metrics::metric_report_chi(&chi.0, n_states).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("avg_error_rate", (r.avg_error_rate.mean, r.avg_error_rate.std))?;
    d.set_item("avg_trace_distance", (r.avg_trace_distance.mean, r.avg_trace_distance.std))?;
    d.set_item("diamond", r.diamond)?;
    d.set_item("diamond_gap", r.diamond_gap)?;
    d.set_item("n_states", r.n_states_used)?;
    Ok(d)
}

#[pyfunction]
fn avg_error_rate(chi: &PyChi) -> (f64, f64) {
    let m = metrics::avg_error_rate_chi(&chi.0);
    (m.mean, m.std)
}

#[pyfunction]
fn diamond_distance(chi: &PyChi) -> PyResult<f64> {
    metrics::diamond_distance_chi(&chi.0).map(|d| d.value).map_err(py_err)
}

/// Leading-order fit y ≈ c·x^d. Returns (d, c, relative_variance).
#[pyfunction]
fn fit_leading_order(x: Vec<f64>, y: Vec<f64>) -> PyResult<(u32, f64, f64)> {
    let f = analysis::fit_leading_order_xy(&x, &y, &analysis::DEFAULT_DEGREES).map_err(py_err)?;
    Ok((f.degree, f.coefficient, f.relative_variance))
}

/// Pseudo-threshold of `model` on `code` with perfect EC. With `variant`, the
/// logical curve uses that approximation. Returns 0 when the curves do not
/// cross inside `domain`.
#[pyfunction]
#[pyo3(signature = (model, code, metric = "error_rate", variant = None, domain = analysis::THRESHOLD_DOMAIN))]
fn threshold(model: &PyModel, code: &PyCode, metric: &str, variant: Option<&str>, domain: (f64, f64)) -> PyResult<f64> {
    let metric: Metric = parse(metric)?;
    let variant = variant.map(parse::<Variant>).transpose()?;
    analysis::model_threshold(&model.0, variant, &code.0, metric, domain)
        .map(|t| t.threshold_strength)
        .map_err(py_err)
}

#[pymodule(name = "qec_chi")]
fn qec_chi_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChi>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyCode>()?;
    m.add_class::<PyApprox>()?;
    m.add_function(wrap_pyfunction!(approximate, m)?)?;
    m.add_function(wrap_pyfunction!(metric_report, m)?)?;
    m.add_function(wrap_pyfunction!(avg_error_rate, m)?)?;
    m.add_function(wrap_pyfunction!(diamond_distance, m)?)?;
    m.add_function(wrap_pyfunction!(fit_leading_order, m)?)?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    Ok(())
}
