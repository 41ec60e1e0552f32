//! Python bindings for `mdr_core`.

use mdr_core::cli::{self, SweepRequest};
use mdr_core::experiment::{self as exp, OutcomeTable};
use mdr_core::mdr_theory::{self as theory, MdrReport, Mode};
use mdr_core::qmath::{self, ComplexMatrix};
use mdr_core::qmodel::DensityState;
use mdr_core::verify;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(mdr_sim, MdrError, PyException, "Raised for invalid models, states or parameters.");

fn to_py(e: mdr_core::Error) -> PyErr {
    MdrError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(|_| PyValueError::new_err(format!("unknown mode {mode:?}")))
}

fn matrix_from(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let dim = rows.len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    ComplexMatrix::new(dim, rows.into_iter().flatten().collect()).map_err(to_py)
}

fn matrix_to(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    m.entries().chunks(m.dim()).map(<[_]>::to_vec).collect()
}

fn py_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

fn signal_from(rows: Option<Vec<Vec<Complex64>>>) -> PyResult<DensityState> {
    match rows {
        None => Ok(DensityState::plus_i()),
        Some(r) => DensityState::single(matrix_from(r)?).map_err(to_py),
    }
}

/// Precision, disturbance, spreads and the two uncertainty-relation sides.
#[pyclass(name = "Report", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyReport {
    epsilon: f64,
    eta: f64,
    sigma_a: f64,
    sigma_b: f64,
    c: f64,
    h: f64,
    o: f64,
    heisenberg_holds: bool,
    ozawa_holds: bool,
}

impl From<MdrReport> for PyReport {
    fn from(r: MdrReport) -> Self {
        Self {
            epsilon: r.epsilon,
            eta: r.eta,
            sigma_a: r.sigma_a,
            sigma_b: r.sigma_b,
            c: r.c,
            h: r.h,
            o: r.o,
            heisenberg_holds: r.heisenberg_holds,
            ozawa_holds: r.ozawa_holds,
        }
    }
}

#[pymethods]
impl PyReport {
    #[new]
    fn new(epsilon: f64, eta: f64, sigma_a: f64, sigma_b: f64, c: f64) -> Self {
        MdrReport::from_components(epsilon, eta, sigma_a, sigma_b, c).into()
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(epsilon={}, eta={}, h={}, o={}, c={}, heisenberg_holds={}, ozawa_holds={})",
            self.epsilon,
            self.eta,
            self.h,
            self.o,
            self.c,
            py_bool(self.heisenberg_holds),
            py_bool(self.ozawa_holds)
        )
    }
}

/// Three-qubit experiment configuration.
#[pyclass(name = "ExperimentConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: exp::ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (theta, gamma_sq = exp::DEFAULT_GAMMA_SQ, mode = "disturbance", p = 0.0, shots = 0, seed = 0))]
    fn new(theta: f64, gamma_sq: f64, mode: &str, p: f64, shots: u64, seed: u64) -> PyResult<Self> {
        let inner = exp::ExperimentConfig::new(theta, gamma_sq, parse_mode(mode)?, p)
            .map_err(to_py)?
            .with_shots(shots, seed);
        Ok(Self { inner })
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta()
    }

    #[getter]
    fn gamma_sq(&self) -> f64 {
        self.inner.probe().gamma_sq()
    }

    #[getter]
    fn strength(&self) -> f64 {
        self.inner.probe().strength()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode().as_str()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.noise_p()
    }

    #[getter]
    fn shots(&self) -> u64 {
        self.inner.shots()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    /// Exact joint probabilities `[probe][final]`, index 0 for outcome +1.
    fn exact_outcomes(&self) -> PyResult<[[f64; 2]; 2]> {
        Ok(exp::exact_outcomes(&self.inner).map_err(to_py)?.probs)
    }

    /// Sampled joint counts for the configured shots and seed.
    fn sample_shots(&self) -> PyResult<[[u64; 2]; 2]> {
        Ok(exp::sample_shots(&self.inner).map_err(to_py)?.counts)
    }

    /// Reconstructed value from a probability table, or from exact
    /// statistics when none is given.
    #[pyo3(signature = (probs = None))]
    fn reconstruct(&self, probs: Option<[[f64; 2]; 2]>) -> PyResult<f64> {
        let table = match probs {
            Some(p) => OutcomeTable::from_probs(self.inner.mode(), p),
            None => exp::exact_outcomes(&self.inner).map_err(to_py)?,
        };
        Ok(exp::reconstruct(&self.inner, &table).map_err(to_py)?.value)
    }

    /// Reconstructed value from sampled counts.
    fn reconstruct_counts(&self, counts: [[u64; 2]; 2]) -> PyResult<f64> {
        let c = exp::OutcomeCounts {
            mode: self.inner.mode(),
            counts,
        };
        Ok(exp::reconstruct_counts(&self.inner, &c).map_err(to_py)?.value)
    }
}

/// Closed-form ε, η, H, O and C for the CNOT apparatus on a Y eigenstate.
#[pyfunction]
fn closed_form_reference(theta: f64) -> (f64, f64, f64, f64, f64) {
    let c = exp::closed_form_reference(theta);
    (c.epsilon, c.eta, c.h, c.o, c.c)
}

/// Exact report for the CNOT apparatus with meter angle `theta`.
#[pyfunction]
#[pyo3(signature = (theta, p = 0.0, signal = None))]
fn exact_report(theta: f64, p: f64, signal: Option<Vec<Vec<Complex64>>>) -> PyResult<PyReport> {
    Ok(exp::exact_report(theta, p, &signal_from(signal)?).map_err(to_py)?.into())
}

/// Report from reconstructed ε̂ and η̂ (exact statistics when `shots == 0`).
#[pyfunction]
#[pyo3(signature = (theta, gamma_sq = exp::DEFAULT_GAMMA_SQ, p = 0.0, shots = 0, seed = 0, signal = None))]
fn reconstructed_report(
    theta: f64,
    gamma_sq: f64,
    p: f64,
    shots: u64,
    seed: u64,
    signal: Option<Vec<Vec<Complex64>>>,
) -> PyResult<PyReport> {
    let signal = signal_from(signal)?;
    let pair = exp::reconstruct_pair(theta, gamma_sq, p, shots, seed, &signal).map_err(to_py)?;
    Ok(exp::reconstructed_report(&pair, &signal).map_err(to_py)?.into())
}

/// Distinct eigenvalues and their projectors.
#[pyfunction]
#[pyo3(signature = (matrix, group_tol = qmath::DEFAULT_GROUP_TOL))]
fn eig_hermitian(matrix: Vec<Vec<Complex64>>, group_tol: f64) -> PyResult<Vec<(f64, Vec<Vec<Complex64>>)>> {
    let dec = qmath::eig_hermitian(&matrix_from(matrix)?, group_tol).map_err(to_py)?;
    Ok(dec
        .branches()
        .iter()
        .map(|b| (b.value, matrix_to(&b.projector)))
        .collect())
}

/// Weak-valued δ distribution of the apparatus as `(delta, weight)` pairs.
#[pyfunction]
#[pyo3(signature = (theta, mode = "disturbance", p = 0.0))]
fn delta_distribution(theta: f64, mode: &str, p: f64) -> PyResult<Vec<(f64, f64)>> {
    let model = exp::apparatus_model(theta, p).map_err(to_py)?;
    let table = theory::weak_joint(&model, &DensityState::plus_i(), parse_mode(mode)?).map_err(to_py)?;
    let d = theory::delta_distribution(&table, theory::DEFAULT_BIN_TOL);
    Ok(d.deltas.into_iter().zip(d.weights).collect())
}

/// Identity and round-trip suites as `(name, instances, max_deviation, tolerance, passed)`.
#[pyfunction]
#[pyo3(signature = (seed = 0, instances = 100, round_trip_points = 101))]
fn run_verification(
    py: Python<'_>,
    seed: u64,
    instances: usize,
    round_trip_points: usize,
) -> PyResult<Vec<(String, usize, f64, f64, bool)>> {
    let suites = py
        .detach(|| cli::verification_report(seed, instances, round_trip_points, false))
        .map_err(to_py)?;
    Ok(suites
        .into_iter()
        .map(|s| (s.name.to_string(), s.instances, s.max_deviation, s.tolerance, s.passed()))
        .collect())
}

/// Sweep rows as CSV lines (header first), identical to the command line.
#[pyfunction]
#[pyo3(signature = (theta_min = 0.0, theta_max = std::f64::consts::FRAC_PI_4, theta_steps = 101, p_list = None, gamma_sq = exp::DEFAULT_GAMMA_SQ, shots = 0, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    theta_min: f64,
    theta_max: f64,
    theta_steps: usize,
    p_list: Option<Vec<f64>>,
    gamma_sq: f64,
    shots: u64,
    seed: u64,
) -> PyResult<Vec<String>> {
    let req = SweepRequest {
        theta_min,
        theta_max,
        theta_steps,
        p_list: p_list.unwrap_or_else(|| cli::DEFAULT_P_LIST.to_vec()),
        gamma_sq,
        shots,
        seed,
        output_path: None,
    };
    let rows = py.detach(|| cli::sweep_rows(&req)).map_err(to_py)?;
    let mut lines = vec![cli::SWEEP_HEADER.to_string()];
    lines.extend(rows.iter().map(|r| r.to_csv()));
    Ok(lines)
}

#[pymodule]
fn mdr_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MdrError", m.py().get_type::<MdrError>())?;
    m.add("ROUND_TRIP_GAMMA_SQ", verify::ROUND_TRIP_GAMMA_SQ.to_vec())?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(closed_form_reference, m)?)?;
    m.add_function(wrap_pyfunction!(exact_report, m)?)?;
    m.add_function(wrap_pyfunction!(reconstructed_report, m)?)?;
    m.add_function(wrap_pyfunction!(eig_hermitian, m)?)?;
    m.add_function(wrap_pyfunction!(delta_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(run_verification, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
