//! Python bindings for `tchub`. Structured results come back as plain dicts
//! (round-tripped through JSON), operators as `PauliSum` objects.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyString;

use tchub::fermion::jordan_wigner;
use tchub::jastrow;
use tchub::lattice::{build_gutzwiller, build_hubbard, build_tc, HubbardParams, Lattice, Representation};
use tchub::oracle::{self, SectorBasis};
use tchub::pauli;
use tchub::qite::{self, Problem, QiteConfig};
use tchub::runner;
use tchub::simulator;
use tchub::state::StateVector;

fn err(e: tchub::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| err(e.into()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Accepts `None`, a JSON string or anything `json.dumps` can encode.
fn config(py: Python<'_>, cfg: Option<&Bound<'_, PyAny>>) -> PyResult<QiteConfig> {
    let text = match cfg {
        None => String::new(),
        Some(c) if c.is_instance_of::<PyString>() => c.extract()?,
        Some(c) => py.import("json")?.call_method1("dumps", (c,))?.extract()?,
    };
    let cfg = runner::validate_str(&text).map_err(|e| PyValueError::new_err(e.join("\n")))?;
    Ok(cfg.qite)
}

fn representation(name: &str) -> PyResult<Representation> {
    match name {
        "real" => Ok(Representation::Real),
        "momentum" => Ok(Representation::Momentum),
        _ => Err(PyValueError::new_err(format!(
            "representation must be 'real' or 'momentum', got '{name}'"
        ))),
    }
}

/// Weighted sum of Pauli strings, qubit 0 first in every string.
#[pyclass(module = "tchub_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PauliSum {
    inner: pauli::PauliSum,
}

#[pymethods]
impl PauliSum {
    /// Parse the `coeff LETTERS` per-line text form.
    #[staticmethod]
    fn from_text(text: &str, n_qubits: usize) -> PyResult<Self> {
        Ok(Self {
            inner: pauli::PauliSum::from_text(text, n_qubits).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_terms(terms: Vec<(String, Complex64)>) -> PyResult<Self> {
        let n = terms.first().map_or(0, |(s, _)| s.len());
        let mut inner = pauli::PauliSum::zero(n);
        for (letters, c) in &terms {
            inner
                .push(&pauli::PauliTerm::from_letters(letters, *c).map_err(err)?)
                .map_err(err)?;
        }
        Ok(Self { inner })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn terms(&self) -> Vec<(String, Complex64)> {
        self.inner.terms().map(|t| (t.letters(), t.coeff)).collect()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[pyo3(signature = (tol = 1e-12))]
    fn is_hermitian(&self, tol: f64) -> bool {
        self.inner.is_hermitian(tol)
    }

    fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    fn apply(&self, amplitudes: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        self.inner.apply(&amplitudes).map_err(err)
    }

    /// `⟨ψ|P|ψ⟩` for a normalised amplitude vector.
    fn expectation(&self, amplitudes: Vec<Complex64>) -> PyResult<Complex64> {
        let psi = StateVector::from_amplitudes(amplitudes).map_err(err)?;
        simulator::expectation(&psi, &self.inner).map_err(err)
    }

    fn to_matrix(&self) -> PyResult<Vec<Vec<Complex64>>> {
        let m = self.inner.to_matrix().map_err(err)?;
        Ok(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    fn __add__(&self, other: &PauliSum) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.add(&other.inner).map_err(err)?,
        })
    }

    fn __sub__(&self, other: &PauliSum) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.sub(&other.inner).map_err(err)?,
        })
    }

    fn __mul__(&self, other: &PauliSum) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.mul(&other.inner).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("PauliSum(n_qubits={}, terms={})", self.inner.n_qubits(), self.inner.len())
    }
}

fn lattice(nx: usize, ny: usize) -> PyResult<Lattice> {
    Lattice::new(nx, ny).map_err(err)
}

/// Qubit Hubbard Hamiltonian of a periodic `nx × ny` lattice.
#[pyfunction]
#[pyo3(signature = (nx, t = 1.0, u = 4.0, representation = "momentum", ny = 1))]
fn hubbard_hamiltonian(nx: usize, t: f64, u: f64, representation: &str, ny: usize) -> PyResult<PauliSum> {
    let p = HubbardParams::new(t, u, 0.0).map_err(err)?;
    let op = build_hubbard(&lattice(nx, ny)?, &p, self::representation(representation)?);
    Ok(PauliSum { inner: jordan_wigner(&op) })
}

/// Qubit transcorrelated Hamiltonian for Gutzwiller parameter `j`.
#[pyfunction]
#[pyo3(signature = (nx, j, t = 1.0, u = 4.0, representation = "momentum", ny = 1))]
fn tc_hamiltonian(nx: usize, j: f64, t: f64, u: f64, representation: &str, ny: usize) -> PyResult<PauliSum> {
    let p = HubbardParams::new(t, u, j).map_err(err)?;
    let op = build_tc(&lattice(nx, ny)?, &p, self::representation(representation)?);
    Ok(PauliSum { inner: jordan_wigner(&op) })
}

/// Qubit form of the Gutzwiller generator.
#[pyfunction]
#[pyo3(signature = (nx, j, representation = "momentum", ny = 1))]
fn gutzwiller(nx: usize, j: f64, representation: &str, ny: usize) -> PyResult<PauliSum> {
    let op = build_gutzwiller(&lattice(nx, ny)?, j, self::representation(representation)?);
    Ok(PauliSum { inner: jordan_wigner(&op) })
}

/// Lowest eigenvalue in the `(n_up, n_dn)` sector; half filling by default.
/// Non-Hermitian operators use the lowest real part of the spectrum.
#[pyfunction]
#[pyo3(signature = (h, n_up = None, n_dn = None))]
fn ground_energy(h: &PauliSum, n_up: Option<usize>, n_dn: Option<usize>) -> PyResult<f64> {
    let n_sites = h.inner.n_qubits() / 2;
    let sector = SectorBasis::new(n_sites, n_up.unwrap_or(n_sites / 2), n_dn.unwrap_or(n_sites / 2)).map_err(err)?;
    if h.inner.is_hermitian(1e-12) {
        return Ok(oracle::exact_ground_state(&h.inner, &sector).map_err(err)?.energy);
    }
    let spec = oracle::spectrum(&sector.matrix(&h.inner).map_err(err)?).map_err(err)?;
    Ok(spec.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
}

/// Residual of the projective equation for `J` with the Fermi-sea reference.
#[pyfunction]
#[pyo3(signature = (nx, j, t = 1.0, u = 4.0, ny = 1))]
fn projection_residual(nx: usize, j: f64, t: f64, u: f64, ny: usize) -> PyResult<f64> {
    jastrow::projection_residual(&lattice(nx, ny)?, t, u, j).map_err(err)
}

/// Root of the projection residual inside `bracket`; a dict with `j`,
/// `residual` and `iterations`.
#[pyfunction]
#[pyo3(signature = (nx, t = 1.0, u = 4.0, bracket = (-3.0, 0.0), tol = 1e-6, ny = 1))]
fn optimize_j(py: Python<'_>, nx: usize, t: f64, u: f64, bracket: (f64, f64), tol: f64, ny: usize) -> PyResult<Py<PyAny>> {
    let r = py
        .detach(|| jastrow::optimize_j(&Lattice::new(nx, ny)?, t, u, bracket, tol))
        .map_err(err)?;
    to_py(py, &r)
}

/// Fermi-sea weight of the TC right eigenvector for each `J` in `grid`.
#[pyfunction]
#[pyo3(signature = (nx, grid, t = 1.0, u = 4.0, ny = 1))]
fn hf_weight_sweep(py: Python<'_>, nx: usize, grid: Vec<f64>, t: f64, u: f64, ny: usize) -> PyResult<Vec<(f64, f64)>> {
    let pts = py
        .detach(|| oracle::hf_weight_sweep(&Lattice::new(nx, ny)?, t, u, &grid))
        .map_err(err)?;
    Ok(pts.iter().map(|p| (p.j, p.hf_weight)).collect())
}

/// Problems in a run configuration as `field: reason` strings; empty if valid.
#[pyfunction]
fn validate_config(text: &str) -> Vec<String> {
    runner::validate_str(text).err().unwrap_or_default()
}

/// Resolved configuration with every default filled in.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn default_config(py: Python<'_>, config: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let cfg = self::config(py, config)?;
    to_py(py, &cfg)
}

/// Setup of one run without evolving it: parameter count, J, exact energy.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn describe(py: Python<'_>, config: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let cfg = self::config(py, config)?;
    let p = py.detach(|| Problem::new(&cfg)).map_err(err)?;
    let v = serde_json::json!({
        "variant": cfg.variant(),
        "n_qubits": p.circuit.n_qubits(),
        "n_params": p.circuit.n_params(),
        "n_ansatz_params": p.circuit.n_ansatz_params(),
        "j": p.j,
        "exact_energy": p.exact_energy,
        "n_terms": p.hamiltonian.len(),
    });
    to_py(py, &v)
}

/// Run imaginary time evolution; returns the summary plus every step record.
#[pyfunction]
#[pyo3(signature = (config = None, label = "run"))]
fn run_qite(py: Python<'_>, config: Option<&Bound<'_, PyAny>>, label: &str) -> PyResult<Py<PyAny>> {
    let cfg = self::config(py, config)?;
    let (summary, traj) = py
        .detach(|| -> tchub::Result<_> {
            let p = Problem::new(&cfg)?;
            let traj = qite::run_qite(&p)?;
            Ok((runner::summarize(&p, &traj, label, None), traj))
        })
        .map_err(err)?;
    let v = serde_json::json!({ "summary": summary, "records": traj.records, "theta": traj.theta });
    to_py(py, &v)
}

/// VQE baseline; rejected for transcorrelated configurations.
#[pyfunction]
#[pyo3(signature = (config = None, label = "run"))]
fn run_vqe(py: Python<'_>, config: Option<&Bound<'_, PyAny>>, label: &str) -> PyResult<Py<PyAny>> {
    let cfg = self::config(py, config)?;
    let s = py.detach(|| runner::run_vqe_summary(&cfg, label)).map_err(err)?;
    to_py(py, &s)
}

/// Sample a state `shots` times; a dict from bitstring to count.
#[pyfunction]
#[pyo3(signature = (amplitudes, shots, seed = 0))]
fn sample(py: Python<'_>, amplitudes: Vec<Complex64>, shots: u64, seed: u64) -> PyResult<Py<PyAny>> {
    let psi = StateVector::from_amplitudes(amplitudes).map_err(err)?;
    let counts = simulator::sample(&psi, shots, seed).map_err(err)?;
    to_py(py, &counts.to_json())
}

#[pymodule]
fn tchub_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", runner::VERSION)?;
    m.add_class::<PauliSum>()?;
    m.add_function(wrap_pyfunction!(hubbard_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(tc_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(gutzwiller, m)?)?;
    m.add_function(wrap_pyfunction!(ground_energy, m)?)?;
    m.add_function(wrap_pyfunction!(projection_residual, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_j, m)?)?;
    m.add_function(wrap_pyfunction!(hf_weight_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(describe, m)?)?;
    m.add_function(wrap_pyfunction!(run_qite, m)?)?;
    m.add_function(wrap_pyfunction!(run_vqe, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    Ok(())
}
