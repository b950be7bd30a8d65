//! Python bindings for the `adiaq` simulator.

use adiaq::open_system::{evolve_master as master, BathParams};
use adiaq::spectral::eigenvalues;
use adiaq::{
    Clause, Ec3Instance, EvolutionConfig, HamiltonianSpec, Perturbation, PerturbationKind, StateVector,
};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: adiaq::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config(tol: Option<f64>) -> EvolutionConfig {
    tol.map_or_else(EvolutionConfig::default, EvolutionConfig::with_tol)
}

/// An exact-cover instance: `n` bits and a list of 3-bit clauses.
#[pyclass(name = "Instance", frozen)]
struct PyInstance {
    inner: Ec3Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    fn new(n: usize, clauses: Vec<[usize; 3]>) -> PyResult<Self> {
        let clauses = clauses
            .into_iter()
            .map(|[a, b, c]| Clause::new(a, b, c))
            .collect::<adiaq::Result<Vec<_>>>()
            .map_err(py_err)?;
        Ok(PyInstance {
            inner: Ec3Instance::new(n, clauses).map_err(py_err)?,
        })
    }

    /// Random instance with exactly one satisfying assignment.
    #[staticmethod]
    fn generate(n: usize, seed: u64) -> PyResult<Self> {
        Ok(PyInstance {
            inner: adiaq::generate_unique(n, seed).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyInstance {
            inner: Ec3Instance::from_text(text).map_err(py_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn clauses(&self) -> Vec<[usize; 3]> {
        self.inner.clauses().iter().map(|c| c.indices()).collect()
    }

    /// The satisfying assignment as an integer, if it is unique.
    #[getter]
    fn solution(&self) -> Option<u64> {
        self.inner.solution().map(|z| z.value())
    }

    fn degrees(&self) -> Vec<u32> {
        self.inner.degrees()
    }

    fn violation_count(&self, z: u64) -> PyResult<u32> {
        self.inner.violation_count(z).map_err(py_err)
    }

    fn count_satisfying(&self) -> PyResult<u64> {
        self.inner.count_satisfying().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, clauses={})", self.inner.n(), self.inner.clauses().len())
    }
}

/// The interpolating Hamiltonian of an instance, optionally with a control
/// error `kind` in {"k1", "k2", "k3"}.
#[pyclass(name = "Hamiltonian", frozen)]
struct PyHamiltonian {
    inner: HamiltonianSpec,
}

fn build_spec(
    inst: &Ec3Instance,
    perturbation: Option<&str>,
    strength: f64,
    dir_seed: u64,
) -> PyResult<HamiltonianSpec> {
    let mut spec = HamiltonianSpec::from_instance(inst).map_err(py_err)?;
    if let Some(kind) = perturbation {
        let kind: PerturbationKind = kind.parse().map_err(py_err)?;
        let p = Perturbation::from_seed(kind, strength, inst.n(), dir_seed).map_err(py_err)?;
        spec = spec.with_perturbation(p).map_err(py_err)?;
    }
    Ok(spec)
}

#[pymethods]
impl PyHamiltonian {
    #[new]
    #[pyo3(signature = (instance, perturbation=None, strength=0.0, dir_seed=1))]
    fn new(instance: &PyInstance, perturbation: Option<&str>, strength: f64, dir_seed: u64) -> PyResult<Self> {
        Ok(PyHamiltonian {
            inner: build_spec(&instance.inner, perturbation, strength, dir_seed)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// `H(s) v` for a list of complex amplitudes.
    fn apply(&self, s: f64, amps: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        let v = StateVector::new(amps).map_err(py_err)?;
        Ok(self.inner.apply(s, &v).map_err(py_err)?.into_amplitudes())
    }

    /// Dense `H(s)` as a list of rows.
    fn dense(&self, s: f64) -> PyResult<Vec<Vec<Complex64>>> {
        let h = self.inner.dense(s).map_err(py_err)?;
        Ok((0..h.nrows()).map(|i| (0..h.ncols()).map(|j| h[(i, j)]).collect()).collect())
    }

    /// Ascending eigenvalues of `H(s)`.
    fn eigenvalues(&self, s: f64) -> PyResult<Vec<f64>> {
        eigenvalues(&self.inner.dense(s).map_err(py_err)?).map_err(py_err)
    }

    /// Minimum gap as a dict with `delta`, `s_star`, `e_cal`, `degenerate`.
    #[pyo3(signature = (grid_points=201))]
    fn min_gap<'py>(&self, py: Python<'py>, grid_points: usize) -> PyResult<Bound<'py, PyDict>> {
        let r = adiaq::min_gap(&self.inner, grid_points).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("delta", r.delta)?;
        d.set_item("s_star", r.s_star)?;
        d.set_item("e_cal", r.e_cal)?;
        d.set_item("degenerate", r.degenerate)?;
        Ok(d)
    }
}

/// Closed-system sweep from the uniform superposition over run time `run_time`.
#[pyfunction]
#[pyo3(signature = (instance, run_time, perturbation=None, strength=0.0, dir_seed=1, tol=None))]
fn evolve<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    run_time: f64,
    perturbation: Option<&str>,
    strength: f64,
    dir_seed: u64,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = build_spec(&instance.inner, perturbation, strength, dir_seed)?;
    let r = py
        .detach(|| adiaq::evolve(&spec, run_time, &config(tol)))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("success_probability", r.success_probability)?;
    d.set_item("norm_drift", r.norm_drift)?;
    d.set_item("steps_taken", r.steps_taken)?;
    d.set_item("steps_rejected", r.steps_rejected)?;
    d.set_item("final_state", r.final_state.into_amplitudes())?;
    Ok(d)
}

/// Run time whose unperturbed success probability is within `tol` of `target`.
/// Returns `(run_time, success_probability)`.
#[pyfunction]
#[pyo3(signature = (instance, target, tol=0.02))]
fn find_runtime(py: Python<'_>, instance: &PyInstance, target: f64, tol: f64) -> PyResult<(f64, f64)> {
    let spec = HamiltonianSpec::from_instance(&instance.inner).map_err(py_err)?;
    let c = py
        .detach(|| adiaq::find_runtime(&spec, target, tol, &EvolutionConfig::default()))
        .map_err(py_err)?;
    Ok((c.run_time, c.success_probability))
}

/// Sweep coupled to a thermal bath at `temperature` (instances up to 4 bits).
#[pyfunction]
#[pyo3(signature = (instance, run_time, temperature, lambda_sq=0.1, tol=None))]
fn evolve_master<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    run_time: f64,
    temperature: f64,
    lambda_sq: f64,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let bath = BathParams::from_temperature(lambda_sq, temperature).map_err(py_err)?;
    let r = py
        .detach(|| master(&instance.inner, run_time, &bath, &config(tol)))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("success_probability", r.success_probability)?;
    d.set_item("trace_error", r.trace_error)?;
    d.set_item("min_eigenvalue", r.min_eigenvalue)?;
    d.set_item("degeneracy_warnings", r.degeneracy_warnings)?;
    d.set_item("steps_taken", r.steps_taken)?;
    Ok(d)
}

/// Population of the solution in the Gibbs state of the problem Hamiltonian.
#[pyfunction]
fn thermal_success(instance: &PyInstance, temperature: f64) -> PyResult<f64> {
    let bath = BathParams::from_temperature(0.0, temperature).map_err(py_err)?;
    adiaq::thermal_success(&instance.inner, bath.beta).map_err(py_err)
}

#[pymodule]
fn pyadiaq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyHamiltonian>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(find_runtime, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_master, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_success, m)?)?;
    Ok(())
}
