//! Python bindings (`import sqrl_sim`).

use std::f64::consts::TAU;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use sqrl_core::engine::{self, EpisodeConfig, Preset};
use sqrl_core::harness::{self, BatchConfig, CopyAccounting};
use sqrl_core::qubit::{self, GeneratorScale, PureQubitState};
use sqrl_core::rng;
use sqrl_core::tomography::{self, BasisCounts};

fn py_err(e: sqrl_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn generators(name: &str) -> PyResult<GeneratorScale> {
    match name {
        "half" => Ok(GeneratorScale::Half),
        "full" => Ok(GeneratorScale::Full),
        other => Err(PyValueError::new_err(format!("generators must be 'half' or 'full', got '{other}'"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn episode_config(
    theta: f64,
    phi: f64,
    epsilon: f64,
    iterations: usize,
    seed: u64,
    delta_init: f64,
    noise_p: f64,
    generator_scale: &str,
) -> PyResult<EpisodeConfig> {
    let mut c = EpisodeConfig::new(theta, phi, epsilon)
        .map_err(py_err)?
        .with_iterations(iterations)
        .with_seed(seed);
    c.delta_init = delta_init;
    c.delta_max = c.delta_max.max(delta_init);
    c.noise_p = noise_p;
    c.generators = generators(generator_scale)?;
    c.validate().map_err(py_err)?;
    Ok(c)
}

/// Pure qubit state a0|0⟩ + a1|1⟩.
#[pyclass(name = "QubitState", frozen)]
struct PyQubitState {
    inner: PureQubitState,
}

#[pymethods]
impl PyQubitState {
    #[new]
    fn new(theta: f64, phi: f64) -> PyResult<Self> {
        Ok(Self {
            inner: qubit::state_from_angles(theta, phi).map_err(py_err)?,
        })
    }

    /// ((re, im), (re, im)) of a0 and a1.
    #[getter]
    fn amplitudes(&self) -> ((f64, f64), (f64, f64)) {
        let [a0, a1] = self.inner.amplitudes();
        ((a0.re, a0.im), (a1.re, a1.im))
    }

    fn bloch_vector(&self) -> [f64; 3] {
        self.inner.bloch_vector()
    }

    fn fidelity(&self, other: &PyQubitState) -> f64 {
        qubit::fidelity_pure(&self.inner, &other.inner)
    }

    fn __repr__(&self) -> String {
        let [a0, a1] = self.inner.amplitudes();
        format!("QubitState(a0={a0}, a1={a1})")
    }
}

#[pyfunction]
fn state_from_angles(theta: f64, phi: f64) -> PyResult<PyQubitState> {
    PyQubitState::new(theta, phi)
}

/// (theta, phi) of a named environment: "e1", "e2" or "e3".
#[pyfunction]
fn preset(name: &str) -> PyResult<(f64, f64)> {
    let p: Preset = name.parse().map_err(py_err)?;
    Ok(p.angles())
}

#[pyclass(name = "StepRecord", frozen, get_all)]
struct PyStepRecord {
    k: usize,
    m: u8,
    theta: Option<f64>,
    phi: Option<f64>,
    delta: f64,
    fidelity: f64,
}

#[pymethods]
impl PyStepRecord {
    fn __repr__(&self) -> String {
        format!(
            "StepRecord(k={}, m={}, delta={}, fidelity={})",
            self.k, self.m, self.delta, self.fidelity
        )
    }
}

#[pyfunction]
#[pyo3(signature = (theta, phi, epsilon, iterations=50, seed=0, delta_init=TAU, noise_p=0.0, generators="half", agent_picture=false))]
#[allow(clippy::too_many_arguments)]
fn run_episode(
    theta: f64,
    phi: f64,
    epsilon: f64,
    iterations: usize,
    seed: u64,
    delta_init: f64,
    noise_p: f64,
    generators: &str,
    agent_picture: bool,
) -> PyResult<Vec<PyStepRecord>> {
    let c = episode_config(theta, phi, epsilon, iterations, seed, delta_init, noise_p, generators)?;
    let records = if agent_picture {
        engine::run_episode_agent_picture(&c)
    } else {
        engine::run_episode(&c)
    }
    .map_err(py_err)?;
    Ok(records
        .into_iter()
        .map(|r| PyStepRecord {
            k: r.k,
            m: r.outcome.bit(),
            theta: r.sampled_theta,
            phi: r.sampled_phi,
            delta: r.delta_after,
            fidelity: r.fidelity,
        })
        .collect())
}

#[pyclass(name = "EpsilonCurve", frozen, get_all)]
struct PyEpsilonCurve {
    epsilon: f64,
    mean: Vec<f64>,
    std: Vec<f64>,
    final_fidelities: Vec<f64>,
    median_convergence_step: f64,
}

#[pyfunction]
#[pyo3(signature = (theta, phi, epsilons, runs=20, iterations=50, seed=0, delta_init=TAU, noise_p=0.0, convergence_tol=0.02))]
#[allow(clippy::too_many_arguments)]
fn run_batch(
    py: Python<'_>,
    theta: f64,
    phi: f64,
    epsilons: Vec<f64>,
    runs: usize,
    iterations: usize,
    seed: u64,
    delta_init: f64,
    noise_p: f64,
    convergence_tol: f64,
) -> PyResult<Vec<PyEpsilonCurve>> {
    let first = *epsilons
        .first()
        .ok_or_else(|| PyValueError::new_err("at least one epsilon is required"))?;
    let base = episode_config(theta, phi, first, iterations, seed, delta_init, noise_p, "half")?;
    let config = BatchConfig::new(base, runs, epsilons);
    let result = py.detach(|| harness::run_batch(&config)).map_err(py_err)?;
    result
        .per_epsilon
        .iter()
        .map(|eb| {
            Ok(PyEpsilonCurve {
                epsilon: eb.epsilon,
                mean: eb.curve.mean.clone(),
                std: eb.curve.std.clone(),
                final_fidelities: eb.final_fidelities(),
                median_convergence_step: eb.median_convergence_step(convergence_tol).map_err(py_err)?,
            })
        })
        .collect()
}

/// (k, sqrl_mean, sqrl_std, qst_mean, qst_std)
type ComparisonRow = (usize, f64, f64, f64, f64);

#[pyfunction]
#[pyo3(signature = (theta, phi, epsilon, runs=20, iterations=50, seed=0, qst_every=3))]
#[allow(clippy::too_many_arguments)]
fn compare(
    py: Python<'_>,
    theta: f64,
    phi: f64,
    epsilon: f64,
    runs: usize,
    iterations: usize,
    seed: u64,
    qst_every: usize,
) -> PyResult<Vec<ComparisonRow>> {
    let base = episode_config(theta, phi, epsilon, iterations, seed, TAU, 0.0, "half")?;
    let mut config = BatchConfig::new(base, runs, vec![epsilon]);
    config.qst_every = qst_every;
    let tables = py.detach(|| harness::compare_sqrl_qst(&config)).map_err(py_err)?;
    Ok(tables[0]
        .rows
        .iter()
        .map(|r| (r.k, r.sqrl_mean, r.sqrl_std, r.qst_mean, r.qst_std))
        .collect())
}

#[pyclass(name = "Reconstruction", frozen, get_all)]
struct PyReconstruction {
    /// Row-major ρ as ((re, im), ...) pairs.
    rho: [[(f64, f64); 2]; 2],
    fidelity: f64,
    log_likelihood: f64,
    initial_log_likelihood: f64,
    rounds: usize,
}

/// `counts` = (n_h, n_v, n_d, n_a, n_r, n_l).
#[pyfunction]
fn mle_reconstruct(counts: (u64, u64, u64, u64, u64, u64), truth: &PyQubitState) -> PyResult<PyReconstruction> {
    let (h, v, d, a, r, l) = counts;
    let res = tomography::mle_reconstruct(&BasisCounts::new(h, v, d, a, r, l), &truth.inner).map_err(py_err)?;
    let m = res.rho.matrix();
    let c = |z: sqrl_core::qubit::ComplexScalar| (z.re, z.im);
    Ok(PyReconstruction {
        rho: [[c(m.m00), c(m.m01)], [c(m.m10), c(m.m11)]],
        fidelity: res.fidelity_vs_truth,
        log_likelihood: res.log_likelihood,
        initial_log_likelihood: res.initial_log_likelihood,
        rounds: res.rounds,
    })
}

/// Fidelity of MLE tomography using ⌊total_photons/3⌋ photons per basis.
#[pyfunction]
#[pyo3(signature = (theta, phi, total_photons, seed=0))]
fn qst_baseline(theta: f64, phi: f64, total_photons: u64, seed: u64) -> PyResult<f64> {
    let env = qubit::state_from_angles(theta, phi).map_err(py_err)?;
    let mut r = rng::stream(seed);
    tomography::qst_baseline(&env, total_photons, &mut r).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (curve, tol=0.02))]
fn convergence_step(curve: Vec<f64>, tol: f64) -> PyResult<Option<usize>> {
    harness::convergence_step(&curve, tol).map_err(py_err)
}

/// (env_copies_consumed, expected_raw_pairs, qst_photons_consumed).
#[pyfunction]
#[pyo3(signature = (iterations, physical=false, qst_photons=0))]
fn resource_ledger(iterations: usize, physical: bool, qst_photons: usize) -> (usize, f64, usize) {
    let accounting = if physical {
        CopyAccounting::Physical
    } else {
        CopyAccounting::Ideal
    };
    let l = harness::resource_ledger(iterations, accounting, qst_photons);
    (l.env_copies_consumed, l.expected_raw_pairs, l.qst_photons_consumed)
}

#[pymodule]
fn sqrl_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQubitState>()?;
    m.add_class::<PyStepRecord>()?;
    m.add_class::<PyEpsilonCurve>()?;
    m.add_class::<PyReconstruction>()?;
    m.add_function(wrap_pyfunction!(state_from_angles, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(mle_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(qst_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_step, m)?)?;
    m.add_function(wrap_pyfunction!(resource_ledger, m)?)?;
    Ok(())
}
