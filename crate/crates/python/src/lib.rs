//! Python bindings. Results come back as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sqss_core::adversary::{AttackModel, EmAttack, EmParams};
use sqss_core::analysis::{self, Alignment, ProtocolId, VerifyOptions};
use sqss_core::protocol::{self, DecoyPolicy, OpPolicy, ReorderPolicy, Secret};
use sqss_core::quantum::{self, Basis, SingleState, SlotId};

fn err(e: sqss_core::Error) -> PyErr {
    match e {
        sqss_core::Error::Io(_) | sqss_core::Error::Csv(_) | sqss_core::Error::Json(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

fn policy<T: serde::de::DeserializeOwned>(name: &str, what: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} {name:?}")))
}

fn attack_model(name: &str, beta: Option<f64>, colluders: Option<Vec<usize>>) -> PyResult<AttackModel> {
    match name {
        "collusion" => Ok(AttackModel::Collusion { dishonest: colluders.unwrap_or_else(|| vec![0]) }),
        "em" | "entangle-measure" if beta.is_some() => {
            let params = EmParams::marked_with_beta(beta.unwrap_or_default());
            Ok(AttackModel::EntangleMeasure(EmAttack::canonical(&params).map_err(err)?))
        }
        other => AttackModel::from_name(other).map_err(err),
    }
}

/// Session parameters. `decoys` defaults to `L`.
#[pyclass(name = "SessionConfig", from_py_object)]
#[derive(Clone)]
struct PySessionConfig {
    inner: protocol::SessionConfig,
}

#[pymethods]
impl PySessionConfig {
    #[new]
    #[pyo3(signature = (n, L, seed=0, decoys=None, abort_threshold=0.0, op_policy="random", reorder_policy="random", decoy_policy="uniform", transcript=false))]
    #[allow(non_snake_case, clippy::too_many_arguments)]
    fn new(
        n: usize,
        L: usize,
        seed: u64,
        decoys: Option<usize>,
        abort_threshold: f64,
        op_policy: &str,
        reorder_policy: &str,
        decoy_policy: &str,
        transcript: bool,
    ) -> PyResult<Self> {
        let mut inner = protocol::SessionConfig::new(n, L, seed);
        if let Some(d) = decoys {
            inner.decoys_per_party = d;
        }
        inner.abort_threshold = abort_threshold;
        inner.op_policy = policy::<OpPolicy>(op_policy, "operation policy")?;
        inner.reorder_policy = policy::<ReorderPolicy>(reorder_policy, "reorder policy")?;
        inner.decoy_policy = policy::<DecoyPolicy>(decoy_policy, "decoy policy")?;
        inner.record_transcript = transcript;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter(L)]
    fn len(&self) -> usize {
        self.inner.len
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn decoys(&self) -> usize {
        self.inner.decoys_per_party
    }

    fn __repr__(&self) -> String {
        format!(
            "SessionConfig(n={}, L={}, seed={}, decoys={})",
            self.inner.n, self.inner.len, self.inner.seed, self.inner.decoys_per_party
        )
    }
}

/// Runs one session. Without `secret` one is derived from the seed.
/// Returns the session record as a dict; `transcript` holds the message
/// log when the config asked for one.
#[pyfunction]
#[pyo3(signature = (config, secret=None, attack="none", beta=None, colluders=None))]
fn run_session<'py>(
    py: Python<'py>,
    config: &PySessionConfig,
    secret: Option<Vec<u64>>,
    attack: &str,
    beta: Option<f64>,
    colluders: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = &config.inner;
    let secret = match secret {
        Some(values) => Secret::new(cfg.n, values).map_err(err)?,
        None => analysis::trial_secret(cfg).map_err(err)?,
    };
    let model = attack_model(attack, beta, colluders)?;
    let result = protocol::run_session_with(cfg, &secret, &model, &Default::default()).map_err(err)?;
    let dict = to_py(py, &result)?;
    dict.set_item("transcript", to_py(py, &result.transcript.events())?)?;
    Ok(dict)
}

/// Monte Carlo detection estimate over `trials` sessions.
#[pyfunction]
#[pyo3(signature = (config, attack, trials, jobs=1, beta=None))]
fn estimate_detection<'py>(
    py: Python<'py>,
    config: &PySessionConfig,
    attack: &str,
    trials: usize,
    jobs: usize,
    beta: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let model = attack_model(attack, beta, None)?;
    let est = py
        .detach(|| analysis::estimate_detection(&config.inner, &model, trials, jobs))
        .map_err(err)?;
    to_py(py, &est)
}

/// Exact per-decoy failure probability as `(numerator, denominator)`.
#[pyfunction]
#[pyo3(signature = (attack, alignment="aligned"))]
fn exact_detection(attack: &str, alignment: &str) -> PyResult<(i64, i64)> {
    let alignment = match alignment {
        "aligned" => Alignment::Aligned,
        "swapped" => Alignment::SwappedWithZero,
        other => return Err(PyValueError::new_err(format!("unknown alignment {other:?}"))),
    };
    let r = analysis::enumerate_detection_exact(&attack_model(attack, None, None)?, alignment).map_err(err)?;
    Ok((*r.numer(), *r.denom()))
}

/// Qubit efficiency `c/q` as `(numerator, denominator)`.
#[pyfunction]
fn qubit_efficiency(protocol: &str, n: usize) -> PyResult<(u128, u128)> {
    let id: ProtocolId = protocol.parse().map_err(err)?;
    let e = analysis::qubit_efficiency(id, n).map_err(err)?;
    Ok((*e.eta.numer(), *e.eta.denom()))
}

/// Counts `(c, q)` in an honest session with balanced operations.
#[pyfunction]
#[pyo3(signature = (n, L, seed=0))]
#[allow(non_snake_case)]
fn derive_efficiency(n: usize, L: usize, seed: u64) -> PyResult<(u128, u128)> {
    let d = analysis::derive_efficiency_this_work(n, L, seed).map_err(err)?;
    Ok((d.c, d.q))
}

/// Exhaustive correctness and GHZ orthonormality check.
#[pyfunction]
#[pyo3(signature = (n_max=3, L_max=2))]
#[allow(non_snake_case)]
fn verify<'py>(py: Python<'py>, n_max: usize, L_max: usize) -> PyResult<Bound<'py, PyAny>> {
    let options = VerifyOptions { n_max, l_max: L_max, ..VerifyOptions::default() };
    let report = py.detach(|| analysis::verify_all(&options)).map_err(err)?;
    let dict = to_py(py, &report)?;
    dict.set_item("passed", report.passed())?;
    Ok(dict)
}

#[pyfunction]
fn k_to_bits(k: u64, n: usize) -> PyResult<Vec<u8>> {
    quantum::k_to_bits(k, n).map_err(err)
}

#[pyfunction]
fn bits_to_k(bits: Vec<u8>) -> PyResult<u64> {
    quantum::bits_to_k(&bits).map_err(err)
}

fn basis(name: &str) -> PyResult<Basis> {
    match name {
        "Z" | "z" => Ok(Basis::Z),
        "X" | "x" => Ok(Basis::X),
        other => Err(PyValueError::new_err(format!("unknown basis {other:?}"))),
    }
}

/// A seeded state pool. Qubits are referred to by integer handles.
#[pyclass(name = "StatePool")]
struct PyStatePool {
    pool: quantum::StatePool,
    slots: Vec<SlotId>,
    rng: ChaCha8Rng,
}

impl PyStatePool {
    fn slot(&self, handle: usize) -> PyResult<SlotId> {
        self.slots.get(handle).copied().ok_or_else(|| PyValueError::new_err(format!("no qubit {handle}")))
    }

    fn register(&mut self, slots: impl IntoIterator<Item = SlotId>) -> Vec<usize> {
        slots
            .into_iter()
            .map(|s| {
                self.slots.push(s);
                self.slots.len() - 1
            })
            .collect()
    }
}

#[pymethods]
impl PyStatePool {
    #[new]
    #[pyo3(signature = (seed=0))]
    fn new(seed: u64) -> Self {
        Self { pool: quantum::StatePool::new(), slots: Vec::new(), rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// `state` is one of "0", "1", "+", "-".
    fn prepare(&mut self, state: &str) -> PyResult<usize> {
        let s = SingleState::ALL
            .into_iter()
            .find(|s| s.label().trim_matches(|c| c == '|' || c == '>' || c == '⟩') == state)
            .ok_or_else(|| PyValueError::new_err(format!("unknown state {state:?}")))?;
        let slot = self.pool.prepare_single(s);
        Ok(self.register([slot])[0])
    }

    /// `|G⁺⟩` for `k`; returns `[dealer, party 1, …, party n]`.
    fn prepare_ghz(&mut self, n: usize, k: u64) -> PyResult<Vec<usize>> {
        let spec = quantum::GhzSpec::plus(n, k).map_err(err)?;
        let slots = self.pool.prepare_ghz(&spec);
        Ok(self.register(slots))
    }

    #[pyo3(signature = (qubit, basis="Z"))]
    fn probabilities(&self, qubit: usize, basis: &str) -> PyResult<Vec<f64>> {
        self.pool.probabilities(self.slot(qubit)?, self::basis(basis)?).map_err(err)
    }

    #[pyo3(signature = (qubit, basis="Z"))]
    fn measure(&mut self, qubit: usize, basis: &str) -> PyResult<u8> {
        let slot = self.slot(qubit)?;
        self.pool.measure(slot, self::basis(basis)?, &mut self.rng).map_err(err)
    }

    fn factor_count(&self) -> usize {
        self.pool.factor_count()
    }
}

#[pymodule]
fn sqss(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySessionConfig>()?;
    m.add_class::<PyStatePool>()?;
    m.add_function(wrap_pyfunction!(run_session, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_detection, m)?)?;
    m.add_function(wrap_pyfunction!(exact_detection, m)?)?;
    m.add_function(wrap_pyfunction!(qubit_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(derive_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(k_to_bits, m)?)?;
    m.add_function(wrap_pyfunction!(bits_to_k, m)?)?;
    Ok(())
}
