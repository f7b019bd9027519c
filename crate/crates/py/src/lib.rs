//! Python bindings. Strategies are passed in their owner's perspective; the
//! functions that take an opponent swap it into the learner's frame.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dilemma_core::{
    best_response as solve_best_response, case_consistent as core_case_consistent,
    case_q as core_case_q, equilibrium_scan, learn_phase, policy_evaluation as core_policy_evaluation,
    symmetric_equilibria as core_symmetric_equilibria, value_iteration as core_value_iteration,
    DeterministicStrategy, LearnerConfig, MemoryOneStrategy, NoisyStrategy, Payoffs, PdGame,
    QTable,
};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn q_list(q: &QTable) -> Vec<f64> {
    q.values().to_vec()
}

/// Prisoner's dilemma payoffs R, S, T, P with discount factor gamma.
#[pyclass(name = "Game", frozen)]
pub struct PyGame {
    inner: PdGame,
}

#[pymethods]
impl PyGame {
    #[new]
    #[pyo3(signature = (gamma, r=4.0, s=0.0, t=6.0, p=1.0))]
    fn new(gamma: f64, r: f64, s: f64, t: f64, p: f64) -> PyResult<Self> {
        PdGame::new(r, s, t, p, gamma).map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r()
    }
    #[getter]
    fn s(&self) -> f64 {
        self.inner.s()
    }
    #[getter]
    fn t(&self) -> f64 {
        self.inner.t()
    }
    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    fn __repr__(&self) -> String {
        let g = &self.inner;
        format!("Game(gamma={}, r={}, s={}, t={}, p={})", g.gamma(), g.r(), g.s(), g.t(), g.p())
    }
}

/// Memory-one strategy: a name (`"WSLS"`), four bits in state order
/// CC,CD,DC,DD (`"1001"`), or four cooperation probabilities.
#[pyclass(name = "Strategy", frozen)]
pub struct PyStrategy {
    inner: MemoryOneStrategy,
}

#[pymethods]
impl PyStrategy {
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        let inner = if let Ok(text) = spec.extract::<String>() {
            text.parse::<MemoryOneStrategy>().map_err(value_err)?
        } else {
            let probs: [f64; 4] = spec.extract()?;
            MemoryOneStrategy::new(probs).map_err(value_err)?
        };
        Ok(Self { inner })
    }

    /// Cooperation probabilities after CC, CD, DC, DD.
    #[getter]
    fn probs(&self) -> [f64; 4] {
        self.inner.probs()
    }

    #[getter]
    fn is_deterministic(&self) -> bool {
        self.inner.to_deterministic().is_some()
    }

    /// Table label for deterministic strategies, `None` otherwise.
    #[getter]
    fn label(&self) -> Option<String> {
        self.inner.to_deterministic().map(|d| d.label())
    }

    fn swap_perspective(&self) -> Self {
        Self {
            inner: self.inner.swap_perspective(),
        }
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Strategy('{}')", self.inner)
    }
}

/// Optimal action values and greedy policy against a fixed opponent.
#[pyclass(name = "BestResponse", frozen, get_all)]
pub struct PyBestResponse {
    /// Four bits, CC,CD,DC,DD.
    bits: String,
    label: String,
    /// Eight values in order qCCC, qCCD, ..., qDDD.
    q: Vec<f64>,
    tie_states: Vec<String>,
    iterations: usize,
}

#[pymethods]
impl PyBestResponse {
    fn __repr__(&self) -> String {
        format!("BestResponse({} {}, q={:?}, ties={:?})", self.label, self.bits, self.q, self.tie_states)
    }
}

fn deterministic(spec: &str) -> PyResult<DeterministicStrategy> {
    spec.parse().map_err(value_err)
}

fn opponent_frame(opponent: &PyStrategy, noise: f64) -> PyResult<MemoryOneStrategy> {
    let noisy = NoisyStrategy::new(opponent.inner, noise).map_err(value_err)?;
    Ok(noisy.swap_perspective().effective())
}

/// Exact best response to `opponent` playing with implementation error `noise`.
#[pyfunction]
#[pyo3(signature = (game, opponent, noise=0.0))]
fn best_response(game: &PyGame, opponent: &PyStrategy, noise: f64) -> PyResult<PyBestResponse> {
    let br = solve_best_response(&game.inner, &opponent_frame(opponent, noise)?).map_err(runtime_err)?;
    let s = br.strategy();
    Ok(PyBestResponse {
        bits: s.bit_string(),
        label: s.label(),
        q: q_list(&br.q_star),
        tie_states: br.tie_states.iter().map(|s| s.to_string()).collect(),
        iterations: br.iterations,
    })
}

/// Action values of deterministic policy `own` against `opponent`.
#[pyfunction]
fn policy_evaluation(game: &PyGame, own: &str, opponent: &PyStrategy) -> PyResult<Vec<f64>> {
    let own = deterministic(own)?;
    core_policy_evaluation(&game.inner, &own, &opponent_frame(opponent, 0.0)?)
        .map(|q| q_list(&q))
        .map_err(runtime_err)
}

#[pyfunction]
#[pyo3(signature = (game, opponent, tol=1e-10, max_iter=1_000_000))]
fn value_iteration(game: &PyGame, opponent: &PyStrategy, tol: f64, max_iter: usize) -> PyResult<Vec<f64>> {
    core_value_iteration(&game.inner, &opponent_frame(opponent, 0.0)?, tol, max_iter)
        .map(|q| q_list(&q))
        .map_err(runtime_err)
}

/// Closed-form self-play values of case `case_id` (1..=16).
#[pyfunction]
fn case_q(game: &PyGame, case_id: u8) -> PyResult<Vec<f64>> {
    core_case_q(&game.inner, case_id).map(|q| q_list(&q)).map_err(value_err)
}

/// `(consistent, q, condition)` for case `case_id`.
#[pyfunction]
fn case_consistent(game: &PyGame, case_id: u8) -> PyResult<(bool, Vec<f64>, String)> {
    let sol = core_case_consistent(&game.inner, case_id).map_err(value_err)?;
    Ok((sol.consistent, q_list(&sol.q), sol.condition.to_string()))
}

/// Labels of the strategies that are their own unique best response.
#[pyfunction]
fn symmetric_equilibria(game: &PyGame) -> PyResult<Vec<String>> {
    let report = core_symmetric_equilibria(&game.inner).map_err(runtime_err)?;
    Ok(report.equilibria.iter().map(|s| s.label()).collect())
}

/// `(label, lower, upper)` brackets where strategies join the equilibrium
/// set along `grid`.
#[pyfunction]
#[pyo3(signature = (grid, r=4.0, s=0.0, t=6.0, p=1.0))]
fn equilibrium_onsets(grid: Vec<f64>, r: f64, s: f64, t: f64, p: f64) -> PyResult<Vec<(String, f64, f64)>> {
    let payoffs = Payoffs::new(r, s, t, p).map_err(value_err)?;
    let scan = equilibrium_scan(payoffs, &grid).map_err(value_err)?;
    Ok(scan.onsets.iter().map(|o| (o.strategy.label(), o.lower, o.upper)).collect())
}

/// Realization-averaged Q-learning run against a fixed opponent.
#[pyclass(name = "LearningResult", frozen, get_all)]
pub struct PyLearningResult {
    times: Vec<u64>,
    /// One eight-value row per sample time.
    mean_q: Vec<Vec<f64>>,
    final_mean_q: Vec<f64>,
    /// Greedy policy of the mean final Q table.
    learned: String,
    /// Final greedy policy bits -> number of realizations.
    tally: BTreeMap<String, usize>,
    mean_visits: Vec<f64>,
}

#[pyfunction]
#[pyo3(signature = (
    game, opponent, noise=0.0, eta=0.2, epsilon=0.01, realizations=1000,
    steps=200_000, sample_every=100, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn learn(
    py: Python<'_>,
    game: &PyGame,
    opponent: &str,
    noise: f64,
    eta: f64,
    epsilon: f64,
    realizations: usize,
    steps: u64,
    sample_every: u64,
    seed: u64,
) -> PyResult<PyLearningResult> {
    let own = deterministic(opponent)?;
    let opponent = NoisyStrategy::new(own.swap_perspective().to_memory_one(), noise).map_err(value_err)?;
    let config = LearnerConfig {
        eta,
        epsilon,
        realizations,
        steps_per_phase: steps,
        sample_every,
        seed,
        ..Default::default()
    };
    let game = game.inner;
    let trace = py
        .detach(|| learn_phase(&game, &opponent, &config, 1, None))
        .map_err(value_err)?;
    Ok(PyLearningResult {
        times: trace.times.clone(),
        mean_q: trace.mean_q.iter().map(q_list).collect(),
        final_mean_q: q_list(&trace.final_mean_q()),
        learned: trace.mean_greedy().label(),
        tally: trace.final_greedy.iter().map(|(s, c)| (s.bit_string(), *c)).collect(),
        mean_visits: trace.mean_visits.to_vec(),
    })
}

#[pymodule]
mod dilemma {
    #[pymodule_export]
    use super::{
        best_response, case_consistent, case_q, equilibrium_onsets, learn, policy_evaluation,
        symmetric_equilibria, value_iteration, PyBestResponse, PyGame, PyLearningResult,
        PyStrategy,
    };

    #[pymodule_export]
    const Q_LABELS: [&str; 8] = ["qCCC", "qCCD", "qCDC", "qCDD", "qDCC", "qDCD", "qDDC", "qDDD"];
}
