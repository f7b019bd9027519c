//! Tabular Q-learning against a fixed memory-one opponent, averaged over
//! independent realizations, plus the alternating two-player protocol.
//!
//! Each realization owns three ChaCha8 streams (learner exploration, opponent
//! intent, opponent implementation error) selected from the base seed by
//! `(phase, realization, tag)`. Realizations are run in parallel but reduced
//! in index order, so output does not depend on the thread count.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{Action, PdGame, Player, StateProfile};
use crate::solver::QTable;
use crate::strategy::{DeterministicStrategy, NoisyStrategy, StrategyError};

#[derive(Debug, Error)]
pub enum QLearningError {
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Previous joint state at the start of each realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// Drawn uniformly from the four states with the learner's stream.
    Uniform,
    Fixed(StateProfile),
}

/// Stop a realization early once no entry has moved by `threshold` or more
/// during the last `window` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceStop {
    pub window: u64,
    pub threshold: f64,
}

impl Default for ConvergenceStop {
    fn default() -> Self {
        Self {
            window: 10_000,
            threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub eta: f64,
    pub epsilon: f64,
    pub initial_q: f64,
    pub steps_per_phase: u64,
    /// Trace sampling period in steps.
    pub sample_every: u64,
    pub realizations: usize,
    pub seed: u64,
    pub initial_state: InitialState,
    pub convergence_stop: Option<ConvergenceStop>,
    /// In alternating learning, start each phase from the learner's Q table
    /// at the end of its previous phase instead of `initial_q`.
    pub carry_q: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            eta: 0.2,
            epsilon: 0.01,
            initial_q: 0.0,
            steps_per_phase: 200_000,
            sample_every: 100,
            realizations: 1000,
            seed: 0,
            initial_state: InitialState::Uniform,
            convergence_stop: None,
            carry_q: false,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), QLearningError> {
        let bad = |msg: String| Err(QLearningError::InvalidConfig(msg));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta {} outside (0, 1]", self.eta));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if !self.initial_q.is_finite() {
            return bad(format!("initial_q {} is not finite", self.initial_q));
        }
        if self.steps_per_phase < 1 {
            return bad("steps_per_phase must be at least 1".into());
        }
        if self.sample_every < 1 {
            return bad("sample_every must be at least 1".into());
        }
        if self.realizations < 1 {
            return bad("realizations must be at least 1".into());
        }
        Ok(())
    }

    /// Step indices at which the trace records Q: 0, every `sample_every`
    /// steps, and the final step.
    pub fn sample_times(&self) -> Vec<u64> {
        let mut times: Vec<u64> = (0..=self.steps_per_phase)
            .step_by(self.sample_every as usize)
            .collect();
        if times.last() != Some(&self.steps_per_phase) {
            times.push(self.steps_per_phase);
        }
        times
    }
}

/// One temporal-difference update of the entry `(action, state)`.
#[inline]
pub fn q_update(
    mut q: QTable,
    state: StateProfile,
    action: Action,
    reward: f64,
    next_state: StateProfile,
    eta: f64,
    gamma: f64,
) -> QTable {
    let old = q.get(action, state);
    let target = reward + gamma * q.max_at(next_state);
    q.set(action, state, old + eta * (target - old));
    q
}

/// Uniform action with probability `epsilon`, otherwise the greedy action;
/// an exact tie at the maximum is broken uniformly.
#[inline]
pub fn epsilon_greedy<R: Rng + ?Sized>(
    q: &QTable,
    state: StateProfile,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return if rng.random::<bool>() { Action::C } else { Action::D };
    }
    let c = q.get(Action::C, state);
    let d = q.get(Action::D, state);
    if c > d {
        Action::C
    } else if d > c {
        Action::D
    } else if rng.random::<bool>() {
        Action::C
    } else {
        Action::D
    }
}

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Stream {
    Learner = 0,
    Opponent = 1,
    Noise = 2,
}

fn stream(seed: u64, phase: u64, realization: u64, tag: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((phase << 40) | (realization << 2) | tag as u64);
    rng
}

/// Result of one realization of a learning phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub final_q: QTable,
    /// Q at each of the config's sample times.
    pub samples: Vec<QTable>,
    /// Steps actually simulated (less than configured after an early stop).
    pub steps_run: u64,
    /// Number of updates applied to each entry, in `QTable` order.
    pub visits: [u64; 8],
}

/// Simulates one realization. `opponent` is in the learner's joint frame.
pub fn run_realization(
    game: &PdGame,
    opponent: &NoisyStrategy,
    config: &LearnerConfig,
    phase: u64,
    realization: u64,
    initial_q: QTable,
) -> Realization {
    let mut learner_rng = stream(config.seed, phase, realization, Stream::Learner);
    let mut opponent_rng = stream(config.seed, phase, realization, Stream::Opponent);
    let mut noise_rng = stream(config.seed, phase, realization, Stream::Noise);

    let mut state = match config.initial_state {
        InitialState::Uniform => StateProfile::from_index(learner_rng.random_range(0..4)),
        InitialState::Fixed(s) => s,
    };
    let gamma = game.gamma();
    let rewards = game.payoff_vector();
    let times = config.sample_times();
    let mut samples = Vec::with_capacity(times.len());
    let mut next_sample = 0;
    let mut q = initial_q;
    let mut quiet_steps = 0u64;
    let mut steps_run = config.steps_per_phase;
    let mut visits = [0u64; 8];

    for t in 0..=config.steps_per_phase {
        if next_sample < times.len() && times[next_sample] == t {
            samples.push(q);
            next_sample += 1;
        }
        if t == config.steps_per_phase {
            break;
        }
        let action = epsilon_greedy(&q, state, config.epsilon, &mut learner_rng);
        let reply = opponent.sample_action(state, &mut opponent_rng, &mut noise_rng);
        let next = StateProfile::new(action, reply);
        let before = q.get(action, state);
        visits[QTable::index(action, state)] += 1;
        q = q_update(q, state, action, rewards[next.index()], next, config.eta, gamma);
        let delta = (q.get(action, state) - before).abs();
        state = next;

        if let Some(stop) = config.convergence_stop {
            if delta >= stop.threshold {
                quiet_steps = 0;
            } else {
                quiet_steps += 1;
            }
            if quiet_steps >= stop.window {
                steps_run = t + 1;
                break;
            }
        }
    }
    samples.resize(times.len(), q);
    Realization {
        final_q: q,
        samples,
        steps_run,
        visits,
    }
}

/// Averaged output of a learning phase.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningTrace {
    pub times: Vec<u64>,
    /// Realization mean of Q at each sample time.
    pub mean_q: Vec<QTable>,
    /// Count of realizations per final greedy strategy.
    pub final_greedy: BTreeMap<DeterministicStrategy, usize>,
    pub final_qs: Vec<QTable>,
    /// Realization mean of the number of updates per entry.
    pub mean_visits: [f64; 8],
}

impl LearningTrace {
    pub fn realizations(&self) -> usize {
        self.final_qs.len()
    }

    pub fn final_mean_q(&self) -> QTable {
        mean(&self.final_qs)
    }

    /// Greedy strategy of the realization-averaged final Q table. This is
    /// the learned policy reported for an experiment.
    pub fn mean_greedy(&self) -> DeterministicStrategy {
        self.final_mean_q().greedy().strategy()
    }

    /// Entries updated at least `min_visits` times per realization on
    /// average.
    pub fn persistent_entries(&self, min_visits: f64) -> Vec<usize> {
        (0..8).filter(|&i| self.mean_visits[i] >= min_visits).collect()
    }

    /// Most frequent per-realization greedy strategy; ties go to the lower
    /// case id.
    pub fn modal_policy(&self) -> DeterministicStrategy {
        self.final_greedy
            .iter()
            .max_by(|(sa, ca), (sb, cb)| ca.cmp(cb).then(sb.case_id().cmp(&sa.case_id())))
            .map(|(s, _)| *s)
            .expect("at least one realization")
    }

    pub fn fraction(&self, strategy: &DeterministicStrategy) -> f64 {
        *self.final_greedy.get(strategy).unwrap_or(&0) as f64 / self.realizations() as f64
    }
}

fn mean(tables: &[QTable]) -> QTable {
    let mut acc = [0.0; 8];
    for t in tables {
        for (a, v) in acc.iter_mut().zip(t.values()) {
            *a += v;
        }
    }
    let n = tables.len() as f64;
    QTable::new(acc.map(|a| a / n))
}

/// Mean per-realization update count above which an entry counts as
/// persistently visited.
pub const PERSISTENT_VISITS: f64 = 500.0;

/// Realizations are simulated in chunks of this size; bounds memory held
/// for per-realization samples.
const CHUNK: usize = 64;

/// Runs `config.realizations` independent learners against `opponent`
/// (learner frame). `initial_qs`, when given, supplies one starting table per
/// realization; otherwise every table starts at `config.initial_q`.
pub fn learn_phase(
    game: &PdGame,
    opponent: &NoisyStrategy,
    config: &LearnerConfig,
    phase: u64,
    initial_qs: Option<&[QTable]>,
) -> Result<LearningTrace, QLearningError> {
    config.validate()?;
    if let Some(qs) = initial_qs {
        if qs.len() != config.realizations {
            return Err(QLearningError::InvalidConfig(format!(
                "{} initial tables for {} realizations",
                qs.len(),
                config.realizations
            )));
        }
    }
    let times = config.sample_times();
    let mut sums = vec![[0.0f64; 8]; times.len()];
    let mut final_qs = Vec::with_capacity(config.realizations);
    let mut final_greedy = BTreeMap::new();
    let mut visit_sums = [0u64; 8];

    for chunk_start in (0..config.realizations).step_by(CHUNK) {
        let chunk_end = (chunk_start + CHUNK).min(config.realizations);
        let results: Vec<Realization> = (chunk_start..chunk_end)
            .into_par_iter()
            .map(|i| {
                let q0 = initial_qs.map_or(QTable::constant(config.initial_q), |qs| qs[i]);
                run_realization(game, opponent, config, phase, i as u64, q0)
            })
            .collect();
        // Fixed summation order.
        for r in results {
            for (acc, sample) in sums.iter_mut().zip(&r.samples) {
                for (a, v) in acc.iter_mut().zip(sample.values()) {
                    *a += v;
                }
            }
            for (a, v) in visit_sums.iter_mut().zip(r.visits) {
                *a += v;
            }
            *final_greedy.entry(r.final_q.greedy().strategy()).or_insert(0) += 1;
            final_qs.push(r.final_q);
        }
    }
    let n = config.realizations as f64;
    Ok(LearningTrace {
        times,
        mean_q: sums.into_iter().map(|s| QTable::new(s.map(|x| x / n))).collect(),
        final_greedy,
        final_qs,
        mean_visits: visit_sums.map(|v| v as f64 / n),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOutcome {
    /// 1-based; odd phases train player 1.
    pub phase: usize,
    pub learner: Player,
    /// Strategy frozen for the next phase.
    pub learned: DeterministicStrategy,
    pub mean_q: QTable,
    pub modal: DeterministicStrategy,
    pub final_greedy: BTreeMap<DeterministicStrategy, usize>,
}

/// Alternating learning: in phase `n` the learner (player 1 for odd `n`)
/// trains against the other player's frozen strategy, which is then
/// replaced by the learner's policy.
///
/// `opponent_error` is the implementation-error probability applied to the
/// frozen player's actions.
pub fn alternating_qlearning(
    game: &PdGame,
    initial_p2: DeterministicStrategy,
    config: &LearnerConfig,
    num_phases: usize,
    opponent_error: f64,
) -> Result<Vec<PhaseOutcome>, QLearningError> {
    config.validate()?;
    if num_phases < 1 {
        return Err(QLearningError::InvalidConfig("num_phases must be at least 1".into()));
    }
    let mut strategies = [None, Some(initial_p2)];
    let mut carried: [Option<Vec<QTable>>; 2] = [None, None];
    let mut outcomes = Vec::with_capacity(num_phases);
    for phase in 1..=num_phases {
        let learner = if phase % 2 == 1 { Player::One } else { Player::Two };
        let (me, them) = match learner {
            Player::One => (0, 1),
            Player::Two => (1, 0),
        };
        let frozen = strategies[them].expect("player 2 starts with a strategy");
        let opponent =
            NoisyStrategy::new(frozen.swap_perspective().to_memory_one(), opponent_error)?;
        let initial = if config.carry_q { carried[me].as_deref() } else { None };
        let trace = learn_phase(game, &opponent, config, phase as u64, initial)?;
        let learned = trace.mean_greedy();
        strategies[me] = Some(learned);
        outcomes.push(PhaseOutcome {
            phase,
            learner,
            learned,
            mean_q: trace.final_mean_q(),
            modal: trace.modal_policy(),
            final_greedy: trace.final_greedy.clone(),
        });
        if config.carry_q {
            carried[me] = Some(trace.final_qs);
        }
    }
    Ok(outcomes)
}

/// Formats `x` with 12 significant digits, shortest form.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

pub const TRACE_HEADER: &str = "t,qCCC,qCCD,qCDC,qCDD,qDCC,qDCD,qDDC,qDDD";
pub const TALLY_HEADER: &str = "strategy_bits,count";

pub fn write_trace<W: Write>(trace: &LearningTrace, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for (t, q) in trace.times.iter().zip(&trace.mean_q) {
        write!(out, "{t}")?;
        for v in q.values() {
            write!(out, ",{}", format_sig12(*v))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_tally<W: Write>(trace: &LearningTrace, mut out: W) -> io::Result<()> {
    writeln!(out, "{TALLY_HEADER}")?;
    for (s, count) in &trace.final_greedy {
        writeln!(out, "{},{count}", s.bit_string())?;
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), QLearningError> {
    let io_err = |source| QLearningError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err)
}

/// Writes the mean-Q trace CSV.
pub fn export_trace(trace: &LearningTrace, path: &Path) -> Result<(), QLearningError> {
    write_file(path, |w| write_trace(trace, w))
}

/// Writes the final-policy tally CSV.
pub fn export_tally(trace: &LearningTrace, path: &Path) -> Result<(), QLearningError> {
    write_file(path, |w| write_tally(trace, w))
}
