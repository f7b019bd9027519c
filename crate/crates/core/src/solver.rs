//! Exact action values and best responses against a fixed memory-one
//! opponent.
//!
//! The opponent is always given in the learner's joint-state frame
//! `(learner action, opponent action)`; callers holding an own-perspective
//! strategy swap it first.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::game::{Action, PdGame, Player, StateProfile};
use crate::strategy::{DeterministicStrategy, MemoryOneStrategy};

/// Absolute tolerance below which `q(C,s)` and `q(D,s)` count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("singular Bellman system (pivot {pivot:e})")]
    SolveFailure { pivot: f64 },
    #[error("policy iteration revisited policy {0}")]
    CycleDetected(DeterministicStrategy),
    #[error("value iteration did not reach tolerance within {0} iterations")]
    NoConvergence(usize),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// Eight action values indexed by (own action, previous joint state).
///
/// Flat order is `q1..q8`: `(C,CC), (C,CD), (C,DC), (C,DD), (D,CC), ..., (D,DD)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTable {
    values: [f64; 8],
}

impl QTable {
    pub fn new(values: [f64; 8]) -> Self {
        Self { values }
    }

    pub fn zeros() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self { values: [c; 8] }
    }

    #[inline]
    pub fn index(action: Action, state: StateProfile) -> usize {
        action.index() * 4 + state.index()
    }

    #[inline]
    pub fn get(&self, action: Action, state: StateProfile) -> f64 {
        self.values[Self::index(action, state)]
    }

    #[inline]
    pub fn set(&mut self, action: Action, state: StateProfile, value: f64) {
        self.values[Self::index(action, state)] = value;
    }

    pub fn values(&self) -> &[f64; 8] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64; 8] {
        &mut self.values
    }

    /// `q_n` with the one-based numbering `q1..q8`.
    pub fn q(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    #[inline]
    pub fn max_at(&self, state: StateProfile) -> f64 {
        self.get(Action::C, state).max(self.get(Action::D, state))
    }

    /// `q(C,s) - q(D,s)`.
    pub fn margin(&self, state: StateProfile) -> f64 {
        self.get(Action::C, state) - self.get(Action::D, state)
    }

    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> QTable {
        QTable {
            values: self.values.map(f),
        }
    }

    /// Greedy policy with ties (within [`TIE_TOLERANCE`]) resolved to `D`.
    pub fn greedy(&self) -> GreedyPolicy {
        let margins = StateProfile::ALL.map(|s| self.margin(s));
        let mut ties = Vec::new();
        let choice = StateProfile::ALL.map(|s| {
            let m = margins[s.index()];
            if m.abs() <= TIE_TOLERANCE {
                ties.push(s);
                Action::D
            } else if m > 0.0 {
                Action::C
            } else {
                Action::D
            }
        });
        GreedyPolicy {
            choice,
            margins,
            ties,
        }
    }

    /// Column labels `qCCC..qDDD` (action followed by state).
    pub fn labels() -> [String; 8] {
        std::array::from_fn(|i| {
            let a = Action::ALL[i / 4];
            let s = StateProfile::ALL[i % 4];
            format!("q{a}{s}")
        })
    }
}

impl fmt::Display for QTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = Self::labels();
        for (i, (l, v)) in labels.iter().zip(self.values.iter()).enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}={v:.6}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPolicy {
    pub choice: [Action; 4],
    /// `q(C,s) - q(D,s)` per state.
    pub margins: [f64; 4],
    pub ties: Vec<StateProfile>,
}

impl GreedyPolicy {
    pub fn strategy(&self) -> DeterministicStrategy {
        DeterministicStrategy::from_actions(self.choice)
    }

    /// Smallest `|margin|` over the four states.
    pub fn min_abs_margin(&self) -> f64 {
        self.margins.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseResult {
    pub policy: GreedyPolicy,
    pub q_star: QTable,
    pub tie_states: Vec<StateProfile>,
    /// Number of policy switches made by policy iteration.
    pub iterations: usize,
}

impl BestResponseResult {
    pub fn strategy(&self) -> DeterministicStrategy {
        self.policy.strategy()
    }

    pub fn has_ties(&self) -> bool {
        !self.tie_states.is_empty()
    }
}

/// Distribution of the opponent's next action given the previous state.
#[inline]
fn opponent_branches(
    opponent: &MemoryOneStrategy,
    prev: StateProfile,
) -> [(Action, f64); 2] {
    let c = opponent.coop_prob(prev);
    [(Action::C, c), (Action::D, 1.0 - c)]
}

/// Applies the Bellman optimality operator once.
pub fn bellman_operator(game: &PdGame, opponent: &MemoryOneStrategy, q: &QTable) -> QTable {
    let gamma = game.gamma();
    let mut out = QTable::zeros();
    for prev in StateProfile::ALL {
        let branches = opponent_branches(opponent, prev);
        for a in Action::ALL {
            let mut v = 0.0;
            for (b, pb) in branches {
                if pb == 0.0 {
                    continue;
                }
                let next = StateProfile::new(a, b);
                v += pb * (game.payoff(Player::One, next) + gamma * q.max_at(next));
            }
            out.set(a, prev, v);
        }
    }
    out
}

/// Sup-norm distance between `q` and its image under the optimality operator.
pub fn bellman_residual(game: &PdGame, opponent: &MemoryOneStrategy, q: &QTable) -> f64 {
    q.max_abs_diff(&bellman_operator(game, opponent, q))
}

/// Action values of the deterministic policy `own` against `opponent`, by a
/// direct solve of the 8x8 linear Bellman system.
pub fn policy_evaluation(
    game: &PdGame,
    own: &DeterministicStrategy,
    opponent: &MemoryOneStrategy,
) -> Result<QTable, SolverError> {
    let gamma = game.gamma();
    let mut a = [[0.0f64; 8]; 8];
    let mut rhs = [0.0f64; 8];
    for prev in StateProfile::ALL {
        for act in Action::ALL {
            let row = QTable::index(act, prev);
            a[row][row] += 1.0;
            for (b, pb) in opponent_branches(opponent, prev) {
                if pb == 0.0 {
                    continue;
                }
                let next = StateProfile::new(act, b);
                rhs[row] += pb * game.payoff(Player::One, next);
                let col = QTable::index(own.action(next), next);
                a[row][col] -= gamma * pb;
            }
        }
    }
    solve_linear(a, rhs).map(QTable::new)
}

/// Gaussian elimination with partial pivoting.
fn solve_linear<const N: usize>(
    mut a: [[f64; N]; N],
    mut b: [f64; N],
) -> Result<[f64; N], SolverError> {
    for col in 0..N {
        let pivot_row = (col..N)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        let pivot = a[pivot_row][col];
        if pivot.abs() < 1e-12 {
            return Err(SolverError::SolveFailure { pivot });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let factor = row[col] / pivot[col];
            if factor == 0.0 {
                continue;
            }
            for k in col..N {
                row[k] -= factor * pivot[k];
            }
            b[col + 1 + offset] -= factor * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Optimal action values and the greedy deterministic policy against a
/// fixed opponent, by policy iteration started from All-D.
pub fn best_response(
    game: &PdGame,
    opponent: &MemoryOneStrategy,
) -> Result<BestResponseResult, SolverError> {
    let mut policy = DeterministicStrategy::from_bits(0);
    let mut seen = HashSet::from([policy]);
    let mut iterations = 0;
    let q_star = loop {
        let q = policy_evaluation(game, &policy, opponent)?;
        // Switch only on strict improvement so equal-valued policies cannot
        // alternate.
        let next = DeterministicStrategy::from_actions(StateProfile::ALL.map(|s| {
            let current = policy.action(s);
            let alt = current.flip();
            if q.get(alt, s) > q.get(current, s) + TIE_TOLERANCE {
                alt
            } else {
                current
            }
        }));
        if next == policy {
            break q;
        }
        if !seen.insert(next) {
            return Err(SolverError::CycleDetected(next));
        }
        policy = next;
        iterations += 1;
    };
    let greedy = q_star.greedy();
    Ok(BestResponseResult {
        tie_states: greedy.ties.clone(),
        policy: greedy,
        q_star,
        iterations,
    })
}

/// Iterates the optimality operator from the zero table until the update
/// guarantees a sup-norm error of at most `tol`.
pub fn value_iteration(
    game: &PdGame,
    opponent: &MemoryOneStrategy,
    tol: f64,
    max_iter: usize,
) -> Result<QTable, SolverError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(SolverError::InvalidTolerance(tol));
    }
    let gamma = game.gamma();
    // ||q_{k+1} - q*|| <= gamma/(1-gamma) ||q_{k+1} - q_k||
    let threshold = if gamma == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - gamma) / (2.0 * gamma)
    };
    let mut q = QTable::zeros();
    for _ in 0..max_iter {
        let next = bellman_operator(game, opponent, &q);
        let delta = next.max_abs_diff(&q);
        q = next;
        if delta < threshold {
            return Ok(q);
        }
    }
    Err(SolverError::NoConvergence(max_iter))
}
