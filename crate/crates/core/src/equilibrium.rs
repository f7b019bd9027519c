//! Symmetric equilibria among the deterministic strategies and exact
//! alternating best-response dynamics.

use std::collections::HashMap;

use crate::game::{GameError, Payoffs, PdGame, Player, StateProfile};
use crate::solver::{best_response, SolverError, TIE_TOLERANCE};
use crate::strategy::DeterministicStrategy;

/// Self-consistency margins below this are listed in `near_boundary`.
pub const NEAR_BOUNDARY_THRESHOLD: f64 = 1e-6;

/// Onset brackets are bisected down to this width.
pub const ONSET_BRACKET_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TieAmbiguity {
    pub strategy: DeterministicStrategy,
    pub states: Vec<StateProfile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub game: PdGame,
    /// Catalog strategies that are their own unique, tie-free best response,
    /// in case order.
    pub equilibria: Vec<DeterministicStrategy>,
    /// `(strategy, margin)` where the margin is the smallest preference, over
    /// the four states, for the strategy's own action in its best response
    /// to itself (negative when some state prefers the other action).
    pub near_boundary: Vec<(DeterministicStrategy, f64)>,
    /// Strategies excluded because their self-best-response has ties.
    pub ties: Vec<TieAmbiguity>,
}

impl EquilibriumReport {
    pub fn contains(&self, s: &DeterministicStrategy) -> bool {
        self.equilibria.contains(s)
    }
}

/// Tests each of the sixteen deterministic strategies for being its own
/// unique best response.
pub fn symmetric_equilibria(game: &PdGame) -> Result<EquilibriumReport, SolverError> {
    let mut equilibria = Vec::new();
    let mut near_boundary = Vec::new();
    let mut ties = Vec::new();
    for s in DeterministicStrategy::all() {
        let br = best_response(game, &s.swap_perspective().to_memory_one())?;
        let margin = StateProfile::ALL
            .iter()
            .map(|st| {
                let m = br.q_star.margin(*st);
                if s.cooperates(*st) {
                    m
                } else {
                    -m
                }
            })
            .fold(f64::INFINITY, f64::min);
        if margin.abs() < NEAR_BOUNDARY_THRESHOLD {
            near_boundary.push((s, margin));
        }
        if br.has_ties() {
            ties.push(TieAmbiguity {
                strategy: s,
                states: br.tie_states.clone(),
            });
        } else if br.strategy() == s {
            debug_assert!(margin > TIE_TOLERANCE);
            equilibria.push(s);
        }
    }
    Ok(EquilibriumReport {
        game: *game,
        equilibria,
        near_boundary,
        ties,
    })
}

/// Inclusive grid `start, start+step, ..., <= end` parsed from `a:b:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaGrid {
    pub values: Vec<f64>,
}

impl GammaGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self, String> {
        if !(step > 0.0 && start >= 0.0 && end < 1.0 && start <= end) {
            return Err(format!(
                "gamma grid {start}:{end}:{step} must satisfy 0 <= start <= end < 1 and step > 0"
            ));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        // Index-based to avoid accumulating rounding error.
        let values = (0..=n).map(|i| start + i as f64 * step).collect();
        Ok(Self { values })
    }
}

impl std::str::FromStr for GammaGrid {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = text
            .split(':')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("invalid gamma grid {text:?}: {e}"))?;
        match parts[..] {
            [a, b, step] => GammaGrid::new(a, b, step),
            _ => Err(format!("expected start:end:step, got {text:?}")),
        }
    }
}

/// Bisection bracket of the gamma at which a strategy enters the
/// equilibrium set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Onset {
    pub strategy: DeterministicStrategy,
    /// Largest examined gamma where the strategy is absent.
    pub lower: f64,
    /// Smallest examined gamma where it is present.
    pub upper: f64,
}

impl Onset {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumScan {
    pub reports: Vec<(f64, EquilibriumReport)>,
    pub onsets: Vec<Onset>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn is_equilibrium(payoffs: Payoffs, gamma: f64, s: &DeterministicStrategy) -> Result<bool, ScanError> {
    let game = payoffs.with_gamma(gamma)?;
    let br = best_response(&game, &s.swap_perspective().to_memory_one())?;
    Ok(!br.has_ties() && br.strategy() == *s)
}

/// Equilibrium sets over a gamma grid, with each absent-to-present
/// transition between neighbouring grid points bisected to
/// [`ONSET_BRACKET_WIDTH`].
pub fn equilibrium_scan(payoffs: Payoffs, grid: &[f64]) -> Result<EquilibriumScan, ScanError> {
    let mut reports = Vec::with_capacity(grid.len());
    for &gamma in grid {
        let game = payoffs.with_gamma(gamma)?;
        reports.push((gamma, symmetric_equilibria(&game)?));
    }
    let mut onsets = Vec::new();
    for pair in reports.windows(2) {
        let (g0, before) = (&pair[0].0, &pair[0].1);
        let (g1, after) = (&pair[1].0, &pair[1].1);
        for s in &after.equilibria {
            if before.contains(s) {
                continue;
            }
            let (mut lo, mut hi) = (*g0, *g1);
            while hi - lo > ONSET_BRACKET_WIDTH {
                let mid = 0.5 * (lo + hi);
                if is_equilibrium(payoffs, mid, s)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            onsets.push(Onset {
                strategy: *s,
                lower: lo,
                upper: hi,
            });
        }
    }
    Ok(EquilibriumScan { reports, onsets })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DynamicsStep {
    /// 1-based game index; odd games update player 1.
    pub game_index: usize,
    pub learner: Player,
    pub learned: DeterministicStrategy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTrace {
    pub initial_p2: DeterministicStrategy,
    pub steps: Vec<DynamicsStep>,
    /// `(player 1, player 2)` strategies once an update changes nothing.
    pub fixed_point: Option<(DeterministicStrategy, DeterministicStrategy)>,
    /// Strategy pairs forming a detected cycle, in order of first visit.
    pub cycle: Option<Vec<(DeterministicStrategy, DeterministicStrategy)>>,
    /// Set when a best response had tied states; the dynamics stop there.
    pub tie: Option<(usize, Vec<StateProfile>)>,
}

/// Players alternately replace their strategy by the exact best response to
/// the other's current strategy, player 1 first.
pub fn alternating_dynamics(
    game: &PdGame,
    initial_p2: DeterministicStrategy,
    max_games: usize,
) -> Result<DynamicsTrace, SolverError> {
    let mut trace = DynamicsTrace {
        initial_p2,
        steps: Vec::new(),
        fixed_point: None,
        cycle: None,
        tie: None,
    };
    let mut p1: Option<DeterministicStrategy> = None;
    let mut p2 = initial_p2;
    // Pair after each update -> index into `pairs`.
    let mut seen: HashMap<(DeterministicStrategy, DeterministicStrategy), usize> = HashMap::new();
    let mut pairs = Vec::new();
    for n in 1..=max_games {
        let learner = if n % 2 == 1 { Player::One } else { Player::Two };
        let (current, other) = match learner {
            Player::One => (p1, p2),
            Player::Two => (Some(p2), p1.expect("player 1 moves first")),
        };
        // Both strategies are own-perspective; the opponent enters the
        // learner's joint frame swapped.
        let br = best_response(game, &other.swap_perspective().to_memory_one())?;
        let learned = br.strategy();
        trace.steps.push(DynamicsStep {
            game_index: n,
            learner,
            learned,
        });
        if br.has_ties() {
            trace.tie = Some((n, br.tie_states));
            break;
        }
        match learner {
            Player::One => p1 = Some(learned),
            Player::Two => p2 = learned,
        }
        let pair = (p1.unwrap(), p2);
        if n >= 2 && current == Some(learned) {
            trace.fixed_point = Some(pair);
            break;
        }
        if let Some(&first) = seen.get(&pair) {
            trace.cycle = Some(pairs[first..].to_vec());
            break;
        }
        seen.insert(pair, pairs.len());
        pairs.push(pair);
    }
    Ok(trace)
}
