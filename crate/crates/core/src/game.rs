//! Stage game, joint-state algebra and the Markov chain induced by two
//! memory-one strategies.

use std::fmt;

use thiserror::Error;

use crate::strategy::MemoryOneStrategy;

/// A single move in the stage game. `C` sorts before `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    C,
    D,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::C, Action::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn flip(self) -> Action {
        match self {
            Action::C => Action::D,
            Action::D => Action::C,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::C => f.write_str("C"),
            Action::D => f.write_str("D"),
        }
    }
}

/// Joint outcome of one round, written from player 1's side: `CD` means
/// player 1 cooperated and player 2 defected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateProfile {
    CC,
    CD,
    DC,
    DD,
}

impl StateProfile {
    /// Canonical order used by every table and file format.
    pub const ALL: [StateProfile; 4] = [
        StateProfile::CC,
        StateProfile::CD,
        StateProfile::DC,
        StateProfile::DD,
    ];

    pub fn new(p1: Action, p2: Action) -> Self {
        Self::from_index(2 * p1.index() + p2.index())
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn p1(self) -> Action {
        if self.index() < 2 {
            Action::C
        } else {
            Action::D
        }
    }

    pub fn p2(self) -> Action {
        if self.index().is_multiple_of(2) {
            Action::C
        } else {
            Action::D
        }
    }

    /// The same outcome seen from the other player's seat.
    pub fn swapped(self) -> Self {
        Self::new(self.p2(), self.p1())
    }
}

impl fmt::Display for StateProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.p1(), self.p2())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Player::One => 1,
            Player::Two => 2,
        }
    }
}

/// The inequality of the dilemma ordering that an input violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    TemptationAboveReward,
    RewardAbovePunishment,
    PunishmentAboveSucker,
    CooperationBeatsAlternation,
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inequality::TemptationAboveReward => "T>R",
            Inequality::RewardAbovePunishment => "R>P",
            Inequality::PunishmentAboveSucker => "P>S",
            Inequality::CooperationBeatsAlternation => "2R>T+S",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("payoffs must be finite, got R={r}, S={s}, T={t}, P={p}")]
    NonFinite { r: f64, s: f64, t: f64, p: f64 },
    #[error("payoff ordering violated: {0} fails")]
    OrderingViolation(Inequality),
    #[error("discount factor {0} outside [0, 1)")]
    DiscountOutOfRange(f64),
}

/// Stage payoffs `R, S, T, P` and the discount factor.
///
/// Construction through [`PdGame::new`] guarantees `T > R > P > S`,
/// `2R > T + S` and `0 <= gamma < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGame {
    r: f64,
    s: f64,
    t: f64,
    p: f64,
    gamma: f64,
}

impl PdGame {
    pub fn new(r: f64, s: f64, t: f64, p: f64, gamma: f64) -> Result<Self, GameError> {
        let payoffs = Payoffs::new(r, s, t, p)?;
        payoffs.with_gamma(gamma)
    }

    /// The payoff values used throughout the numerical experiments.
    pub fn standard(gamma: f64) -> Result<Self, GameError> {
        Self::new(4.0, 0.0, 6.0, 1.0, gamma)
    }

    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn payoffs(&self) -> Payoffs {
        Payoffs {
            r: self.r,
            s: self.s,
            t: self.t,
            p: self.p,
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self, GameError> {
        self.payoffs().with_gamma(gamma)
    }

    pub fn payoff(&self, player: Player, state: StateProfile) -> f64 {
        let state = match player {
            Player::One => state,
            Player::Two => state.swapped(),
        };
        match state {
            StateProfile::CC => self.r,
            StateProfile::CD => self.s,
            StateProfile::DC => self.t,
            StateProfile::DD => self.p,
        }
    }

    /// Player-1 payoffs in canonical state order.
    pub fn payoff_vector(&self) -> [f64; 4] {
        [self.r, self.s, self.t, self.p]
    }

    /// Largest absolute stage payoff.
    pub fn max_abs_payoff(&self) -> f64 {
        self.payoff_vector()
            .iter()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Stage payoffs without a discount factor; validated like [`PdGame`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Payoffs {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub p: f64,
}

impl Payoffs {
    pub fn new(r: f64, s: f64, t: f64, p: f64) -> Result<Self, GameError> {
        if ![r, s, t, p].iter().all(|x| x.is_finite()) {
            return Err(GameError::NonFinite { r, s, t, p });
        }
        let checks = [
            (t > r, Inequality::TemptationAboveReward),
            (r > p, Inequality::RewardAbovePunishment),
            (p > s, Inequality::PunishmentAboveSucker),
            (2.0 * r > t + s, Inequality::CooperationBeatsAlternation),
        ];
        if let Some((_, which)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(GameError::OrderingViolation(*which));
        }
        Ok(Self { r, s, t, p })
    }

    pub fn standard() -> Self {
        Self {
            r: 4.0,
            s: 0.0,
            t: 6.0,
            p: 1.0,
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Result<PdGame, GameError> {
        // Re-run the ordering checks: the fields are public.
        let Payoffs { r, s, t, p } = Payoffs::new(self.r, self.s, self.t, self.p)?;
        if !(0.0..1.0).contains(&gamma) {
            return Err(GameError::DiscountOutOfRange(gamma));
        }
        Ok(PdGame { r, s, t, p, gamma })
    }
}

impl std::str::FromStr for Payoffs {
    type Err = String;

    /// Parses `"R,S,T,P"`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let values: Vec<f64> = text
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("invalid payoff list {text:?}: {e}"))?;
        match values[..] {
            [r, s, t, p] => Payoffs::new(r, s, t, p).map_err(|e| e.to_string()),
            _ => Err(format!("expected four payoffs R,S,T,P, got {text:?}")),
        }
    }
}

/// Row-stochastic 4x4 matrix; row = previous joint state, column = next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    pub rows: [[f64; 4]; 4],
}

impl TransitionMatrix {
    pub fn get(&self, from: StateProfile, to: StateProfile) -> f64 {
        self.rows[from.index()][to.index()]
    }

    /// Distribution after one step from `dist`.
    pub fn step(&self, dist: &[f64; 4]) -> [f64; 4] {
        let mut next = [0.0; 4];
        for (from, row) in self.rows.iter().enumerate() {
            for (to, p) in row.iter().enumerate() {
                next[to] += dist[from] * p;
            }
        }
        next
    }
}

/// Markov chain over joint states when both players follow memory-one
/// strategies. Each strategy is given in its owner's perspective
/// (own action first); player 2's strategy is swapped into the joint frame.
pub fn transition_matrix(
    strategy1: &MemoryOneStrategy,
    strategy2: &MemoryOneStrategy,
) -> TransitionMatrix {
    let p2_joint = strategy2.swap_perspective();
    let mut rows = [[0.0; 4]; 4];
    for prev in StateProfile::ALL {
        let c1 = strategy1.coop_prob(prev);
        let c2 = p2_joint.coop_prob(prev);
        for next in StateProfile::ALL {
            let a = if next.p1() == Action::C { c1 } else { 1.0 - c1 };
            let b = if next.p2() == Action::C { c2 } else { 1.0 - c2 };
            rows[prev.index()][next.index()] = a * b;
        }
    }
    TransitionMatrix { rows }
}
