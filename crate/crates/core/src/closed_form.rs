//! Closed-form action values for the sixteen symmetric candidate solutions
//! and for best responses against TFT, WSLS and Grim.
//!
//! These formulas are written out independently of [`crate::solver`] and
//! serve as its analytic oracle.

use std::fmt;

use thiserror::Error;

use crate::game::{PdGame, StateProfile};
use crate::solver::QTable;
use crate::strategy::{DeterministicStrategy, NamedStrategy, StrategyError};

/// Distance from a region threshold inside which `gamma` is rejected.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("gamma {gamma} lies on the region boundary {formula} = {threshold}")]
    BoundaryGamma {
        gamma: f64,
        threshold: f64,
        formula: &'static str,
    },
}

/// Shorthand for the recurring geometric factors.
struct Terms {
    r: f64,
    s: f64,
    t: f64,
    p: f64,
    g: f64,
    /// 1 / (1 - g)
    a: f64,
    /// 1 / (1 - g^2)
    b: f64,
}

impl Terms {
    fn new(game: &PdGame) -> Self {
        let g = game.gamma();
        Self {
            r: game.r(),
            s: game.s(),
            t: game.t(),
            p: game.p(),
            g,
            a: 1.0 / (1.0 - g),
            b: 1.0 / (1.0 - g * g),
        }
    }
}

/// The eight closed-form values of candidate case `case_id` (1..=16).
pub fn case_q(game: &PdGame, case_id: u8) -> Result<QTable, ClosedFormError> {
    DeterministicStrategy::from_case(case_id)?;
    let Terms { r, s, t, p, g, a, b } = Terms::new(game);
    let g2 = g * g;
    let q = match case_id {
        1 => {
            let c = r * a;
            let d = t + g * a * r;
            [c, c, c, c, d, d, d, d]
        }
        2 => {
            let c = r * a;
            let d = t + g * a * r;
            [c, c, c, s + g * a * r, d, d, d, p * a]
        }
        3 => {
            let c = r * a;
            let d = t * a;
            [c, s * a, c, c, d, p + g * a * r, d, d]
        }
        4 => [r * a, s * a, r * a, s * a, t * a, p * a, t * a, p * a],
        5 => {
            let c = r * a;
            let d = b * t + g * b * s;
            [c, c, b * s + g * b * t, c, d, d, p + g * a * r, d]
        }
        6 => {
            let x = b * s + g * b * t;
            let y = b * t + g * b * s;
            [r * a, r * a, x, x, y, y, p * a, p * a]
        }
        7 => {
            let x = s + g * p + g2 * a * r;
            let y = t + g * p + g2 * a * r;
            let z = p + g * a * r;
            [r * a, x, x, r * a, y, z, z, y]
        }
        8 => {
            let x = s + g * a * p;
            [r * a, x, x, x, t + g * a * p, p * a, p * a, p * a]
        }
        9 => {
            let x = b * r + g * b * p;
            let y = t + g * b * r + g2 * b * p;
            [s + g * b * r + g2 * b * p, x, x, x, b * p + g * b * r, y, y, y]
        }
        10 => {
            let w = s + g * r + g2 * a * p;
            let x = r + g * a * p;
            let z = t + g * r + g2 * a * p;
            [w, x, x, w, p * a, z, z, p * a]
        }
        11 => {
            let x = b * r + g * b * p;
            let y = b * p + g * b * r;
            [s * a, s * a, x, x, y, y, t * a, t * a]
        }
        12 => {
            let c = s * a;
            let d = p * a;
            [c, c, r + g * a * p, c, d, d, t * a, d]
        }
        13 => {
            let w = b * s + g * b * t;
            let x = b * r + g * b * p;
            let y = b * p + g * b * r;
            let z = b * t + g * b * s;
            [w, x, w, x, y, z, y, z]
        }
        14 => {
            let w = b * s + g * b * t;
            let d = p * a;
            [w, r + g * a * p, w, w, d, b * t + g * b * s, d, d]
        }
        15 => {
            let w = s + g * b * p + g2 * b * r;
            let y = b * p + g * b * r;
            [w, w, w, b * r + g * b * p, y, y, y, t + g * b * p + g2 * b * r]
        }
        16 => {
            let c = s + g * a * p;
            let d = p * a;
            [c, c, c, c, d, d, d, d]
        }
        _ => unreachable!("case id validated above"),
    };
    Ok(QTable::new(q))
}

/// Outcome of comparing `q(C,s)` with `q(D,s)` at one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Greater,
    Less,
    Equal,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::Greater => ">",
            Comparison::Less => "<",
            Comparison::Equal => "=",
        })
    }
}

/// Where a candidate case can be a consistent solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseCondition {
    /// Contradicts the named requirement for every admissible game.
    Never { contradiction: &'static str },
    /// Consistent only on a measure-zero set (reported, never strict).
    MeasureZero { requirement: &'static str },
    /// Consistent iff gamma exceeds `threshold` (which is below 1 only when
    /// the payoff requirement holds).
    GammaAbove {
        formula: &'static str,
        threshold: f64,
        payoff_requirement: Option<&'static str>,
    },
    Always,
}

impl fmt::Display for CaseCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseCondition::Never { contradiction } => write!(f, "never (contradicts {contradiction})"),
            CaseCondition::MeasureZero { requirement } => write!(f, "only when {requirement}"),
            CaseCondition::GammaAbove {
                formula,
                threshold,
                payoff_requirement,
            } => {
                if let Some(req) = payoff_requirement {
                    write!(f, "{req} and ")?;
                }
                write!(f, "gamma > {formula} = {threshold:.6}")
            }
            CaseCondition::Always => f.write_str("always"),
        }
    }
}

/// The consistency condition of `case_id` evaluated for `game`'s payoffs.
pub fn case_condition(game: &PdGame, case_id: u8) -> CaseCondition {
    let (r, t, p) = (game.r(), game.t(), game.p());
    match case_id {
        1..=4 | 15 => CaseCondition::Never { contradiction: "T>R" },
        5 => CaseCondition::Never {
            contradiction: "2R>T+S",
        },
        6 => CaseCondition::MeasureZero {
            requirement: "T+S=R+P and gamma=(T-R)/(R-S)",
        },
        7 => CaseCondition::GammaAbove {
            formula: "(T-R)/(R-P)",
            threshold: (t - r) / (r - p),
            payoff_requirement: Some("T+P<2R"),
        },
        8 => CaseCondition::GammaAbove {
            formula: "(T-R)/(T-P)",
            threshold: (t - r) / (t - p),
            payoff_requirement: None,
        },
        9..=11 => CaseCondition::Never {
            contradiction: "gamma>=0",
        },
        12 => CaseCondition::Never { contradiction: "P>S" },
        13 => CaseCondition::MeasureZero {
            requirement: "T+S=R+P and gamma=1 (outside gamma<1)",
        },
        14 => CaseCondition::MeasureZero {
            requirement: "T+S>2P and gamma=(P-S)/(T-S)",
        },
        _ => CaseCondition::Always,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSolution {
    pub case_id: u8,
    pub strategy: DeterministicStrategy,
    pub q: QTable,
    /// Observed sign of `q(C,s) - q(D,s)` per state.
    pub observed: [Comparison; 4],
    /// Sign pattern the case assumes.
    pub required: [Comparison; 4],
    /// States whose observed comparison differs from the required one.
    pub failed: Vec<StateProfile>,
    pub consistent: bool,
    pub condition: CaseCondition,
}

/// Exact-equality tolerance used when classifying `q(C,s)` against `q(D,s)`;
/// relative to the value scale.
fn comparison_tolerance(game: &PdGame) -> f64 {
    1e-12 * (1.0 + game.max_abs_payoff() / (1.0 - game.gamma()))
}

/// Evaluates the case's four strict sign conditions on its own solution.
pub fn case_consistent(game: &PdGame, case_id: u8) -> Result<CaseSolution, ClosedFormError> {
    let strategy = DeterministicStrategy::from_case(case_id)?;
    let q = case_q(game, case_id)?;
    let tol = comparison_tolerance(game);
    let observed = StateProfile::ALL.map(|s| {
        let m = q.margin(s);
        if m.abs() <= tol {
            Comparison::Equal
        } else if m > 0.0 {
            Comparison::Greater
        } else {
            Comparison::Less
        }
    });
    let required = StateProfile::ALL.map(|s| {
        if strategy.cooperates(s) {
            Comparison::Greater
        } else {
            Comparison::Less
        }
    });
    let failed: Vec<StateProfile> = StateProfile::ALL
        .into_iter()
        .filter(|s| observed[s.index()] != required[s.index()])
        .collect();
    Ok(CaseSolution {
        case_id,
        strategy,
        q,
        observed,
        required,
        consistent: failed.is_empty(),
        failed,
        condition: case_condition(game, case_id),
    })
}

/// Opponents with a closed-form best-response atlas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixedOpponent {
    Tft,
    Wsls,
    Grim,
}

impl FixedOpponent {
    pub const ALL: [FixedOpponent; 3] = [FixedOpponent::Tft, FixedOpponent::Wsls, FixedOpponent::Grim];

    pub fn strategy(self) -> DeterministicStrategy {
        DeterministicStrategy::named(match self {
            FixedOpponent::Tft => NamedStrategy::Tft,
            FixedOpponent::Wsls => NamedStrategy::Wsls,
            FixedOpponent::Grim => NamedStrategy::Grim,
        })
    }

    pub fn from_strategy(s: &DeterministicStrategy) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.strategy() == *s)
    }
}

impl fmt::Display for FixedOpponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.strategy())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBound {
    pub formula: &'static str,
    pub value: f64,
}

/// One region of the best-response atlas, evaluated at a concrete game.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseRegion {
    pub opponent: FixedOpponent,
    /// 1-based position within the opponent's atlas.
    pub index: usize,
    pub payoff_condition: &'static str,
    /// Open interval `(lower, upper)`; `None` means 0 resp. 1.
    pub lower: Option<GammaBound>,
    pub upper: Option<GammaBound>,
    pub response: DeterministicStrategy,
    pub q: QTable,
}

impl BestResponseRegion {
    pub fn contains(&self, gamma: f64) -> bool {
        self.lower.is_none_or(|b| gamma > b.value) && self.upper.is_none_or(|b| gamma < b.value)
    }

    pub fn describe(&self) -> String {
        let lo = self.lower.map_or("0".to_string(), |b| b.formula.to_string());
        let hi = self.upper.map_or("1".to_string(), |b| b.formula.to_string());
        format!(
            "vs {} region {}: {}, {} < gamma < {} -> {}",
            self.opponent, self.index, self.payoff_condition, lo, hi, self.response
        )
    }
}

fn bound(formula: &'static str, value: f64) -> Option<GammaBound> {
    Some(GammaBound { formula, value })
}

/// All atlas regions whose payoff condition holds for `game`, with their
/// closed-form values evaluated at `game.gamma()`.
pub fn candidate_regions(opponent: FixedOpponent, game: &PdGame) -> Vec<BestResponseRegion> {
    let Terms { r, s, t, p, g, a, b } = Terms::new(game);
    let g2 = g * g;
    let named = |n| DeterministicStrategy::named(n);
    let mk = |index, payoff_condition, lower, upper, response, q: [f64; 8]| BestResponseRegion {
        opponent,
        index,
        payoff_condition,
        lower,
        upper,
        response,
        q: QTable::new(q),
    };
    match opponent {
        FixedOpponent::Tft => {
            let all_c = {
                let x = s + g * a * r;
                let y = t + g * s + g2 * a * r;
                let z = p + g * s + g2 * a * r;
                [r * a, r * a, x, x, y, y, z, z]
            };
            let all_d = {
                let w = r + g * t + g2 * a * p;
                let x = s + g * t + g2 * a * p;
                let y = t + g * a * p;
                [w, w, x, x, y, y, p * a, p * a]
            };
            let ps_rs = (p - s) / (r - s);
            let tr_tp = (t - r) / (t - p);
            let tr_rs = (t - r) / (r - s);
            let ps_tp = (p - s) / (t - p);
            // T+S = R+P collapses all four thresholds to one value; it is
            // filed under the first family, whose middle region is then empty.
            if t + s <= r + p {
                let repeat = {
                    let x = s + g * a * r;
                    let y = t + g * a * p;
                    [r * a, r * a, x, x, y, y, p * a, p * a]
                };
                vec![
                    mk(1, "T+S<R+P", bound("(P-S)/(R-S)", ps_rs), None, named(NamedStrategy::AllC), all_c),
                    mk(
                        2,
                        "T+S<R+P",
                        bound("(T-R)/(T-P)", tr_tp),
                        bound("(P-S)/(R-S)", ps_rs),
                        named(NamedStrategy::Repeat),
                        repeat,
                    ),
                    mk(3, "T+S<R+P", None, bound("(T-R)/(T-P)", tr_tp), named(NamedStrategy::AllD), all_d),
                ]
            } else {
                let anti_repeat = {
                    let w = r + g * b * t + g2 * b * s;
                    let x = b * s + g * b * t;
                    let y = b * t + g * b * s;
                    let z = p + g * b * s + g2 * b * t;
                    [w, w, x, x, y, y, z, z]
                };
                vec![
                    mk(4, "T+S>R+P", bound("(T-R)/(R-S)", tr_rs), None, named(NamedStrategy::AllC), all_c),
                    mk(
                        5,
                        "T+S>R+P",
                        bound("(P-S)/(T-P)", ps_tp),
                        bound("(T-R)/(R-S)", tr_rs),
                        named(NamedStrategy::AntiRepeat),
                        anti_repeat,
                    ),
                    mk(6, "T+S>R+P", None, bound("(P-S)/(T-P)", ps_tp), named(NamedStrategy::AllD), all_d),
                ]
            }
        }
        FixedOpponent::Wsls => {
            let wsls = {
                let x = s + g * p + g2 * a * r;
                let y = t + g * p + g2 * a * r;
                let z = p + g * a * r;
                [r * a, x, x, r * a, y, z, z, y]
            };
            let all_d = {
                let w = r + g * b * t + g2 * b * p;
                let x = s + g * b * p + g2 * b * t;
                let y = b * t + g * b * p;
                let z = b * p + g * b * t;
                [w, x, x, w, y, z, z, y]
            };
            let threshold = (t - r) / (r - p);
            if t + p <= 2.0 * r {
                vec![
                    mk(1, "T+P<2R", bound("(T-R)/(R-P)", threshold), None, named(NamedStrategy::Wsls), wsls),
                    mk(2, "T+P<2R", None, bound("(T-R)/(R-P)", threshold), named(NamedStrategy::AllD), all_d),
                ]
            } else {
                vec![mk(3, "T+P>2R", None, None, named(NamedStrategy::AllD), all_d)]
            }
        }
        FixedOpponent::Grim => {
            let threshold = (t - r) / (t - p);
            let x = s + g * a * p;
            let y = t + g * a * p;
            vec![
                mk(
                    1,
                    "any",
                    bound("(T-R)/(T-P)", threshold),
                    None,
                    named(NamedStrategy::Grim),
                    [r * a, x, x, x, y, p * a, p * a, p * a],
                ),
                mk(
                    2,
                    "any",
                    None,
                    bound("(T-R)/(T-P)", threshold),
                    named(NamedStrategy::AllD),
                    [r + g * t + g2 * a * p, x, x, x, y, p * a, p * a, p * a],
                ),
            ]
        }
    }
}

/// The atlas region containing `game.gamma()`.
pub fn best_response_region(
    opponent: FixedOpponent,
    game: &PdGame,
) -> Result<BestResponseRegion, ClosedFormError> {
    let gamma = game.gamma();
    let regions = candidate_regions(opponent, game);
    for region in &regions {
        for b in [region.lower, region.upper].into_iter().flatten() {
            if (gamma - b.value).abs() <= BOUNDARY_TOLERANCE {
                return Err(ClosedFormError::BoundaryGamma {
                    gamma,
                    threshold: b.value,
                    formula: b.formula,
                });
            }
        }
    }
    let region = regions
        .into_iter()
        .find(|r| r.contains(gamma))
        .expect("atlas regions cover (0,1) off their boundaries");
    Ok(region)
}
