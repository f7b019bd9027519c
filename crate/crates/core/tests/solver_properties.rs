mod common;

use common::{random_payoffs, rng};
use dilemma_core::solver::bellman_operator;
use dilemma_core::{
    best_response, catalog, policy_evaluation, transition_matrix, value_iteration, Action,
    DeterministicStrategy, MemoryOneStrategy, PdGame, Player, QTable, StateProfile,
};
use proptest::prelude::*;
use rand::Rng;

fn random_strategy<R: Rng>(rng: &mut R) -> MemoryOneStrategy {
    MemoryOneStrategy::new(std::array::from_fn(|_| rng.random::<f64>())).unwrap()
}

fn random_table<R: Rng>(rng: &mut R, scale: f64) -> QTable {
    QTable::new(std::array::from_fn(|_| rng.random_range(-scale..scale)))
}

#[test]
fn optimality_operator_contracts() {
    let mut rng = rng(1);
    for _ in 0..10_000 {
        let gamma = rng.random_range(0.0..0.99);
        let game = random_payoffs(&mut rng).with_gamma(gamma).unwrap();
        let opp = random_strategy(&mut rng);
        let (q1, q2) = (random_table(&mut rng, 50.0), random_table(&mut rng, 50.0));
        let lhs = bellman_operator(&game, &opp, &q1).max_abs_diff(&bellman_operator(&game, &opp, &q2));
        assert!(lhs <= gamma * q1.max_abs_diff(&q2) + 1e-12);
    }
}

#[test]
fn value_iteration_agrees_with_policy_iteration() {
    let tol = 1e-8;
    for gamma in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95] {
        let game = PdGame::standard(gamma).unwrap();
        for s in DeterministicStrategy::all() {
            let opp = s.swap_perspective().to_memory_one();
            let pi = best_response(&game, &opp).unwrap().q_star;
            let vi = value_iteration(&game, &opp, tol, 100_000).unwrap();
            assert!(vi.max_abs_diff(&pi) <= 2.0 * tol, "{s} at {gamma}");
        }
    }
}

/// Expected discounted return of `(action, prev)` followed by `own`,
/// computed by pushing the state distribution forward `horizon` steps.
fn finite_horizon(
    game: &PdGame,
    own: &DeterministicStrategy,
    opp: &MemoryOneStrategy,
    action: Action,
    prev: StateProfile,
    horizon: usize,
) -> f64 {
    let rewards = StateProfile::ALL.map(|s| game.payoff(Player::One, s));
    let c = opp.coop_prob(prev);
    let mut dist = [0.0; 4];
    dist[StateProfile::new(action, Action::C).index()] += c;
    dist[StateProfile::new(action, Action::D).index()] += 1.0 - c;
    // Own policy as player 1 against the opponent already in the joint frame.
    let chain = transition_matrix(&own.to_memory_one(), &opp.swap_perspective());
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..horizon {
        total += discount * dist.iter().zip(&rewards).map(|(d, r)| d * r).sum::<f64>();
        dist = chain.step(&dist);
        discount *= game.gamma();
    }
    total
}

#[test]
fn forward_recursion_matches_linear_solve() {
    let mut rng = rng(2);
    for _ in 0..200 {
        let gamma = rng.random_range(0.05..0.95);
        let game = random_payoffs(&mut rng).with_gamma(gamma).unwrap();
        let own = DeterministicStrategy::from_bits(rng.random_range(0..16));
        let opp = random_strategy(&mut rng);
        let bound_scale = game.max_abs_payoff() / (1.0 - gamma);
        let horizon = ((1e-8 / bound_scale).ln() / gamma.ln()).ceil() as usize + 1;
        let tail = gamma.powi(horizon as i32) * bound_scale;
        assert!(tail < 1e-8);
        let q = policy_evaluation(&game, &own, &opp).unwrap();
        for prev in StateProfile::ALL {
            for action in Action::ALL {
                let brute = finite_horizon(&game, &own, &opp, action, prev, horizon);
                assert!((brute - q.get(action, prev)).abs() <= tail + 1e-9);
            }
        }
    }
}

#[test]
fn optimal_policy_reevaluates_to_q_star() {
    let mut rng = rng(3);
    for _ in 0..500 {
        let gamma = rng.random_range(0.01..0.97);
        let game = random_payoffs(&mut rng).with_gamma(gamma).unwrap();
        let opp = random_strategy(&mut rng);
        let br = best_response(&game, &opp).unwrap();
        let again = policy_evaluation(&game, &br.strategy(), &opp).unwrap();
        for s in StateProfile::ALL {
            if br.tie_states.contains(&s) {
                continue;
            }
            for a in Action::ALL {
                assert!((again.get(a, s) - br.q_star.get(a, s)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn optimal_values_lie_between_sucker_and_temptation_streams() {
    let mut rng = rng(4);
    for _ in 0..500 {
        let gamma = rng.random_range(0.01..0.97);
        let game = random_payoffs(&mut rng).with_gamma(gamma).unwrap();
        let q = best_response(&game, &random_strategy(&mut rng)).unwrap().q_star;
        let (lo, hi) = (game.s() / (1.0 - gamma), game.t() / (1.0 - gamma));
        assert!(q.values().iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9));
    }
}

#[test]
fn swap_is_an_involution_on_the_catalog() {
    for entry in catalog() {
        let s = entry.strategy;
        assert_eq!(s.swap_perspective().swap_perspective(), s);
        let m = s.to_memory_one();
        assert_eq!(m.swap_perspective().swap_perspective(), m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn swap_is_an_involution(p in prop::array::uniform4(0.0f64..=1.0)) {
        let m = MemoryOneStrategy::new(p).unwrap();
        prop_assert_eq!(m.swap_perspective().swap_perspective(), m);
    }

    #[test]
    fn best_response_never_loses_to_any_deterministic_policy(
        p in prop::array::uniform4(0.0f64..=1.0),
        gamma in 0.05f64..0.95,
    ) {
        let game = PdGame::standard(gamma).unwrap();
        let opp = MemoryOneStrategy::new(p).unwrap();
        let q_star = best_response(&game, &opp).unwrap().q_star;
        for own in DeterministicStrategy::all() {
            let q = policy_evaluation(&game, &own, &opp).unwrap();
            for i in 0..8 {
                prop_assert!(q.values()[i] <= q_star.values()[i] + 1e-9);
            }
        }
    }
}
