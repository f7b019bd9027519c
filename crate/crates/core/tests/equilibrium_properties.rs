mod common;

use common::{distance_to_thresholds, grid, random_payoffs, rng};
use dilemma_core::{
    alternating_dynamics, best_response, case_consistent, equilibrium_scan, symmetric_equilibria,
    DeterministicStrategy, NamedStrategy, Payoffs,
};

#[test]
fn solver_and_closed_form_equilibria_coincide() {
    let mut rng = rng(31);
    let mut sets = vec![Payoffs::standard(), Payoffs::new(3.0, 0.0, 5.0, 2.0).unwrap()];
    sets.extend((0..30).map(|_| random_payoffs(&mut rng)));
    for payoffs in sets {
        for gamma in grid(0.0, 0.98, 40) {
            if distance_to_thresholds(&payoffs, gamma) < 1e-6 {
                continue;
            }
            let game = payoffs.with_gamma(gamma).unwrap();
            let report = symmetric_equilibria(&game).unwrap();
            let from_cases: Vec<DeterministicStrategy> = (1..=16u8)
                .map(|id| case_consistent(&game, id).unwrap())
                .filter(|sol| sol.consistent)
                .map(|sol| sol.strategy)
                .collect();
            assert_eq!(report.equilibria, from_cases, "{payoffs:?} gamma {gamma}");
        }
    }
}

#[test]
fn equilibrium_set_grows_with_patience() {
    let values = grid(0.0, 1.0, 199);
    let scan = equilibrium_scan(Payoffs::standard(), &values).unwrap();
    for pair in scan.reports.windows(2) {
        for s in &pair[0].1.equilibria {
            assert!(pair[1].1.contains(s), "{s} lost between {} and {}", pair[0].0, pair[1].0);
        }
    }
    let all_d = DeterministicStrategy::named(NamedStrategy::AllD);
    assert!(scan.reports.iter().all(|(_, r)| r.contains(&all_d)));
    let onsets: Vec<(String, f64)> = scan
        .onsets
        .iter()
        .map(|o| (o.strategy.label(), o.midpoint()))
        .collect();
    assert_eq!(onsets.len(), 2);
    assert_eq!(onsets[0].0, "Grim");
    assert!((onsets[0].1 - 0.4).abs() < 1e-6);
    assert_eq!(onsets[1].0, "WSLS");
    assert!((onsets[1].1 - 2.0 / 3.0).abs() < 1e-6);
}

#[test]
fn dynamics_fixed_points_are_mutual_best_responses() {
    let mut rng = rng(41);
    let mut sets = vec![Payoffs::standard()];
    sets.extend((0..10).map(|_| random_payoffs(&mut rng)));
    for payoffs in sets {
        for gamma in grid(0.0, 0.95, 12) {
            if distance_to_thresholds(&payoffs, gamma) < 1e-6 {
                continue;
            }
            let game = payoffs.with_gamma(gamma).unwrap();
            for start in DeterministicStrategy::all() {
                let trace = alternating_dynamics(&game, start, 64).unwrap();
                if let Some((p1, p2)) = trace.fixed_point {
                    let to_p2 = best_response(&game, &p2.swap_perspective().to_memory_one()).unwrap();
                    let to_p1 = best_response(&game, &p1.swap_perspective().to_memory_one()).unwrap();
                    assert_eq!(to_p2.strategy(), p1);
                    assert_eq!(to_p1.strategy(), p2);
                }
                assert!(trace.fixed_point.is_some() || trace.cycle.is_some() || trace.tie.is_some());
            }
        }
    }
}

#[test]
fn dynamics_are_deterministic() {
    let game = Payoffs::standard().with_gamma(0.75).unwrap();
    for start in DeterministicStrategy::all() {
        assert_eq!(
            alternating_dynamics(&game, start, 32).unwrap(),
            alternating_dynamics(&game, start, 32).unwrap()
        );
    }
}
