use localopt_core::problems::make_random_quadratic;
use localopt_core::tuner::{
    cubic_a, cubic_b, empirical_tune_gamma, gamma_b, h_objective, solve_candidate_a, solve_candidate_b, tune,
    CandidateBStatus, TunerInputs, Winner,
};
use localopt_core::{Error, OuterOptimizerSpec, RunConfig};
use proptest::prelude::*;

fn inputs(d: f64, l: f64, sigma: f64, m: usize, h: usize, r: usize) -> TunerInputs {
    TunerInputs {
        distance: d,
        smoothness: l,
        sigma,
        nodes: m,
        local_steps: h,
        rounds: r,
    }
}

#[test]
fn noiseless_grid_prefers_unit_gamma() {
    let p = make_random_quadratic(10, 3).unwrap();
    let base = RunConfig::new(2, 5, 30, 0.1 / p.smoothness(), OuterOptimizerSpec::plain(1.0));
    let tuned = empirical_tune_gamma(&p, &base, &[0.5, 1.0], 0.0, &[1]).unwrap();
    assert_eq!(tuned.best_gamma, 1.0);
    assert!(tuned.table[1].score < tuned.table[0].score);
}

#[test]
fn empirical_tuning_is_deterministic() {
    let p = make_random_quadratic(8, 1).unwrap();
    let base = RunConfig::new(3, 4, 20, 0.05 / p.smoothness(), OuterOptimizerSpec::plain(1.0));
    let grid = [0.5, 0.9, 1.0, 1.5];
    let a = empirical_tune_gamma(&p, &base, &grid, 2.0, &[1, 2, 3]).unwrap();
    let b = empirical_tune_gamma(&p, &base, &grid, 2.0, &[1, 2, 3]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn all_divergent_grid_is_an_error() {
    let p = make_random_quadratic(4, 2).unwrap();
    let base = RunConfig::new(1, 3, 400, 10.0 / p.smoothness(), OuterOptimizerSpec::plain(1.0));
    let err = empirical_tune_gamma(&p, &base, &[1.0, 2.0], 0.0, &[0]).unwrap_err();
    assert!(matches!(err, Error::AllDiverged));
}

proptest! {
    #[test]
    fn roots_solve_their_cubics(
        d in 0.1..10.0f64,
        l in 0.1..10.0f64,
        sigma in 0.01..10.0f64,
        m in 1usize..16,
        h in 2usize..64,
        r in 1usize..1000,
    ) {
        let inp = inputs(d, l, sigma, m, h, r);
        let a = solve_candidate_a(&inp).unwrap();
        prop_assert!(a.eta <= 1.0 / (4.0 * l) * (1.0 + 1e-15));
        if a.eta < 1.0 / (4.0 * l) {
            prop_assert!(cubic_a(a.eta, &inp).abs() <= 1e-12 * a.residual_scale);
        }
        match solve_candidate_b(&inp) {
            Ok((b, status)) => {
                prop_assert!(inp.well_posed());
                prop_assert!(cubic_b(b.eta, &inp).abs() <= 1e-12 * b.residual_scale);
                prop_assert_eq!(b.gamma, gamma_b(b.eta, &inp));
                prop_assert!((inp.constraint(b.eta, b.gamma.max(1.0)) - 0.25).abs() <= 1e-12 || b.gamma < 1.0);
                prop_assert_eq!(status == CandidateBStatus::BelowUnitGamma, b.gamma < 1.0);
            }
            Err(Error::DegenerateInput(_)) => prop_assert!(!inp.well_posed()),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn winner_is_no_worse_than_feasible_neighbours(
        d in 0.1..10.0f64,
        l in 0.1..10.0f64,
        sigma in 0.0..5.0f64,
        m in 1usize..16,
        h in 1usize..64,
        r in 1usize..1000,
        scale in 0.5..1.0f64,
        gamma in 0.1..3.0f64,
    ) {
        let inp = inputs(d, l, sigma, m, h, r);
        prop_assume!(inp.well_posed());
        let res = tune(&inp).unwrap();
        prop_assert!(inp.constraint(res.eta, res.gamma) <= 0.25 * (1.0 + 1e-12));
        let eta = scale * 0.25 / (l * (1.0 + (gamma - 1.0).max(0.0) * h as f64));
        prop_assert!(res.h <= h_objective(eta, gamma, &inp).unwrap() * (1.0 + 1e-9));
        if res.winner == Winner::B {
            prop_assert!(res.gamma >= 1.0);
        }
    }
}
