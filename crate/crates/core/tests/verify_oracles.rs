mod common;

use common::{gaussian_bump, identity, poisson_normal_jumps, smooth_nonzero, square};
use spsim_core::law::{DiracKernel, DiscreteKernel, GaussianShiftKernel, NormalKernel};
use spsim_core::*;
use std::sync::Arc;

fn harness(seed: u64) -> Harness {
    Harness::new(seed, Executor::default())
}

fn diag(r: &VerificationReport, name: &str) -> f64 {
    r.diagnostics.iter().find(|b| b.name == name).unwrap_or_else(|| panic!("no diagnostic {name}")).value
}

fn brownian_law() -> SwitchingLaw {
    SwitchingLaw::homogeneous(|x| 1.0 / (1.0 + x[0] * x[0]), 1.0, Arc::new(GaussianShiftKernel { shift: 0.0, sd: 1.0 })).unwrap()
}

#[test]
fn heat_moment_kolmogorov() {
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let cfg = SpConfig::new(1.0, 0.05);
    let r = check_kolmogorov(&harness(1), &bm, &SwitchingLaw::none(), &square(), &[0.5], 1.0, 20_000, 65, &cfg).unwrap();
    assert!(r.pass, "{}", r.summary());
    // RHS is g(0, x0) + t exactly
    assert_eq!(r.rhs.mean, 1.25);
    assert_eq!(r.rhs.std_error, 0.0);
}

#[test]
fn zero_rate_reduces_to_dynkin() {
    let models: Vec<Box<dyn IntrinsicGenerator>> = vec![
        Box::new(LevyTriplet::brownian(0.3, 1.0).unwrap()),
        Box::new(poisson_normal_jumps(2.0, 0.3, 0.5)),
        Box::new(ItoLevyCoefficients::diffusion(Arc::new(|_, x| -x), Arc::new(|_, _| 1.0)).unwrap()),
    ];
    for m in &models {
        let cfg = SpConfig::new(1.0, 0.02);
        let r = check_kolmogorov(&harness(2), m.as_ref(), &SwitchingLaw::none(), &gaussian_bump(), &[0.5], 1.0, 20_000, 65, &cfg).unwrap();
        assert!(r.pass, "{}", r.summary());
    }
}

/// `s·sin x`: the time factor makes `∫Ã₀g ds` track `g(t, X_t)`.
fn ramped_sine() -> TestFunction {
    TestFunction::new(1, |s, x| s * x[0].sin(), 1.0)
        .with_time_derivative(|_, x| x[0].sin())
        .with_gradient(|s, x| vec![s * x[0].cos()])
        .with_hessian(|s, x| vec![-s * x[0].sin()])
        .with_derivative_bounds(1.0, 1.0)
}

#[test]
fn crn_variance_smaller_when_sides_correlate() {
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let cfg = SpConfig::new(1.0, 0.05).with_method(JumpTimeMethod::Thinning);
    let r = check_kolmogorov(&harness(3), &bm, &brownian_law(), &ramped_sine(), &[0.5], 1.0, 20_000, 65, &cfg).unwrap();
    assert!(r.pass, "{}", r.summary());
    let (crn, independent) = (diag(&r, "crn_variance"), diag(&r, "independent_variance"));
    assert!(crn < independent, "crn {crn} vs independent {independent}");
}

#[test]
fn crn_loses_on_the_reset_model() {
    // var_indep − var_crn = 2 cov(LHS, RHS), negative on the reset model
    let law = SwitchingLaw::constant(2.0, Arc::new(DiracKernel(vec![0.0]))).unwrap();
    let bm = LevyTriplet::brownian(0.0, 0.25).unwrap();
    let cfg = SpConfig::new(1.0, 0.05);
    let r = check_kolmogorov(&harness(3), &bm, &law, &smooth_nonzero(), &[1.5], 1.0, 20_000, 65, &cfg).unwrap();
    assert!(r.pass, "{}", r.summary());
    assert!(diag(&r, "crn_variance") > diag(&r, "independent_variance"));
}

#[test]
fn reset_model_conditional_law_closed_form() {
    let c = 1.0;
    let law = SwitchingLaw::constant(c, Arc::new(DiracKernel(vec![0.0]))).unwrap();
    let cfg = SpConfig::new(1.0, 0.05);
    let r = check_conditional_law(&harness(4), &LevyTriplet::degenerate(1), &law, &identity(), &[2.0], 1.0, 10_000, 1000, &cfg, 0.05).unwrap();
    assert!(r.pass, "{}", r.summary());
    let exact = 2.0 * (-c as f64).exp();
    assert!((r.rhs.mean - exact).abs() <= 3.0 * r.rhs.std_error + r.budget_total(), "{} vs {exact}", r.rhs.mean);
}

#[test]
fn conditional_law_stable_under_stream_swap() {
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let law = brownian_law();
    let cfg = SpConfig::new(1.0, 0.05);
    for seed in 0..5 {
        let mut outcomes = Vec::new();
        for swap in [false, true] {
            let mut h = harness(100 + seed);
            h.swap_streams = swap;
            let r = check_conditional_law(&h, &bm, &law, &gaussian_bump(), &[0.5], 1.0, 2_000, 200, &cfg, 0.05).unwrap();
            outcomes.push(r.pass);
        }
        assert_eq!(outcomes, vec![true, true], "seed {seed}");
    }
}

#[test]
fn iid_chain_limit() {
    let law = SwitchingLaw::constant(1.0, Arc::new(DiscreteKernel::new(vec![(vec![-1.0], 0.3), (vec![2.0], 0.7)]).unwrap())).unwrap();
    let g = TestFunction::new(1, |_, x| x[0], 2.0);
    let cfg = SpConfig::new(1.0, 0.05);
    let (r, est) = estimate_stationary_limit(&harness(5), &LevyTriplet::degenerate(1), &law, &g, &[0.0], 40.0, 20, 5_000, &cfg).unwrap();
    assert!(r.pass, "{}", r.summary());
    let exact = -0.3 + 1.4;
    assert!((est.ratio.mean - exact).abs() <= 3.0 * est.ratio.std_error, "{est:?}");
}

#[test]
fn ou_two_horizon_stationarity() {
    let ou = ItoLevyCoefficients::diffusion(Arc::new(|_, x| -x), Arc::new(|_, _| 1.0)).unwrap();
    let law = SwitchingLaw::constant(1.0, Arc::new(DiracKernel(vec![0.0]))).unwrap();
    let cfg = SpConfig::new(1.0, 0.02);
    let r = check_stationarity(&harness(6), &ou, &law, &gaussian_bump(), &[2.0], 20.0, 40.0, 5_000, &cfg).unwrap();
    assert!(r.pass, "{}", r.summary());
}

#[test]
fn too_few_renewals_is_an_error() {
    let law = SwitchingLaw::constant(0.01, Arc::new(DiracKernel(vec![0.0]))).unwrap();
    let g = TestFunction::new(1, |_, x| x[0], 2.0);
    let res = estimate_stationary_limit(&harness(7), &LevyTriplet::degenerate(1), &law, &g, &[0.0], 5.0, 20, 50, &SpConfig::new(1.0, 0.05));
    assert!(res.is_err());
}

#[test]
fn chapman_kolmogorov_restart() {
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let cfg = SpConfig::new(1.0, 0.05).with_method(JumpTimeMethod::Thinning);
    let r = check_chapman_kolmogorov(&harness(8), &bm, &brownian_law(), &gaussian_bump(), &[0.5], 0.5, 0.5, 100_000, &cfg).unwrap();
    assert!(r.pass, "{}", r.summary());
    let r = check_chapman_kolmogorov(&harness(8), &bm, &brownian_law(), &gaussian_bump(), &[0.5], 0.7, 0.0, 1_000, &cfg).unwrap();
    assert_eq!(r.lhs, r.rhs);
}

#[test]
fn reports_independent_of_workers() {
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let cfg = SpConfig::new(1.0, 0.05);
    let run = |ex: Executor| check_kolmogorov(&Harness::new(9, ex), &bm, &brownian_law(), &gaussian_bump(), &[0.5], 1.0, 2_000, 33, &cfg).unwrap();
    assert_eq!(run(Executor::sequential()), run(Executor::with_workers(3).unwrap()));
}

#[test]
fn heat_feynman_kac() {
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let grid = PideGrid::around(&bm, 1.0, -1.0, 1.0, 401, 0.01, 0.5).unwrap();
    let xs = [-1.0, 0.0, 0.5, 1.0];
    let (reports, sol) = check_feynman_kac(&harness(10), &bm, &SwitchingLaw::none(), &square(), 1.0, &xs, 20_000, &grid, &SpConfig::new(1.0, 0.05)).unwrap();
    for (r, x) in reports.iter().zip(xs) {
        assert!(r.pass, "{}", r.summary());
        // u = x² + t up to interpolation
        let p = evaluate_solution(&sol, 1.0, x).unwrap();
        assert!((p.value - (x * x + 1.0)).abs() <= p.bound + 1e-8, "{p:?}");
    }
}

#[test]
fn switching_feynman_kac() {
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let law = SwitchingLaw::homogeneous(|x| 2.0 / (1.0 + x[0] * x[0]), 2.0, Arc::new(NormalKernel { mean: vec![0.0], sd: 1.0 })).unwrap();
    let grid = PideGrid::around(&bm, 1.0, -2.0, 2.0, 401, 0.01, 0.5).unwrap();
    let xs = [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0];
    let cfg = SpConfig::new(1.0, 0.05).with_method(JumpTimeMethod::Thinning);
    let (reports, sol) = check_feynman_kac(&harness(11), &bm, &law, &gaussian_bump(), 1.0, &xs, 20_000, &grid, &cfg).unwrap();
    assert!(reports.iter().all(|r| r.pass), "{:#?}", reports.iter().map(|r| r.summary()).collect::<Vec<_>>());
    // h ≥ 0 and the scheme within its bounds keeps u above −budget
    let min = sol.values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min >= -sol.error_budget.total());
}

#[test]
fn pide_heat_refinement_is_second_order() {
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let mut errors = Vec::new();
    for n in [201usize, 401, 801, 1601] {
        let grid = PideGrid::new(-8.0, 8.0, n, 16.0 / (n - 1) as f64, 0.5, 2.0).unwrap();
        let sol = solve_pide(&bm, &SwitchingLaw::none(), &|x| (-x * x).exp(), 1.0, &grid).unwrap();
        let exact = |x: f64| (1.0f64 / 3.0).sqrt() * (-x * x / 3.0).exp();
        let err = (0..grid.n_x)
            .filter(|&i| grid.x(i).abs() <= 6.0)
            .map(|i| (sol.final_level()[i] - exact(grid.x(i))).abs())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.2..=4.8).contains(&ratio), "ratios from {errors:?}");
    }
}
