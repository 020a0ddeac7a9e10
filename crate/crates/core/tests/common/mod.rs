#![allow(dead_code)]

use spsim_core::generator::TestFunction;
use spsim_core::jumps::{JumpMeasure, JumpSizes};
use spsim_core::LevyTriplet;

pub fn gaussian_bump() -> TestFunction {
    TestFunction::new(1, |_, x| (-x[0] * x[0]).exp(), 1.0)
        .with_time_derivative(|_, _| 0.0)
        .with_gradient(|_, x| vec![-2.0 * x[0] * (-x[0] * x[0]).exp()])
        .with_hessian(|_, x| vec![(4.0 * x[0] * x[0] - 2.0) * (-x[0] * x[0]).exp()])
        .with_derivative_bounds(0.86, 2.0)
}

pub fn square() -> TestFunction {
    TestFunction::new(1, |_, x| x[0] * x[0], f64::INFINITY)
        .with_time_derivative(|_, _| 0.0)
        .with_gradient(|_, x| vec![2.0 * x[0]])
        .with_hessian(|_, _| vec![2.0])
}

pub fn identity() -> TestFunction {
    TestFunction::new(1, |_, x| x[0], f64::INFINITY)
        .with_time_derivative(|_, _| 0.0)
        .with_gradient(|_, _| vec![1.0])
        .with_hessian(|_, _| vec![0.0])
}

/// `1 − e^{−x²}`: zero at the origin, so a reset to 0 moves it a lot.
pub fn smooth_nonzero() -> TestFunction {
    TestFunction::new(1, |_, x| 1.0 - (-x[0] * x[0]).exp(), 1.0)
        .with_time_derivative(|_, _| 0.0)
        .with_gradient(|_, x| vec![2.0 * x[0] * (-x[0] * x[0]).exp()])
        .with_hessian(|_, x| vec![-(4.0 * x[0] * x[0] - 2.0) * (-x[0] * x[0]).exp()])
        .with_derivative_bounds(0.86, 2.0)
}

pub fn poisson_unit_jumps(intensity: f64) -> LevyTriplet {
    let jumps = JumpMeasure::compound_poisson(intensity, JumpSizes::Atoms(vec![(vec![1.0], 1.0)])).unwrap();
    LevyTriplet::new(vec![0.0], vec![vec![0.0]], jumps).unwrap()
}

pub fn poisson_normal_jumps(intensity: f64, mean: f64, sd: f64) -> LevyTriplet {
    let jumps = JumpMeasure::compound_poisson(intensity, JumpSizes::Normal { mean, sd }).unwrap();
    LevyTriplet::new(vec![0.0], vec![vec![0.0]], jumps).unwrap()
}

pub fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |v| if v <= 0.0 { 0.0 } else { 1.0 - (-rate * v).exp() }
}
