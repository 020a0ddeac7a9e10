mod common;

use common::{gaussian_bump, identity, poisson_normal_jumps, poisson_unit_jumps, smooth_nonzero, square};
use proptest::prelude::*;
use spsim_core::generator::GeneratorQuadrature;
use spsim_core::law::{DiracKernel, GaussianShiftKernel, NormalKernel, StayKernel};
use spsim_core::*;
use std::sync::Arc;

fn tempered() -> LevyTriplet {
    let density = Arc::new(|y: f64| 0.8 * (-1.5 * y.abs()).exp() / y.abs().powf(1.5));
    LevyTriplet::new(vec![0.1], vec![vec![0.3]], JumpMeasure::truncated_density(density, 0.05).unwrap()).unwrap()
}

fn cos_bump() -> TestFunction {
    TestFunction::new(1, |s, x| (x[0]).cos() * (-0.3 * s).exp(), 1.0)
        .with_time_derivative(|s, x| -0.3 * (x[0]).cos() * (-0.3 * s).exp())
        .with_gradient(|s, x| vec![-(x[0]).sin() * (-0.3 * s).exp()])
        .with_hessian(|s, x| vec![-(x[0]).cos() * (-0.3 * s).exp()])
        .with_derivative_bounds(1.0, 1.0)
        .with_third_derivative_scale(1.0)
}

fn models() -> Vec<Box<dyn IntrinsicGenerator>> {
    vec![
        Box::new(LevyTriplet::brownian(0.4, 1.3).unwrap()),
        Box::new(poisson_normal_jumps(2.0, 0.3, 0.5)),
        Box::new(poisson_unit_jumps(1.0)),
        Box::new(tempered()),
        Box::new(ItoLevyCoefficients::diffusion(Arc::new(|t, x| -x + 0.2 * t), Arc::new(|_, x| 1.0 + 0.1 * x * x)).unwrap()),
        Box::new(
            ItoLevyCoefficients::new(
                Arc::new(|_, x| -0.5 * x),
                Arc::new(|_, _| 0.7),
                Arc::new(|_, x, y| y * (1.0 + 0.1 * x.sin())),
                JumpMeasure::compound_poisson(1.5, JumpSizes::Normal { mean: 0.0, sd: 0.6 }).unwrap(),
            )
            .unwrap(),
        ),
    ]
}

fn laws() -> Vec<SwitchingLaw> {
    vec![
        SwitchingLaw::none(),
        SwitchingLaw::homogeneous(|x| 1.0 / (1.0 + x[0] * x[0]), 1.0, Arc::new(GaussianShiftKernel { shift: 0.0, sd: 1.0 })).unwrap(),
        SwitchingLaw::constant(2.0, Arc::new(DiracKernel(vec![0.0]))).unwrap(),
        SwitchingLaw::constant(1.5, Arc::new(NormalKernel { mean: vec![0.5], sd: 0.7 })).unwrap(),
    ]
}

fn full(g: &TestFunction, m: &dyn IntrinsicGenerator, law: &SwitchingLaw, s: f64, x: f64) -> f64 {
    let q = m.generator_quadrature();
    let a0 = m.generator(g, &q, s, s, &[x]).unwrap();
    eval_switching_generator(g, a0, law, &q, s, s, &[x]).unwrap().value
}

#[test]
fn levy_examples() {
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let q = bm.generator_quadrature();
    for x in [-3.0, 0.0, 0.7, 10.0] {
        assert!((eval_levy_generator(&square(), &bm, &q, 0.0, &[x]).unwrap().value - 1.0).abs() < 1e-12);
    }
    let drift = LevyTriplet::brownian(3.0, 0.0).unwrap();
    assert!((eval_levy_generator(&identity(), &drift, &drift.generator_quadrature(), 0.0, &[1.0]).unwrap().value - 3.0).abs() < 1e-12);
    let cp = poisson_unit_jumps(2.0);
    let v = eval_levy_generator(&identity(), &cp, &cp.generator_quadrature(), 0.0, &[0.0]).unwrap();
    assert!((v.value - 2.0).abs() < 1e-12);
    // without analytic derivatives the same examples go through FD
    let fd = eval_levy_generator(&square().finite_difference_only(), &bm, &q, 0.0, &[0.7]).unwrap();
    assert!((fd.value - 1.0).abs() < 1e-6);
}

#[test]
fn switching_examples() {
    let triv = LevyTriplet::degenerate(1);
    let q = triv.generator_quadrature();
    let a0 = eval_levy_generator(&square(), &triv, &q, 0.0, &[2.0]).unwrap();
    let reset = SwitchingLaw::constant(1.0, Arc::new(DiracKernel(vec![0.0]))).unwrap();
    assert_eq!(eval_switching_generator(&square(), a0, &reset, &q, 0.0, 0.0, &[2.0]).unwrap().value, -4.0);
    let bm = LevyTriplet::brownian(0.2, 1.0).unwrap();
    let g = gaussian_bump();
    let q = bm.generator_quadrature();
    let a0 = eval_levy_generator(&g, &bm, &q, 0.0, &[0.3]).unwrap();
    assert_eq!(eval_switching_generator(&g, a0, &SwitchingLaw::none(), &q, 0.0, 0.0, &[0.3]).unwrap(), a0);
    let stay = SwitchingLaw::homogeneous(|x| 1.0 / (1.0 + x[0] * x[0]), 1.0, Arc::new(StayKernel)).unwrap();
    assert_eq!(eval_switching_generator(&g, a0, &stay, &q, 0.0, 0.0, &[0.3]).unwrap().value, a0.value);
}

#[test]
fn ito_examples() {
    let drift = ItoLevyCoefficients::diffusion(Arc::new(|_, _| 1.0), Arc::new(|_, _| 0.0)).unwrap();
    assert!((eval_ito_levy_generator(&identity(), &drift, &drift.generator_quadrature(), 0.0, &[4.0]).unwrap().value - 1.0).abs() < 1e-12);
    let mult = ItoLevyCoefficients::diffusion(Arc::new(|_, _| 0.0), Arc::new(|_, x| x)).unwrap();
    assert!((eval_ito_levy_generator(&square(), &mult, &mult.generator_quadrature(), 0.0, &[3.0]).unwrap().value - 9.0).abs() < 1e-12);
}

#[test]
fn ito_and_levy_forms_agree() {
    // marks inside the unit ball, where both forms compensate the same way
    let jumps = JumpMeasure::compound_poisson(2.0, JumpSizes::Normal { mean: 0.2, sd: 0.1 }).unwrap();
    let ito = ItoLevyCoefficients::new(Arc::new(|_, _| 0.4), Arc::new(|_, _| 0.8), Arc::new(|_, _, y| y), jumps.clone()).unwrap();
    let levy = LevyTriplet::new(vec![0.4], vec![vec![0.64]], jumps).unwrap();
    for g in [gaussian_bump(), cos_bump(), smooth_nonzero()] {
        for x in [-1.5, 0.0, 0.4, 2.0] {
            let a = eval_ito_levy_generator(&g, &ito, &ito.generator_quadrature(), 0.3, &[x]).unwrap().value;
            let b = eval_levy_generator(&g, &levy, &levy.generator_quadrature(), 0.3, &[x]).unwrap().value;
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
    }
}

#[test]
fn finite_differences_agree_with_analytic() {
    let h2 = f64::EPSILON.sqrt();
    for m in models() {
        for g in [gaussian_bump(), cos_bump(), smooth_nonzero()] {
            let fd = g.finite_difference_only();
            let q = m.generator_quadrature();
            for x in [-2.0, -0.5, 0.0, 0.8, 3.0] {
                let a = m.generator(&g, &q, 0.5, 0.5, &[x]).unwrap().value;
                let b = m.generator(&fd, &q, 0.5, 0.5, &[x]).unwrap().value;
                let scale = g.third_derivative_scale().max(1.0) * (1.0 + x * x);
                assert!((a - b).abs() <= 10.0 * h2 * scale, "x={x}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn quadrature_refinement_within_estimate() {
    let refined = |m: &LevyTriplet| {
        let nu = m.jumps().with_panel_points(2 * m.jumps().panel_points()).unwrap();
        LevyTriplet::new(m.drift().to_vec(), vec![vec![m.covariance_entry(0, 0)]], nu).unwrap()
    };
    for m in [poisson_normal_jumps(2.0, 0.3, 0.5), tempered()] {
        let fine = refined(&m);
        for x in [-1.0, 0.0, 0.5, 2.0] {
            let a = eval_levy_generator(&gaussian_bump(), &m, &m.generator_quadrature(), 0.0, &[x]).unwrap();
            let b = eval_levy_generator(&gaussian_bump(), &fine, &fine.generator_quadrature(), 0.0, &[x]).unwrap();
            assert!((a.value - b.value).abs() <= a.quadrature_error.max(1e-14), "x={x}: {a:?} vs {b:?}");
        }
    }
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let law = SwitchingLaw::constant(1.5, Arc::new(GaussianShiftKernel { shift: 0.5, sd: 0.7 })).unwrap();
    let q = bm.generator_quadrature();
    let fine = q.clone().with_kernel_order(2 * law.quadrature_order());
    for x in [-1.0, 0.0, 2.0] {
        let a0 = eval_levy_generator(&gaussian_bump(), &bm, &q, 0.0, &[x]).unwrap();
        let a = eval_switching_generator(&gaussian_bump(), a0, &law, &q, 0.0, 0.0, &[x]).unwrap();
        let b = eval_switching_generator(&gaussian_bump(), a0, &law, &fine, 0.0, 0.0, &[x]).unwrap();
        assert!((a.value - b.value).abs() <= a.quadrature_error.max(1e-14), "x={x}: {a:?} vs {b:?}");
    }
}

#[test]
fn reported_biases_are_itemized() {
    let m = tempered();
    let v = eval_levy_generator(&gaussian_bump(), &m, &m.generator_quadrature(), 0.0, &[0.0]).unwrap();
    assert!(v.small_ball_bias_bound > 0.0);
    assert!(v.tail_bound >= 0.0);
    assert_eq!(v.total_error(), v.small_ball_bias_bound + v.tail_bound + v.quadrature_error);
}

#[test]
fn dynkin_examples() {
    let ex = Executor::default();
    let drift = LevyTriplet::brownian(3.0, 0.0).unwrap();
    for h in [1e-3, 1e-2, 0.1] {
        let r = dynkin_check(&identity(), &drift, &[0.0], h, 100, 1, &ex).unwrap();
        assert!((r.ratio.mean - 3.0).abs() < 1e-9 && r.pass, "{r:?}");
    }
    let bm = LevyTriplet::brownian(0.0, 1.0).unwrap();
    let r = dynkin_check(&square(), &bm, &[0.0], 1e-2, 100_000, 2, &ex).unwrap();
    assert!(r.pass && (r.generator.value - 1.0).abs() < 1e-12, "{r:?}");
    let cp = poisson_unit_jumps(2.0);
    let r = dynkin_check(&identity(), &cp, &[0.0], 1e-2, 100_000, 3, &ex).unwrap();
    assert!(r.pass && (r.ratio.mean - 2.0).abs() <= 3.0 * r.ratio.std_error, "{r:?}");
}

#[test]
fn dynkin_on_curved_functions() {
    let ex = Executor::default();
    for (k, m) in models().iter().enumerate() {
        for g in [gaussian_bump(), cos_bump()] {
            let r = dynkin_check(&g, m.as_ref(), &[0.4], 1e-2, 100_000, 10 + k as u64, &ex).unwrap();
            assert!(r.pass, "model {k}: {r:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linearity(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, x in -3.0f64..3.0, s in 0.0f64..2.0, mi in 0usize..6, li in 0usize..4) {
        let m = &models()[mi];
        let law = &laws()[li];
        let (g1, g2) = (gaussian_bump(), cos_bump());
        let combo = TestFunction::combine(alpha, &g1, beta, &g2).unwrap();
        let lhs = full(&combo, m.as_ref(), law, s, x);
        let rhs = alpha * full(&g1, m.as_ref(), law, s, x) + beta * full(&g2, m.as_ref(), law, s, x);
        let scale = alpha.abs() * full(&g1, m.as_ref(), law, s, x).abs() + beta.abs() * full(&g2, m.as_ref(), law, s, x).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn constants_vanish(c in -100.0f64..100.0, x in -5.0f64..5.0, s in 0.0f64..2.0, mi in 0usize..6, li in 0usize..4) {
        let g = TestFunction::new(1, move |_, _| c, c.abs());
        let m = &models()[mi];
        let law = &laws()[li];
        let q: GeneratorQuadrature = m.generator_quadrature();
        prop_assert!(m.generator(&g, &q, s, s, &[x]).unwrap().value.abs() <= 1e-10);
        prop_assert!(full(&g, m.as_ref(), law, s, x).abs() <= 1e-10);
    }
}
