//! Named model components addressed from configuration files.

use crate::error::CliError;
use serde::Deserialize;
use spsim_core::generator::TestFunction;
use spsim_core::ito::{Coefficient, JumpAmplitude};
use spsim_core::jumps::{JumpMeasure, JumpSizes};
use spsim_core::law::{DiracKernel, DiscreteKernel, GaussianShiftKernel, Kernel, NormalKernel, StayKernel};
use std::sync::Arc;

/// `{"name": "...", "params": [..]}`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Builtin {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl Builtin {
    pub fn new(name: &str, params: &[f64]) -> Self {
        Self { name: name.into(), params: params.to_vec() }
    }

    fn expect(&self, kind: &str, arity: usize) -> Result<&[f64], CliError> {
        if self.params.len() != arity {
            return Err(CliError::Config(format!(
                "{kind} '{}' takes {arity} parameter(s), got {}",
                self.name,
                self.params.len()
            )));
        }
        Ok(&self.params)
    }
}

fn unknown(kind: &str, name: &str) -> CliError {
    CliError::Config(format!("unknown {kind} '{name}' (see `spsim list-builtins`)"))
}

pub type Rate = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A rate function and whether it reads time.
pub struct RateSpec {
    pub rate: Rate,
    pub time_dependent: bool,
    pub zero: bool,
}

pub fn rate(b: &Builtin) -> Result<RateSpec, CliError> {
    let homogeneous = |f: Rate| RateSpec { rate: f, time_dependent: false, zero: false };
    Ok(match b.name.as_str() {
        "zero" => {
            b.expect("rate", 0)?;
            RateSpec { rate: Arc::new(|_, _| 0.0), time_dependent: false, zero: true }
        }
        "constant" => {
            let c = b.expect("rate", 1)?[0];
            homogeneous(Arc::new(move |_, _| c))
        }
        "inverse_quadratic" => {
            let c = b.expect("rate", 1)?[0];
            homogeneous(Arc::new(move |_, x| c / (1.0 + x.iter().map(|v| v * v).sum::<f64>())))
        }
        "capped_linear" => {
            let p = b.expect("rate", 2)?;
            let (c, cap) = (p[0], p[1]);
            homogeneous(Arc::new(move |_, x| (c * x.iter().map(|v| v * v).sum::<f64>().sqrt()).min(cap)))
        }
        "step_in_time" => {
            let p = b.expect("rate", 2)?;
            let (c, until) = (p[0], p[1]);
            RateSpec { rate: Arc::new(move |t, _| if t < until { c } else { 0.0 }), time_dependent: true, zero: false }
        }
        other => return Err(unknown("rate", other)),
    })
}

pub fn kernel(b: &Builtin, dim: usize) -> Result<Arc<dyn Kernel>, CliError> {
    let spatial = |v: f64| vec![v; dim];
    Ok(match b.name.as_str() {
        "dirac" => {
            if b.params.len() != dim && b.params.len() != 1 {
                return Err(CliError::Config(format!("kernel 'dirac' takes 1 or {dim} parameter(s)")));
            }
            let point = if b.params.len() == dim { b.params.clone() } else { spatial(b.params[0]) };
            Arc::new(DiracKernel(point))
        }
        "stay" => {
            b.expect("kernel", 0)?;
            Arc::new(StayKernel)
        }
        "gaussian" => {
            let p = b.expect("kernel", 2)?;
            positive("gaussian sd", p[1])?;
            Arc::new(GaussianShiftKernel { shift: p[0], sd: p[1] })
        }
        "normal" => {
            let p = b.expect("kernel", 2)?;
            positive("normal sd", p[1])?;
            Arc::new(NormalKernel { mean: spatial(p[0]), sd: p[1] })
        }
        "two_point" => {
            let p = b.expect("kernel", 3)?;
            if !(0.0..=1.0).contains(&p[2]) {
                return Err(CliError::Config(format!("two_point probability {} outside [0, 1]", p[2])));
            }
            let atoms: Vec<(Vec<f64>, f64)> =
                [(spatial(p[0]), p[2]), (spatial(p[1]), 1.0 - p[2])].into_iter().filter(|a| a.1 > 0.0).collect();
            Arc::new(DiscreteKernel::new(atoms).map_err(|e| CliError::Config(e.to_string()))?)
        }
        other => return Err(unknown("kernel", other)),
    })
}

fn positive(what: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} must be > 0, got {v}")))
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn test_function(b: &Builtin, dim: usize) -> Result<TestFunction, CliError> {
    Ok(match b.name.as_str() {
        "constant" => {
            let c = b.expect("test function", 1)?[0];
            TestFunction::new(dim, move |_, _| c, c.abs())
                .with_time_derivative(|_, _| 0.0)
                .with_gradient(move |_, _| vec![0.0; dim])
                .with_hessian(move |_, _| vec![0.0; dim * dim])
        }
        "identity" => {
            b.expect("test function", 0)?;
            TestFunction::new(dim, |_, x| x[0], f64::INFINITY)
                .with_time_derivative(|_, _| 0.0)
                .with_gradient(move |_, _| {
                    let mut g = vec![0.0; dim];
                    g[0] = 1.0;
                    g
                })
                .with_hessian(move |_, _| vec![0.0; dim * dim])
                .with_derivative_bounds(1.0, 0.0)
        }
        "square" => {
            b.expect("test function", 0)?;
            TestFunction::new(dim, |_, x| norm2(x), f64::INFINITY)
                .with_time_derivative(|_, _| 0.0)
                .with_gradient(|_, x| x.iter().map(|v| 2.0 * v).collect())
                .with_hessian(move |_, _| {
                    let mut h = vec![0.0; dim * dim];
                    for i in 0..dim {
                        h[i * dim + i] = 2.0;
                    }
                    h
                })
        }
        "gaussian_bump" => {
            let p = b.expect("test function", 2)?;
            positive("gaussian_bump width", p[1])?;
            bump(dim, p[0], p[1], 0.0, 1.0, 0.0)
        }
        "decaying_bump" => {
            let p = b.expect("test function", 3)?;
            positive("decaying_bump width", p[2])?;
            bump(dim, p[1], p[2], p[0], 1.0, 0.0)
        }
        "smooth_nonzero" => {
            let p = b.expect("test function", 1)?;
            positive("smooth_nonzero width", p[0])?;
            bump(dim, 0.0, p[0], 0.0, -1.0, 1.0)
        }
        other => return Err(unknown("test function", other)),
    })
}

/// `offset + sign · e^{−rate s} exp(−‖x − c‖² / w²)`.
fn bump(dim: usize, center: f64, width: f64, rate: f64, sign: f64, offset: f64) -> TestFunction {
    let w2 = width * width;
    let e = move |s: f64, x: &[f64]| {
        let r2: f64 = x.iter().map(|v| (v - center) * (v - center)).sum();
        (-rate * s).exp() * (-r2 / w2).exp()
    };
    let bound = offset.abs() + 1.0;
    TestFunction::new(dim, move |s, x| offset + sign * e(s, x), bound)
        .with_time_derivative(move |s, x| -rate * sign * e(s, x))
        .with_gradient(move |s, x| {
            let v = e(s, x);
            x.iter().map(|xi| sign * v * (-2.0 * (xi - center) / w2)).collect()
        })
        .with_hessian(move |s, x| {
            let v = e(s, x);
            let mut h = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    let (a, b) = (x[i] - center, x[j] - center);
                    let delta = if i == j { 2.0 / w2 } else { 0.0 };
                    h[i * dim + j] = sign * v * (4.0 * a * b / (w2 * w2) - delta);
                }
            }
            h
        })
        .with_derivative_bounds(
            (2.0f64 / std::f64::consts::E).sqrt() / width,
            2.0 * dim as f64 / w2,
        )
        .with_third_derivative_scale(6.0 / (w2 * width))
}

pub fn jump_measure(b: &Builtin) -> Result<JumpMeasure, CliError> {
    let core = |r: spsim_core::Result<JumpMeasure>| r.map_err(|e| CliError::Config(e.to_string()));
    match b.name.as_str() {
        "none" => {
            b.expect("jump measure", 0)?;
            Ok(JumpMeasure::none())
        }
        "compound_poisson_point" => {
            let p = b.expect("jump measure", 2)?;
            core(JumpMeasure::compound_poisson(p[0], JumpSizes::Atoms(vec![(vec![p[1]], 1.0)])))
        }
        "compound_poisson_normal" => {
            let p = b.expect("jump measure", 3)?;
            core(JumpMeasure::compound_poisson(p[0], JumpSizes::Normal { mean: p[1], sd: p[2] }))
        }
        "tempered_stable" => {
            let p = b.expect("jump measure", 4)?;
            let (c, alpha, decay, eps) = (p[0], p[1], p[2], p[3]);
            if !(c > 0.0 && (0.0..2.0).contains(&alpha) && decay > 0.0) {
                return Err(CliError::Config("tempered_stable needs c > 0, 0 <= alpha < 2, decay > 0".into()));
            }
            core(JumpMeasure::truncated_density(
                Arc::new(move |y: f64| c * (-decay * y.abs()).exp() / y.abs().powf(1.0 + alpha)),
                eps,
            ))
        }
        other => Err(unknown("jump measure", other)),
    }
}

pub fn coefficient(b: &Builtin) -> Result<Coefficient, CliError> {
    Ok(match b.name.as_str() {
        "constant" => {
            let c = b.expect("coefficient", 1)?[0];
            Arc::new(move |_, _| c)
        }
        "linear" => {
            let p = b.expect("coefficient", 2)?;
            let (a, k) = (p[0], p[1]);
            Arc::new(move |_, x| a + k * x)
        }
        "time_linear" => {
            let p = b.expect("coefficient", 2)?;
            let (a, k) = (p[0], p[1]);
            Arc::new(move |t, _| a + k * t)
        }
        other => return Err(unknown("coefficient", other)),
    })
}

pub fn amplitude(b: &Builtin) -> Result<JumpAmplitude, CliError> {
    Ok(match b.name.as_str() {
        "none" => {
            b.expect("jump amplitude", 0)?;
            Arc::new(|_, _, _| 0.0)
        }
        "additive" => {
            b.expect("jump amplitude", 0)?;
            Arc::new(|_, _, y| y)
        }
        "scaled" => {
            let k = b.expect("jump amplitude", 1)?[0];
            Arc::new(move |_, _, y| k * y)
        }
        other => return Err(unknown("jump amplitude", other)),
    })
}

const LISTING: &str = "\
rate: zero()                          lambda = 0
rate: constant(c)                     lambda = c
rate: inverse_quadratic(c)            lambda(x) = c / (1 + |x|^2)
rate: capped_linear(c, cap)           lambda(x) = min(cap, c |x|)
rate: step_in_time(c, until)          lambda(t, x) = c for t < until, else 0 (time-dependent)
kernel: dirac(point)                  Q(x; .) = delta at point (one value, or one per coordinate)
kernel: stay()                        Q(x; .) = delta at x
kernel: gaussian(mean_shift, sd)      Q(x; .) = N(x + mean_shift, sd^2 I)
kernel: normal(mean, sd)              Q(x; .) = N(mean, sd^2 I), independent of x
kernel: two_point(a, b, p)            Q(x; .) = p delta_a + (1 - p) delta_b
test function: constant(c)            g = c
test function: identity()             g(s, x) = x_1
test function: square()               g(s, x) = |x|^2
test function: gaussian_bump(center, width)          g(s, x) = exp(-|x - center|^2 / width^2)
test function: decaying_bump(rate, center, width)    g(s, x) = exp(-rate s) exp(-|x - center|^2 / width^2)
test function: smooth_nonzero(width)                 g(s, x) = 1 - exp(-|x|^2 / width^2)
jump measure: none()                                  nu = 0
jump measure: compound_poisson_point(intensity, size) nu = intensity delta_size
jump measure: compound_poisson_normal(intensity, mean, sd)  nu = intensity N(mean, sd^2)
jump measure: tempered_stable(c, alpha, decay, epsilon)     nu(dy) = c exp(-decay |y|) / |y|^(1 + alpha) dy on |y| >= epsilon
coefficient: constant(c)              b or sigma = c
coefficient: linear(a, k)             b or sigma = a + k x
coefficient: time_linear(a, k)        b or sigma = a + k t
jump amplitude: none()                a(s, x, y) = 0
jump amplitude: additive()            a(s, x, y) = y
jump amplitude: scaled(k)             a(s, x, y) = k y
";

pub fn listing() -> &'static str {
    LISTING
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bumps_validate() {
        for b in [
            Builtin::new("gaussian_bump", &[0.3, 1.0]),
            Builtin::new("decaying_bump", &[0.5, 0.0, 0.7]),
            Builtin::new("smooth_nonzero", &[0.5]),
        ] {
            let g = test_function(&b, 1).unwrap();
            g.validate(&g.default_probe(1.0)).unwrap();
        }
        let g = test_function(&Builtin::new("gaussian_bump", &[0.0, 1.0]), 2).unwrap();
        g.validate(&g.default_probe(1.0)[..200]).unwrap();
    }

    #[test]
    fn arity_and_names_are_checked() {
        assert!(rate(&Builtin::new("constant", &[])).is_err());
        assert!(rate(&Builtin::new("nope", &[])).is_err());
        assert!(kernel(&Builtin::new("gaussian", &[0.0, -1.0]), 1).is_err());
        assert!(jump_measure(&Builtin::new("tempered_stable", &[1.0, 2.5, 1.0, 0.1])).is_err());
    }

    #[test]
    fn listing_mentions_required_entries() {
        assert!(listing().contains("rate: constant(c)"));
        assert!(listing().contains("kernel: gaussian(mean_shift, sd)"));
    }
}
