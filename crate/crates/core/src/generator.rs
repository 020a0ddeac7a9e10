//! Numerical generators.
//!
//! For `g` in the domain of bounded `C^{1,2}` functions with bounded
//! derivatives, the Lévy generator is
//!
//! `A₀g = ∂_s g + μ·∇g + ½ tr(C ∇²g) + ∫ (g(x+y) − g(x) − ∇g·y 1{‖y‖<1}) ν(dy)`,
//!
//! the Itô-Lévy one is
//!
//! `A₀g = ∂_s g + b ∂_x g + ½σ² ∂²_x g + ∫ (g(x+a) − g(x) − a ∂_x g) ν(dy)`,
//!
//! and the switching generator adds `λ(x) ∫ (g(z) − g(x)) Q(x; dz)`.

use crate::error::{ensure, Result, SpError};
use crate::exec::Executor;
use crate::ito::ItoLevyCoefficients;
use crate::jumps::JumpMeasure;
use crate::law::SwitchingLaw;
use crate::levy::LevyTriplet;
use crate::path::{IntrinsicModel, PathSkeleton};
use crate::quadrature::{norm, Node};
use crate::rng::RngStream;
use crate::stats::MCEstimate;
use std::fmt;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

fn fd_step_first(v: f64) -> f64 {
    f64::EPSILON.cbrt() * v.abs().max(1.0)
}

fn fd_step_second(v: f64) -> f64 {
    f64::EPSILON.powf(0.25) * v.abs().max(1.0)
}

/// A bounded test function `g(s, x)` with optional analytic derivatives.
/// Missing derivatives are taken by central finite differences.
#[derive(Clone)]
pub struct TestFunction {
    dim: usize,
    value: ScalarFn,
    time_derivative: Option<ScalarFn>,
    gradient: Option<VectorFn>,
    /// Row-major `d × d`.
    hessian: Option<VectorFn>,
    bound: f64,
    /// Sups of the first and second spatial derivatives.
    derivative_bounds: [f64; 2],
    third_derivative_scale: f64,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("dim", &self.dim)
            .field("bound", &self.bound)
            .field("derivative_bounds", &self.derivative_bounds)
            .field("analytic_time_derivative", &self.time_derivative.is_some())
            .field("analytic_gradient", &self.gradient.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .finish()
    }
}

impl TestFunction {
    pub fn new(dim: usize, value: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static, bound: f64) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            time_derivative: None,
            gradient: None,
            hessian: None,
            bound,
            derivative_bounds: [0.0; 2],
            third_derivative_scale: 0.0,
        }
    }

    pub fn with_time_derivative(mut self, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.time_derivative = Some(Arc::new(f));
        self
    }

    pub fn with_gradient(mut self, f: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(f));
        self
    }

    pub fn with_hessian(mut self, f: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(f));
        self
    }

    pub fn with_derivative_bounds(mut self, first: f64, second: f64) -> Self {
        self.derivative_bounds = [first, second];
        self
    }

    pub fn with_third_derivative_scale(mut self, c: f64) -> Self {
        self.third_derivative_scale = c;
        self
    }

    /// Same function with every derivative taken by finite differences.
    pub fn finite_difference_only(&self) -> Self {
        Self {
            time_derivative: None,
            gradient: None,
            hessian: None,
            ..self.clone()
        }
    }

    /// `α g₁ + β g₂`; analytic derivatives are kept where both have them.
    pub fn combine(alpha: f64, g1: &TestFunction, beta: f64, g2: &TestFunction) -> Result<Self> {
        ensure(g1.dim == g2.dim, || "dimension mismatch".into())?;
        let (v1, v2) = (g1.value.clone(), g2.value.clone());
        let mut out = TestFunction::new(g1.dim, move |s, x| alpha * v1(s, x) + beta * v2(s, x), alpha.abs() * g1.bound + beta.abs() * g2.bound);
        if let (Some(a), Some(b)) = (g1.time_derivative.clone(), g2.time_derivative.clone()) {
            out = out.with_time_derivative(move |s, x| alpha * a(s, x) + beta * b(s, x));
        }
        let lin = move |a: VectorFn, b: VectorFn| -> VectorFn {
            Arc::new(move |s, x| a(s, x).iter().zip(b(s, x)).map(|(u, v)| alpha * u + beta * v).collect())
        };
        if let (Some(a), Some(b)) = (g1.gradient.clone(), g2.gradient.clone()) {
            out.gradient = Some(lin(a, b));
        }
        if let (Some(a), Some(b)) = (g1.hessian.clone(), g2.hessian.clone()) {
            out.hessian = Some(lin(a, b));
        }
        out.derivative_bounds = [
            alpha.abs() * g1.derivative_bounds[0] + beta.abs() * g2.derivative_bounds[0],
            alpha.abs() * g1.derivative_bounds[1] + beta.abs() * g2.derivative_bounds[1],
        ];
        out.third_derivative_scale = alpha.abs() * g1.third_derivative_scale + beta.abs() * g2.third_derivative_scale;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn derivative_bounds(&self) -> [f64; 2] {
        self.derivative_bounds
    }

    pub fn third_derivative_scale(&self) -> f64 {
        self.third_derivative_scale
    }

    pub fn value(&self, s: f64, x: &[f64]) -> f64 {
        (self.value)(s, x)
    }

    pub fn time_derivative(&self, s: f64, x: &[f64]) -> f64 {
        match &self.time_derivative {
            Some(f) => f(s, x),
            None => {
                let h = fd_step_first(s);
                ((self.value)(s + h, x) - (self.value)(s - h, x)) / (2.0 * h)
            }
        }
    }

    pub fn gradient(&self, s: f64, x: &[f64]) -> Vec<f64> {
        match &self.gradient {
            Some(f) => f(s, x),
            None => {
                let mut y = x.to_vec();
                (0..self.dim)
                    .map(|i| {
                        let h = fd_step_first(x[i]);
                        y[i] = x[i] + h;
                        let up = (self.value)(s, &y);
                        y[i] = x[i] - h;
                        let down = (self.value)(s, &y);
                        y[i] = x[i];
                        (up - down) / (2.0 * h)
                    })
                    .collect()
            }
        }
    }

    pub fn hessian(&self, s: f64, x: &[f64]) -> Vec<f64> {
        if let Some(f) = &self.hessian {
            return f(s, x);
        }
        let d = self.dim;
        let g = |y: &[f64]| (self.value)(s, y);
        let mut out = vec![0.0; d * d];
        let mut y = x.to_vec();
        let centre = g(x);
        for i in 0..d {
            let hi = fd_step_second(x[i]);
            y[i] = x[i] + hi;
            let up = g(&y);
            y[i] = x[i] - hi;
            let down = g(&y);
            y[i] = x[i];
            out[i * d + i] = (up - 2.0 * centre + down) / (hi * hi);
            for j in 0..i {
                let hj = fd_step_second(x[j]);
                let mut corner = |si: f64, sj: f64| {
                    y[i] = x[i] + si * hi;
                    y[j] = x[j] + sj * hj;
                    let v = g(&y);
                    y[i] = x[i];
                    y[j] = x[j];
                    v
                };
                let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * hi * hj);
                out[i * d + j] = v;
                out[j * d + i] = v;
            }
        }
        out
    }

    /// Checks declared bounds and cross-validates analytic derivatives
    /// against finite differences on `probe`.
    pub fn validate(&self, probe: &[(f64, Vec<f64>)]) -> Result<()> {
        let fd = self.finite_difference_only();
        for (s, x) in probe {
            ensure(x.len() == self.dim, || "probe dimension mismatch".into())?;
            let v = self.value(*s, x);
            if !v.is_finite() {
                return Err(SpError::NonFinite { t: *s, x: x.clone(), what: "test function".into() });
            }
            ensure(v.abs() <= self.bound * (1.0 + 1e-12) + 1e-300, || {
                format!("|g({s}, {x:?})| = {} exceeds declared bound {}", v.abs(), self.bound)
            })?;
            let scale1 = self.derivative_bounds[0].max(v.abs()).max(1.0);
            let scale2 = self.derivative_bounds[1].max(v.abs()).max(1.0);
            let h1 = x.iter().fold(fd_step_first(*s), |m, v| m.max(fd_step_first(*v)));
            let h2 = x.iter().fold(0.0f64, |m, v| m.max(fd_step_second(*v)));
            let tol1 = 10.0 * h1 * h1 * scale1;
            let tol2 = 10.0 * h2 * h2 * scale2;
            let compare = |a: &[f64], b: &[f64], tol: f64, what: &str| -> Result<()> {
                for (u, w) in a.iter().zip(b) {
                    ensure((u - w).abs() <= tol, || {
                        format!("{what} at ({s}, {x:?}): analytic {u} vs finite difference {w}")
                    })?;
                }
                Ok(())
            };
            if self.time_derivative.is_some() {
                compare(&[self.time_derivative(*s, x)], &[fd.time_derivative(*s, x)], tol1, "time derivative")?;
            }
            if self.gradient.is_some() {
                compare(&self.gradient(*s, x), &fd.gradient(*s, x), tol1, "gradient")?;
            }
            if self.hessian.is_some() {
                compare(&self.hessian(*s, x), &fd.hessian(*s, x), tol2, "hessian")?;
            }
        }
        Ok(())
    }

    /// Probe grid for validation: `s ∈ {0, T/2, T}` and the state grid
    /// used for switching laws.
    pub fn default_probe(&self, horizon: f64) -> Vec<(f64, Vec<f64>)> {
        let states = crate::law::probe_grid(self.dim, horizon, false);
        let mut out = Vec::new();
        for s in [0.0, 0.5 * horizon, horizon] {
            out.extend(states.iter().map(|(_, x)| (s, x.clone())));
        }
        out
    }
}

/// Quadrature for the jump integral of a generator.
#[derive(Debug, Clone)]
pub struct GeneratorQuadrature {
    pub nu_nodes: Vec<Node>,
    pub nu_coarse: Vec<Node>,
    pub small_ball_second_moment: f64,
    pub tail_mass: f64,
    /// Per-dimension order for continuous relocation kernels.
    pub kernel_order: Option<usize>,
}

impl GeneratorQuadrature {
    pub fn from_measure(measure: &JumpMeasure) -> Self {
        Self {
            nu_nodes: measure.nodes().to_vec(),
            nu_coarse: measure.coarse_nodes().to_vec(),
            small_ball_second_moment: measure.small_ball_second_moment(),
            tail_mass: measure.tail_mass(),
            kernel_order: None,
        }
    }

    pub fn with_kernel_order(mut self, order: usize) -> Self {
        self.kernel_order = Some(order);
        self
    }

    /// `Q(t, x; ·)` nodes at the configured order (the law's own by default).
    pub fn q_nodes(&self, law: &SwitchingLaw, t: f64, x: &[f64]) -> Vec<Node> {
        let order = self.kernel_order.unwrap_or(law.quadrature_order());
        law.kernel().quadrature(t, x, order)
    }

    fn q_nodes_coarse(&self, law: &SwitchingLaw, t: f64, x: &[f64]) -> Vec<Node> {
        let order = self.kernel_order.unwrap_or(law.quadrature_order());
        law.kernel().quadrature(t, x, (order / 2).max(1))
    }
}

/// A generator evaluation with its error companions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorValue {
    pub value: f64,
    /// `½ ‖∇²g‖ ∫_{‖y‖<ε} ‖y‖² ν(dy)` for dropped small jumps.
    pub small_ball_bias_bound: f64,
    /// `2 ‖g‖ ·` mass of ν dropped beyond the last panel.
    pub tail_bound: f64,
    /// Difference between the fine and a half-order quadrature.
    pub quadrature_error: f64,
}

impl GeneratorValue {
    pub fn total_error(&self) -> f64 {
        self.small_ball_bias_bound + self.tail_bound + self.quadrature_error
    }
}

fn finite(v: f64, s: f64, x: &[f64], what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SpError::NonFinite { t: s, x: x.to_vec(), what: what.into() })
    }
}

/// `2‖g‖ · dropped mass`, zero when nothing is dropped even for unbounded g.
fn tail_bound(g: &TestFunction, quad: &GeneratorQuadrature) -> f64 {
    if quad.tail_mass > 0.0 {
        2.0 * g.bound * quad.tail_mass
    } else {
        0.0
    }
}

fn hessian_norm(g: &TestFunction, hess: &[f64]) -> f64 {
    if g.derivative_bounds[1] > 0.0 {
        g.derivative_bounds[1]
    } else {
        hess.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn levy_integral(g: &TestFunction, nodes: &[Node], s: f64, x: &[f64], gx: f64, grad: &[f64]) -> Result<f64> {
    let mut y = vec![0.0; x.len()];
    let mut total = 0.0;
    for n in nodes {
        for ((yi, xi), pi) in y.iter_mut().zip(x).zip(&n.point) {
            *yi = xi + pi;
        }
        let mut term = g.value(s, &y) - gx;
        if norm(&n.point) < 1.0 {
            term -= grad.iter().zip(&n.point).map(|(a, b)| a * b).sum::<f64>();
        }
        total += n.weight * finite(term, s, x, "jump integrand")?;
    }
    Ok(total)
}

/// `A₀g(s, x)` for a Lévy triplet.
pub fn eval_levy_generator(
    g: &TestFunction,
    triplet: &LevyTriplet,
    quad: &GeneratorQuadrature,
    s: f64,
    x: &[f64],
) -> Result<GeneratorValue> {
    let d = triplet.dim();
    ensure(g.dim == d && x.len() == d, || "dimension mismatch".into())?;
    let grad = g.gradient(s, x);
    let hess = g.hessian(s, x);
    let mut local = g.time_derivative(s, x);
    local += triplet.drift().iter().zip(&grad).map(|(m, g)| m * g).sum::<f64>();
    let cov = triplet.covariance();
    local += 0.5 * cov.iter().zip(&hess).map(|(c, h)| c * h).sum::<f64>();
    let local = finite(local, s, x, "local generator terms")?;
    if quad.nu_nodes.is_empty() {
        return Ok(GeneratorValue { value: local, small_ball_bias_bound: 0.0, tail_bound: 0.0, quadrature_error: 0.0 });
    }
    let gx = g.value(s, x);
    let fine = levy_integral(g, &quad.nu_nodes, s, x, gx, &grad)?;
    let coarse = levy_integral(g, &quad.nu_coarse, s, x, gx, &grad)?;
    Ok(GeneratorValue {
        value: local + fine,
        small_ball_bias_bound: 0.5 * hessian_norm(g, &hess) * quad.small_ball_second_moment,
        tail_bound: tail_bound(g, quad),
        quadrature_error: (fine - coarse).abs(),
    })
}

fn ito_integral(g: &TestFunction, coeffs: &ItoLevyCoefficients, nodes: &[Node], s: f64, x: f64, gx: f64, dg: f64) -> Result<f64> {
    let mut total = 0.0;
    for n in nodes {
        let a = coeffs.amplitude_at(s, x, n.point[0]);
        let term = g.value(s, &[x + a]) - gx - a * dg;
        total += n.weight * finite(term, s, &[x], "jump integrand")?;
    }
    Ok(total)
}

/// `A₀g(s, x)` for Itô-Lévy coefficients read at time `s`.
pub fn eval_ito_levy_generator(
    g: &TestFunction,
    coeffs: &ItoLevyCoefficients,
    quad: &GeneratorQuadrature,
    s: f64,
    x: &[f64],
) -> Result<GeneratorValue> {
    eval_ito_at(g, coeffs, quad, s, s, x)
}

fn eval_ito_at(
    g: &TestFunction,
    coeffs: &ItoLevyCoefficients,
    quad: &GeneratorQuadrature,
    s: f64,
    clock: f64,
    x: &[f64],
) -> Result<GeneratorValue> {
    ensure(g.dim == 1 && x.len() == 1, || "Itô-Lévy generator is one-dimensional".into())?;
    let xv = x[0];
    let dg = g.gradient(s, x)[0];
    let d2g = g.hessian(s, x)[0];
    let sigma = coeffs.sigma_at(clock, xv);
    let local = g.time_derivative(s, x) + coeffs.drift_at(clock, xv) * dg + 0.5 * sigma * sigma * d2g;
    let local = finite(local, s, x, "local generator terms")?;
    if quad.nu_nodes.is_empty() {
        return Ok(GeneratorValue { value: local, small_ball_bias_bound: 0.0, tail_bound: 0.0, quadrature_error: 0.0 });
    }
    let gx = g.value(s, x);
    let fine = ito_integral(g, coeffs, &quad.nu_nodes, clock, xv, gx, dg)?;
    let coarse = ito_integral(g, coeffs, &quad.nu_coarse, clock, xv, gx, dg)?;
    // amplitude size is not bounded by the mark size in general; the bound
    // below assumes |a(s, x, y)| ≤ |y| on the dropped region
    Ok(GeneratorValue {
        value: local + fine,
        small_ball_bias_bound: 0.5 * hessian_norm(g, &[d2g]) * quad.small_ball_second_moment,
        tail_bound: tail_bound(g, quad),
        quadrature_error: (fine - coarse).abs(),
    })
}

/// `Ã₀g(s, x) = A₀g(s, x) + λ(x) Σ w_k (g(s, z_k) − g(s, x))`, given the
/// intrinsic evaluation `a0`. The law is read at time `clock`.
pub fn eval_switching_generator(
    g: &TestFunction,
    a0: GeneratorValue,
    law: &SwitchingLaw,
    quad: &GeneratorQuadrature,
    s: f64,
    clock: f64,
    x: &[f64],
) -> Result<GeneratorValue> {
    if law.is_identically_zero() {
        return Ok(a0);
    }
    let rate = law.rate(clock, x)?;
    if rate == 0.0 {
        return Ok(a0);
    }
    let gx = g.value(s, x);
    let sum = |nodes: Vec<Node>| -> Result<f64> {
        let mut acc = 0.0;
        for n in nodes {
            acc += n.weight * finite(g.value(s, &n.point) - gx, s, x, "kernel integrand")?;
        }
        Ok(acc)
    };
    let fine = sum(quad.q_nodes(law, clock, x))?;
    let coarse = sum(quad.q_nodes_coarse(law, clock, x))?;
    Ok(GeneratorValue {
        value: a0.value + rate * fine,
        quadrature_error: a0.quadrature_error + rate * (fine - coarse).abs(),
        ..a0
    })
}

/// An intrinsic model whose generator can be evaluated numerically.
pub trait IntrinsicGenerator: IntrinsicModel {
    /// `A₀g(s, x)` with coefficients read at time `clock`.
    fn generator(&self, g: &TestFunction, quad: &GeneratorQuadrature, s: f64, clock: f64, x: &[f64]) -> Result<GeneratorValue>;

    fn generator_quadrature(&self) -> GeneratorQuadrature;

    /// Whether coefficients ignore `clock`.
    fn is_time_homogeneous(&self) -> bool;
}

impl IntrinsicGenerator for LevyTriplet {
    fn generator(&self, g: &TestFunction, quad: &GeneratorQuadrature, s: f64, _clock: f64, x: &[f64]) -> Result<GeneratorValue> {
        eval_levy_generator(g, self, quad, s, x)
    }

    fn generator_quadrature(&self) -> GeneratorQuadrature {
        GeneratorQuadrature::from_measure(self.jumps())
    }

    fn is_time_homogeneous(&self) -> bool {
        true
    }
}

impl IntrinsicGenerator for ItoLevyCoefficients {
    fn generator(&self, g: &TestFunction, quad: &GeneratorQuadrature, s: f64, clock: f64, x: &[f64]) -> Result<GeneratorValue> {
        eval_ito_at(g, self, quad, s, clock, x)
    }

    fn generator_quadrature(&self) -> GeneratorQuadrature {
        GeneratorQuadrature::from_measure(self.marks())
    }

    fn is_time_homogeneous(&self) -> bool {
        false
    }
}

/// Small-h check of `(E_x g(h, ζ(h)) − g(0, x)) / h → A₀g(0, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynkinReport {
    pub h: f64,
    pub ratio: MCEstimate,
    pub generator: GeneratorValue,
    /// Coefficient of the `O(h)` term, `|A₀(A₀g)(0, x)|`; twice the leading
    /// Taylor coefficient.
    pub c: f64,
    pub tolerance: f64,
    pub pass: bool,
}

const DYNKIN_OUTER_STEP: f64 = 0.05;

/// `A₀(A₀g)` by wrapping `A₀g` as a finite-difference test function.
fn second_generator<M: IntrinsicGenerator + ?Sized>(model: &M, g: &TestFunction, quad: &GeneratorQuadrature, x: &[f64]) -> Result<f64> {
    let first = |s: f64, y: &[f64]| model.generator(g, quad, s, s, y).map(|v| v.value);
    let a0 = first(0.0, x)?;
    // central differences with a fixed outer step, coarse but cheap
    let h = DYNKIN_OUTER_STEP;
    let mut y = x.to_vec();
    let d = x.len();
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    for i in 0..d {
        y[i] = x[i] + h;
        let up = first(0.0, &y)?;
        y[i] = x[i] - h;
        let down = first(0.0, &y)?;
        y[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
        hess[i * d + i] = (up - 2.0 * a0 + down) / (h * h);
    }
    let dt = (first(h, x)? - a0) / h;
    let (grad_c, hess_c) = (grad.clone(), hess.clone());
    // local part of A₀ applied to the quadratic Taylor model of A₀g at x
    let taylor = TestFunction::new(d, |_, _| 0.0, f64::INFINITY)
        .with_time_derivative(move |_, _| dt)
        .with_gradient(move |_, _| grad_c.clone())
        .with_hessian(move |_, _| hess_c.clone());
    let local = GeneratorQuadrature { nu_nodes: Vec::new(), nu_coarse: Vec::new(), small_ball_second_moment: 0.0, tail_mass: 0.0, kernel_order: None };
    let mut v = model.generator(&taylor, &local, 0.0, 0.0, x)?.value;
    if !quad.nu_nodes.is_empty() {
        // jump part applied to A₀g itself
        let mut acc = 0.0;
        for n in &quad.nu_nodes {
            let y: Vec<f64> = x.iter().zip(&n.point).map(|(a, b)| a + b).collect();
            let mut term = first(0.0, &y)? - a0;
            if norm(&n.point) < 1.0 {
                term -= grad.iter().zip(&n.point).map(|(a, b)| a * b).sum::<f64>();
            }
            acc += n.weight * term;
        }
        v += acc;
    }
    Ok(v)
}

/// Simulates `n_paths` intrinsic paths over `[0, h]` from `x` and compares
/// the Dynkin ratio with `A₀g(0, x)`. Passes when the difference is within
/// `3·SE + c·h + quadrature error` with `c = |A₀²g(0, x)|`, plus a
/// floating-point roundoff allowance.
pub fn dynkin_check<M: IntrinsicGenerator + ?Sized>(
    g: &TestFunction,
    model: &M,
    x: &[f64],
    h: f64,
    n_paths: usize,
    seed: u64,
    executor: &Executor,
) -> Result<DynkinReport> {
    ensure(h > 0.0 && h.is_finite(), || format!("h must be > 0, got {h}"))?;
    ensure(n_paths >= 2, || "need at least two paths".into())?;
    let quad = model.generator_quadrature();
    let gx = g.value(0.0, x);
    let samples = executor.map(n_paths, |i| {
        let mut rng = RngStream::new(seed, i as u64).intrinsic();
        let mut path = PathSkeleton::new(0.0, x);
        path.advance(model, h, h, &[], 0.0, None, &mut rng)?;
        Ok((g.value(h, path.last_value()) - gx) / h)
    })?;
    let ratio = MCEstimate::from_samples(&samples);
    let generator = model.generator(g, &quad, 0.0, 0.0, x)?;
    let c = second_generator(model, g, &quad, x)?.abs();
    // the ratio divides a difference of values of size |g| by h
    let roundoff = 8.0 * f64::EPSILON * (gx.abs() / h + generator.value.abs());
    let tolerance = 3.0 * ratio.std_error + c * h + generator.total_error() + roundoff;
    Ok(DynkinReport {
        h,
        pass: (ratio.mean - generator.value).abs() <= tolerance,
        ratio,
        generator,
        c,
        tolerance,
    })
}
