//! Monte Carlo verification of the switching-process identities.
//!
//! Every report compares a left-hand side with a right-hand side and passes
//! when `|lhs − rhs| ≤ z · combined SE + Σ budget`; each budget item is
//! listed in the report.

use crate::error::{ensure, Result, SpError};
use crate::exec::Executor;
use crate::generator::{eval_switching_generator, IntrinsicGenerator, TestFunction};
use crate::law::SwitchingLaw;
use crate::levy::LevyTriplet;
use crate::path::PathSkeleton;
use crate::pide::{evaluate_solution, solve_pide, PideGrid, PideSolution};
use crate::rng::{family_seed, RngStream};
use crate::stats::{mean_var, MCEstimate};
use crate::switching::{integrate_along, sample_with_clock, Clock, SpConfig};

const OUTER_TAG: u64 = 0x4f55_5445;
const INNER_TAG: u64 = 0x494e_4e45;
const DIRECT_TAG: u64 = 0x4449_5245;
const RESTART_TAG: u64 = 0x5245_5354;
const FEYNMAN_TAG: u64 = 0x4645_594e;

/// Default number of points on the Kolmogorov time grid (odd, so the
/// half-resolution grid is a subgrid).
pub const DEFAULT_S_POINTS: usize = 65;
pub const DEFAULT_BURN_IN: usize = 20;
pub const MIN_STATIONARY_RENEWALS: usize = 100;

/// Shared settings of a verification run.
#[derive(Debug, Clone)]
pub struct Harness {
    pub executor: Executor,
    pub seed: u64,
    /// Multiplier of the standard error in every pass criterion.
    pub z: f64,
    /// Weak-error constant for inexact schemes; the budget item is this
    /// times the step size.
    pub scheme_constant: f64,
    /// Exchange the inner and outer stream families of the nested check.
    pub swap_streams: bool,
}

impl Harness {
    pub fn new(seed: u64, executor: Executor) -> Self {
        Self { executor, seed, z: 3.0, scheme_constant: 0.0, swap_streams: false }
    }

    pub fn with_z(mut self, z: f64) -> Self {
        self.z = z;
        self
    }

    fn family(&self, tag: u64) -> u64 {
        family_seed(self.seed, tag)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetItem {
    pub name: String,
    pub value: f64,
}

impl BudgetItem {
    fn new(name: &str, value: f64) -> Self {
        Self { name: name.into(), value }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub identity: String,
    /// Distinguishes several reports of one check (grid point, sub-check).
    pub label: String,
    pub lhs: MCEstimate,
    pub rhs: MCEstimate,
    /// Mean of `lhs − rhs` (paired where the design allows).
    pub difference: f64,
    pub combined_se: f64,
    pub z: f64,
    /// Items added to the tolerance.
    pub budget: Vec<BudgetItem>,
    /// Reported quantities that do not enter the tolerance.
    pub diagnostics: Vec<BudgetItem>,
    pub flags: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    /// Assembles a report and sets `pass` from the itemized tolerance.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        identity: &str,
        label: &str,
        lhs: MCEstimate,
        rhs: MCEstimate,
        difference: f64,
        combined_se: f64,
        z: f64,
        budget: Vec<BudgetItem>,
        diagnostics: Vec<BudgetItem>,
        flags: Vec<String>,
    ) -> Self {
        let mut r = Self {
            identity: identity.into(),
            label: label.into(),
            lhs,
            rhs,
            difference,
            combined_se,
            z,
            budget,
            diagnostics,
            flags,
            pass: false,
        };
        r.pass = difference.is_finite() && difference.abs() <= r.tolerance();
        r
    }

    pub fn budget_total(&self) -> f64 {
        self.budget.iter().map(|b| b.value).sum()
    }

    pub fn tolerance(&self) -> f64 {
        self.z * self.combined_se + self.budget_total()
    }

    pub fn summary(&self) -> String {
        let items: Vec<String> = self.budget.iter().map(|b| format!("{}={:.3e}", b.name, b.value)).collect();
        format!(
            "{} [{}] {}: lhs={:.6} (se {:.2e}) rhs={:.6} (se {:.2e}) |diff|={:.3e} <= {:.3e} ({}·{:.2e} + {})",
            self.identity,
            self.label,
            if self.pass { "PASS" } else { "FAIL" },
            self.lhs.mean,
            self.lhs.std_error,
            self.rhs.mean,
            self.rhs.std_error,
            self.difference.abs(),
            self.tolerance(),
            self.z,
            self.combined_se,
            if items.is_empty() { "no budget".to_string() } else { items.join(", ") }
        )
    }
}

fn se_of(xs: &[f64]) -> f64 {
    let (_, v) = mean_var(xs);
    (v / xs.len() as f64).sqrt()
}

fn scheme_budget<M: IntrinsicGenerator + ?Sized>(h: &Harness, model: &M, cfg: &SpConfig) -> BudgetItem {
    let v = if model.is_exact() { 0.0 } else { h.scheme_constant * cfg.max_step };
    BudgetItem::new("scheme", v)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
        .collect()
}

fn trapezoid_on(s: &[f64], f: &[f64], stride: usize) -> f64 {
    let mut total = 0.0;
    let mut k = 0;
    while k + stride < s.len() {
        total += 0.5 * (f[k] + f[k + stride]) * (s[k + stride] - s[k]);
        k += stride;
    }
    total
}

struct KolmogorovSample {
    lhs: f64,
    rhs: f64,
    rhs_coarse: f64,
    quadrature: f64,
    small_ball: f64,
    tail: f64,
}

/// `E g(t, X_t) = g(0, x0) + ∫_0^t E Ã₀g(s, X_s) ds`: both sides from the
/// same paths, the time integral by the trapezoid rule on `s_points` times.
#[allow(clippy::too_many_arguments)]
pub fn check_kolmogorov<M: IntrinsicGenerator + ?Sized>(
    harness: &Harness,
    model: &M,
    law: &SwitchingLaw,
    g: &TestFunction,
    x0: &[f64],
    t: f64,
    n_paths: usize,
    s_points: usize,
    cfg: &SpConfig,
) -> Result<VerificationReport> {
    ensure(n_paths >= 2, || "need at least two paths".into())?;
    ensure(s_points >= 3 && s_points % 2 == 1, || format!("s_points must be odd and >= 3, got {s_points}"))?;
    ensure(t > 0.0, || format!("t must be > 0, got {t}"))?;
    let s_grid = linspace(0.0, t, s_points);
    let mut cfg = cfg.clone().with_observations(s_grid.clone());
    cfg.horizon = t;
    let quad = model.generator_quadrature();
    let g0 = g.value(0.0, x0);
    let family = harness.family(OUTER_TAG);
    let samples = harness.executor.map(n_paths, |i| {
        let traj = sample_with_clock(model, law, x0, &cfg, RngStream::new(family, i as u64))?;
        let mut f = Vec::with_capacity(s_points);
        let (mut quadrature, mut small_ball, mut tail) = (0.0f64, 0.0f64, 0.0f64);
        for &s in &s_grid {
            let x = traj.evaluate(s)?;
            let clock = traj.clock_time(s);
            let a0 = model.generator(g, &quad, s, clock, &x)?;
            let v = eval_switching_generator(g, a0, law, &quad, s, clock, &x)?;
            quadrature = quadrature.max(v.quadrature_error);
            small_ball = small_ball.max(v.small_ball_bias_bound);
            tail = tail.max(v.tail_bound);
            f.push(v.value);
        }
        Ok(KolmogorovSample {
            lhs: g.value(t, &traj.evaluate(t)?),
            rhs: g0 + trapezoid_on(&s_grid, &f, 1),
            rhs_coarse: g0 + trapezoid_on(&s_grid, &f, 2),
            quadrature,
            small_ball,
            tail,
        })
    })?;
    let lhs: Vec<f64> = samples.iter().map(|s| s.lhs).collect();
    let rhs: Vec<f64> = samples.iter().map(|s| s.rhs).collect();
    let diff: Vec<f64> = samples.iter().map(|s| s.lhs - s.rhs).collect();
    let coarse_gap = samples.iter().map(|s| s.rhs - s.rhs_coarse).sum::<f64>() / n_paths as f64;
    let max_of = |f: fn(&KolmogorovSample) -> f64| samples.iter().map(f).fold(0.0f64, f64::max);
    let (l, r) = (MCEstimate::from_samples(&lhs), MCEstimate::from_samples(&rhs));
    let (dm, dv) = mean_var(&diff);
    let independent_var = l.std_error.powi(2) + r.std_error.powi(2);
    let budget = vec![
        BudgetItem::new("time_trapezoid", coarse_gap.abs() / 3.0),
        BudgetItem::new("quadrature", t * max_of(|s| s.quadrature)),
        scheme_budget(harness, model, &cfg),
    ];
    let diagnostics = vec![
        BudgetItem::new("small_ball_bias", t * max_of(|s| s.small_ball)),
        BudgetItem::new("tail_bias", t * max_of(|s| s.tail)),
        BudgetItem::new("crn_variance", dv / n_paths as f64),
        BudgetItem::new("independent_variance", independent_var),
    ];
    Ok(VerificationReport::build(
        "kolmogorov",
        "",
        l,
        r,
        dm,
        (dv / n_paths as f64).sqrt(),
        harness.z,
        budget,
        diagnostics,
        Vec::new(),
    ))
}

/// Every-other-point trapezoid of the hazard along `path`, for a refinement
/// estimate of the hazard quadrature.
fn coarse_hazard(path: &PathSkeleton, law: &SwitchingLaw, shift: f64) -> Result<f64> {
    let times = path.times();
    let n = times.len();
    if n < 3 {
        return crate::switching::integrated_hazard(path, law, shift, path.last_time());
    }
    let mut idx: Vec<usize> = (0..n).step_by(2).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let mut total = 0.0;
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ra = law.rate(times[a] + shift, path.value(a))?;
        let rb = law.rate(times[b] + shift, path.left_value_or_value(b))?;
        total += 0.5 * (ra + rb) * (times[b] - times[a]);
    }
    Ok(total)
}

struct NestedSample {
    lhs: f64,
    psi: f64,
    psi_coarse: f64,
    psi_var: f64,
    ratio_bias: f64,
    floor_violated: bool,
}

/// `E g(t, X_t) = E ψ(T_{N_t}, Z_t, A_t)` with `ψ(s, z, v)` the hazard-
/// weighted ratio `E_z[g(s + v, ζ(v)) e^{−∫λ}] / E_z[e^{−∫λ}]`, estimated
/// per outer path from `n_inner` fresh intrinsic paths.
#[allow(clippy::too_many_arguments)]
pub fn check_conditional_law<M: IntrinsicGenerator + ?Sized>(
    harness: &Harness,
    model: &M,
    law: &SwitchingLaw,
    g: &TestFunction,
    x0: &[f64],
    t: f64,
    n_outer: usize,
    n_inner: usize,
    cfg: &SpConfig,
    inner_max_step: f64,
) -> Result<VerificationReport> {
    ensure(n_outer >= 2 && n_inner >= 2, || "need at least two outer and two inner paths".into())?;
    ensure(inner_max_step > 0.0, || "inner_max_step must be > 0".into())?;
    let mut cfg = cfg.clone().with_observations(vec![t]);
    cfg.horizon = t;
    let (outer_tag, inner_tag) = if harness.swap_streams { (INNER_TAG, OUTER_TAG) } else { (OUTER_TAG, INNER_TAG) };
    let (outer, inner) = (harness.family(outer_tag), harness.family(inner_tag));
    let bound = law.rate_bound();
    let step = if model.is_degenerate() { f64::MAX / 4.0 } else { inner_max_step };
    let samples = harness.executor.map(n_outer, |i| {
        let traj = sample_with_clock(model, law, x0, &cfg, RngStream::new(outer, i as u64))?;
        let lhs = g.value(t, &traj.evaluate(t)?);
        let state = traj.csmp_state(t)?;
        let (s, z, v) = (state.last_jump_time, state.z, state.age);
        if v == 0.0 {
            let psi = g.value(s, &z);
            return Ok(NestedSample { lhs, psi, psi_coarse: psi, psi_var: 0.0, ratio_bias: 0.0, floor_violated: false });
        }
        let shift = match traj.clock() {
            Clock::Homogeneous => -s,
            Clock::Inhomogeneous { s0 } => s0,
        };
        let family = family_seed(inner, i as u64);
        let (mut num, mut den, mut den_coarse, mut num_coarse) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for j in 0..n_inner {
            let mut rng = RngStream::new(family, j as u64).intrinsic();
            let mut path = PathSkeleton::new(s, &z);
            path.advance(model, s + v, step, &[], shift, None, &mut rng)?;
            let gv = g.value(s + v, path.last_value());
            let w = (-crate::switching::integrated_hazard(&path, law, shift, s + v)?).exp();
            let wc = (-coarse_hazard(&path, law, shift)?).exp();
            num.push(gv * w);
            den.push(w);
            num_coarse.push(gv * wc);
            den_coarse.push(wc);
        }
        let (mn, vn) = mean_var(&num);
        let (md, vd) = mean_var(&den);
        let cov = crate::stats::covariance(&num, &den);
        let psi = mn / md;
        let ni = n_inner as f64;
        let psi_var = ((vn - 2.0 * psi * cov + psi * psi * vd) / (ni * md * md)).max(0.0);
        let ratio_bias = (psi * vd - cov) / (ni * md * md);
        let psi_coarse = crate::stats::mean(&num_coarse) / crate::stats::mean(&den_coarse);
        Ok(NestedSample {
            lhs,
            psi,
            psi_coarse,
            psi_var,
            ratio_bias,
            floor_violated: md < 0.5 * (-bound * v).exp(),
        })
    })?;
    let lhs: Vec<f64> = samples.iter().map(|s| s.lhs).collect();
    let rhs: Vec<f64> = samples.iter().map(|s| s.psi).collect();
    let diff: Vec<f64> = samples.iter().map(|s| s.lhs - s.psi).collect();
    let no = n_outer as f64;
    let ratio_bias = samples.iter().map(|s| s.ratio_bias).sum::<f64>() / no;
    let hazard_gap = samples.iter().map(|s| s.psi - s.psi_coarse).sum::<f64>() / no;
    let inner_var = samples.iter().map(|s| s.psi_var).sum::<f64>() / no;
    let floor = samples.iter().filter(|s| s.floor_violated).count();
    let mut flags = Vec::new();
    if floor > 0 {
        flags.push(format!("denominator_floor:{floor}"));
    }
    let (dm, dv) = mean_var(&diff);
    let budget = vec![
        BudgetItem::new("ratio_bias", ratio_bias.abs()),
        BudgetItem::new("hazard_quadrature", hazard_gap.abs()),
        scheme_budget(harness, model, &cfg),
    ];
    let diagnostics = vec![BudgetItem::new("mean_inner_delta_variance", inner_var)];
    let report = VerificationReport::build(
        "conditional-law",
        "",
        MCEstimate::from_samples(&lhs),
        MCEstimate::from_samples(&rhs),
        dm,
        (dv / no).sqrt(),
        harness.z,
        budget,
        diagnostics,
        flags,
    );
    Ok(report)
}

/// Ratio estimator of the long-run mean with per-path linearized errors.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryEstimate {
    pub ratio: MCEstimate,
    /// Segments used after burn-in, pooled over paths.
    pub segments: usize,
    pub censored_fraction: f64,
}

/// `lim E g(X_t) = ∫ E_z[∫_0^{T_1} g(ζ(v)) dv] m(dz) / ∫ E_z[T_1] m(dz)`
/// against `E g(X_{t_long})`, with `m` the pooled empirical law of the
/// renewal states after `burn_in` renewals. The last segment of each path
/// is run past `t_long` to its renewal so that segments are selected by
/// their start time only.
#[allow(clippy::too_many_arguments)]
pub fn estimate_stationary_limit<M: IntrinsicGenerator + ?Sized>(
    harness: &Harness,
    model: &M,
    law: &SwitchingLaw,
    g: &TestFunction,
    x0: &[f64],
    t_long: f64,
    burn_in: usize,
    n_paths: usize,
    cfg: &SpConfig,
) -> Result<(VerificationReport, StationaryEstimate)> {
    ensure(n_paths >= 2, || "need at least two paths".into())?;
    ensure(law.rate_bound() > 0.0 && !law.is_identically_zero(), || {
        "stationary limit needs a switching law with renewals".into()
    })?;
    let mut cfg = cfg.clone().with_observations(vec![t_long]).completing_final_segment(cfg.final_segment_cap);
    cfg.horizon = t_long;
    let family = harness.family(OUTER_TAG);
    let per_path = harness.executor.map(n_paths, |i| {
        let traj = sample_with_clock(model, law, x0, &cfg, RngStream::new(family, i as u64))?;
        let lhs = g.value(t_long, &traj.evaluate(t_long)?);
        let (mut a, mut b, mut count) = (0.0, 0.0, 0usize);
        let segs = traj.segments();
        let mut censored = false;
        for (n, seg) in segs.iter().enumerate().skip(burn_in + 1) {
            let end = seg.last_time();
            if n + 1 == segs.len() && traj.overflow().is_none() {
                censored = true;
            }
            a += integrate_along(seg, end, |_, x| Ok(g.value(t_long, x)))?;
            b += end - seg.start_time();
            count += 1;
        }
        Ok((lhs, a, b, count, censored))
    })?;
    let segments: usize = per_path.iter().map(|p| p.3).sum();
    if segments < MIN_STATIONARY_RENEWALS {
        return Err(SpError::InsufficientSamples(format!(
            "{segments} post-burn-in renewals (< {MIN_STATIONARY_RENEWALS}); lengthen t_long or reduce burn_in"
        )));
    }
    let total_a: f64 = per_path.iter().map(|p| p.1).sum();
    let total_b: f64 = per_path.iter().map(|p| p.2).sum();
    let ratio = total_a / total_b;
    let n = n_paths as f64;
    let mean_b = total_b / n;
    let lin: Vec<f64> = per_path.iter().map(|p| ratio + (p.1 - ratio * p.2) / mean_b).collect();
    let lhs: Vec<f64> = per_path.iter().map(|p| p.0).collect();
    let diff: Vec<f64> = lhs.iter().zip(&lin).map(|(l, r)| l - r).collect();
    let censored = per_path.iter().filter(|p| p.4).count() as f64 / n;
    let rhs = MCEstimate { mean: ratio, std_error: se_of(&lin), n: segments, censored_fraction: censored };
    let estimate = StationaryEstimate { ratio: rhs, segments, censored_fraction: censored };
    let mut flags = Vec::new();
    if censored > 0.0 {
        flags.push(format!("censored_final_segments:{censored}"));
    }
    let report = VerificationReport::build(
        "stationary",
        "ratio",
        MCEstimate::from_samples(&lhs),
        rhs,
        crate::stats::mean(&lhs) - ratio,
        se_of(&diff),
        harness.z,
        vec![scheme_budget(harness, model, &cfg)],
        vec![BudgetItem::new("effective_segments", segments as f64)],
        flags,
    );
    Ok((report, estimate))
}

/// Paired comparison of `E g(X_{t1})` and `E g(X_{t2})` on the same paths.
#[allow(clippy::too_many_arguments)]
pub fn check_stationarity<M: IntrinsicGenerator + ?Sized>(
    harness: &Harness,
    model: &M,
    law: &SwitchingLaw,
    g: &TestFunction,
    x0: &[f64],
    t1: f64,
    t2: f64,
    n_paths: usize,
    cfg: &SpConfig,
) -> Result<VerificationReport> {
    ensure(t2 > t1 && t1 > 0.0, || format!("need 0 < t1 < t2, got {t1}, {t2}"))?;
    let mut cfg = cfg.clone().with_observations(vec![t1, t2]);
    cfg.horizon = t2;
    let family = harness.family(OUTER_TAG);
    let pairs = harness.executor.map(n_paths, |i| {
        let traj = sample_with_clock(model, law, x0, &cfg, RngStream::new(family, i as u64))?;
        Ok((g.value(t1, &traj.evaluate(t1)?), g.value(t2, &traj.evaluate(t2)?)))
    })?;
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diff: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    Ok(VerificationReport::build(
        "stationary",
        &format!("t={t1} vs t={t2}"),
        MCEstimate::from_samples(&a),
        MCEstimate::from_samples(&b),
        crate::stats::mean(&diff),
        se_of(&diff),
        harness.z,
        Vec::new(),
        Vec::new(),
        Vec::new(),
    ))
}

/// Direct simulation to `t1 + t2` against simulation to `t1` followed by a
/// fresh switching process from `X_{t1}` for `t2`. The first leg of the
/// restart estimator reuses the direct streams, so the pair is correlated
/// and the comparison is paired.
#[allow(clippy::too_many_arguments)]
pub fn check_chapman_kolmogorov<M: IntrinsicGenerator + ?Sized>(
    harness: &Harness,
    model: &M,
    law: &SwitchingLaw,
    g: &TestFunction,
    x0: &[f64],
    t1: f64,
    t2: f64,
    n_paths: usize,
    cfg: &SpConfig,
) -> Result<VerificationReport> {
    ensure(cfg.clock == Clock::Homogeneous, || "Chapman-Kolmogorov check is for homogeneous processes".into())?;
    ensure(!law.is_time_dependent(), || "Chapman-Kolmogorov check needs a time-homogeneous law".into())?;
    ensure(t1 > 0.0 && t2 >= 0.0, || format!("need t1 > 0 and t2 >= 0, got {t1}, {t2}"))?;
    let total = t1 + t2;
    let mut direct_cfg = cfg.clone().with_observations(vec![total]);
    direct_cfg.horizon = total;
    let mut first_cfg = cfg.clone().with_observations(vec![t1]);
    first_cfg.horizon = t1;
    let mut second_cfg = cfg.clone().with_observations(vec![t2]);
    second_cfg.horizon = t2;
    let (direct, restart) = (harness.family(DIRECT_TAG), harness.family(RESTART_TAG));
    let pairs = harness.executor.map(n_paths, |i| {
        let stream = RngStream::new(direct, i as u64);
        let a = g.value(total, &sample_with_clock(model, law, x0, &direct_cfg, stream)?.evaluate(total)?);
        let mid = sample_with_clock(model, law, x0, &first_cfg, stream)?.evaluate(t1)?;
        let b = if t2 == 0.0 {
            g.value(total, &mid)
        } else {
            let tr = sample_with_clock(model, law, &mid, &second_cfg, RngStream::new(restart, i as u64))?;
            g.value(total, &tr.evaluate(t2)?)
        };
        Ok((a, b))
    })?;
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diff: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    Ok(VerificationReport::build(
        "chapman-kolmogorov",
        &format!("t1={t1} t2={t2}"),
        MCEstimate::from_samples(&a),
        MCEstimate::from_samples(&b),
        crate::stats::mean(&diff),
        se_of(&diff),
        harness.z,
        vec![scheme_budget(harness, model, cfg)],
        Vec::new(),
        Vec::new(),
    ))
}

/// `u(t, x) = E_x h(X_t)` at every point of `x_grid`, Monte Carlo against
/// the PIDE solution. One report per grid point; the check passes when all
/// of them do. The solution is returned for export.
#[allow(clippy::too_many_arguments)]
pub fn check_feynman_kac(
    harness: &Harness,
    triplet: &LevyTriplet,
    law: &SwitchingLaw,
    h: &TestFunction,
    t: f64,
    x_grid: &[f64],
    n_paths: usize,
    grid: &PideGrid,
    cfg: &SpConfig,
) -> Result<(Vec<VerificationReport>, PideSolution)> {
    ensure(triplet.dim() == 1 && h.dim() == 1, || "Feynman-Kac check is one-dimensional".into())?;
    ensure(!x_grid.is_empty(), || "empty x_grid".into())?;
    let (a, b) = grid.interior();
    if let Some(x) = x_grid.iter().find(|x| **x < a || **x > b) {
        return Err(SpError::OutOfDomain(format!("x={x} outside the PIDE interior [{a}, {b}]")));
    }
    let terminal = |x: f64| h.value(0.0, &[x]);
    let solution = solve_pide(triplet, law, &terminal, t, grid)?;
    let mut cfg = cfg.clone().with_observations(vec![t]);
    cfg.horizon = t;
    let family = harness.family(FEYNMAN_TAG);
    let mut reports = Vec::with_capacity(x_grid.len());
    for (k, &x) in x_grid.iter().enumerate() {
        let point_family = family_seed(family, k as u64);
        let samples = harness.executor.map(n_paths, |i| {
            let tr = sample_with_clock(triplet, law, &[x], &cfg, RngStream::new(point_family, i as u64))?;
            Ok(terminal(tr.evaluate(t)?[0]))
        })?;
        let mc = MCEstimate::from_samples(&samples);
        let u = evaluate_solution(&solution, t, x)?;
        let mut budget = vec![
            BudgetItem::new("pide_scheme", solution.error_budget.scheme),
            BudgetItem::new("pide_boundary", solution.error_budget.boundary),
            BudgetItem::new("pide_interpolation", u.interpolation_bound),
        ];
        budget.push(scheme_budget(harness, triplet, &cfg));
        let mut flags = Vec::new();
        if !solution.max_principle_held {
            flags.push("max_principle_violated".to_string());
        }
        reports.push(VerificationReport::build(
            "feynman-kac",
            &format!("x={x}"),
            mc,
            MCEstimate::exact(u.value),
            mc.mean - u.value,
            mc.std_error,
            harness.z,
            budget,
            vec![BudgetItem::new("jump_small_ball_second_moment", triplet.jumps().small_ball_second_moment())],
            flags,
        ));
    }
    Ok((reports, solution))
}
