//! Switching-process trajectories.
//!
//! Starting from `Y_0 = x0` at `T_0 = 0`, each iteration simulates a fresh
//! intrinsic segment from `Y_n`, draws the holding time from the survival
//! function `exp(−∫_0^v λ(ζ(w)) dw)` (by hazard inversion or by thinning
//! against the bound `Λ`), relocates with `Q(ζ(v); ·)` and restarts.
//! At intrinsic jump instants the kernel is evaluated at the right limit.

use crate::error::{ensure, Result, SpError};
use crate::law::SwitchingLaw;
use crate::path::{IntrinsicModel, PathSkeleton};
use crate::rng::{RngStream, StreamRng};
use crate::stats::MCEstimate;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// Default guard on the number of renewals per path.
pub const DEFAULT_MAX_JUMPS: usize = 1_000_000;

/// How holding times are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpTimeMethod {
    /// Trapezoidal cumulative hazard on the segment grid, inverted against a
    /// unit exponential.
    #[default]
    Inversion,
    /// Candidates at rate `Λ`, accepted with probability `λ/Λ`; the segment
    /// is grown to each candidate so the state there is sampled exactly.
    Thinning,
}

/// Clock seen by coefficients and the switching law.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Clock {
    /// Each segment restarts its intrinsic clock at zero.
    #[default]
    Homogeneous,
    /// Absolute time `s0 + t`: segment `n + 1` is `ζ^{T_n, Y_n}` and the
    /// law is read at `(s0 + t, x)`.
    Inhomogeneous { s0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpConfig {
    pub horizon: f64,
    pub max_step: f64,
    pub method: JumpTimeMethod,
    pub max_jumps: usize,
    /// Grid steps simulated between hazard scans (inversion).
    pub chunk_steps: usize,
    /// Times forced onto the simulation grid, so `X_t` there is exact.
    pub observation_times: Vec<f64>,
    pub clock: Clock,
    /// Keep simulating the last segment past the horizon until its jump.
    pub complete_final_segment: bool,
    /// How far past the horizon a final segment may run.
    pub final_segment_cap: f64,
}

impl SpConfig {
    pub fn new(horizon: f64, max_step: f64) -> Self {
        Self {
            horizon,
            max_step,
            method: JumpTimeMethod::Inversion,
            max_jumps: DEFAULT_MAX_JUMPS,
            chunk_steps: 64,
            observation_times: Vec::new(),
            clock: Clock::Homogeneous,
            complete_final_segment: false,
            final_segment_cap: 1e4,
        }
    }

    pub fn with_method(mut self, method: JumpTimeMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_observations(mut self, mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        times.dedup();
        self.observation_times = times;
        self
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_max_jumps(mut self, max_jumps: usize) -> Self {
        self.max_jumps = max_jumps;
        self
    }

    pub fn completing_final_segment(mut self, cap: f64) -> Self {
        self.complete_final_segment = true;
        self.final_segment_cap = cap;
        self
    }

    fn validate(&self) -> Result<()> {
        ensure(self.horizon > 0.0 && self.horizon.is_finite(), || {
            format!("horizon must be > 0, got {}", self.horizon)
        })?;
        ensure(self.max_step > 0.0 && self.max_step.is_finite(), || {
            format!("max_step must be > 0, got {}", self.max_step)
        })?;
        ensure(self.chunk_steps > 0, || "chunk_steps must be > 0".into())?;
        ensure(self.observation_times.iter().all(|t| t.is_finite() && *t >= 0.0), || {
            "observation times must be finite and >= 0".into()
        })?;
        Ok(())
    }

    fn stops(&self) -> Vec<f64> {
        let mut s = self.observation_times.clone();
        if self.complete_final_segment {
            s.push(self.horizon);
            s.sort_by(f64::total_cmp);
            s.dedup();
        }
        s
    }

    fn shift(&self, segment_start: f64) -> f64 {
        match self.clock {
            Clock::Homogeneous => -segment_start,
            Clock::Inhomogeneous { s0 } => s0,
        }
    }
}

/// A renewal `(Y_n, T_n)` with the intrinsic state just before it.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalRecord {
    pub index: usize,
    pub time: f64,
    pub location: Vec<f64>,
    pub pre_jump_state: Vec<f64>,
}

/// A switching-process path on `[0, horizon]`.
///
/// Segment `n` starts at `(T_n, Y_n)` and ends at `T_{n+1}` with the
/// pre-jump intrinsic value; all times are on the trajectory's time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SPTrajectory {
    x0: Vec<f64>,
    horizon: f64,
    segments: Vec<PathSkeleton>,
    renewals: Vec<RenewalRecord>,
    overflow: Option<RenewalRecord>,
    clock: Clock,
}

/// Completed semi-Markov state `(Z_t, A_t)` with `T_{N_t}` and `N_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CSMPState {
    pub z: Vec<f64>,
    pub age: f64,
    pub last_jump_time: f64,
    pub count: usize,
}

impl SPTrajectory {
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segments(&self) -> &[PathSkeleton] {
        &self.segments
    }

    /// Renewals with `T_n ≤ horizon`.
    pub fn renewals(&self) -> &[RenewalRecord] {
        &self.renewals
    }

    /// The first renewal past the horizon, present when the final segment
    /// was completed.
    pub fn overflow(&self) -> Option<&RenewalRecord> {
        self.overflow.as_ref()
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    /// Time seen by coefficients and the law at SP time `t`: the age of the
    /// current segment (homogeneous) or `s0 + t`.
    pub fn clock_time(&self, t: f64) -> f64 {
        match self.clock {
            Clock::Homogeneous => {
                let n = self.jump_count(t);
                if n == 0 {
                    t
                } else {
                    t - self.renewals[n - 1].time
                }
            }
            Clock::Inhomogeneous { s0 } => s0 + t,
        }
    }

    /// `N_t = Σ 1{T_n ≤ t}`.
    pub fn jump_count(&self, t: f64) -> usize {
        self.renewals.partition_point(|r| r.time <= t)
    }

    fn check(&self, t: f64) -> Result<()> {
        ensure(t >= 0.0 && t <= self.horizon, || {
            format!("t={t} outside [0, {}]", self.horizon)
        })
    }

    /// `X_t`; equals `Y_n` at `t = T_n`.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        self.check(t)?;
        let mut out = vec![0.0; self.x0.len()];
        self.evaluate_into(t, &mut out);
        Ok(out)
    }

    pub(crate) fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        let n = self.jump_count(t);
        self.segments[n].evaluate_into(t, out);
    }

    /// `X_{t−}`.
    pub fn left_limit(&self, t: f64) -> Result<Vec<f64>> {
        self.check(t)?;
        let n = self.renewals.partition_point(|r| r.time < t);
        self.segments[n].left_limit(t)
    }

    pub fn csmp_state(&self, t: f64) -> Result<CSMPState> {
        self.check(t)?;
        let n = self.jump_count(t);
        let (z, last) = if n == 0 {
            (self.x0.clone(), 0.0)
        } else {
            let r = &self.renewals[n - 1];
            (r.location.clone(), r.time)
        };
        Ok(CSMPState {
            z,
            age: t - last,
            last_jump_time: last,
            count: n,
        })
    }
}

/// Free-function form of [`SPTrajectory::csmp_state`].
pub fn csmp_state(traj: &SPTrajectory, t: f64) -> Result<CSMPState> {
    traj.csmp_state(t)
}

/// Incremental trapezoidal cumulative hazard along a growing segment.
struct HazardScan {
    cumulative: f64,
    cell: usize,
    rate_right: f64,
}

impl HazardScan {
    fn new(seg: &PathSkeleton, law: &SwitchingLaw, shift: f64) -> Result<Self> {
        Ok(Self {
            cumulative: 0.0,
            cell: 0,
            rate_right: law.rate(seg.start_time() + shift, seg.value(0))?,
        })
    }

    /// Scans cells appended since the last call; returns the first time
    /// where the cumulative hazard reaches `target`.
    fn scan(&mut self, seg: &PathSkeleton, law: &SwitchingLaw, shift: f64, target: f64) -> Result<Option<f64>> {
        let times = seg.times();
        while self.cell + 1 < seg.len() {
            let i = self.cell;
            let (t0, t1) = (times[i], times[i + 1]);
            let left = law.rate(t1 + shift, seg.left_value_or_value(i + 1))?;
            let inc = 0.5 * (self.rate_right + left) * (t1 - t0);
            if self.cumulative + inc >= target && inc > 0.0 {
                let v = t0 + (target - self.cumulative) / inc * (t1 - t0);
                return Ok(Some(v.clamp(t0, t1)));
            }
            self.cumulative += inc;
            self.rate_right = if seg.left_value_at(i + 1).is_some() {
                law.rate(t1 + shift, seg.value(i + 1))?
            } else {
                left
            };
            self.cell += 1;
        }
        Ok(None)
    }
}

/// First `v` with `∫ λ(ζ(w)) dw ≥ exp_draw` along `segment` (trapezoid rule
/// on the grid, split at jump marks, linear inversion in the crossing cell),
/// or `None` when the segment ends first. The result is on the segment's
/// time axis; the law sees time `path time + clock_shift`.
pub fn sample_jump_time_inversion(
    segment: &PathSkeleton,
    law: &SwitchingLaw,
    exp_draw: f64,
    clock_shift: f64,
) -> Result<Option<f64>> {
    ensure(exp_draw > 0.0, || format!("exponential draw must be > 0, got {exp_draw}"))?;
    HazardScan::new(segment, law, clock_shift)?.scan(segment, law, clock_shift, exp_draw)
}

/// Thinning against `Λ`: grows `segment` to each candidate time and accepts
/// with probability `λ/Λ`. Returns the accepted time (or `None` if the
/// candidates pass `guard`) and the grown segment, which then ends at the
/// accepted time or at `guard`.
#[allow(clippy::too_many_arguments)]
pub fn sample_jump_time_thinning<M: IntrinsicModel + ?Sized>(
    model: &M,
    law: &SwitchingLaw,
    mut segment: PathSkeleton,
    guard: f64,
    max_step: f64,
    clock_shift: f64,
    intrinsic_rng: &mut StreamRng,
    switching_rng: &mut StreamRng,
) -> Result<(Option<f64>, PathSkeleton)> {
    ensure(guard >= segment.last_time(), || "guard before segment end".into())?;
    let tau = thinning(model, law, &mut segment, guard, max_step, &[], clock_shift, intrinsic_rng, switching_rng)?;
    Ok((tau, segment))
}

#[allow(clippy::too_many_arguments)]
fn thinning<M: IntrinsicModel + ?Sized>(
    model: &M,
    law: &SwitchingLaw,
    seg: &mut PathSkeleton,
    cap: f64,
    max_step: f64,
    stops: &[f64],
    shift: f64,
    rng_i: &mut StreamRng,
    rng_s: &mut StreamRng,
) -> Result<Option<f64>> {
    let bound = law.rate_bound();
    let mut tau = seg.last_time();
    if bound > 0.0 && !law.is_identically_zero() {
        loop {
            let e: f64 = Exp1.sample(rng_s);
            tau += e / bound;
            if tau > cap {
                break;
            }
            seg.advance(model, tau, max_step, stops, shift, None, rng_i)?;
            let r = law.rate(tau + shift, seg.last_value())?;
            if rng_s.random::<f64>() * bound < r {
                return Ok(Some(tau));
            }
        }
    }
    seg.advance(model, cap, max_step, stops, shift, None, rng_i)?;
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn inversion<M: IntrinsicModel + ?Sized>(
    model: &M,
    law: &SwitchingLaw,
    seg: &mut PathSkeleton,
    cap: f64,
    cfg: &SpConfig,
    stops: &[f64],
    shift: f64,
    rng_i: &mut StreamRng,
    rng_s: &mut StreamRng,
) -> Result<Option<f64>> {
    let target: f64 = Exp1.sample(rng_s);
    let zero = law.is_identically_zero();
    let mut scan = if zero { None } else { Some(HazardScan::new(seg, law, shift)?) };
    loop {
        let reached = seg.advance(model, cap, cfg.max_step, stops, shift, Some(cfg.chunk_steps), rng_i)?;
        if let Some(scan) = scan.as_mut() {
            if let Some(v) = scan.scan(seg, law, shift, target)? {
                return Ok(Some(v));
            }
        }
        if reached {
            return Ok(None);
        }
    }
}

fn effective_step<M: IntrinsicModel + ?Sized>(model: &M, max_step: f64) -> f64 {
    if model.is_degenerate() {
        f64::MAX / 4.0
    } else {
        max_step
    }
}

fn simulate<M: IntrinsicModel + ?Sized>(
    model: &M,
    law: &SwitchingLaw,
    x0: &[f64],
    cfg: &SpConfig,
    stream: RngStream,
) -> Result<SPTrajectory> {
    cfg.validate()?;
    ensure(x0.len() == model.dim(), || {
        format!("x0 has dimension {}, model has {}", x0.len(), model.dim())
    })?;
    let mut rng_i = stream.intrinsic();
    let mut rng_s = stream.switching();
    let stops = cfg.stops();
    let step = effective_step(model, cfg.max_step);
    let step_cfg = SpConfig {
        max_step: step,
        ..cfg.clone()
    };
    let cap = if cfg.complete_final_segment {
        cfg.horizon + cfg.final_segment_cap
    } else {
        cfg.horizon
    };
    let mut segments = Vec::new();
    let mut renewals: Vec<RenewalRecord> = Vec::new();
    let mut overflow = None;
    let mut start = 0.0;
    let mut y = x0.to_vec();
    loop {
        let shift = cfg.shift(start);
        let mut seg = PathSkeleton::new(start, &y);
        let jump = match cfg.method {
            JumpTimeMethod::Inversion => {
                inversion(model, law, &mut seg, cap, &step_cfg, &stops, shift, &mut rng_i, &mut rng_s)?
            }
            JumpTimeMethod::Thinning => {
                thinning(model, law, &mut seg, cap, step, &stops, shift, &mut rng_i, &mut rng_s)?
            }
        };
        let Some(tau) = jump else {
            segments.push(seg);
            break;
        };
        let pre = seg.evaluate(tau)?;
        seg.truncate_at(tau, &pre);
        let location = law.sample_location(tau + shift, &pre, &mut rng_s);
        if location.len() != x0.len() || location.iter().any(|v| !v.is_finite()) {
            return Err(SpError::NonFinite {
                t: tau,
                x: pre,
                what: format!("kernel draw {location:?}"),
            });
        }
        let record = RenewalRecord {
            index: renewals.len() + 1,
            time: tau,
            location: location.clone(),
            pre_jump_state: pre,
        };
        segments.push(seg);
        if tau > cfg.horizon {
            overflow = Some(record);
            break;
        }
        renewals.push(record);
        if renewals.len() > cfg.max_jumps {
            return Err(SpError::Runaway {
                max_jumps: cfg.max_jumps,
                time: tau,
            });
        }
        start = tau;
        y = location;
    }
    Ok(SPTrajectory {
        x0: x0.to_vec(),
        horizon: cfg.horizon,
        segments,
        renewals,
        overflow,
        clock: cfg.clock,
    })
}

/// Samples a homogeneous switching-process path. The law must not depend
/// on time and `cfg.clock` must be homogeneous.
pub fn sample_sp_trajectory<M: IntrinsicModel + ?Sized>(
    model: &M,
    law: &SwitchingLaw,
    x0: &[f64],
    cfg: &SpConfig,
    stream: RngStream,
) -> Result<SPTrajectory> {
    ensure(!law.is_time_dependent(), || {
        "time-dependent switching law needs the inhomogeneous sampler".into()
    })?;
    ensure(cfg.clock == Clock::Homogeneous, || "homogeneous sampler needs a homogeneous clock".into())?;
    simulate(model, law, x0, cfg, stream)
}

/// Samples the inhomogeneous switching process started at time `s0`:
/// segment `n + 1` is the intrinsic process started from `Y_n` at absolute
/// time `s0 + T_n`, and the law is read at absolute time. Equivalently the
/// lifted process `(s0 + t, X_t)` is a homogeneous switching process.
pub fn sample_inhomogeneous_sp<M: IntrinsicModel + ?Sized>(
    model: &M,
    law: &SwitchingLaw,
    s0: f64,
    x0: &[f64],
    cfg: &SpConfig,
    stream: RngStream,
) -> Result<SPTrajectory> {
    ensure(s0.is_finite(), || format!("s0 must be finite, got {s0}"))?;
    let cfg = cfg.clone().with_clock(Clock::Inhomogeneous { s0 });
    simulate(model, law, x0, &cfg, stream)
}

/// Dispatches on `cfg.clock`.
pub fn sample_with_clock<M: IntrinsicModel + ?Sized>(
    model: &M,
    law: &SwitchingLaw,
    x0: &[f64],
    cfg: &SpConfig,
    stream: RngStream,
) -> Result<SPTrajectory> {
    match cfg.clock {
        Clock::Homogeneous => sample_sp_trajectory(model, law, x0, cfg, stream),
        Clock::Inhomogeneous { s0 } => sample_inhomogeneous_sp(model, law, s0, x0, cfg, stream),
    }
}

/// Monte Carlo estimate of `∫ φ(y, v) N(x, dy, dv)` from the first renewal
/// of each trajectory. Trajectories without a renewal before their horizon
/// are right-censored: excluded, with their fraction reported.
pub fn empirical_renewal_kernel(
    trajectories: &[SPTrajectory],
    phi: impl Fn(&[f64], f64) -> f64,
) -> Result<MCEstimate> {
    let samples: Vec<f64> = trajectories
        .iter()
        .filter_map(|tr| tr.renewals().first().map(|r| phi(&r.location, r.time)))
        .collect();
    if samples.is_empty() {
        return Err(SpError::InsufficientSamples(
            "no trajectory renewed before its horizon".into(),
        ));
    }
    let censored = (trajectories.len() - samples.len()) as f64 / trajectories.len() as f64;
    Ok(MCEstimate::from_samples(&samples).with_censored_fraction(censored))
}

/// `∫_{start}^{t_end} f(t, ζ(t)) dt` by the trapezoid rule on the path
/// grid, split at jump marks; `t_end` may fall inside a cell.
pub fn integrate_along(
    path: &PathSkeleton,
    t_end: f64,
    mut f: impl FnMut(f64, &[f64]) -> Result<f64>,
) -> Result<f64> {
    ensure(t_end >= path.start_time() && t_end <= path.last_time(), || {
        format!("t_end={t_end} outside path range")
    })?;
    let times = path.times();
    let mut total = 0.0;
    let mut right = f(times[0], path.value(0))?;
    let mut buf = vec![0.0; path.dim()];
    for i in 0..path.len() - 1 {
        let (t0, t1) = (times[i], times[i + 1]);
        if t0 >= t_end {
            break;
        }
        if t1 > t_end {
            path.evaluate_into(t_end, &mut buf);
            let fe = f(t_end, &buf)?;
            total += 0.5 * (right + fe) * (t_end - t0);
            break;
        }
        let left = f(t1, path.left_value_or_value(i + 1))?;
        total += 0.5 * (right + left) * (t1 - t0);
        right = if path.left_value_at(i + 1).is_some() {
            f(t1, path.value(i + 1))?
        } else {
            left
        };
    }
    Ok(total)
}

/// `∫ λ(ζ(w)) dw` over `[start, t_end]` of `path` (law read at `t + clock_shift`).
pub fn integrated_hazard(path: &PathSkeleton, law: &SwitchingLaw, clock_shift: f64, t_end: f64) -> Result<f64> {
    if law.is_identically_zero() {
        return Ok(0.0);
    }
    integrate_along(path, t_end, |t, x| law.rate(t + clock_shift, x))
}
