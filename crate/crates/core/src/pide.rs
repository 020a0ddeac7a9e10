//! Finite-difference solver for the one-dimensional Feynman-Kac equation
//!
//! `∂u/∂t = A₀u + λ(x) ∫ (u(t, y) − u(t, x)) Q(x; dy)`, `u(0, ·) = h`,
//!
//! with `A₀` the Lévy generator of a triplet. The local part (upwinded
//! drift, central diffusion) is treated by a θ-scheme; ν and `λ·Q` terms
//! are explicit at the previous level(s) with linear interpolation off the
//! grid. Values outside the domain are clamped to the boundary node.

use crate::error::{ensure, Result, SpError};
use crate::law::SwitchingLaw;
use crate::levy::LevyTriplet;
use crate::stats::erfc;
use std::io::Write;

/// Largest fraction of a stencil's mass allowed to leave the domain from
/// the comparison interior.
pub const MAX_ESCAPE_FRACTION: f64 = 1e-3;

/// Padding in standard deviations of the process at the final time.
pub const PADDING_SDS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PideGrid {
    pub x_min: f64,
    pub x_max: f64,
    /// Number of nodes, boundaries included.
    pub n_x: usize,
    pub dt: f64,
    pub theta: f64,
    pub padding_margin: f64,
}

impl PideGrid {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, dt: f64, theta: f64, padding_margin: f64) -> Result<Self> {
        ensure(x_max > x_min && x_min.is_finite() && x_max.is_finite(), || {
            format!("domain [{x_min}, {x_max}] is empty")
        })?;
        ensure(n_x >= 3, || "need at least three nodes".into())?;
        ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be > 0, got {dt}"))?;
        ensure((0.0..=1.0).contains(&theta), || format!("theta must be in [0, 1], got {theta}"))?;
        ensure(padding_margin >= 0.0 && 2.0 * padding_margin < x_max - x_min, || {
            format!("padding {padding_margin} leaves no interior")
        })?;
        Ok(Self { x_min, x_max, n_x, dt, theta, padding_margin })
    }

    /// Domain `[lo − pad, hi + pad]` with the default padding for `triplet`
    /// over `[0, t_final]`.
    pub fn around(triplet: &LevyTriplet, t_final: f64, lo: f64, hi: f64, n_x: usize, dt: f64, theta: f64) -> Result<Self> {
        let pad = default_padding(triplet, t_final);
        Self::new(lo - pad, hi + pad, n_x, dt, theta, pad)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_x - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_x {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.x(i)).collect()
    }

    pub fn interior(&self) -> (f64, f64) {
        (self.x_min + self.padding_margin, self.x_max - self.padding_margin)
    }

    fn in_interior(&self, x: f64) -> bool {
        let (a, b) = self.interior();
        x >= a - 1e-12 && x <= b + 1e-12
    }

    /// Linear-interpolation weights of `z`; points outside the domain are
    /// clamped to the nearest boundary node.
    fn stencil(&self, z: f64) -> ([(usize, f64); 2], bool) {
        if z <= self.x_min {
            return ([(0, 1.0), (0, 0.0)], z < self.x_min);
        }
        if z >= self.x_max {
            let last = self.n_x - 1;
            return ([(last, 1.0), (last, 0.0)], z > self.x_max);
        }
        let s = (z - self.x_min) / self.dx();
        let j = (s.floor() as usize).min(self.n_x - 2);
        let f = s - j as f64;
        ([(j, 1.0 - f), (j + 1, f)], false)
    }
}

fn process_spread(triplet: &LevyTriplet, t: f64) -> (f64, f64) {
    let jumps = triplet.jumps();
    let (mut m1, mut m2) = (0.0, 0.0);
    for n in jumps.nodes() {
        m1 += n.weight * n.point[0];
        m2 += n.weight * n.point[0] * n.point[0];
    }
    let var = t * (triplet.covariance_entry(0, 0) + m2 + jumps.small_ball_second_moment());
    let drift = (triplet.effective_drift()[0] + m1).abs() * t;
    (var.sqrt(), drift)
}

/// `6·sd + |mean drift|·t` of the intrinsic process at time `t`.
pub fn default_padding(triplet: &LevyTriplet, t: f64) -> f64 {
    let (sd, drift) = process_spread(triplet, t);
    PADDING_SDS * sd + drift
}

/// Itemized error estimate of a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PideErrorBudget {
    /// Richardson estimate: interior max of `|u_h − u_{2h}|` at the final time.
    pub scheme: f64,
    /// `2‖h‖ (Gaussian tail beyond the padding + t (Λ + ν) · escape fraction)`.
    pub boundary: f64,
}

impl PideErrorBudget {
    pub fn total(&self) -> f64 {
        self.scheme + self.boundary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PideSolution {
    pub grid: PideGrid,
    pub times: Vec<f64>,
    /// `values[k * n_x + i] ≈ u(t_k, x_i)`.
    pub values: Vec<f64>,
    pub error_budget: PideErrorBudget,
    pub h_norm: f64,
    /// `max |u| ≤ ‖h‖` held at every level (up to rounding).
    pub max_principle_held: bool,
}

impl PideSolution {
    pub fn level(&self, k: usize) -> &[f64] {
        let n = self.grid.n_x;
        &self.values[k * n..(k + 1) * n]
    }

    pub fn final_level(&self) -> &[f64] {
        self.level(self.times.len() - 1)
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Writes `(t, x, u)` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,u")?;
        for (k, t) in self.times.iter().enumerate() {
            for (i, u) in self.level(k).iter().enumerate() {
                writeln!(w, "{t:.16e},{:.16e},{u:.16e}", self.grid.x(i))?;
            }
        }
        Ok(())
    }
}

/// Sparse explicit operator `J u_i = Σ c u_j − m_i u_i`.
struct Nonlocal {
    rows: Vec<Vec<(usize, f64)>>,
    mass: Vec<f64>,
    escape_fraction: f64,
    max_rate: f64,
}

impl Nonlocal {
    fn build(triplet: &LevyTriplet, law: &SwitchingLaw, grid: &PideGrid) -> Result<Self> {
        let nu = triplet.jumps().nodes();
        let nu_total: f64 = nu.iter().map(|n| n.weight).sum();
        let mut rows = Vec::with_capacity(grid.n_x);
        let mut mass = Vec::with_capacity(grid.n_x);
        let (mut escape_fraction, mut max_rate) = (0.0f64, 0.0f64);
        for i in 0..grid.n_x {
            let x = grid.x(i);
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut escaped_nu = 0.0;
            for n in nu {
                let (st, out) = grid.stencil(x + n.point[0]);
                if out {
                    escaped_nu += n.weight;
                }
                row.extend(st.iter().map(|&(j, w)| (j, w * n.weight)));
            }
            let mut escaped_q = 0.0;
            let mut rate = 0.0;
            if !law.is_identically_zero() {
                rate = law.rate(0.0, &[x])?;
                if rate > 0.0 {
                    for n in law.kernel_nodes(0.0, &[x]) {
                        let (st, out) = grid.stencil(n.point[0]);
                        if out {
                            escaped_q += n.weight;
                        }
                        row.extend(st.iter().map(|&(j, w)| (j, w * n.weight * rate)));
                    }
                }
            }
            row.retain(|e| e.1 != 0.0);
            row.sort_by_key(|e| e.0);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            max_rate = max_rate.max(rate + nu_total);
            if grid.in_interior(x) {
                let nu_frac = if nu_total > 0.0 { escaped_nu / nu_total } else { 0.0 };
                let q_frac = if rate > 0.0 { escaped_q } else { 0.0 };
                let frac = nu_frac.max(q_frac);
                if frac > MAX_ESCAPE_FRACTION {
                    return Err(SpError::DomainTooSmall(format!(
                        "{frac:.3e} of the jump mass from x={x} leaves [{}, {}]",
                        grid.x_min, grid.x_max
                    )));
                }
                escape_fraction = escape_fraction.max(frac);
            }
            mass.push(row.iter().map(|e| e.1).sum());
            rows.push(row);
        }
        Ok(Self { rows, mass, escape_fraction, max_rate })
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            out[i] = row.iter().map(|&(j, c)| c * u[j]).sum::<f64>() - self.mass[i] * u[i];
        }
    }
}

/// Tridiagonal local operator with clamped ghost nodes.
struct Local {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Local {
    fn build(triplet: &LevyTriplet, grid: &PideGrid) -> Self {
        let n = grid.n_x;
        let dx = grid.dx();
        let mu = triplet.effective_drift()[0];
        let diff = 0.5 * triplet.covariance_entry(0, 0) / (dx * dx);
        let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let (mut a, mut c) = (diff, diff);
            if mu > 0.0 {
                c += mu / dx;
            } else {
                a += -mu / dx;
            }
            // ghost values equal the boundary value, so the outward link vanishes
            if i == 0 {
                a = 0.0;
            }
            if i + 1 == n {
                c = 0.0;
            }
            lower[i] = a;
            upper[i] = c;
            diag[i] = -(a + c);
        }
        Self { lower, diag, upper }
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        for i in 0..n {
            let mut v = self.diag[i] * u[i];
            if i > 0 {
                v += self.lower[i] * u[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * u[i + 1];
            }
            out[i] = v;
        }
    }

    /// Solves `(I − k L) x = rhs` in place (Thomas algorithm).
    fn solve_implicit(&self, k: f64, rhs: &mut [f64], scratch: &mut [f64]) {
        let n = rhs.len();
        let b0 = 1.0 - k * self.diag[0];
        scratch[0] = -k * self.upper[0] / b0;
        rhs[0] /= b0;
        for i in 1..n {
            let a = -k * self.lower[i];
            let b = 1.0 - k * self.diag[i] - a * scratch[i - 1];
            scratch[i] = -k * self.upper[i] / b;
            rhs[i] = (rhs[i] - a * rhs[i - 1]) / b;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= scratch[i] * rhs[i + 1];
        }
    }
}

fn check_stability(triplet: &LevyTriplet, grid: &PideGrid, max_rate: f64, dt: f64) -> Result<()> {
    let dx = grid.dx();
    if grid.theta < 0.5 {
        let c = triplet.covariance_entry(0, 0);
        let mu = triplet.effective_drift()[0].abs();
        let bound = dx * dx / ((1.0 - grid.theta) * c + dx * mu + dx * dx * max_rate);
        ensure(dt <= bound, || format!("dt={dt} exceeds the explicit stability bound {bound}"))
            .map_err(|e| SpError::Unstable(e.to_string()))?;
    }
    if dt * max_rate > 1.0 {
        return Err(SpError::Unstable(format!(
            "dt·(Λ + ν total) = {} > 1 for the explicit nonlocal part",
            dt * max_rate
        )));
    }
    Ok(())
}

struct RawSolve {
    times: Vec<f64>,
    values: Vec<f64>,
    escape_fraction: f64,
    max_rate: f64,
    max_abs: f64,
}

fn solve_raw(triplet: &LevyTriplet, law: &SwitchingLaw, h: &dyn Fn(f64) -> f64, t_final: f64, grid: &PideGrid) -> Result<RawSolve> {
    let n = grid.n_x;
    let steps = (t_final / grid.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let local = Local::build(triplet, grid);
    let nonlocal = Nonlocal::build(triplet, law, grid)?;
    check_stability(triplet, grid, nonlocal.max_rate, dt)?;
    let theta = grid.theta;
    // Adams-Bashforth extrapolation keeps Crank-Nicolson second order
    let ab2 = theta == 0.5;
    let mut u: Vec<f64> = grid.nodes().into_iter().map(h).collect();
    if let Some((i, v)) = u.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(SpError::NonFinite { t: 0.0, x: vec![grid.x(i)], what: format!("terminal value {v}") });
    }
    let mut values = Vec::with_capacity((steps + 1) * n);
    values.extend_from_slice(&u);
    let mut times = vec![0.0];
    let (mut lu, mut ju, mut ju_prev) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut max_abs = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..steps {
        local.apply(&u, &mut lu);
        nonlocal.apply(&u, &mut ju);
        for i in 0..n {
            let j = if ab2 && k > 0 { 1.5 * ju[i] - 0.5 * ju_prev[i] } else { ju[i] };
            rhs[i] = u[i] + dt * ((1.0 - theta) * lu[i] + j);
        }
        if theta > 0.0 {
            local.solve_implicit(theta * dt, &mut rhs, &mut scratch);
        }
        std::mem::swap(&mut u, &mut rhs);
        std::mem::swap(&mut ju, &mut ju_prev);
        let t = if k + 1 == steps { t_final } else { (k + 1) as f64 * dt };
        if let Some((i, _)) = u.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SpError::NonFinite { t, x: vec![grid.x(i)], what: "PIDE solution".into() });
        }
        max_abs = u.iter().fold(max_abs, |m, v| m.max(v.abs()));
        values.extend_from_slice(&u);
        times.push(t);
    }
    Ok(RawSolve { times, values, escape_fraction: nonlocal.escape_fraction, max_rate: nonlocal.max_rate, max_abs })
}

/// Solves up to `t_final` and estimates the error by a second solve on the
/// grid with doubled `Δx` and `Δt` (`n_x` must be odd).
pub fn solve_pide(
    triplet: &LevyTriplet,
    law: &SwitchingLaw,
    h: &dyn Fn(f64) -> f64,
    t_final: f64,
    grid: &PideGrid,
) -> Result<PideSolution> {
    ensure(triplet.dim() == 1, || "PIDE solver is one-dimensional".into())?;
    ensure(!law.is_time_dependent(), || "PIDE solver needs a time-homogeneous law".into())?;
    ensure(t_final > 0.0 && t_final.is_finite(), || format!("t_final must be > 0, got {t_final}"))?;
    ensure(grid.n_x % 2 == 1, || format!("n_x must be odd for the refinement estimate, got {}", grid.n_x))?;
    let fine = solve_raw(triplet, law, h, t_final, grid)?;
    let coarse_grid = PideGrid { n_x: (grid.n_x - 1) / 2 + 1, dt: 2.0 * grid.dt, ..grid.clone() };
    let coarse = solve_raw(triplet, law, h, t_final, &coarse_grid)?;
    let n = grid.n_x;
    let last_f = &fine.values[fine.values.len() - n..];
    let nc = coarse_grid.n_x;
    let last_c = &coarse.values[coarse.values.len() - nc..];
    let mut scheme = 0.0f64;
    for j in 0..nc {
        if grid.in_interior(coarse_grid.x(j)) {
            scheme = scheme.max((last_f[2 * j] - last_c[j]).abs());
        }
    }
    let h_norm = fine.values[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (sd, drift) = process_spread(triplet, t_final);
    let margin = (grid.padding_margin - drift).max(0.0);
    let gaussian_tail = if sd > 0.0 {
        erfc(margin / (sd * std::f64::consts::SQRT_2))
    } else if margin > 0.0 {
        0.0
    } else {
        1.0
    };
    let boundary = 2.0 * h_norm * (gaussian_tail + t_final * fine.max_rate * fine.escape_fraction);
    Ok(PideSolution {
        grid: grid.clone(),
        times: fine.times,
        values: fine.values,
        error_budget: PideErrorBudget { scheme, boundary },
        h_norm,
        max_principle_held: fine.max_abs <= h_norm * (1.0 + 1e-9) + 1e-12,
    })
}

/// A point evaluation with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub value: f64,
    pub interpolation_bound: f64,
    pub bound: f64,
}

/// Bilinear interpolation in `(t, x)`; the bound adds the interpolation
/// error (from local second differences) to the solution budget.
pub fn evaluate_solution(sol: &PideSolution, t: f64, x: f64) -> Result<PointValue> {
    let g = &sol.grid;
    ensure(g.in_interior(x), || {
        let (a, b) = g.interior();
        format!("x={x} outside the unpadded interior [{a}, {b}]")
    })
    .map_err(|e| SpError::OutOfDomain(e.to_string()))?;
    let tf = sol.t_final();
    if !(0.0..=tf).contains(&t) {
        return Err(SpError::OutOfDomain(format!("t={t} outside [0, {tf}]")));
    }
    let n = g.n_x;
    let dx = g.dx();
    let s = ((x - g.x_min) / dx).clamp(0.0, (n - 1) as f64);
    let i = (s.floor() as usize).min(n - 2);
    let fx = s - i as f64;
    let nt = sol.times.len();
    let k = sol.times.partition_point(|&v| v <= t).saturating_sub(1).min(nt - 2);
    let dt = sol.times[k + 1] - sol.times[k];
    let ft = ((t - sol.times[k]) / dt).clamp(0.0, 1.0);
    let u = |k: usize, i: usize| sol.values[k * n + i];
    let at = |k: usize| u(k, i) * (1.0 - fx) + u(k, i + 1) * fx;
    let value = at(k) * (1.0 - ft) + at(k + 1) * ft;
    let mut uxx = 0.0f64;
    for kk in [k, k + 1] {
        for c in [i.max(1), (i + 1).min(n - 2)] {
            uxx = uxx.max((u(kk, c - 1) - 2.0 * u(kk, c) + u(kk, c + 1)).abs() / (dx * dx));
        }
    }
    let mut utt = 0.0f64;
    if nt >= 3 {
        for kk in [k.max(1), (k + 1).min(nt - 2)] {
            let (a, b) = (sol.times[kk] - sol.times[kk - 1], sol.times[kk + 1] - sol.times[kk]);
            for c in [i, i + 1] {
                let d2 = 2.0 * (b * u(kk - 1, c) - (a + b) * u(kk, c) + a * u(kk + 1, c)) / (a * b * (a + b));
                utt = utt.max(d2.abs());
            }
        }
    }
    let interpolation_bound = 0.5 * fx * (1.0 - fx) * dx * dx * uxx + 0.5 * ft * (1.0 - ft) * dt * dt * utt;
    Ok(PointValue {
        value,
        interpolation_bound,
        bound: interpolation_bound + sol.error_budget.total(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::DiracKernel;
    use std::sync::Arc;

    fn heat() -> LevyTriplet {
        LevyTriplet::brownian(0.0, 1.0).unwrap()
    }

    #[test]
    fn identity_evolution() {
        let grid = PideGrid::new(-3.0, 3.0, 61, 0.05, 0.5, 1.0).unwrap();
        let h = |x: f64| (x * 0.7).sin();
        let sol = solve_pide(&LevyTriplet::degenerate(1), &SwitchingLaw::none(), &h, 1.0, &grid).unwrap();
        for (i, v) in sol.final_level().iter().enumerate() {
            assert_eq!(*v, h(grid.x(i)));
        }
    }

    #[test]
    fn heat_square_is_exact_inside() {
        let tr = heat();
        let grid = PideGrid::around(&tr, 1.0, -2.0, 2.0, 321, 0.01, 0.5).unwrap();
        let sol = solve_pide(&tr, &SwitchingLaw::none(), &|x| x * x, 1.0, &grid).unwrap();
        for x in [-2.0, -0.5, 0.0, 1.3, 2.0] {
            let p = evaluate_solution(&sol, 1.0, x).unwrap();
            assert!((p.value - (x * x + 1.0)).abs() <= p.bound, "{x}: {p:?}");
        }
    }

    #[test]
    fn constants_are_conserved() {
        let law = SwitchingLaw::homogeneous(|x| 2.0 / (1.0 + x[0] * x[0]), 2.0, Arc::new(crate::law::NormalKernel { mean: vec![0.0], sd: 1.0 })).unwrap();
        let grid = PideGrid::around(&heat(), 1.0, -1.0, 1.0, 201, 0.02, 0.5).unwrap();
        let sol = solve_pide(&heat(), &law, &|_| 1.0, 1.0, &grid).unwrap();
        assert!(sol.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn reset_ode() {
        // du/dt = c (u(t, 0) − u(t, x)), u(t, 0) = h(0)
        let c = 1.5;
        let law = SwitchingLaw::constant(c, Arc::new(DiracKernel(vec![0.0]))).unwrap();
        let grid = PideGrid::new(-2.0, 2.0, 41, 0.01, 0.5, 0.5).unwrap();
        let h = |x: f64| x * x;
        let sol = solve_pide(&LevyTriplet::degenerate(1), &law, &h, 1.0, &grid).unwrap();
        for i in 0..grid.n_x {
            let x = grid.x(i);
            if grid.in_interior(x) {
                let exact = h(x) * (-c).exp();
                assert!((sol.final_level()[i] - exact).abs() <= sol.error_budget.total() + 1e-12);
            }
        }
    }

    #[test]
    fn stability_and_domain_errors() {
        assert!(matches!(
            solve_pide(&heat(), &SwitchingLaw::none(), &|x| x, 1.0, &PideGrid::new(-5.0, 5.0, 101, 0.1, 0.0, 1.0).unwrap()),
            Err(SpError::Unstable(_))
        ));
        let law = SwitchingLaw::constant(1.0, Arc::new(DiracKernel(vec![9.0]))).unwrap();
        assert!(matches!(
            solve_pide(&heat(), &law, &|x| x, 1.0, &PideGrid::new(-5.0, 5.0, 101, 0.01, 0.5, 1.0).unwrap()),
            Err(SpError::DomainTooSmall(_))
        ));
    }

    #[test]
    fn node_and_midpoint_evaluation() {
        let grid = PideGrid::new(-2.0, 2.0, 41, 0.1, 0.5, 0.5).unwrap();
        let sol = solve_pide(&LevyTriplet::brownian(0.0, 0.0).unwrap(), &SwitchingLaw::none(), &|x| 2.0 * x + 1.0, 1.0, &grid).unwrap();
        let p = evaluate_solution(&sol, 1.0, grid.x(20)).unwrap();
        assert_eq!(p.value, sol.final_level()[20]);
        let mid = 0.5 * (grid.x(20) + grid.x(21));
        let q = evaluate_solution(&sol, 1.0, mid).unwrap();
        assert!((q.value - 0.5 * (sol.final_level()[20] + sol.final_level()[21])).abs() < 1e-14);
        assert!(evaluate_solution(&sol, 1.0, 1.9).is_err());
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,x,u\n"));
    }
}
