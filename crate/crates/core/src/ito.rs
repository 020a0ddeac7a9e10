//! One-dimensional time-inhomogeneous Itô-Lévy processes
//! `dζ = b(t, ζ−) dt + σ(t, ζ−) dW + ∫ a(t, ζ−, y) J̃(dt, dy)` simulated by
//! a left-point Euler scheme. Explicit marks are placed at their exact
//! times; the compensator `∫ a(t, x, y) ν(dy)` over the explicit part is
//! integrated with the mark measure's quadrature nodes.

use crate::error::{ensure, Result, SpError};
use crate::jumps::JumpMeasure;
use crate::path::{IntrinsicModel, PathSkeleton};
use crate::rng::StreamRng;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use std::fmt;
use std::sync::Arc;

pub type Coefficient = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type JumpAmplitude = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ItoLevyCoefficients {
    b: Coefficient,
    sigma: Coefficient,
    a: JumpAmplitude,
    marks: JumpMeasure,
}

impl fmt::Debug for ItoLevyCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ItoLevyCoefficients").field("marks", &self.marks).finish_non_exhaustive()
    }
}

const PROBE_TIMES: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 5.0];

impl ItoLevyCoefficients {
    /// Builds the coefficient set and probes `b`, `σ` and `a` for
    /// finiteness on `t ∈ {0, .5, 1, 2, 5}`, `x ∈ [−10, 10]`.
    pub fn new(b: Coefficient, sigma: Coefficient, a: JumpAmplitude, marks: JumpMeasure) -> Result<Self> {
        if let Some(d) = marks.dim() {
            if d != 1 {
                return Err(SpError::InvalidModel("Itô-Lévy marks must be one-dimensional".into()));
            }
        }
        let coeffs = Self { b, sigma, a, marks };
        let marks_probe: Vec<f64> = coeffs.marks.nodes().iter().step_by(7).map(|n| n.point[0]).collect();
        for &t in &PROBE_TIMES {
            for k in 0..=40 {
                let x = -10.0 + 0.5 * k as f64;
                let (bv, sv) = ((coeffs.b)(t, x), (coeffs.sigma)(t, x));
                if !bv.is_finite() || !sv.is_finite() {
                    return Err(SpError::InvalidModel(format!(
                        "coefficients not finite at t={t}, x={x}: b={bv}, sigma={sv}"
                    )));
                }
                for &y in &marks_probe {
                    let av = (coeffs.a)(t, x, y);
                    if !av.is_finite() {
                        return Err(SpError::InvalidModel(format!(
                            "jump amplitude not finite at t={t}, x={x}, y={y}"
                        )));
                    }
                }
            }
        }
        Ok(coeffs)
    }

    /// Pure diffusion `dζ = b dt + σ dW`.
    pub fn diffusion(b: Coefficient, sigma: Coefficient) -> Result<Self> {
        Self::new(b, sigma, Arc::new(|_, _, _| 0.0), JumpMeasure::none())
    }

    pub fn drift_at(&self, t: f64, x: f64) -> f64 {
        (self.b)(t, x)
    }

    pub fn sigma_at(&self, t: f64, x: f64) -> f64 {
        (self.sigma)(t, x)
    }

    pub fn amplitude_at(&self, t: f64, x: f64, y: f64) -> f64 {
        (self.a)(t, x, y)
    }

    pub fn marks(&self) -> &JumpMeasure {
        &self.marks
    }

    fn compensator(&self, t: f64, x: f64) -> f64 {
        self.marks
            .nodes()
            .iter()
            .map(|n| n.weight * (self.a)(t, x, n.point[0]))
            .sum()
    }

    fn euler(&self, x: f64, t: f64, dt: f64, rng: &mut StreamRng) -> Result<f64> {
        let b = (self.b)(t, x);
        let s = (self.sigma)(t, x);
        let mut next = x + b * dt - self.compensator(t, x) * dt;
        if s != 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            next += s * dt.sqrt() * z;
        }
        if !next.is_finite() {
            return Err(SpError::NonFinite {
                t,
                x: vec![x],
                what: format!("Euler step (b={b}, sigma={s})"),
            });
        }
        Ok(next)
    }
}

impl IntrinsicModel for ItoLevyCoefficients {
    fn dim(&self) -> usize {
        1
    }

    fn step(&self, path: &mut PathSkeleton, to: f64, clock_shift: f64, rng: &mut StreamRng) -> Result<()> {
        let t0 = path.last_time();
        let dt = to - t0;
        ensure(dt > 0.0, || format!("step end {to} not after {t0}"))?;
        let mut x = path.last_value()[0];
        let mean_marks = self.marks.explicit_rate() * dt;
        let count = if mean_marks > 0.0 {
            let p = Poisson::new(mean_marks).map_err(|e| SpError::InvalidModel(e.to_string()))?;
            p.sample(rng) as usize
        } else {
            0
        };
        let mut times: Vec<f64> = (0..count).map(|_| to - dt * rng.random::<f64>()).collect();
        times.sort_by(f64::total_cmp);
        let mut tc = t0;
        for tau in times {
            if tau <= tc {
                continue;
            }
            x = self.euler(x, tc + clock_shift, tau - tc, rng)?;
            let y = self.marks.sample_size(rng)[0];
            let jump = (self.a)(tau + clock_shift, x, y);
            let right = x + jump;
            if !right.is_finite() {
                return Err(SpError::NonFinite {
                    t: tau + clock_shift,
                    x: vec![x],
                    what: format!("jump amplitude for mark {y}"),
                });
            }
            path.push_jump(tau, &[x], &[right]);
            x = right;
            tc = tau;
        }
        if to > tc {
            x = self.euler(x, tc + clock_shift, to - tc, rng)?;
            path.push(to, &[x]);
        }
        Ok(())
    }

    fn is_exact(&self) -> bool {
        false
    }
}

/// Samples `ζ^{s0,x0}` on `[s0, s0 + horizon]`: the path starts at time
/// `s0` and coefficients are read at absolute path time.
pub fn sample_ito_levy_path(
    coeffs: &ItoLevyCoefficients,
    s0: f64,
    x0: f64,
    horizon: f64,
    max_step: f64,
    rng: &mut StreamRng,
) -> Result<PathSkeleton> {
    ensure(horizon > 0.0 && horizon.is_finite(), || format!("horizon must be > 0, got {horizon}"))?;
    let mut path = PathSkeleton::new(s0, &[x0]);
    path.advance(coeffs, s0 + horizon, max_step, &[], 0.0, None, rng)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn constant(c: f64) -> Coefficient {
        Arc::new(move |_, _| c)
    }

    #[test]
    fn zero_coefficients_constant_path() {
        let c = ItoLevyCoefficients::diffusion(constant(0.0), constant(0.0)).unwrap();
        let p = sample_ito_levy_path(&c, 0.0, 2.5, 1.0, 0.1, &mut RngStream::new(1, 0).intrinsic()).unwrap();
        assert!((0..p.len()).all(|i| p.value(i)[0] == 2.5));
    }

    #[test]
    fn constant_drift_exact() {
        let c = ItoLevyCoefficients::diffusion(constant(1.0), constant(0.0)).unwrap();
        let p = sample_ito_levy_path(&c, 0.0, 0.0, 1.0, 0.1, &mut RngStream::new(1, 0).intrinsic()).unwrap();
        assert!((p.last_value()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn start_time_is_s0() {
        let c = ItoLevyCoefficients::diffusion(Arc::new(|t, _| t), constant(0.0)).unwrap();
        let p = sample_ito_levy_path(&c, 2.0, 0.0, 1.0, 1e-3, &mut RngStream::new(1, 0).intrinsic()).unwrap();
        assert_eq!(p.start_time(), 2.0);
        // ∫_2^3 t dt = 2.5, Euler error O(step)
        assert!((p.last_value()[0] - 2.5).abs() < 1e-3);
    }

    #[test]
    fn non_finite_is_reported() {
        assert!(ItoLevyCoefficients::diffusion(Arc::new(|_, x| 1.0 / x), constant(0.0)).is_err());
        let c = ItoLevyCoefficients::diffusion(Arc::new(|_, x| x * x * 1e200), constant(0.0)).unwrap();
        let err = sample_ito_levy_path(&c, 0.0, 20.0, 1.0, 0.5, &mut RngStream::new(1, 0).intrinsic());
        assert!(matches!(err, Err(SpError::NonFinite { .. })));
    }
}
