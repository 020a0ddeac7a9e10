//! Lévy processes from their triplet `(μ, C, ν)` via the Lévy-Itô
//! decomposition.
//!
//! Between grid points the Gaussian part is sampled exactly; explicit jumps
//! are placed at uniform times inside the step and inserted as grid points.
//! The compensated small-jump integral `∫_{‖y‖<1} y J̃(ds, dy)` becomes the
//! explicit jumps in the unit ball minus the drift `∫_{ε≤‖y‖<1} y ν(dy)`.
//! For truncated densities the part `{‖y‖ < ε}` is dropped, a bias of order
//! `∫_{‖y‖<ε} ‖y‖² ν(dy)` (see [`JumpMeasure::small_ball_second_moment`]).

use crate::error::{ensure, Result, SpError};
use crate::jumps::JumpMeasure;
use crate::path::{IntrinsicModel, PathSkeleton};
use crate::rng::StreamRng;
use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

#[derive(Debug, Clone)]
pub struct LevyTriplet {
    drift: Vec<f64>,
    covariance: Vec<f64>,
    sqrt_cov: Vec<f64>,
    gaussian: bool,
    jumps: JumpMeasure,
    effective_drift: Vec<f64>,
}

impl LevyTriplet {
    /// Validates `covariance` (symmetric, eigenvalues ≥ −1e−12) and the jump
    /// dimension.
    pub fn new(drift: Vec<f64>, covariance: Vec<Vec<f64>>, jumps: JumpMeasure) -> Result<Self> {
        let d = drift.len();
        if d == 0 {
            return Err(SpError::InvalidModel("state dimension must be >= 1".into()));
        }
        if drift.iter().any(|m| !m.is_finite()) {
            return Err(SpError::InvalidModel("drift must be finite".into()));
        }
        if covariance.len() != d || covariance.iter().any(|row| row.len() != d) {
            return Err(SpError::InvalidModel(format!("covariance must be {d}x{d}")));
        }
        if let Some(jd) = jumps.dim() {
            if jd != d {
                return Err(SpError::InvalidModel(format!(
                    "jump measure has dimension {jd}, drift has {d}"
                )));
            }
        }
        let flat: Vec<f64> = covariance.iter().flatten().copied().collect();
        if flat.iter().any(|c| !c.is_finite()) {
            return Err(SpError::InvalidModel("covariance must be finite".into()));
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (flat[i * d + j], flat[j * d + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(SpError::InvalidModel("covariance is not symmetric".into()));
                }
            }
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &flat));
        if let Some(min) = eig.eigenvalues.iter().copied().reduce(f64::min) {
            if min < -1e-12 {
                return Err(SpError::InvalidModel(format!(
                    "covariance is not positive semi-definite (eigenvalue {min})"
                )));
            }
        }
        let root = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        let sqrt = &eig.eigenvectors * root * eig.eigenvectors.transpose();
        let mut sqrt_cov = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                sqrt_cov[i * d + j] = sqrt[(i, j)];
            }
        }
        let gaussian = flat.iter().any(|&c| c != 0.0);
        let comp = jumps.compensator(d);
        let effective_drift = drift.iter().zip(&comp).map(|(m, c)| m - c).collect();
        Ok(Self {
            drift,
            covariance: flat,
            sqrt_cov,
            gaussian,
            jumps,
            effective_drift,
        })
    }

    /// The constant process in dimension `d`.
    pub fn degenerate(d: usize) -> Self {
        Self::new(vec![0.0; d], vec![vec![0.0; d]; d], JumpMeasure::none()).expect("valid triplet")
    }

    /// One-dimensional Brownian motion with drift.
    pub fn brownian(drift: f64, variance: f64) -> Result<Self> {
        Self::new(vec![drift], vec![vec![variance]], JumpMeasure::none())
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    /// Row-major `d×d` covariance.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn covariance_entry(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.dim() + j]
    }

    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }

    /// `μ − ∫_{ε≤‖y‖<1} y ν(dy)`: the drift between explicit jumps.
    pub fn effective_drift(&self) -> &[f64] {
        &self.effective_drift
    }

    /// Lévy exponent `ψ(u)` with `E e^{i u·ζ(t)} = e^{t ψ(u)}`; `None` when
    /// the jump part has no closed form.
    pub fn characteristic_exponent(&self, u: &[f64]) -> Option<Complex<f64>> {
        let d = self.dim();
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += u[i] * self.covariance[i * d + j] * u[j];
            }
        }
        let lin: f64 = u.iter().zip(&self.drift).map(|(a, b)| a * b).sum();
        let jumps = self.jumps.characteristic_integral(u)?;
        Some(Complex::new(-0.5 * quad, lin) + jumps)
    }

    fn add_continuous(&self, x: &mut [f64], dt: f64, rng: &mut StreamRng, z: &mut [f64]) {
        let d = x.len();
        for (xi, m) in x.iter_mut().zip(&self.effective_drift) {
            *xi += m * dt;
        }
        if self.gaussian {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(rng);
            }
            let s = dt.sqrt();
            for i in 0..d {
                let row = &self.sqrt_cov[i * d..(i + 1) * d];
                x[i] += s * row.iter().zip(z.iter()).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
}

impl IntrinsicModel for LevyTriplet {
    fn dim(&self) -> usize {
        self.drift.len()
    }

    fn step(&self, path: &mut PathSkeleton, to: f64, _clock_shift: f64, rng: &mut StreamRng) -> Result<()> {
        let t0 = path.last_time();
        let dt = to - t0;
        ensure(dt > 0.0, || format!("step end {to} not after {t0}"))?;
        let d = self.dim();
        let mut x = path.last_value().to_vec();
        let mut z = vec![0.0; d];
        let mean_jumps = self.jumps.explicit_rate() * dt;
        let count = if mean_jumps > 0.0 {
            let p = Poisson::new(mean_jumps).map_err(|e| SpError::InvalidModel(e.to_string()))?;
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
            self.add_continuous(&mut x, tau - tc, rng, &mut z);
            let left = x.clone();
            let size = self.jumps.sample_size(rng);
            for (xi, y) in x.iter_mut().zip(&size) {
                *xi += y;
            }
            path.push_jump(tau, &left, &x);
            tc = tau;
        }
        if to > tc {
            self.add_continuous(&mut x, to - tc, rng, &mut z);
            path.push(to, &x);
        }
        Ok(())
    }

    fn is_exact(&self) -> bool {
        self.jumps.small_ball_second_moment() == 0.0
    }

    fn is_degenerate(&self) -> bool {
        !self.gaussian && self.jumps.is_none() && self.effective_drift.iter().all(|&m| m == 0.0)
    }
}

/// Explicit jump recorded by [`sample_levy_increment`]: time in `(0, dt]` and size.
pub type ExplicitJump = (f64, Vec<f64>);

/// Samples `ζ(dt) − ζ(0)` together with the explicit jumps in `(0, dt]`.
pub fn sample_levy_increment(
    triplet: &LevyTriplet,
    dt: f64,
    rng: &mut StreamRng,
) -> Result<(Vec<f64>, Vec<ExplicitJump>)> {
    ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be > 0, got {dt}"))?;
    let d = triplet.dim();
    let mut path = PathSkeleton::new(0.0, &vec![0.0; d]);
    triplet.step(&mut path, dt, 0.0, rng)?;
    let jumps = (0..path.len())
        .filter_map(|i| {
            path.left_value_at(i).map(|left| {
                let size = path.value(i).iter().zip(left).map(|(r, l)| r - l).collect();
                (path.times()[i], size)
            })
        })
        .collect();
    Ok((path.last_value().to_vec(), jumps))
}

/// Samples a path on `[0, horizon]` with grid spacing at most `max_step`.
pub fn sample_levy_path(
    triplet: &LevyTriplet,
    x0: &[f64],
    horizon: f64,
    max_step: f64,
    rng: &mut StreamRng,
) -> Result<PathSkeleton> {
    ensure(horizon > 0.0 && horizon.is_finite(), || format!("horizon must be > 0, got {horizon}"))?;
    ensure(x0.len() == triplet.dim(), || {
        format!("x0 has dimension {}, triplet has {}", x0.len(), triplet.dim())
    })?;
    let mut path = PathSkeleton::new(0.0, x0);
    path.advance(triplet, horizon, max_step, &[], 0.0, None, rng)?;
    Ok(path)
}

/// Returns a copy of `path` grown to `to_time` with fresh increments; the
/// existing prefix is left untouched.
pub fn extend_path(
    path: &PathSkeleton,
    triplet: &LevyTriplet,
    to_time: f64,
    max_step: f64,
    rng: &mut StreamRng,
) -> Result<PathSkeleton> {
    ensure(to_time > path.last_time(), || {
        format!("to_time {to_time} must exceed last time {}", path.last_time())
    })?;
    let mut out = path.clone();
    out.advance(triplet, to_time, max_step, &[], 0.0, None, rng)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::JumpSizes;
    use crate::rng::RngStream;

    #[test]
    fn rejects_bad_covariance() {
        assert!(LevyTriplet::new(vec![0.0], vec![vec![-1.0]], JumpMeasure::none()).is_err());
        assert!(LevyTriplet::new(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.4, 1.0]], JumpMeasure::none()).is_err());
        assert!(LevyTriplet::new(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]], JumpMeasure::none()).is_err());
        // singular but PSD is fine
        assert!(LevyTriplet::new(vec![0.0, 0.0], vec![vec![1.0, 1.0], vec![1.0, 1.0]], JumpMeasure::none()).is_ok());
    }

    #[test]
    fn degenerate_and_drift_increments() {
        let mut rng = RngStream::new(1, 1).intrinsic();
        let (inc, jumps) = sample_levy_increment(&LevyTriplet::degenerate(1), 1.0, &mut rng).unwrap();
        assert_eq!(inc, vec![0.0]);
        assert!(jumps.is_empty());
        let drift = LevyTriplet::brownian(3.0, 0.0).unwrap();
        let (inc, _) = sample_levy_increment(&drift, 0.5, &mut rng).unwrap();
        assert_eq!(inc, vec![1.5]);
        assert!(sample_levy_increment(&drift, 0.0, &mut rng).is_err());
    }

    #[test]
    fn sqrt_covariance_squares_back() {
        let t = LevyTriplet::new(vec![0.0, 0.0], vec![vec![2.0, 0.6], vec![0.6, 1.0]], JumpMeasure::none()).unwrap();
        let s = &t.sqrt_cov;
        for i in 0..2 {
            for j in 0..2 {
                let v: f64 = (0..2).map(|k| s[i * 2 + k] * s[k * 2 + j]).sum();
                assert!((v - t.covariance_entry(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jumps_are_grid_points() {
        let cp = JumpMeasure::compound_poisson(5.0, JumpSizes::Atoms(vec![(vec![1.0], 1.0)])).unwrap();
        let t = LevyTriplet::new(vec![0.0], vec![vec![1.0]], cp).unwrap();
        let mut rng = RngStream::new(2, 0).intrinsic();
        let p = sample_levy_path(&t, &[0.0], 2.0, 0.1, &mut rng).unwrap();
        assert!(p.jump_count() > 0);
        for (k, tau) in p.jump_times().enumerate() {
            let i = p.times().iter().position(|&s| s == tau).unwrap();
            let left = p.left_value_at(i).unwrap();
            assert!((p.value(i)[0] - left[0] - 1.0).abs() < 1e-12, "jump {k}");
        }
        assert!(p.times().windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.1 + 1e-12));
        assert_eq!(p.last_time(), 2.0);
    }

    #[test]
    fn chunked_advance_matches_single_call() {
        let cp = JumpMeasure::compound_poisson(3.0, JumpSizes::Normal { mean: 0.2, sd: 0.4 }).unwrap();
        let t = LevyTriplet::new(vec![0.1], vec![vec![0.5]], cp).unwrap();
        let stream = RngStream::new(9, 4);
        let single = sample_levy_path(&t, &[1.0], 1.0, 0.013, &mut stream.intrinsic()).unwrap();
        let mut chunked = PathSkeleton::new(0.0, &[1.0]);
        let mut rng = stream.intrinsic();
        while !chunked.advance(&t, 1.0, 0.013, &[], 0.0, Some(7), &mut rng).unwrap() {}
        assert_eq!(single, chunked);
    }
}
