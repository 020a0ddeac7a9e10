//! Càdlàg path skeletons and the grid-stepping driver shared by all
//! intrinsic processes.

use crate::error::{Result, SpError};
use crate::rng::StreamRng;

/// An intrinsic process that can be advanced on a path skeleton.
pub trait IntrinsicModel: Send + Sync {
    fn dim(&self) -> usize;

    /// Appends the evolution from the last point of `path` to time `to`
    /// (`to` strictly after the last point). Explicit jumps falling in
    /// `(last, to]` are inserted as dedicated points carrying their left
    /// limits. Coefficients are evaluated at `path time + clock_shift`.
    fn step(&self, path: &mut PathSkeleton, to: f64, clock_shift: f64, rng: &mut StreamRng) -> Result<()>;

    /// Whether skeleton marginals at grid times are exact in law.
    fn is_exact(&self) -> bool;

    /// Whether the process is constant in time.
    fn is_degenerate(&self) -> bool {
        false
    }
}

/// Trajectory record of an intrinsic segment: grid times, right-continuous
/// values and explicit jump marks with their pre-jump values.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSkeleton {
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    jump_indices: Vec<usize>,
    left_values: Vec<f64>,
}

impl PathSkeleton {
    /// A single-point path at `(start_time, x0)`.
    pub fn new(start_time: f64, x0: &[f64]) -> Self {
        Self {
            dim: x0.len(),
            times: vec![start_time],
            values: x0.to_vec(),
            jump_indices: Vec::new(),
            left_values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("path has at least one point")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_value(&self) -> &[f64] {
        self.value(self.times.len() - 1)
    }

    /// Times of explicit intrinsic jumps.
    pub fn jump_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.jump_indices.iter().map(|&i| self.times[i])
    }

    pub fn jump_count(&self) -> usize {
        self.jump_indices.len()
    }

    /// Pre-jump value stored at grid index `i`, if `i` is an explicit jump.
    pub fn left_value_at(&self, i: usize) -> Option<&[f64]> {
        self.jump_indices
            .binary_search(&i)
            .ok()
            .map(|k| &self.left_values[k * self.dim..(k + 1) * self.dim])
    }

    /// Value approached from the left at grid index `i`.
    pub fn left_value_or_value(&self, i: usize) -> &[f64] {
        self.left_value_at(i).unwrap_or_else(|| self.value(i))
    }

    pub fn push(&mut self, t: f64, x: &[f64]) {
        debug_assert!(t > self.last_time(), "grid times must increase");
        debug_assert_eq!(x.len(), self.dim);
        self.times.push(t);
        self.values.extend_from_slice(x);
    }

    pub fn push_jump(&mut self, t: f64, left: &[f64], right: &[f64]) {
        self.push(t, right);
        self.jump_indices.push(self.times.len() - 1);
        self.left_values.extend_from_slice(left);
    }

    fn check_range(&self, t: f64) -> Result<()> {
        if t.is_nan() || t < self.start_time() || t > self.last_time() {
            return Err(SpError::InvalidArgument(format!(
                "t={t} outside path range [{}, {}]",
                self.start_time(),
                self.last_time()
            )));
        }
        Ok(())
    }

    /// Right-continuous value at `t`, linear between grid points.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        self.check_range(t)?;
        let mut out = vec![0.0; self.dim];
        self.evaluate_into(t, &mut out);
        Ok(out)
    }

    /// Left limit at `t`: the stored pre-jump value at explicit jump times,
    /// the interpolated value elsewhere.
    pub fn left_limit(&self, t: f64) -> Result<Vec<f64>> {
        self.check_range(t)?;
        let i = self.times.partition_point(|&s| s < t);
        if i < self.times.len() && self.times[i] == t {
            return Ok(self.left_value_or_value(i).to_vec());
        }
        let mut out = vec![0.0; self.dim];
        self.evaluate_into(t, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation used on hot paths; `t` must lie in range.
    pub(crate) fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        let i = self.times.partition_point(|&s| s <= t) - 1;
        if self.times[i] == t || i + 1 == self.times.len() {
            out.copy_from_slice(self.value(i));
            return;
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        let a = self.value(i);
        let b = self.left_value_or_value(i + 1);
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = x + w * (y - x);
        }
    }

    /// Drops everything after `t` and ends the path at `(t, x)`.
    pub(crate) fn truncate_at(&mut self, t: f64, x: &[f64]) {
        let keep = self.times.partition_point(|&s| s < t);
        if keep < self.times.len() && self.times[keep] == t {
            self.truncate_len(keep + 1);
        } else {
            self.truncate_len(keep);
            self.push(t, x);
        }
    }

    fn truncate_len(&mut self, n: usize) {
        self.times.truncate(n);
        self.values.truncate(n * self.dim);
        let k = self.jump_indices.partition_point(|&i| i < n);
        self.jump_indices.truncate(k);
        self.left_values.truncate(k * self.dim);
    }

    /// Advances the path on a grid of spacing `max_step` towards `to_time`.
    ///
    /// Each step ends at the earliest of `last + max_step`, the next entry of
    /// `stops` (sorted absolute times) and `to_time`. At most `max_steps`
    /// steps are taken; returns whether `to_time` was reached. The grid only
    /// depends on the current last time, so chunked calls reproduce a single
    /// call point for point.
    pub fn advance<M: IntrinsicModel + ?Sized>(
        &mut self,
        model: &M,
        to_time: f64,
        max_step: f64,
        stops: &[f64],
        clock_shift: f64,
        max_steps: Option<usize>,
        rng: &mut StreamRng,
    ) -> Result<bool> {
        if !(max_step > 0.0 && max_step.is_finite()) {
            return Err(SpError::InvalidArgument(format!("max_step must be > 0, got {max_step}")));
        }
        let limit = max_steps.unwrap_or(usize::MAX);
        let snap = 1e-9 * max_step.min(1.0);
        let mut taken = 0;
        loop {
            let t = self.last_time();
            if t >= to_time {
                return Ok(true);
            }
            if taken == limit {
                return Ok(false);
            }
            let mut next = t + max_step;
            if next >= to_time - snap {
                next = to_time;
            }
            let k = stops.partition_point(|&s| s <= t);
            if k < stops.len() && stops[k] < next {
                next = stops[k];
            }
            model.step(self, next, clock_shift, rng)?;
            taken += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PathSkeleton {
        let mut p = PathSkeleton::new(0.0, &[0.0]);
        p.push(1.0, &[1.0]);
        p.push_jump(1.5, &[1.5], &[4.0]);
        p.push(2.0, &[5.0]);
        p
    }

    #[test]
    fn grid_and_jump_evaluation() {
        let p = sample();
        assert_eq!(p.evaluate(1.0).unwrap(), vec![1.0]);
        assert_eq!(p.evaluate(1.5).unwrap(), vec![4.0]);
        assert_eq!(p.left_limit(1.5).unwrap(), vec![1.5]);
        assert_eq!(p.left_limit(1.0).unwrap(), vec![1.0]);
        // between 1.0 and the jump at 1.5 the interpolant runs to the left value
        assert!((p.evaluate(1.25).unwrap()[0] - 1.25).abs() < 1e-15);
        assert!((p.evaluate(1.75).unwrap()[0] - 4.5).abs() < 1e-15);
        assert_eq!(p.jump_times().collect::<Vec<_>>(), vec![1.5]);
    }

    #[test]
    fn out_of_range_rejected() {
        let p = sample();
        assert!(p.evaluate(-0.1).is_err());
        assert!(p.left_limit(2.1).is_err());
    }

    #[test]
    fn truncation_keeps_prefix() {
        let mut p = sample();
        p.truncate_at(1.25, &[1.25]);
        assert_eq!(p.times(), &[0.0, 1.0, 1.25]);
        assert_eq!(p.jump_count(), 0);
        let mut q = sample();
        q.truncate_at(1.5, &[4.0]);
        assert_eq!(q.times(), &[0.0, 1.0, 1.5]);
        assert_eq!(q.jump_count(), 1);
    }
}
