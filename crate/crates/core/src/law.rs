//! Switching laws: the hazard rate `λ` with its declared bound `Λ` and the
//! relocation kernel `Q`.

use crate::error::{Result, SpError};
use crate::quadrature::{gaussian_nodes, total_weight, Node};
use crate::rng::StreamRng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::sync::Arc;

/// Relative slack allowed above the declared rate bound.
const BOUND_SLACK: f64 = 1e-12;

/// Default Gauss-Hermite order for Gaussian kernels.
pub const DEFAULT_KERNEL_ORDER: usize = 24;

/// Relocation kernel `Q(t, x; ·)`.
pub trait Kernel: Send + Sync {
    fn sample(&self, t: f64, x: &[f64], rng: &mut StreamRng) -> Vec<f64>;

    /// Weighted nodes representing `Q(t, x; ·)`; weights sum to one.
    /// `order` is the per-dimension node count for continuous kernels and
    /// is ignored by discrete ones.
    fn quadrature(&self, t: f64, x: &[f64], order: usize) -> Vec<Node>;

    fn describe(&self) -> String;
}

/// `Q(x; ·) = δ_point`.
#[derive(Debug, Clone)]
pub struct DiracKernel(pub Vec<f64>);

/// `Q(x; ·) = δ_x`.
#[derive(Debug, Clone, Copy)]
pub struct StayKernel;

/// `Q(x; ·) = N(x + shift, sd² I)`.
#[derive(Debug, Clone)]
pub struct GaussianShiftKernel {
    pub shift: f64,
    pub sd: f64,
}

/// `Q(x; ·) = N(mean, sd² I)`, independent of `x`.
#[derive(Debug, Clone)]
pub struct NormalKernel {
    pub mean: Vec<f64>,
    pub sd: f64,
}

/// `Q(x; ·) = Σ p_k δ_{z_k}`, independent of `x`.
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    atoms: Vec<(Vec<f64>, f64)>,
    cumulative: Vec<f64>,
}

impl DiscreteKernel {
    pub fn new(atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(SpError::InvalidModel("discrete kernel needs at least one atom".into()));
        }
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(atoms.len());
        for (_, p) in &atoms {
            if !(*p >= 0.0 && p.is_finite()) {
                return Err(SpError::InvalidModel(format!("kernel weight {p} is negative")));
            }
            acc += p;
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > 1e-12 {
            return Err(SpError::InvalidModel(format!("kernel weights sum to {acc}, expected 1")));
        }
        Ok(Self { atoms, cumulative })
    }
}

impl Kernel for DiracKernel {
    fn sample(&self, _t: f64, _x: &[f64], _rng: &mut StreamRng) -> Vec<f64> {
        self.0.clone()
    }
    fn quadrature(&self, _t: f64, _x: &[f64], _order: usize) -> Vec<Node> {
        vec![Node::new(self.0.clone(), 1.0)]
    }
    fn describe(&self) -> String {
        format!("dirac({:?})", self.0)
    }
}

impl Kernel for StayKernel {
    fn sample(&self, _t: f64, x: &[f64], _rng: &mut StreamRng) -> Vec<f64> {
        x.to_vec()
    }
    fn quadrature(&self, _t: f64, x: &[f64], _order: usize) -> Vec<Node> {
        vec![Node::new(x.to_vec(), 1.0)]
    }
    fn describe(&self) -> String {
        "stay".into()
    }
}

fn gaussian_draw(center: impl Iterator<Item = f64>, sd: f64, rng: &mut StreamRng) -> Vec<f64> {
    center
        .map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            m + sd * z
        })
        .collect()
}

impl Kernel for GaussianShiftKernel {
    fn sample(&self, _t: f64, x: &[f64], rng: &mut StreamRng) -> Vec<f64> {
        gaussian_draw(x.iter().map(|v| v + self.shift), self.sd, rng)
    }
    fn quadrature(&self, _t: f64, x: &[f64], order: usize) -> Vec<Node> {
        let mean: Vec<f64> = x.iter().map(|v| v + self.shift).collect();
        gaussian_nodes(&mean, self.sd, order)
    }
    fn describe(&self) -> String {
        format!("gaussian(mean_shift={}, sd={})", self.shift, self.sd)
    }
}

impl Kernel for NormalKernel {
    fn sample(&self, _t: f64, _x: &[f64], rng: &mut StreamRng) -> Vec<f64> {
        gaussian_draw(self.mean.iter().copied(), self.sd, rng)
    }
    fn quadrature(&self, _t: f64, _x: &[f64], order: usize) -> Vec<Node> {
        gaussian_nodes(&self.mean, self.sd, order)
    }
    fn describe(&self) -> String {
        format!("normal(mean={:?}, sd={})", self.mean, self.sd)
    }
}

impl Kernel for DiscreteKernel {
    fn sample(&self, _t: f64, _x: &[f64], rng: &mut StreamRng) -> Vec<f64> {
        let u: f64 = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        self.atoms[k].0.clone()
    }
    fn quadrature(&self, _t: f64, _x: &[f64], _order: usize) -> Vec<Node> {
        self.atoms.iter().map(|(z, p)| Node::new(z.clone(), *p)).collect()
    }
    fn describe(&self) -> String {
        format!("discrete({:?})", self.atoms)
    }
}

pub type RateFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Hazard rate `λ(t, x)`, its declared bound and the relocation kernel.
#[derive(Clone)]
pub struct SwitchingLaw {
    rate: RateFn,
    rate_bound: f64,
    kernel: Arc<dyn Kernel>,
    time_dependent: bool,
    identically_zero: bool,
    quadrature_order: usize,
}

impl fmt::Debug for SwitchingLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SwitchingLaw")
            .field("rate_bound", &self.rate_bound)
            .field("kernel", &self.kernel.describe())
            .field("time_dependent", &self.time_dependent)
            .finish()
    }
}

impl SwitchingLaw {
    /// Time-homogeneous law with rate `λ(x)`.
    pub fn homogeneous(
        rate: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        rate_bound: f64,
        kernel: Arc<dyn Kernel>,
    ) -> Result<Self> {
        Self::build(Arc::new(move |_, x| rate(x)), rate_bound, kernel, false, false)
    }

    /// Law with rate `λ(t, x)` and kernel possibly depending on `t`.
    pub fn inhomogeneous(
        rate: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        rate_bound: f64,
        kernel: Arc<dyn Kernel>,
    ) -> Result<Self> {
        Self::build(Arc::new(rate), rate_bound, kernel, true, false)
    }

    /// Constant rate `c` with bound `c`.
    pub fn constant(c: f64, kernel: Arc<dyn Kernel>) -> Result<Self> {
        Self::build(Arc::new(move |_, _| c), c, kernel, false, c == 0.0)
    }

    /// `λ ≡ 0`: the switching process is the intrinsic process.
    pub fn none() -> Self {
        Self::constant(0.0, Arc::new(StayKernel)).expect("zero law is valid")
    }

    fn build(rate: RateFn, rate_bound: f64, kernel: Arc<dyn Kernel>, time_dependent: bool, zero: bool) -> Result<Self> {
        if !(rate_bound >= 0.0 && rate_bound.is_finite()) {
            return Err(SpError::InvalidModel(format!(
                "rate bound must be finite and >= 0, got {rate_bound}"
            )));
        }
        Ok(Self {
            rate,
            rate_bound,
            kernel,
            time_dependent,
            identically_zero: zero,
            quadrature_order: DEFAULT_KERNEL_ORDER,
        })
    }

    pub fn with_quadrature_order(mut self, order: usize) -> Self {
        self.quadrature_order = order.max(2);
        self
    }

    pub fn rate_bound(&self) -> f64 {
        self.rate_bound
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn is_identically_zero(&self) -> bool {
        self.identically_zero
    }

    pub fn kernel(&self) -> &dyn Kernel {
        self.kernel.as_ref()
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    /// `λ(t, x)`, rejecting values outside `[0, Λ]`.
    pub fn rate(&self, t: f64, x: &[f64]) -> Result<f64> {
        let r = (self.rate)(t, x);
        if !(r >= 0.0 && r <= self.rate_bound * (1.0 + BOUND_SLACK)) {
            return Err(SpError::RateOutOfBounds {
                t,
                x: x.to_vec(),
                rate: r,
                bound: self.rate_bound,
            });
        }
        Ok(r)
    }

    pub fn sample_location(&self, t: f64, x: &[f64], rng: &mut StreamRng) -> Vec<f64> {
        self.kernel.sample(t, x, rng)
    }

    /// Kernel nodes at the law's quadrature order.
    pub fn kernel_nodes(&self, t: f64, x: &[f64]) -> Vec<Node> {
        self.kernel.quadrature(t, x, self.quadrature_order)
    }

    /// Kernel nodes at half the quadrature order, for error estimates.
    pub fn kernel_nodes_coarse(&self, t: f64, x: &[f64]) -> Vec<Node> {
        self.kernel.quadrature(t, x, (self.quadrature_order / 2).max(2))
    }

    /// Checks `0 ≤ λ ≤ Λ` and normalized kernel weights at every probe point.
    pub fn validate_on_probe(&self, probe: &[(f64, Vec<f64>)]) -> Result<()> {
        for (t, x) in probe {
            self.rate(*t, x)?;
            let nodes = self.kernel_nodes(*t, x);
            if nodes.iter().any(|n| n.weight < 0.0) {
                return Err(SpError::InvalidModel(format!("negative kernel weight at t={t}, x={x:?}")));
            }
            let w = total_weight(&nodes);
            if (w - 1.0).abs() > 1e-12 {
                return Err(SpError::InvalidModel(format!(
                    "kernel weights sum to {w} at t={t}, x={x:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Probe grid: `x ∈ [−10, 10]` step 0.5 along each axis (full grid for
/// `d ≤ 2`), times `{0, h/4, h/2, 3h/4, h}`.
pub fn probe_grid(dim: usize, horizon: f64, time_dependent: bool) -> Vec<(f64, Vec<f64>)> {
    let axis: Vec<f64> = (0..=40).map(|k| -10.0 + 0.5 * k as f64).collect();
    let mut states: Vec<Vec<f64>> = Vec::new();
    match dim {
        1 => states.extend(axis.iter().map(|&v| vec![v])),
        2 => {
            for &a in &axis {
                for &b in &axis {
                    states.push(vec![a, b]);
                }
            }
        }
        _ => {
            for i in 0..dim {
                for &v in &axis {
                    let mut x = vec![0.0; dim];
                    x[i] = v;
                    states.push(x);
                }
            }
            states.extend(axis.iter().map(|&v| vec![v; dim]));
        }
    }
    let times: Vec<f64> = if time_dependent {
        (0..=4).map(|k| horizon * k as f64 / 4.0).collect()
    } else {
        vec![0.0]
    };
    times
        .iter()
        .flat_map(|&t| states.iter().map(move |x| (t, x.clone())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn bound_enforced() {
        let law = SwitchingLaw::homogeneous(|x| x[0].abs(), 2.0, Arc::new(StayKernel)).unwrap();
        assert!(law.rate(0.0, &[1.5]).is_ok());
        assert!(matches!(law.rate(0.0, &[3.0]), Err(SpError::RateOutOfBounds { .. })));
        assert!(law.validate_on_probe(&probe_grid(1, 1.0, false)).is_err());
        let neg = SwitchingLaw::homogeneous(|x| x[0], 20.0, Arc::new(StayKernel)).unwrap();
        assert!(neg.rate(0.0, &[-1.0]).is_err());
    }

    #[test]
    fn kernels_normalized() {
        let probe = probe_grid(1, 1.0, false);
        for k in [
            Arc::new(GaussianShiftKernel { shift: 0.5, sd: 2.0 }) as Arc<dyn Kernel>,
            Arc::new(NormalKernel { mean: vec![0.0], sd: 1.0 }),
            Arc::new(DiracKernel(vec![0.0])),
            Arc::new(StayKernel),
            Arc::new(DiscreteKernel::new(vec![(vec![-1.0], 0.5), (vec![1.0], 0.5)]).unwrap()),
        ] {
            SwitchingLaw::constant(1.0, k).unwrap().validate_on_probe(&probe).unwrap();
        }
        assert!(DiscreteKernel::new(vec![(vec![1.0], 0.7)]).is_err());
    }

    #[test]
    fn discrete_kernel_frequencies() {
        let k = DiscreteKernel::new(vec![(vec![-1.0], 0.25), (vec![1.0], 0.75)]).unwrap();
        let mut rng = RngStream::new(5, 5).switching();
        let n = 40_000;
        let plus = (0..n).filter(|_| k.sample(0.0, &[0.0], &mut rng)[0] > 0.0).count() as f64 / n as f64;
        assert!((plus - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt());
    }

    #[test]
    fn probe_grid_sizes() {
        assert_eq!(probe_grid(1, 1.0, false).len(), 41);
        assert_eq!(probe_grid(2, 1.0, true).len(), 41 * 41 * 5);
        assert_eq!(probe_grid(3, 1.0, false).len(), 41 * 4);
    }
}
