//! Jump measures `ν` and their simulation/quadrature representations.
//!
//! Every measure is split into an explicit part, simulated as a compound
//! Poisson process and integrated with quadrature nodes, and (for
//! truncated densities) a small-ball part `{‖y‖ < ε}` that is dropped. The
//! dropped part is summarized by `∫_{‖y‖<ε} ‖y‖² ν(dy)`, which controls the
//! resulting bias.

use crate::error::{Result, SpError};
use crate::quadrature::{gauss_legendre_on, norm, Node};
use crate::rng::StreamRng;
use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::sync::Arc;

/// One-dimensional Lévy density on `ℝ \ {0}`.
pub type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default Gauss-Legendre points per panel. Even, so a panel symmetric
/// around the origin never places a node at `y = 0`.
pub const DEFAULT_PANEL_POINTS: usize = 12;

/// Law of compound Poisson jump sizes.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpSizes {
    /// Discrete law given as `(jump vector, probability)` pairs.
    Atoms(Vec<(Vec<f64>, f64)>),
    /// One-dimensional `N(mean, sd²)` sizes.
    Normal { mean: f64, sd: f64 },
}

#[derive(Clone)]
enum Kind {
    None,
    CompoundPoisson { intensity: f64, sizes: JumpSizes },
    TruncatedDensity { density: Density, epsilon: f64 },
}

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    mass: f64,
    envelope: f64,
}

#[derive(Debug, Clone)]
enum Sampler {
    None,
    Atoms { cumulative: Vec<f64> },
    Normal { mean: f64, sd: f64 },
    Panels { panels: Vec<Panel>, cumulative: Vec<f64> },
}

/// A jump measure together with its explicit-jump sampler and quadrature.
#[derive(Clone)]
pub struct JumpMeasure {
    kind: Kind,
    dim: Option<usize>,
    panel_points: usize,
    explicit_rate: f64,
    compensator: Vec<f64>,
    nodes: Vec<Node>,
    coarse_nodes: Vec<Node>,
    tail_mass: f64,
    small_ball_second_moment: f64,
    sampler: Sampler,
}

impl fmt::Debug for JumpMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::None => "none".to_string(),
            Kind::CompoundPoisson { intensity, sizes } => {
                format!("compound_poisson(intensity={intensity}, sizes={sizes:?})")
            }
            Kind::TruncatedDensity { epsilon, .. } => format!("truncated_density(epsilon={epsilon})"),
        };
        f.debug_struct("JumpMeasure")
            .field("kind", &kind)
            .field("explicit_rate", &self.explicit_rate)
            .field("nodes", &self.nodes.len())
            .field("tail_mass", &self.tail_mass)
            .finish()
    }
}

impl JumpMeasure {
    pub fn none() -> Self {
        Self {
            kind: Kind::None,
            dim: None,
            panel_points: DEFAULT_PANEL_POINTS,
            explicit_rate: 0.0,
            compensator: Vec::new(),
            nodes: Vec::new(),
            coarse_nodes: Vec::new(),
            tail_mass: 0.0,
            small_ball_second_moment: 0.0,
            sampler: Sampler::None,
        }
    }

    /// Compound Poisson measure `ν = intensity · law(sizes)`.
    pub fn compound_poisson(intensity: f64, sizes: JumpSizes) -> Result<Self> {
        Self::compound_poisson_with(intensity, sizes, DEFAULT_PANEL_POINTS)
    }

    pub fn compound_poisson_with(intensity: f64, sizes: JumpSizes, panel_points: usize) -> Result<Self> {
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(SpError::InvalidModel(format!(
                "compound Poisson intensity must be finite and >= 0, got {intensity}"
            )));
        }
        Self::build(Kind::CompoundPoisson { intensity, sizes }, panel_points)
    }

    /// Absolutely continuous one-dimensional measure `ν(dy) = density(y) dy`,
    /// simulated exactly on `{|y| ≥ epsilon}`.
    pub fn truncated_density(density: Density, epsilon: f64) -> Result<Self> {
        Self::truncated_density_with(density, epsilon, DEFAULT_PANEL_POINTS)
    }

    pub fn truncated_density_with(density: Density, epsilon: f64, panel_points: usize) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(SpError::InvalidModel(format!("small-jump cutoff must be > 0, got {epsilon}")));
        }
        Self::build(Kind::TruncatedDensity { density, epsilon }, panel_points)
    }

    /// Same measure with `panel_points` quadrature points per panel.
    pub fn with_panel_points(&self, panel_points: usize) -> Result<Self> {
        Self::build(self.kind.clone(), panel_points)
    }

    fn build(kind: Kind, panel_points: usize) -> Result<Self> {
        if panel_points < 2 || panel_points % 2 == 1 {
            return Err(SpError::InvalidArgument(format!(
                "panel points must be even and >= 2, got {panel_points}"
            )));
        }
        let coarse_points = (panel_points / 2).max(2) & !1;
        let mut m = Self::none();
        m.panel_points = panel_points;
        match &kind {
            Kind::None => {}
            Kind::CompoundPoisson { intensity, sizes } => {
                let intensity = *intensity;
                match sizes {
                    JumpSizes::Atoms(atoms) => {
                        let d = atoms.first().map(|a| a.0.len()).ok_or_else(|| {
                            SpError::InvalidModel("compound Poisson needs at least one atom".into())
                        })?;
                        let mut total = 0.0;
                        let mut cumulative = Vec::with_capacity(atoms.len());
                        for (y, p) in atoms {
                            if y.len() != d {
                                return Err(SpError::InvalidModel("atoms of mixed dimension".into()));
                            }
                            if !(*p >= 0.0 && p.is_finite()) {
                                return Err(SpError::InvalidModel(format!("negative atom weight {p}")));
                            }
                            if norm(y) == 0.0 {
                                return Err(SpError::InvalidModel("jump atom at y = 0".into()));
                            }
                            total += p;
                            cumulative.push(total);
                        }
                        if (total - 1.0).abs() > 1e-9 {
                            return Err(SpError::InvalidModel(format!(
                                "atom probabilities sum to {total}, expected 1"
                            )));
                        }
                        cumulative.iter_mut().for_each(|c| *c /= total);
                        m.dim = Some(d);
                        m.nodes = atoms
                            .iter()
                            .map(|(y, p)| Node::new(y.clone(), intensity * p / total))
                            .collect();
                        m.coarse_nodes = m.nodes.clone();
                        m.sampler = Sampler::Atoms { cumulative };
                    }
                    JumpSizes::Normal { mean, sd } => {
                        if !(sd.is_finite() && *sd > 0.0 && mean.is_finite()) {
                            return Err(SpError::InvalidModel(format!(
                                "normal jump sizes need finite mean and sd > 0, got ({mean}, {sd})"
                            )));
                        }
                        m.dim = Some(1);
                        let pdf = {
                            let (mean, sd) = (*mean, *sd);
                            move |y: f64| {
                                let z = (y - mean) / sd;
                                intensity * (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
                            }
                        };
                        let lo = mean - 5.0 * sd;
                        let hi = mean + 5.0 * sd;
                        let mut breaks: Vec<f64> = (0..=10).map(|k| lo + (hi - lo) * k as f64 / 10.0).collect();
                        for b in [-1.0, 0.0, 1.0] {
                            if b > lo && b < hi {
                                breaks.push(b);
                            }
                        }
                        breaks.sort_by(f64::total_cmp);
                        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                        m.nodes = panel_nodes(&breaks, panel_points, &pdf);
                        m.coarse_nodes = panel_nodes(&breaks, coarse_points, &pdf);
                        m.tail_mass = (intensity - m.nodes.iter().map(|n| n.weight).sum::<f64>()).max(0.0);
                        m.sampler = Sampler::Normal { mean: *mean, sd: *sd };
                    }
                }
                m.explicit_rate = intensity;
            }
            Kind::TruncatedDensity { density, epsilon } => {
                let eps = *epsilon;
                m.dim = Some(1);
                let mut panels = Vec::new();
                let mut nodes = Vec::new();
                let mut coarse = Vec::new();
                let mut tail = 0.0;
                let mut small = 0.0;
                for sign in [-1.0, 1.0] {
                    let f = |y: f64| density(sign * y);
                    let breaks = positive_breaks(eps, &f, panel_points)?;
                    let (side_nodes, side_pan, side_tail) = side_panels(&breaks.0, breaks.1, panel_points, &f)?;
                    tail += side_tail;
                    nodes.extend(side_nodes.into_iter().map(|(y, w)| Node::scalar(sign * y, w)));
                    panels.extend(side_pan.into_iter().map(|p| {
                        if sign > 0.0 {
                            p
                        } else {
                            Panel { a: -p.b, b: -p.a, ..p }
                        }
                    }));
                    let (cn, _, _) = side_panels(&breaks.0, breaks.1, coarse_points, &f)?;
                    coarse.extend(cn.into_iter().map(|(y, w)| Node::scalar(sign * y, w)));
                    // ∫_0^ε y² f(y) dy on geometrically shrinking panels
                    let mut b = eps;
                    for _ in 0..60 {
                        let a = 0.5 * b;
                        small += gauss_legendre_on(a, b, panel_points)
                            .iter()
                            .map(|(y, w)| w * y * y * f(*y))
                            .sum::<f64>();
                        b = a;
                    }
                }
                if nodes.iter().any(|n| !n.weight.is_finite() || n.weight < 0.0) || !small.is_finite() {
                    return Err(SpError::InvalidModel(
                        "density must be finite and non-negative away from the origin".into(),
                    ));
                }
                let mut cumulative = Vec::with_capacity(panels.len());
                let mut acc = 0.0;
                for p in &panels {
                    acc += p.mass;
                    cumulative.push(acc);
                }
                m.explicit_rate = acc;
                cumulative.iter_mut().for_each(|c| *c /= acc.max(f64::MIN_POSITIVE));
                m.nodes = nodes;
                m.coarse_nodes = coarse;
                m.tail_mass = tail;
                m.small_ball_second_moment = small;
                m.sampler = Sampler::Panels { panels, cumulative };
            }
        }
        if let Some(d) = m.dim {
            let mut comp = vec![0.0; d];
            for n in m.nodes.iter().filter(|n| n.norm() < 1.0) {
                for (c, y) in comp.iter_mut().zip(&n.point) {
                    *c += n.weight * y;
                }
            }
            m.compensator = comp;
        }
        m.kind = kind;
        Ok(m)
    }

    /// Dimension of the jumps, `None` for the zero measure.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, Kind::None) || self.explicit_rate == 0.0
    }

    /// Rate of explicitly simulated jumps (`intensity`, or `ν{|y| ≥ ε}`).
    pub fn explicit_rate(&self) -> f64 {
        self.explicit_rate
    }

    /// `∫ y 1{‖y‖<1} ν(dy)` over the explicit part, the drift removed by compensation.
    pub fn compensator(&self, d: usize) -> Vec<f64> {
        if self.compensator.is_empty() {
            vec![0.0; d]
        } else {
            self.compensator.clone()
        }
    }

    /// Quadrature nodes of the explicit part. Weights carry the ν mass.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Same rule with half the points per panel (atoms are unchanged).
    pub fn coarse_nodes(&self) -> &[Node] {
        &self.coarse_nodes
    }

    pub fn panel_points(&self) -> usize {
        self.panel_points
    }

    /// ν mass beyond the outermost quadrature panel.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `∫_{‖y‖<ε} ‖y‖² ν(dy)`; zero for finite-activity measures.
    pub fn small_ball_second_moment(&self) -> f64 {
        self.small_ball_second_moment
    }

    pub fn cutoff(&self) -> f64 {
        match self.kind {
            Kind::TruncatedDensity { epsilon, .. } => epsilon,
            _ => 0.0,
        }
    }

    /// Draws one explicit jump size from `ν` restricted and normalized.
    pub fn sample_size(&self, rng: &mut StreamRng) -> Vec<f64> {
        match &self.sampler {
            Sampler::None => Vec::new(),
            Sampler::Atoms { cumulative } => {
                let k = pick(cumulative, rng);
                match &self.kind {
                    Kind::CompoundPoisson {
                        sizes: JumpSizes::Atoms(atoms),
                        ..
                    } => atoms[k].0.clone(),
                    _ => unreachable!("atom sampler without atoms"),
                }
            }
            Sampler::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                vec![mean + sd * z]
            }
            Sampler::Panels { panels, cumulative } => {
                let Kind::TruncatedDensity { density, .. } = &self.kind else {
                    unreachable!("panel sampler without density")
                };
                let p = &panels[pick(cumulative, rng)];
                loop {
                    let y = p.a + (p.b - p.a) * rng.random::<f64>();
                    if rng.random::<f64>() * p.envelope <= density(y) {
                        return vec![y];
                    }
                }
            }
        }
    }

    /// `∫ (e^{i u·y} − 1 − i u·y 1{‖y‖<1}) ν(dy)` in closed form for
    /// compound Poisson measures; `None` for truncated densities.
    pub fn characteristic_integral(&self, u: &[f64]) -> Option<Complex<f64>> {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        match &self.kind {
            Kind::None => Some(Complex::new(0.0, 0.0)),
            Kind::CompoundPoisson { intensity, sizes } => {
                let phi = match sizes {
                    JumpSizes::Atoms(atoms) => atoms
                        .iter()
                        .map(|(y, p)| Complex::from_polar(*p, dot(u, y)))
                        .sum::<Complex<f64>>(),
                    JumpSizes::Normal { mean, sd } => {
                        Complex::from_polar((-0.5 * u[0] * u[0] * sd * sd).exp(), u[0] * mean)
                    }
                };
                let comp = self.compensator(u.len());
                Some(*intensity * (phi - 1.0) - Complex::new(0.0, dot(u, &comp)))
            }
            Kind::TruncatedDensity { .. } => None,
        }
    }
}

fn pick(cumulative: &[f64], rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len() - 1)
}

fn panel_nodes(breaks: &[f64], points: usize, f: &dyn Fn(f64) -> f64) -> Vec<Node> {
    breaks
        .windows(2)
        .flat_map(|w| gauss_legendre_on(w[0], w[1], points))
        .map(|(y, w)| Node::scalar(y, w * f(y)))
        .collect()
}

/// Panel boundaries on `[ε, ∞)`: doubling panels until a panel beyond 1
/// carries less than 1e-7 of the accumulated mass. Returns the breaks and
/// the mass of the last panel, used as the tail estimate.
fn positive_breaks(eps: f64, f: &dyn Fn(f64) -> f64, points: usize) -> Result<(Vec<f64>, f64)> {
    let mut breaks = vec![eps];
    let mut b = eps;
    while b < 1.0 {
        let next = (2.0 * b).min(1.0);
        breaks.push(next);
        b = next;
    }
    let mut big_mass = 0.0;
    let mut last = 0.0;
    for k in 0..80 {
        let next = 2.0 * b;
        let mass: f64 = gauss_legendre_on(b, next, points).iter().map(|(y, w)| w * f(*y)).sum();
        if !mass.is_finite() {
            return Err(SpError::InvalidModel(format!("density not integrable on [{b}, {next}]")));
        }
        breaks.push(next);
        big_mass += mass;
        last = mass;
        b = next;
        if k >= 2 && mass <= 1e-7 * big_mass.max(f64::MIN_POSITIVE) {
            return Ok((breaks, last));
        }
    }
    Err(SpError::InvalidModel(format!(
        "density tail too heavy: last panel ending at {b} still carries mass {last}"
    )))
}

type SideQuadrature = (Vec<(f64, f64)>, Vec<Panel>, f64);

fn side_panels(breaks: &[f64], tail: f64, points: usize, f: &dyn Fn(f64) -> f64) -> Result<SideQuadrature> {
    let mut nodes = Vec::new();
    let mut panels = Vec::new();
    for w in breaks.windows(2) {
        let rule = gauss_legendre_on(w[0], w[1], points);
        let mut mass = 0.0;
        let mut env: f64 = f(w[0]).max(f(w[1]));
        for (y, wt) in &rule {
            let v = f(*y);
            env = env.max(v);
            mass += wt * v;
            nodes.push((*y, wt * v));
        }
        panels.push(Panel {
            a: w[0],
            b: w[1],
            mass,
            envelope: 1.1 * env,
        });
    }
    Ok((nodes, panels, tail))
}
