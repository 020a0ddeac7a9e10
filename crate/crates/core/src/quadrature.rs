//! Weighted node sets and the Gauss rules used to build them.

use nalgebra::{DMatrix, SymmetricEigen};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// A quadrature node: a point of the state space together with a weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub point: Vec<f64>,
    pub weight: f64,
}

impl Node {
    pub fn new(point: Vec<f64>, weight: f64) -> Self {
        Self { point, weight }
    }

    pub fn scalar(y: f64, weight: f64) -> Self {
        Self {
            point: vec![y],
            weight,
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.point)
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn total_weight(nodes: &[Node]) -> f64 {
    nodes.iter().map(|n| n.weight).sum()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| (mid + half * xi, half * wi))
        .collect()
}

/// Gauss-Hermite rule for the standard normal law: `E f(Z) ≈ Σ w_k f(z_k)`,
/// computed by Golub-Welsch. Weights sum to one.
pub fn gauss_hermite_standard(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Hermite needs at least one node");
    if n == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrize to remove eigen-solver noise
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs
        .into_iter()
        .map(|(x, w)| (x, w / total))
        .unzip()
}

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

/// Memoized [`gauss_hermite_standard`].
pub fn hermite_rule(n: usize) -> Rule {
    static CACHE: OnceLock<RwLock<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.read().unwrap_or_else(|e| e.into_inner()).get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(gauss_hermite_standard(n));
    cache.write().unwrap_or_else(|e| e.into_inner()).entry(n).or_insert(rule).clone()
}

/// Tensor-product Gauss-Hermite nodes for `N(mean, sd² I_d)`.
pub fn gaussian_nodes(mean: &[f64], sd: f64, order: usize) -> Vec<Node> {
    let rule = hermite_rule(order);
    let (z, w) = (&rule.0, &rule.1);
    let d = mean.len();
    let count = order.pow(d as u32);
    let mut out = Vec::with_capacity(count);
    for flat in 0..count {
        let mut point = Vec::with_capacity(d);
        let mut weight = 1.0;
        let mut rest = flat;
        for m in mean {
            let k = rest % order;
            rest /= order;
            point.push(m + sd * z[k]);
            weight *= w[k];
        }
        out.push(Node { point, weight });
    }
    out
}
