//! Gauss–Legendre rules on `[0, 1]` and their tensor products.

use crate::error::{Result, SmurfError};

/// An `R`-point Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_R` from the Chebyshev-like initial
    /// guess, weights `2 / ((1 - x^2) P_R'(x)^2)`, then mapped to `[0, 1]`.
    pub fn new(points: usize) -> Result<Self> {
        if points == 0 {
            return Err(SmurfError::Config(
                "quadrature needs at least one node per dimension".into(),
            ));
        }
        let n = points;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (value, d) = legendre_with_derivative(n, x);
                derivative = d;
                let dx = value / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            derivative = if d != 0.0 { d } else { derivative };
            let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
            // x runs from +1 down; store ascending on [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product rule over `[0, 1]^M` with the same 1-D rule per axis.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    rule: GaussLegendre,
    dims: usize,
}

impl QuadratureGrid {
    pub fn new(resolution: usize, dims: usize) -> Result<Self> {
        if dims == 0 {
            return Err(SmurfError::Config("quadrature grid needs M >= 1".into()));
        }
        Ok(Self {
            rule: GaussLegendre::new(resolution)?,
            dims,
        })
    }

    /// Default resolution per dimension: 33 for M <= 2, 17 for M = 3 and 9
    /// beyond.
    pub fn default_resolution(dims: usize) -> usize {
        match dims {
            0..=2 => 33,
            3 => 17,
            _ => 9,
        }
    }

    pub fn resolution(&self) -> usize {
        self.rule.len()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    /// Number of tensor nodes, `R^M`.
    pub fn node_count(&self) -> usize {
        self.resolution().pow(self.dims as u32)
    }

    /// Per-axis rule indices of tensor node `k`; axis 0 varies fastest.
    pub fn node_indices(&self, mut k: usize, out: &mut [usize]) {
        let r = self.resolution();
        for slot in out.iter_mut() {
            *slot = k % r;
            k /= r;
        }
    }

    /// Coordinates and weight of tensor node `k`.
    pub fn node(&self, k: usize, point: &mut [f64]) -> f64 {
        let r = self.resolution();
        let mut k = k;
        let mut weight = 1.0;
        for slot in point.iter_mut() {
            let i = k % r;
            k /= r;
            *slot = self.rule.nodes[i];
            weight *= self.rule.weights[i];
        }
        weight
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let mut point = vec![0.0; self.dims];
        (0..self.node_count())
            .map(|k| {
                let w = self.node(k, &mut point);
                w * f(&point)
            })
            .sum()
    }
}
