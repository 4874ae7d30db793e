//! Composite Gauss–Legendre quadrature.

use std::f64::consts::PI;

/// Nodes per unit-length panel used for lengths and defect integrals.
pub const NODES_PER_UNIT: usize = 64;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[−1, 1]`,
/// by Newton iteration on the three-term recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_m(x), P_m'(x))`.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let m = m as f64;
    (p1, m * (x * p1 - p0) / (x * x - 1.0))
}

/// A reusable rule: composite Gauss–Legendre with unit-length panels.
#[derive(Debug, Clone)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(NODES_PER_UNIT)
    }
}

impl Quadrature {
    pub fn new(nodes_per_panel: usize) -> Self {
        let (nodes, weights) = gauss_legendre(nodes_per_panel);
        Self { nodes, weights }
    }

    /// `∫ₐᵇ f`, splitting `[a, b]` into `ceil(b − a)` panels.
    pub fn integrate<E>(
        &self,
        a: f64,
        b: f64,
        mut f: impl FnMut(f64) -> Result<f64, E>,
    ) -> Result<f64, E> {
        if b == a {
            return Ok(0.0);
        }
        let panels = ((b - a).abs().ceil() as usize).max(1);
        let width = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let lo = a + width * k as f64;
            let (mid, half) = (lo + 0.5 * width, 0.5 * width);
            let mut panel = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                panel += w * f(mid + half * x)?;
            }
            total += half * panel;
        }
        Ok(total)
    }
}
