//! Gauss–Legendre rules and barycentric interpolation on their nodes.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use std::num::NonZeroUsize;

/// An n-point Gauss–Legendre rule mapped to `[a, b]`, nodes ascending.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Barycentric weights for polynomial interpolation through `nodes`.
    pub bary: Vec<f64>,
}

impl Rule {
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
        let n = NonZeroUsize::new(n).expect("rule needs at least one node");
        let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let nodes = pairs.iter().map(|&(x, _)| mid + half * x).collect();
        let weights = pairs.iter().map(|&(_, w)| half * w).collect();
        // Closed form for Legendre points: (-1)^j sqrt((1 - x_j^2) w_j).
        let bary = pairs
            .iter()
            .enumerate()
            .map(|(j, &(x, w))| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * ((1.0 - x * x) * w).sqrt()
            })
            .collect();
        Rule {
            nodes,
            weights,
            bary,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Evaluate the interpolating polynomial of `values` at `t`.
    pub fn interpolate(&self, values: &[Complex64], t: f64) -> Complex64 {
        barycentric(&self.nodes, &self.bary, values, t)
    }
}

/// Second-form barycentric interpolation.
pub fn barycentric(nodes: &[f64], bary: &[f64], values: &[Complex64], t: f64) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for ((&x, &w), &v) in nodes.iter().zip(bary).zip(values) {
        let d = t - x;
        if d == 0.0 {
            return v;
        }
        let c = w / d;
        num += v * c;
        den += c;
    }
    num / den
}

/// Trigonometric interpolation on an even number of equispaced periodic nodes
/// `phi_j = phi_0 + 2 pi j / n`.
pub fn trig_interpolate(phi0: f64, values: &[Complex64], phi: f64) -> Complex64 {
    let n = values.len();
    debug_assert!(n.is_multiple_of(2), "even node count expected");
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (j, &v) in values.iter().enumerate() {
        let d = 0.5 * (phi - phi0 - h * j as f64);
        let s = d.sin();
        if s.abs() < 1e-15 {
            return v;
        }
        let c = if j % 2 == 0 { 1.0 } else { -1.0 } * d.cos() / s;
        num += v * c;
        den += c;
    }
    num / den
}
