//! Independent references used to check the transfer-matrix engine.
//!
//! - [`bessel`]: Bessel and Hankel functions of order 0 and 1
//! - [`oned`]: one-dimensional transfer matrices, closed form and integrated
//! - [`born_series_greens_2d`]: real-space Born series with the planar Green's function

pub mod bessel;
pub mod oned;

use crate::error::{Error, Result};
use crate::grid::C;
use crate::par::{self, Execution};
use crate::potential::{PotentialSpec, Transverse};
use crate::quad::Rule;
use bessel::{hankel1_0, hankel1_1};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C = C::new(0.0, 1.0);

/// Outgoing planar Green's function `-(i/4) H0(k r)` of the Helmholtz operator.
pub fn green_2d(k: f64, r: f64) -> C {
    -0.25 * I * hankel1_0(k * r)
}

/// `\int_0^R green_2d(r) 2 pi r dr / (2 pi)`, i.e. the radial antiderivative
/// `F(R) = \int_0^R G(r) r dr`.
fn green_radial_integral(k: f64, rr: f64) -> C {
    -(0.25 * I / k) * rr * hankel1_1(k * rr) + 1.0 / (2.0 * PI * k * k)
}

/// Integral of the Green's function over a centred hx x hy rectangle.
fn green_self_cell(k: f64, hx: f64, hy: f64) -> C {
    let rule = Rule::gauss_legendre(48, 0.0, 1.0);
    let wedge = |d: f64, span: f64| -> C {
        // 2 \int_{-span}^{span} F(d / cos phi) dphi
        let mut acc = C::new(0.0, 0.0);
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let phi = -span + 2.0 * span * t;
            acc += green_radial_integral(k, d / phi.cos()) * (w * 2.0 * span);
        }
        acc * 2.0
    };
    wedge(0.5 * hx, (hy / hx).atan()) + wedge(0.5 * hy, (hx / hy).atan())
}

fn green_cell(k: f64, cx: f64, cy: f64, hx: f64, hy: f64) -> C {
    let rule = Rule::gauss_legendre(16, -0.5, 0.5);
    let mut acc = C::new(0.0, 0.0);
    for (&a, &wa) in rule.nodes.iter().zip(&rule.weights) {
        for (&b, &wb) in rule.nodes.iter().zip(&rule.weights) {
            let r = (cx + a * hx).hypot(cy + b * hy);
            acc += green_2d(k, r) * (wa * wb);
        }
    }
    acc * (hx * hy)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BornSeries {
    pub thetas: Vec<f64>,
    /// Amplitude contribution of each order, `terms[n - 1]` for order n.
    pub terms: Vec<Vec<C>>,
    /// Partial sums through each order.
    pub partial: Vec<Vec<C>>,
    /// max|term_{n+1}| / max|term_n|.
    pub ratios: Vec<f64>,
    pub cells: (usize, usize),
}

impl BornSeries {
    pub fn total(&self) -> &[C] {
        self.partial.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// Born series of the given order for left incidence at `theta0`, from a
/// piecewise-constant discretization of the Lippmann–Schwinger equation on a
/// uniform cell grid of spacing about `h`.  Near and self cells use integrated
/// kernels; the far field is `-sqrt(pi/2) \int e^{-i k r.rhat} v psi` for
/// `psi_inc = e^{i k0.r} / 2 pi`.
pub fn born_series_greens_2d(
    spec: &PotentialSpec,
    k: f64,
    theta0: f64,
    thetas: &[f64],
    order: usize,
    h: f64,
    exec: Execution,
) -> Result<BornSeries> {
    if spec.dim != 2 || !spec.sheets().is_empty() || !spec.tables.is_empty() {
        return Err(Error::Unsupported(
            "Green's function series needs a smooth planar potential".into(),
        ));
    }
    let (xa, xb) = spec
        .support()
        .ok_or_else(|| Error::InvalidPotential("zero potential".into()))?;
    let mut ya = f64::INFINITY;
    let mut yb = f64::NEG_INFINITY;
    for c in &spec.components {
        match &c.transverse {
            Transverse::Gaussian { width, center } => {
                ya = ya.min(center[0] - 7.0 * width);
                yb = yb.max(center[0] + 7.0 * width);
            }
            _ => {
                return Err(Error::Unsupported(
                    "Green's function series needs Gaussian transverse profiles".into(),
                ))
            }
        }
    }
    let nx = ((xb - xa) / h).ceil().max(1.0) as usize;
    let ny = ((yb - ya) / h).ceil().max(1.0) as usize;
    let hx = (xb - xa) / nx as f64;
    let hy = (yb - ya) / ny as f64;
    let cx = |i: usize| xa + hx * (i as f64 + 0.5);
    let cy = |j: usize| ya + hy * (j as f64 + 0.5);
    let cells = nx * ny;
    let v: Vec<C> = (0..cells)
        .map(|c| {
            spec.value(cx(c / ny), [cy(c % ny), 0.0])
                .unwrap_or_default()
        })
        .collect();
    // kernel on offsets
    let wx = 2 * nx - 1;
    let wy = 2 * ny - 1;
    let self_cell = green_self_cell(k, hx, hy);
    let kern: Vec<C> = par::map_range(exec, wx * wy, |idx| {
        let di = idx as isize / wy as isize - (nx as isize - 1);
        let dj = idx as isize % wy as isize - (ny as isize - 1);
        let (ox, oy) = (di as f64 * hx, dj as f64 * hy);
        if di == 0 && dj == 0 {
            self_cell
        } else if di.abs() <= 2 && dj.abs() <= 2 {
            green_cell(k, ox, oy, hx, hy)
        } else {
            green_2d(k, ox.hypot(oy)) * (hx * hy)
        }
    });
    let (s0, c0) = theta0.sin_cos();
    let mut u: Vec<C> = (0..cells)
        .map(|c| C::from_polar(1.0 / (2.0 * PI), k * (c0 * cx(c / ny) + s0 * cy(c % ny))))
        .collect();
    let far = |src: &[C]| -> Vec<C> {
        thetas
            .iter()
            .map(|&t| {
                let (s, c) = t.sin_cos();
                let mut acc = C::new(0.0, 0.0);
                for (q, &val) in src.iter().enumerate() {
                    if val != C::new(0.0, 0.0) {
                        acc += val * C::from_polar(1.0, -k * (c * cx(q / ny) + s * cy(q % ny)));
                    }
                }
                acc * (-(PI / 2.0).sqrt() * hx * hy)
            })
            .collect()
    };
    let mut terms = Vec::with_capacity(order);
    for n in 1..=order {
        let src: Vec<C> = v.iter().zip(&u).map(|(a, b)| a * b).collect();
        terms.push(far(&src));
        if n < order {
            u = par::map_range(exec, cells, |t| {
                let (ti, tj) = ((t / ny) as isize, (t % ny) as isize);
                let mut acc = C::new(0.0, 0.0);
                for (q, &sv) in src.iter().enumerate() {
                    if sv == C::new(0.0, 0.0) {
                        continue;
                    }
                    let di = ti - (q / ny) as isize + nx as isize - 1;
                    let dj = tj - (q % ny) as isize + ny as isize - 1;
                    acc += kern[di as usize * wy + dj as usize] * sv;
                }
                acc
            });
        }
    }
    let mut partial: Vec<Vec<C>> = Vec::with_capacity(order);
    for t in &terms {
        let next = match partial.last() {
            Some(p) => p.iter().zip(t).map(|(a, b)| a + b).collect(),
            None => t.clone(),
        };
        partial.push(next);
    }
    let maxabs = |v: &[C]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let ratios = terms
        .windows(2)
        .map(|w| maxabs(&w[1]) / maxabs(&w[0]))
        .collect();
    Ok(BornSeries {
        thetas: thetas.to_vec(),
        terms,
        partial,
        ratios,
        cells: (nx, ny),
    })
}
