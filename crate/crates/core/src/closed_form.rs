//! Exactly solvable delta-function potentials.

use crate::error::{Error, Result};
use crate::grid::{build_grid, C};
use crate::quad::Rule;
use crate::scatter::{solve_checked, Side};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

const I: C = C::new(0.0, 1.0);

fn nonsingular(den: C, scale: f64) -> Result<C> {
    if den.norm() <= 1e-14 * scale {
        Err(Error::SingularSystem {
            condition: f64::INFINITY,
        })
    } else {
        Ok(den)
    }
}

/// Amplitude of `z delta(x) delta(y - a)`; the same for either side of
/// incidence.  `z = 4i` is a spectral singularity.
pub fn delta2d_amplitude(z: C, a: f64, k: f64, theta: f64, theta0: f64) -> Result<C> {
    let den = nonsingular(4.0 + I * z, 4.0 + z.norm())?;
    Ok(-(2.0 / PI).sqrt() * z / den * C::from_polar(1.0, -a * k * (theta.sin() - theta0.sin())))
}

/// Smooth reflected-side coefficient `B(p)` for right incidence at `p0`.
pub fn delta2d_b_minus(z: C, a: f64, p: f64, p0: f64) -> C {
    -2.0 * I * z * C::from_polar(1.0, -a * (p - p0)) / (4.0 + I * z)
}

/// Transmitted-side coefficient `A(p)` for right incidence at `p0`.
pub fn delta2d_a_plus(z: C, a: f64, p: f64, p0: f64) -> C {
    delta2d_b_minus(z, a, p, p0)
}

/// Amplitude of the three-dimensional point interaction `z delta(r)`.
pub fn delta3d_amplitude(z: C, k: f64) -> Result<C> {
    let den = nonsingular(4.0 * PI + I * k * z, 4.0 * PI + k * z.norm())?;
    Ok(-z / den)
}

/// Moment `h = 4 pi / (4 pi + i k z)` of the reflected-side coefficient.
pub fn delta3d_moment(z: C, k: f64) -> Result<C> {
    let den = nonsingular(4.0 * PI + I * k * z, 4.0 * PI + k * z.norm())?;
    Ok(4.0 * PI / den)
}

/// Solution of a family of parallel delta lines `sum_n z_n delta(x) delta(y - a_n)`.
#[derive(Debug, Clone)]
pub struct MultiDelta {
    pub lines: Vec<(C, f64)>,
    pub k: f64,
    pub theta0: f64,
    /// Moments `c_n` of the total reflected-side coefficient.
    pub moments: Vec<C>,
    pub condition: f64,
}

/// `\int_{-k}^{k} exp(i d q) / varpi(q) dq`, by Gauss–Legendre in theta
/// with q = k sin(theta); the integrand is entire, so a modest rule suffices.
pub fn osc_moment(k: f64, d: f64) -> f64 {
    let n = 48 + (2.0 * k * d.abs()).ceil() as usize;
    let r = Rule::gauss_legendre(n, -FRAC_PI_2, FRAC_PI_2);
    r.integrate(|t| (d * k * t.sin()).cos())
}

/// Solve `(I + (i / 4 pi) J diag(z)) c = exp(i a p0)` with the moment matrix
/// `J_mn = \int_{-k}^{k} exp(i (a_m - a_n) q) / varpi dq`.
pub fn multi_delta_solve(
    lines: &[(C, f64)],
    k: f64,
    theta0: f64,
    _side: Side,
) -> Result<MultiDelta> {
    let n = lines.len();
    let p0 = k * theta0.sin();
    let a = DMatrix::from_fn(n, n, |m, j| {
        let jm = osc_moment(k, lines[m].1 - lines[j].1);
        let id = if m == j { 1.0 } else { 0.0 };
        C::new(id, 0.0) + I / (4.0 * PI) * jm * lines[j].0
    });
    let rhs = DMatrix::from_fn(n, 1, |m, _| C::from_polar(1.0, lines[m].1 * p0));
    let (c, cond) = solve_checked(a, &rhs)?;
    Ok(MultiDelta {
        lines: lines.to_vec(),
        k,
        theta0,
        moments: c.iter().copied().collect(),
        condition: cond,
    })
}

impl MultiDelta {
    /// Smooth coefficient `-(i/2) sum_n z_n c_n exp(-i a_n p)`, the same on
    /// both sides of the lines.
    pub fn coefficient(&self, p: f64) -> C {
        -0.5 * I
            * self
                .lines
                .iter()
                .zip(&self.moments)
                .map(|(&(z, a), &c)| z * c * C::from_polar(1.0, -a * p))
                .sum::<C>()
    }

    pub fn amplitude(&self, theta: f64) -> C {
        C::new(0.0, -1.0 / (2.0 * PI).sqrt()) * self.coefficient(self.k * theta.sin())
    }
}

/// How the auxiliary-route denominator for a single delta line behaves when
/// the evanescent cutoff grows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Divergence {
    pub p_max_over_k: Vec<f64>,
    /// `\int_{-p_max}^{p_max} dq / varpi` on each grid.
    pub moments: Vec<C>,
    /// `1 + (i z / 4 pi) * moment`.
    pub denominators: Vec<C>,
    /// Least-squares slope of the denominators against ln(p_max / k).
    pub slope: C,
    /// Large-cutoff slope: `(i z / 4 pi) * (-2 i) = z / 2 pi`.
    pub analytic_slope: C,
    /// Moment over the oscillating sector alone (the fundamental route): pi.
    pub osc_moment: C,
}

pub fn auxiliary_divergence(
    z: C,
    k: f64,
    p_max_over_k: &[f64],
    n_osc: usize,
    n_ev: usize,
) -> Result<Divergence> {
    let mut moments = Vec::new();
    let mut osc = C::new(0.0, 0.0);
    for &r in p_max_over_k {
        let g = build_grid(k, n_osc, n_ev, r * k)?;
        let ones = vec![C::new(1.0, 0.0); g.len()];
        moments.push(g.sectors.integrate_over_varpi(&ones));
        osc = g.sectors.integrate_over_varpi(&g.sectors.project(&ones));
    }
    let denominators: Vec<C> = moments
        .iter()
        .map(|m| 1.0 + I * z / (4.0 * PI) * m)
        .collect();
    let xs: Vec<f64> = p_max_over_k.iter().map(|r| r.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = denominators.iter().sum::<C>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: C = xs
        .iter()
        .zip(&denominators)
        .map(|(x, y)| (y - ym) * (x - xm))
        .sum();
    Ok(Divergence {
        p_max_over_k: p_max_over_k.to_vec(),
        moments,
        denominators,
        slope: sxy / sxx,
        analytic_slope: z / (2.0 * PI),
        osc_moment: osc,
    })
}
