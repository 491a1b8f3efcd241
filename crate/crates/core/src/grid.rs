//! Transverse momentum space: dispersion, sector split and quadrature grids.
//!
//! The oscillating sector |p| < k carries propagating waves, the evanescent
//! sector k < |p| <= p_max carries growing/decaying ones.  Both sectors use
//! Gauss–Legendre rules in a variable that absorbs the square-root
//! singularity of 1/varpi at |p| = k:
//!
//! * oscillating: p = k sin(theta), so dp / varpi = d(theta);
//! * evanescent:  |p| = k cosh(t), so dp / |varpi| = dt.
//!
//! No node ever sits on |p| = k.

use crate::error::{Error, Result};
use crate::quad::Rule;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

pub type C = Complex64;

/// Largest modulus among complex entries.
pub fn maxabs<'a>(values: impl IntoIterator<Item = &'a C>) -> f64 {
    values.into_iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Transverse momentum.  Planar problems only use the first component.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Oscillating,
    Evanescent,
}

/// Dispersion: sqrt(k^2 - q^2) below k, i sqrt(q^2 - k^2) above, with q = |p|.
pub fn varpi(q: f64, k: f64) -> C {
    let q = q.abs();
    if q < k {
        C::new(((k - q) * (k + q)).sqrt(), 0.0)
    } else {
        C::new(0.0, ((q - k) * (q + k)).sqrt())
    }
}

pub fn sector_of(q: f64, k: f64) -> Sector {
    if q.abs() < k {
        Sector::Oscillating
    } else {
        Sector::Evanescent
    }
}

/// Node data shared by the planar and spatial grids.  Oscillating nodes come
/// first, evanescent nodes after them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sectors {
    pub k: f64,
    /// Number of transverse dimensions: 1 (planar problems) or 2 (spatial).
    pub dim: usize,
    pub points: Vec<Point>,
    /// Plain quadrature weights for integrals over dp (or d^2p).
    pub weights: Vec<f64>,
    pub varpi: Vec<C>,
    /// weight / varpi, computed from the substitution rather than by division.
    pub w_over_varpi: Vec<C>,
    pub n_osc: usize,
}

impl Sectors {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_ev(&self) -> usize {
        self.len() - self.n_osc
    }

    pub fn sector(&self, i: usize) -> Sector {
        if i < self.n_osc {
            Sector::Oscillating
        } else {
            Sector::Evanescent
        }
    }

    /// (2 pi)^-dim, the prefactor of the transverse convolution.
    pub fn convolution_norm(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(-(self.dim as i32))
    }

    /// (2 pi)^dim, the weight that the incident delta carries.
    pub fn delta_norm(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.dim as i32)
    }

    /// Largest decay rate Im(varpi) on the grid.
    pub fn max_decay(&self) -> f64 {
        self.varpi.iter().map(|v| v.im).fold(0.0, f64::max)
    }

    pub fn norm_of(&self, p: Point) -> f64 {
        if self.dim == 1 {
            p[0].abs()
        } else {
            p[0].hypot(p[1])
        }
    }

    pub fn varpi_at(&self, p: Point) -> C {
        varpi(self.norm_of(p), self.k)
    }

    /// Integral of a grid function over transverse momentum.
    pub fn integrate(&self, f: &[C]) -> C {
        f.iter().zip(&self.weights).map(|(v, &w)| v * w).sum()
    }

    /// Integral of f / varpi, the moment that appears in every solve.
    pub fn integrate_over_varpi(&self, f: &[C]) -> C {
        f.iter().zip(&self.w_over_varpi).map(|(v, w)| v * w).sum()
    }

    /// Zero the evanescent entries (the projection onto the oscillating sector).
    pub fn project(&self, f: &[C]) -> Vec<C> {
        f.iter()
            .enumerate()
            .map(|(i, &v)| if i < self.n_osc { v } else { C::new(0.0, 0.0) })
            .collect()
    }

    pub fn same_layout(&self, other: &Sectors) -> bool {
        self == other
    }
}

/// Grid for planar (two-dimensional) scattering.
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    pub k: f64,
    pub p_max: f64,
    /// Oscillating rule in theta on (-pi/2, pi/2).
    pub theta: Rule,
    /// Evanescent rule in t on (0, arccosh(p_max / k)), used on both sides.
    pub ev: Rule,
    pub sectors: Sectors,
}

/// Build the planar grid.  `n_ev` counts evanescent nodes on each side.
pub fn build_grid(k: f64, n_osc: usize, n_ev: usize, p_max: f64) -> Result<MomentumGrid> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidGrid(format!("k must be positive, got {k}")));
    }
    if !(p_max.is_finite() && p_max > k) {
        return Err(Error::InvalidGrid(format!(
            "p_max = {p_max} must exceed k = {k}"
        )));
    }
    if n_osc < 2 {
        return Err(Error::InvalidGrid(
            "need at least 2 oscillating nodes".into(),
        ));
    }
    let theta = Rule::gauss_legendre(n_osc, -FRAC_PI_2, FRAC_PI_2);
    let t_max = (p_max / k).acosh();
    let ev = if n_ev > 0 {
        Rule::gauss_legendre(n_ev, 0.0, t_max)
    } else {
        Rule {
            nodes: vec![],
            weights: vec![],
            bary: vec![],
        }
    };
    let mut points = Vec::with_capacity(n_osc + 2 * n_ev);
    let mut weights = Vec::with_capacity(points.capacity());
    let mut vp = Vec::with_capacity(points.capacity());
    let mut wov = Vec::with_capacity(points.capacity());
    for (&th, &w) in theta.nodes.iter().zip(&theta.weights) {
        points.push([k * th.sin(), 0.0]);
        weights.push(w * k * th.cos());
        vp.push(C::new(k * th.cos(), 0.0));
        wov.push(C::new(w, 0.0));
    }
    let mut push_ev = |t: f64, w: f64, sign: f64| {
        points.push([sign * k * t.cosh(), 0.0]);
        weights.push(w * k * t.sinh());
        vp.push(C::new(0.0, k * t.sinh()));
        // dp / (i k sinh t) = -i dt
        wov.push(C::new(0.0, -w));
    };
    for (&t, &w) in ev.nodes.iter().zip(&ev.weights).rev() {
        push_ev(t, w, -1.0);
    }
    for (&t, &w) in ev.nodes.iter().zip(&ev.weights) {
        push_ev(t, w, 1.0);
    }
    Ok(MomentumGrid {
        k,
        p_max,
        theta,
        ev,
        sectors: Sectors {
            k,
            dim: 1,
            points,
            weights,
            varpi: vp,
            w_over_varpi: wov,
            n_osc,
        },
    })
}

impl MomentumGrid {
    pub fn n_osc(&self) -> usize {
        self.sectors.n_osc
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn p(&self, i: usize) -> f64 {
        self.sectors.points[i][0]
    }

    /// Index of the node at -p.
    pub fn mirror(&self, i: usize) -> usize {
        let n = self.n_osc();
        if i < n {
            n - 1 - i
        } else {
            let ne = self.ev.len();
            let j = i - n;
            n + (2 * ne - 1 - j)
        }
    }

    /// Interpolate oscillating-sector values (indexed like the theta rule) at
    /// the transverse momentum k sin(phi), phi in [-pi/2, pi/2].
    pub fn interpolate_osc(&self, values: &[C], phi: f64) -> C {
        self.theta.interpolate(&values[..self.n_osc()], phi)
    }
}

impl Sectors {
    /// Cheap fingerprint used to refuse composing operators from different grids.
    pub fn tag(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.k.to_bits().hash(&mut h);
        self.dim.hash(&mut h);
        self.n_osc.hash(&mut h);
        for p in &self.points {
            p[0].to_bits().hash(&mut h);
            p[1].to_bits().hash(&mut h);
        }
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn varpi_branches() {
        assert!((varpi(0.6, 1.0) - C::new(0.8, 0.0)).norm() < 1e-15);
        assert!((varpi(-1.25, 1.0) - C::new(0.0, 0.75)).norm() < 1e-15);
        assert_eq!(sector_of(1.0, 1.0), Sector::Evanescent);
    }

    #[test]
    fn oscillating_moment_is_pi() {
        let g = build_grid(1.3, 24, 8, 4.0 * 1.3).unwrap();
        let ones = vec![C::new(1.0, 0.0); g.len()];
        let m = g.sectors.integrate_over_varpi(&g.sectors.project(&ones));
        assert!((m - C::new(PI, 0.0)).norm() < 1e-13);
        // the full oscillating interval has length 2k
        let l: f64 = g.sectors.weights[..24].iter().sum();
        assert!((l - 2.6).abs() < 1e-10);
    }

    #[test]
    fn evanescent_moment_is_arccosh() {
        let k = 0.8;
        let g = build_grid(k, 8, 12, 5.0 * k).unwrap();
        let ev: C = g.sectors.w_over_varpi[8..].iter().sum();
        assert!((ev - C::new(0.0, -2.0 * 5.0f64.acosh())).norm() < 1e-13);
        let len: f64 = g.sectors.weights[8..].iter().sum();
        assert!((len - 2.0 * (5.0 * k - k)).abs() < 1e-10);
    }

    #[test]
    fn mirror_symmetry_and_no_node_on_the_light_cone() {
        let g = build_grid(1.0, 11, 7, 3.0).unwrap();
        for i in 0..g.len() {
            let j = g.mirror(i);
            assert!((g.p(i) + g.p(j)).abs() < 1e-14);
            assert!((g.p(i).abs() - 1.0).abs() > 1e-6);
        }
        // ascending within the oscillating block and each evanescent side
        for block in [
            &g.sectors.points[..11],
            &g.sectors.points[11..18],
            &g.sectors.points[18..],
        ] {
            for w in block.windows(2) {
                assert!(w[0][0] < w[1][0]);
            }
        }
        assert!(g.p(11) < -1.0 && g.p(18) > 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_grid(1.0, 8, 4, 0.5).is_err());
        assert!(build_grid(-1.0, 8, 4, 3.0).is_err());
        assert!(build_grid(1.0, 1, 4, 3.0).is_err());
    }
}
