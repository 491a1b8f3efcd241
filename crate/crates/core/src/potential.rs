//! Potential descriptions and their partial Fourier transforms.
//!
//! A potential is `coupling * sum_c weight_c * chi_c(x) * g_c(r)` where `x` is
//! the evolution coordinate (z in three dimensions) and `r` the transverse
//! position (y, or (x, y) in three dimensions).  Everything downstream needs
//! only the transverse transform `g~(K) = \int dr e^{-i K.r} g(r)`, so the
//! transverse factors are described directly in momentum space.

use crate::error::{Error, Result};
use crate::grid::{Point, Sectors, C};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

fn default_cutoff() -> f64 {
    6.0
}

fn unit() -> C {
    C::new(1.0, 0.0)
}

fn planar() -> usize {
    2
}

/// Smooth bump `e * exp(-1 / (1 - t^2))` on (lo, hi), peak value 1, zero outside.
pub fn bump(v: f64, lo: f64, hi: f64) -> f64 {
    if v <= lo || v >= hi {
        return 0.0;
    }
    let t = (2.0 * v - lo - hi) / (hi - lo);
    let d = 1.0 - t * t;
    if d <= 0.0 {
        0.0
    } else {
        E * (-1.0 / d).exp()
    }
}

/// Profile along the evolution coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum XProfile {
    /// exp(-(x - center)^2 / 2 width^2), cut off at |x - center| = cutoff * width.
    Gaussian {
        #[serde(default)]
        center: f64,
        width: f64,
        #[serde(default = "default_cutoff")]
        cutoff: f64,
    },
    /// Indicator of [lo, hi].
    Rect { lo: f64, hi: f64 },
    /// Smooth compactly supported bump on (lo, hi) with peak 1.
    Bump { lo: f64, hi: f64 },
    /// delta(x - at).
    Sheet { at: f64 },
}

impl XProfile {
    pub fn support(&self) -> (f64, f64) {
        match *self {
            XProfile::Gaussian {
                center,
                width,
                cutoff,
            } => (center - cutoff * width, center + cutoff * width),
            XProfile::Rect { lo, hi } | XProfile::Bump { lo, hi } => (lo, hi),
            XProfile::Sheet { at } => (at, at),
        }
    }

    pub fn sheet(&self) -> Option<f64> {
        match *self {
            XProfile::Sheet { at } => Some(at),
            _ => None,
        }
    }

    /// Pointwise value; zero for sheets and outside the support.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            XProfile::Gaussian {
                center,
                width,
                cutoff,
            } => {
                let u = (x - center) / width;
                if u.abs() > cutoff {
                    0.0
                } else {
                    (-0.5 * u * u).exp()
                }
            }
            XProfile::Rect { lo, hi } => {
                if x >= lo && x <= hi {
                    1.0
                } else {
                    0.0
                }
            }
            XProfile::Bump { lo, hi } => bump(x, lo, hi),
            XProfile::Sheet { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            XProfile::Gaussian {
                width,
                cutoff,
                center,
            } => width > 0.0 && cutoff > 0.0 && center.is_finite(),
            XProfile::Rect { lo, hi } | XProfile::Bump { lo, hi } => lo < hi,
            XProfile::Sheet { at } => at.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPotential(format!("bad x-profile {self:?}")))
        }
    }

    fn shifted(&self, d: f64) -> XProfile {
        match self.clone() {
            XProfile::Gaussian {
                center,
                width,
                cutoff,
            } => XProfile::Gaussian {
                center: center + d,
                width,
                cutoff,
            },
            XProfile::Rect { lo, hi } => XProfile::Rect {
                lo: lo + d,
                hi: hi + d,
            },
            XProfile::Bump { lo, hi } => XProfile::Bump {
                lo: lo + d,
                hi: hi + d,
            },
            XProfile::Sheet { at } => XProfile::Sheet { at: at + d },
        }
    }

    fn mirrored(&self) -> XProfile {
        match self.clone() {
            XProfile::Gaussian {
                center,
                width,
                cutoff,
            } => XProfile::Gaussian {
                center: -center,
                width,
                cutoff,
            },
            XProfile::Rect { lo, hi } => XProfile::Rect { lo: -hi, hi: -lo },
            XProfile::Bump { lo, hi } => XProfile::Bump { lo: -hi, hi: -lo },
            XProfile::Sheet { at } => XProfile::Sheet { at: -at },
        }
    }
}

/// A transverse point source of given strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSource {
    #[serde(default = "unit")]
    pub strength: C,
    /// Transverse position; planar problems use only the first entry.
    #[serde(default)]
    pub at: [f64; 2],
}

/// Transverse factor, described by its Fourier transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Transverse {
    /// exp(-|r - center|^2 / 2 width^2).
    Gaussian {
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Sum of delta functions.
    Points { points: Vec<PointSource> },
    /// Band-limited: the transform is a smooth bump in K.e on (lo, hi), with
    /// e = (cos angle, sin angle); in three dimensions it is multiplied by a
    /// Gaussian of the given width across e.
    Band {
        lo: f64,
        hi: f64,
        #[serde(default)]
        width: f64,
        #[serde(default)]
        angle: f64,
    },
    /// Constant in the transverse direction (transform is a delta at K = 0).
    Uniform,
}

impl Transverse {
    /// Transform at transverse momentum `kk`; `tdim` is 1 or 2.  The uniform
    /// profile has no pointwise transform and returns zero.
    pub fn transform(&self, kk: Point, tdim: usize) -> C {
        match self {
            Transverse::Gaussian { width, center } => {
                let w = *width;
                if tdim == 1 {
                    let q = kk[0];
                    C::from_polar(
                        (2.0 * PI).sqrt() * w * (-0.5 * q * q * w * w).exp(),
                        -q * center[0],
                    )
                } else {
                    let q2 = kk[0] * kk[0] + kk[1] * kk[1];
                    C::from_polar(
                        2.0 * PI * w * w * (-0.5 * q2 * w * w).exp(),
                        -(kk[0] * center[0] + kk[1] * center[1]),
                    )
                }
            }
            Transverse::Points { points } => points
                .iter()
                .map(|s| {
                    let ph = if tdim == 1 {
                        kk[0] * s.at[0]
                    } else {
                        kk[0] * s.at[0] + kk[1] * s.at[1]
                    };
                    s.strength * C::from_polar(1.0, -ph)
                })
                .sum(),
            Transverse::Band {
                lo,
                hi,
                width,
                angle,
            } => {
                if tdim == 1 {
                    C::new(bump(kk[0], *lo, *hi), 0.0)
                } else {
                    let (s, c) = angle.sin_cos();
                    let along = kk[0] * c + kk[1] * s;
                    let across = -kk[0] * s + kk[1] * c;
                    let g =
                        (2.0 * PI).sqrt() * width * (-0.5 * across * across * width * width).exp();
                    C::new(bump(along, *lo, *hi) * g, 0.0)
                }
            }
            Transverse::Uniform => C::new(0.0, 0.0),
        }
    }

    /// Real-space value when it exists as an ordinary function.
    pub fn real_space(&self, r: Point, tdim: usize) -> Option<C> {
        match self {
            Transverse::Gaussian { width, center } => {
                let d2 = if tdim == 1 {
                    (r[0] - center[0]).powi(2)
                } else {
                    (r[0] - center[0]).powi(2) + (r[1] - center[1]).powi(2)
                };
                Some(C::new((-0.5 * d2 / (width * width)).exp(), 0.0))
            }
            Transverse::Uniform => Some(C::new(1.0, 0.0)),
            _ => None,
        }
    }

    /// Largest `beta` such that the transform vanishes for `K.e <= beta`
    /// (e = (cos angle, sin angle)); `None` when no such bound exists.
    pub fn lower_edge(&self, angle: f64, tdim: usize) -> Option<f64> {
        match self {
            Transverse::Band { lo, angle: a, .. } => {
                let aligned = tdim == 1 || (a - angle).abs() < 1e-12;
                if aligned {
                    Some(*lo)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn validate(&self, tdim: usize) -> Result<()> {
        let ok = match self {
            Transverse::Gaussian { width, .. } => *width > 0.0,
            Transverse::Points { points } => !points.is_empty(),
            Transverse::Band { lo, hi, width, .. } => lo < hi && (tdim == 1 || *width > 0.0),
            Transverse::Uniform => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPotential(format!(
                "bad transverse profile {self:?}"
            )))
        }
    }

    fn rotated(&self, phi: f64) -> Transverse {
        let rot = |p: [f64; 2]| {
            let (s, c) = phi.sin_cos();
            [c * p[0] - s * p[1], s * p[0] + c * p[1]]
        };
        match self.clone() {
            Transverse::Gaussian { width, center } => Transverse::Gaussian {
                width,
                center: rot(center),
            },
            Transverse::Points { points } => Transverse::Points {
                points: points
                    .into_iter()
                    .map(|p| PointSource {
                        strength: p.strength,
                        at: rot(p.at),
                    })
                    .collect(),
            },
            Transverse::Band {
                lo,
                hi,
                width,
                angle,
            } => Transverse::Band {
                lo,
                hi,
                width,
                angle: angle + phi,
            },
            Transverse::Uniform => Transverse::Uniform,
        }
    }
}

/// One separable term `weight * chi(x) * g(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    #[serde(default = "unit")]
    pub weight: C,
    pub x: XProfile,
    pub transverse: Transverse,
}

/// Tabulated planar transform v~(x, K), bilinear in both arguments and zero
/// outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    pub xs: Vec<f64>,
    pub ks: Vec<f64>,
    /// Row-major over (x, K): `values[i * ks.len() + j]`.
    pub values: Vec<C>,
}

impl Table {
    fn locate(grid: &[f64], v: f64) -> Option<(usize, f64)> {
        if grid.len() < 2 || v < grid[0] || v > grid[grid.len() - 1] {
            return None;
        }
        let i = grid.partition_point(|&g| g <= v).clamp(1, grid.len() - 1) - 1;
        Some((i, (v - grid[i]) / (grid[i + 1] - grid[i])))
    }

    pub fn value(&self, x: f64, kk: f64) -> C {
        let (Some((i, s)), Some((j, t))) = (Self::locate(&self.xs, x), Self::locate(&self.ks, kk))
        else {
            return C::new(0.0, 0.0);
        };
        let n = self.ks.len();
        let v = |a: usize, b: usize| self.values[a * n + b];
        v(i, j) * ((1.0 - s) * (1.0 - t))
            + v(i + 1, j) * (s * (1.0 - t))
            + v(i, j + 1) * ((1.0 - s) * t)
            + v(i + 1, j + 1) * (s * t)
    }

    fn validate(&self) -> Result<()> {
        let sorted = |g: &[f64]| g.len() >= 2 && g.windows(2).all(|w| w[0] < w[1]);
        if sorted(&self.xs)
            && sorted(&self.ks)
            && self.values.len() == self.xs.len() * self.ks.len()
        {
            Ok(())
        } else {
            Err(Error::InvalidPotential(
                "table axes must be increasing and match values".into(),
            ))
        }
    }
}

/// Complete potential description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    /// Spatial dimension, 2 or 3.
    #[serde(default = "planar")]
    pub dim: usize,
    pub coupling: C,
    #[serde(default)]
    pub components: Vec<Component>,
    /// Tabulated (non-separable) planar terms.
    #[serde(default)]
    pub tables: Vec<Table>,
    /// Optional restriction to lo < x <= hi.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

impl PotentialSpec {
    pub fn new(dim: usize, coupling: C, components: Vec<Component>) -> PotentialSpec {
        PotentialSpec {
            dim,
            coupling,
            components,
            tables: vec![],
            window: None,
        }
    }

    pub fn zero(dim: usize) -> PotentialSpec {
        PotentialSpec::new(dim, C::new(0.0, 0.0), vec![])
    }

    /// coupling * delta(x) delta(y - a).
    pub fn delta_line(coupling: C, a: f64) -> PotentialSpec {
        Self::multi_delta(&[(coupling, a)])
    }

    /// sum_n z_n delta(x) delta(y - a_n).
    pub fn multi_delta(lines: &[(C, f64)]) -> PotentialSpec {
        Self::sheet(
            2,
            C::new(1.0, 0.0),
            0.0,
            Transverse::Points {
                points: lines
                    .iter()
                    .map(|&(z, a)| PointSource {
                        strength: z,
                        at: [a, 0.0],
                    })
                    .collect(),
            },
        )
    }

    /// coupling * delta(x - at) * g(r).
    pub fn sheet(dim: usize, coupling: C, at: f64, transverse: Transverse) -> PotentialSpec {
        PotentialSpec::new(
            dim,
            coupling,
            vec![Component {
                weight: unit(),
                x: XProfile::Sheet { at },
                transverse,
            }],
        )
    }

    /// coupling * exp(-x^2 / 2 sx^2 - y^2 / 2 sy^2), cut off at six widths in x.
    pub fn gaussian(coupling: C, sx: f64, sy: f64) -> PotentialSpec {
        PotentialSpec::separable(
            2,
            coupling,
            XProfile::Gaussian {
                center: 0.0,
                width: sx,
                cutoff: default_cutoff(),
            },
            Transverse::Gaussian {
                width: sy,
                center: [0.0; 2],
            },
        )
    }

    pub fn separable(
        dim: usize,
        coupling: C,
        x: XProfile,
        transverse: Transverse,
    ) -> PotentialSpec {
        PotentialSpec::new(
            dim,
            coupling,
            vec![Component {
                weight: unit(),
                x,
                transverse,
            }],
        )
    }

    /// chi(x) times a transverse transform supported on (lo, hi).
    pub fn band_limited(coupling: C, x: XProfile, lo: f64, hi: f64) -> PotentialSpec {
        Self::separable(
            2,
            coupling,
            x,
            Transverse::Band {
                lo,
                hi,
                width: 0.0,
                angle: 0.0,
            },
        )
    }

    /// coupling * v1(x), independent of y.
    pub fn y_independent(coupling: C, x: XProfile) -> PotentialSpec {
        Self::separable(2, coupling, x, Transverse::Uniform)
    }

    pub fn rect_barrier(height: C, lo: f64, hi: f64) -> PotentialSpec {
        Self::y_independent(height, XProfile::Rect { lo, hi })
    }

    /// coupling * delta(r) in three dimensions.
    pub fn point_delta_3d(coupling: C) -> PotentialSpec {
        Self::sheet(
            3,
            coupling,
            0.0,
            Transverse::Points {
                points: vec![PointSource {
                    strength: unit(),
                    at: [0.0; 2],
                }],
            },
        )
    }

    pub fn gaussian_3d(coupling: C, sz: f64, s_perp: f64) -> PotentialSpec {
        Self::separable(
            3,
            coupling,
            XProfile::Gaussian {
                center: 0.0,
                width: sz,
                cutoff: default_cutoff(),
            },
            Transverse::Gaussian {
                width: s_perp,
                center: [0.0; 2],
            },
        )
    }

    /// Number of transverse dimensions.
    pub fn tdim(&self) -> usize {
        self.dim - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::InvalidPotential(format!(
                "dimension {} not in {{2, 3}}",
                self.dim
            )));
        }
        if !(self.coupling.re.is_finite() && self.coupling.im.is_finite()) {
            return Err(Error::InvalidPotential("coupling must be finite".into()));
        }
        if self.dim == 3 && !self.tables.is_empty() {
            return Err(Error::InvalidPotential("tables are planar only".into()));
        }
        for c in &self.components {
            c.x.validate()?;
            c.transverse.validate(self.tdim())?;
            if c.x.sheet().is_some() && c.transverse == Transverse::Uniform {
                return Err(Error::InvalidPotential(
                    "a sheet must have a non-uniform transverse profile".into(),
                ));
            }
        }
        for t in &self.tables {
            t.validate()?;
        }
        if let Some([lo, hi]) = self.window {
            if !(lo < hi) {
                return Err(Error::InvalidPotential(format!(
                    "empty window ({lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn in_window(&self, x: f64) -> bool {
        match self.window {
            Some([lo, hi]) => x > lo && x <= hi,
            None => true,
        }
    }

    /// Closed hull of the support along x, or `None` for the zero potential.
    pub fn support(&self) -> Option<(f64, f64)> {
        if self.coupling == C::new(0.0, 0.0) {
            return None;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in &self.components {
            let (a, b) = c.x.support();
            if let Some(at) = c.x.sheet() {
                if !self.in_window(at) {
                    continue;
                }
            }
            lo = lo.min(a);
            hi = hi.max(b);
        }
        for t in &self.tables {
            lo = lo.min(t.xs[0]);
            hi = hi.max(t.xs[t.xs.len() - 1]);
        }
        if let Some([wl, wh]) = self.window {
            lo = lo.max(wl);
            hi = hi.min(wh);
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Positions where the x-dependence is not smooth, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = Vec::new();
        for c in &self.components {
            let (a, b) = c.x.support();
            v.push(a);
            v.push(b);
        }
        for t in &self.tables {
            v.extend_from_slice(&t.xs);
        }
        if let Some([lo, hi]) = self.window {
            v.push(lo);
            v.push(hi);
        }
        if let Some((lo, hi)) = self.support() {
            v.retain(|&x| x >= lo && x <= hi);
        }
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        v
    }

    /// Sheet positions inside the window with their component indices.
    pub fn sheets(&self) -> Vec<(f64, usize)> {
        let mut s: Vec<(f64, usize)> = self
            .components
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.x.sheet().map(|a| (a, i)))
            .filter(|&(a, _)| self.in_window(a))
            .collect();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        s
    }

    /// Smooth part of the transverse transform v~(x, K).  Sheets and uniform
    /// profiles have no pointwise value and contribute zero.
    pub fn fourier(&self, x: f64, kk: Point) -> C {
        if !self.in_window(x) {
            return C::new(0.0, 0.0);
        }
        let tdim = self.tdim();
        let mut acc = C::new(0.0, 0.0);
        for c in &self.components {
            let chi = c.x.value(x);
            if chi != 0.0 {
                acc += c.weight * chi * c.transverse.transform(kk, tdim);
            }
        }
        for t in &self.tables {
            acc += t.value(x, kk[0]);
        }
        acc * self.coupling
    }

    /// Planar convenience wrapper for [`PotentialSpec::fourier`].
    pub fn fourier_y(&self, x: f64, kk: f64) -> C {
        self.fourier(x, [kk, 0.0])
    }

    /// Coefficient of the identity part (the y-independent term) at x.
    pub fn uniform_part(&self, x: f64) -> C {
        if !self.in_window(x) {
            return C::new(0.0, 0.0);
        }
        self.components
            .iter()
            .filter(|c| c.transverse == Transverse::Uniform)
            .map(|c| c.weight * c.x.value(x))
            .sum::<C>()
            * self.coupling
    }

    pub fn has_uniform_part(&self) -> bool {
        self.components
            .iter()
            .any(|c| c.transverse == Transverse::Uniform)
    }

    /// Real-space value v(x, r) when every term is an ordinary function.
    pub fn value(&self, x: f64, r: Point) -> Option<C> {
        if !self.tables.is_empty() {
            return None;
        }
        let mut acc = C::new(0.0, 0.0);
        for c in &self.components {
            if c.x.sheet().is_some() {
                return None;
            }
            let g = c.transverse.real_space(r, self.tdim())?;
            if self.in_window(x) {
                acc += c.weight * c.x.value(x) * g;
            }
        }
        Some(acc * self.coupling)
    }

    /// Restrict to lo < x <= hi.
    pub fn truncate_x(&self, lo: f64, hi: f64) -> Result<PotentialSpec> {
        if !(lo < hi) {
            return Err(Error::InvalidPotential(format!("empty slice ({lo}, {hi}]")));
        }
        let mut s = self.clone();
        s.window = Some(match self.window {
            Some([a, b]) => [a.max(lo), b.min(hi)],
            None => [lo, hi],
        });
        Ok(s)
    }

    /// v(x, r) -> v(x - d, r).
    pub fn shifted_x(&self, d: f64) -> PotentialSpec {
        let mut s = self.clone();
        for c in &mut s.components {
            c.x = c.x.shifted(d);
        }
        for t in &mut s.tables {
            // v(x - d): the tabulated x axis moves by d; the transform keeps its form
            for x in &mut t.xs {
                *x += d;
            }
        }
        s.window = self.window.map(|[a, b]| [a + d, b + d]);
        s
    }

    /// v(x, r) -> v(-x, r).
    pub fn mirrored_x(&self) -> PotentialSpec {
        let mut s = self.clone();
        for c in &mut s.components {
            c.x = c.x.mirrored();
        }
        s.tables.clear();
        s.window = self.window.map(|[a, b]| [-b, -a]);
        s
    }

    /// Rotate the transverse plane by `phi` (spatial problems).
    pub fn rotated(&self, phi: f64) -> PotentialSpec {
        let mut s = self.clone();
        for c in &mut s.components {
            c.transverse = c.transverse.rotated(phi);
        }
        s
    }

    /// Sum of two potentials with the same dimension.
    pub fn plus(&self, other: &PotentialSpec) -> Result<PotentialSpec> {
        if self.dim != other.dim || self.window != other.window {
            return Err(Error::InvalidPotential(
                "cannot add potentials of different shape".into(),
            ));
        }
        let mut comps = Vec::new();
        for (spec, list) in [(self, &self.components), (other, &other.components)] {
            for c in list {
                let mut c = c.clone();
                c.weight *= spec.coupling;
                comps.push(c);
            }
        }
        if !self.tables.is_empty() || !other.tables.is_empty() {
            return Err(Error::Unsupported("adding tabulated potentials".into()));
        }
        Ok(PotentialSpec {
            dim: self.dim,
            coupling: unit(),
            components: comps,
            tables: vec![],
            window: self.window,
        })
    }

    /// Largest beta with v~(x, K) = 0 whenever K.e <= beta, e along `angle`.
    /// `None` if some term has no such bound; +inf for the zero potential.
    pub fn support_lower_edge(&self, angle: f64) -> Option<f64> {
        if self.coupling == C::new(0.0, 0.0) {
            return Some(f64::INFINITY);
        }
        if !self.tables.is_empty() {
            return None;
        }
        let mut beta = f64::INFINITY;
        for c in &self.components {
            if c.weight == C::new(0.0, 0.0) {
                continue;
            }
            beta = beta.min(c.transverse.lower_edge(angle, self.tdim())?);
        }
        Some(beta)
    }
}

/// Dense Nystrom matrix of the interaction operator at `x` on the grid:
/// `V_ij = (2 pi)^-d v~(x, p_i - q_j) w_j`, plus the y-independent part on the
/// diagonal.  Sheets are not included.
pub fn interaction_operator(spec: &PotentialSpec, grid: &Sectors, x: f64) -> DMatrix<C> {
    let n = grid.len();
    let norm = grid.convolution_norm();
    let mut m = DMatrix::from_fn(n, n, |i, j| {
        let p = grid.points[i];
        let q = grid.points[j];
        spec.fourier(x, [p[0] - q[0], p[1] - q[1]]) * (norm * grid.weights[j])
    });
    let u = spec.uniform_part(x);
    if u != C::new(0.0, 0.0) {
        for i in 0..n {
            m[(i, i)] += u;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn gaussian_transform_matches_quadrature() {
        let g = Transverse::Gaussian {
            width: 0.7,
            center: [0.3, 0.0],
        };
        let rule = crate::quad::Rule::gauss_legendre(200, -8.0, 8.0);
        for &kk in &[0.0, 0.9, 2.5] {
            let mut acc = C::new(0.0, 0.0);
            for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
                acc += C::from_polar(w * (-(y - 0.3f64).powi(2) / (2.0 * 0.49)).exp(), -kk * y);
            }
            assert!((acc - g.transform([kk, 0.0], 1)).norm() < 1e-12);
        }
    }

    #[test]
    fn band_vanishes_below_edge() {
        let spec = PotentialSpec::band_limited(
            C::new(1.0, 0.0),
            XProfile::Bump { lo: -1.0, hi: 1.0 },
            2.0,
            5.0,
        );
        assert_eq!(spec.fourier_y(0.0, 2.0), C::new(0.0, 0.0));
        assert_eq!(spec.fourier_y(0.0, -3.0), C::new(0.0, 0.0));
        assert!(spec.fourier_y(0.0, 3.5).norm() > 0.99);
        assert_eq!(spec.support_lower_edge(0.0), Some(2.0));
        assert_eq!(
            PotentialSpec::gaussian(unit(), 1.0, 1.0).support_lower_edge(0.0),
            None
        );
    }

    #[test]
    fn truncation_is_half_open_and_zero_outside() {
        let s = PotentialSpec::gaussian(unit(), 0.5, 1.0);
        let t = s.truncate_x(-1.0, 0.5).unwrap();
        assert_eq!(t.fourier_y(-1.0, 0.2), C::new(0.0, 0.0));
        assert_eq!(t.fourier_y(0.51, 0.2), C::new(0.0, 0.0));
        assert_eq!(t.fourier_y(0.5, 0.2), s.fourier_y(0.5, 0.2));
        assert_eq!(t.support(), Some((-1.0, 0.5)));
        assert!(s.truncate_x(1.0, 1.0).is_err());
        let d = PotentialSpec::delta_line(unit(), 0.2);
        assert!(d.truncate_x(0.0, 1.0).unwrap().sheets().is_empty());
        assert_eq!(d.truncate_x(-1.0, 0.0).unwrap().sheets().len(), 1);
    }

    #[test]
    fn operator_is_linear_and_zero_for_zero_potential() {
        let g = build_grid(1.0, 8, 4, 4.0).unwrap();
        let z = interaction_operator(&PotentialSpec::zero(2), &g.sectors, 0.0);
        assert!(z.iter().all(|v| v.norm() == 0.0));
        let a = PotentialSpec::gaussian(C::new(0.3, 0.1), 0.5, 1.0);
        let b = PotentialSpec::gaussian(C::new(-0.2, 0.4), 0.5, 0.6);
        let sum = a.plus(&b).unwrap();
        let lhs = interaction_operator(&sum, &g.sectors, 0.2);
        let rhs =
            interaction_operator(&a, &g.sectors, 0.2) + interaction_operator(&b, &g.sectors, 0.2);
        assert!(crate::grid::maxabs(&(lhs - rhs)) < 1e-14);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s = PotentialSpec::gaussian(C::new(0.1, 0.0), 0.5, 1.0);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<PotentialSpec>(&j).unwrap(), s);
        let bad = j.replace("\"coupling\"", "\"couplng\"");
        assert!(serde_json::from_str::<PotentialSpec>(&bad).is_err());
    }
}
