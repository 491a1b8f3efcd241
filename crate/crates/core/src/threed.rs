//! Scattering in three dimensions: disk grids, the spatial solve, amplitudes
//! over the sphere, the spatial Born formula and certificates.
//!
//! The evolution coordinate plays the role of z, the transverse momentum is a
//! point of the plane.  Oscillating nodes fill the disk |p| < k as a tensor
//! product of a Gauss rule in the polar angle (|p| = k sin(theta)) and an
//! equispaced azimuthal rule; evanescent nodes fill the annulus
//! k < |p| <= p_max with |p| = k cosh(t).  Nodes are stored ring by ring.

use crate::error::{Error, Result};
use crate::grid::{Point, Sectors, C};
use crate::hamiltonian::Problem;
use crate::invisibility::{
    nilpotency_residuals, potential_scale, support_premise, transform_full, SupportReport,
};
use crate::par;
use crate::potential::PotentialSpec;
use crate::quad::{trig_interpolate, Rule};
use crate::scatter::{fold_incidence, Closure, Side, WaveCoefficients, GRAZING_MARGIN};
use crate::transfer::{fundamental_tm, truncated_dyson, EvolveSettings};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone)]
pub struct DiskGrid {
    pub k: f64,
    pub p_max: f64,
    pub n_az: usize,
    /// Polar-angle rule on (0, pi/2).
    pub radial: Rule,
    /// Evanescent rule in t on (0, arccosh(p_max / k)).
    pub ev: Rule,
    pub sectors: Sectors,
}

/// Resolution of a disk grid, with p_max given relative to k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid3d {
    pub n_radial: usize,
    pub n_azimuthal: usize,
    pub p_max_over_k: f64,
    pub n_ev_radial: usize,
}

impl Default for Grid3d {
    fn default() -> Self {
        Grid3d {
            n_radial: 16,
            n_azimuthal: 32,
            p_max_over_k: 3.0,
            n_ev_radial: 8,
        }
    }
}

impl Grid3d {
    pub fn build(&self, k: f64) -> Result<DiskGrid> {
        build_disk_grid(
            k,
            self.n_radial,
            self.n_azimuthal,
            self.p_max_over_k * k,
            self.n_ev_radial,
        )
    }
}

pub fn build_disk_grid(
    k: f64,
    n_radial: usize,
    n_az: usize,
    p_max: f64,
    n_ev_radial: usize,
) -> Result<DiskGrid> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidGrid(format!("k must be positive, got {k}")));
    }
    if !(p_max.is_finite() && p_max > k) {
        return Err(Error::InvalidGrid(format!(
            "p_max = {p_max} must exceed k = {k}"
        )));
    }
    if n_radial < 2 || n_az < 2 || !n_az.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "need n_radial >= 2 and an even n_azimuthal >= 2, got {n_radial} and {n_az}"
        )));
    }
    let radial = Rule::gauss_legendre(n_radial, 0.0, FRAC_PI_2);
    let ev = if n_ev_radial > 0 {
        Rule::gauss_legendre(n_ev_radial, 0.0, (p_max / k).acosh())
    } else {
        Rule {
            nodes: vec![],
            weights: vec![],
            bary: vec![],
        }
    };
    let h = 2.0 * PI / n_az as f64;
    let cap = (n_radial + n_ev_radial) * n_az;
    let mut points = Vec::with_capacity(cap);
    let mut weights = Vec::with_capacity(cap);
    let mut vp = Vec::with_capacity(cap);
    let mut wov = Vec::with_capacity(cap);
    let ring = |r: f64, points: &mut Vec<Point>| {
        for j in 0..n_az {
            let phi = h * (j as f64 + 0.5);
            points.push([r * phi.cos(), r * phi.sin()]);
        }
    };
    for (&th, &w) in radial.nodes.iter().zip(&radial.weights) {
        let (s, c) = th.sin_cos();
        ring(k * s, &mut points);
        for _ in 0..n_az {
            weights.push(k * k * s * c * w * h);
            vp.push(C::new(k * c, 0.0));
            wov.push(C::new(k * s * w * h, 0.0));
        }
    }
    for (&t, &w) in ev.nodes.iter().zip(&ev.weights) {
        let (ch, sh) = (t.cosh(), t.sinh());
        ring(k * ch, &mut points);
        for _ in 0..n_az {
            weights.push(k * k * ch * sh * w * h);
            vp.push(C::new(0.0, k * sh));
            wov.push(C::new(0.0, -k * ch * w * h));
        }
    }
    Ok(DiskGrid {
        k,
        p_max,
        n_az,
        radial,
        ev,
        sectors: Sectors {
            k,
            dim: 2,
            points,
            weights,
            varpi: vp,
            w_over_varpi: wov,
            n_osc: n_radial * n_az,
        },
    })
}

impl DiskGrid {
    pub fn n_osc(&self) -> usize {
        self.sectors.n_osc
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    /// Interpolate oscillating values at p = k sin(theta) (cos phi, sin phi),
    /// theta in [0, pi/2]: trigonometric along each ring, then polynomial in theta.
    pub fn interpolate_osc(&self, values: &[C], theta: f64, phi: f64) -> C {
        let phi0 = PI / self.n_az as f64;
        let rings: Vec<C> = values[..self.n_osc()]
            .chunks(self.n_az)
            .map(|r| trig_interpolate(phi0, r, phi))
            .collect();
        self.radial.interpolate(&rings, theta)
    }
}

/// Incidence (or scattering) direction by polar angle from the evolution
/// axis and azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub fn new(theta: f64, phi: f64) -> Direction {
        Direction { theta, phi }
    }

    /// Unit vector as (along, transverse).
    pub fn unit(&self) -> (f64, Point) {
        let (s, c) = self.theta.sin_cos();
        (c, [s * self.phi.cos(), s * self.phi.sin()])
    }

    pub fn side(&self) -> Side {
        if self.theta.cos() >= 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }
}

/// Directions on a polar/azimuthal mesh, offset by half a cell, skipping
/// those within the grazing margin.
pub fn direction_mesh(n_theta: usize, n_phi: usize) -> Vec<Direction> {
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let t = PI * (i as f64 + 0.5) / n_theta as f64;
        if t.cos().abs() < GRAZING_MARGIN {
            continue;
        }
        for j in 0..n_phi {
            out.push(Direction::new(
                t,
                2.0 * PI * (j as f64 + 0.5) / n_phi as f64,
            ));
        }
    }
    out
}

/// Spatial solve for incidence along `dir` from `side`.
pub fn solve_3d(tm: &impl Closure, dir: Direction, side: Side) -> Result<WaveCoefficients> {
    if tm.problem().sectors.dim != 2 {
        return Err(Error::GridMismatch(
            "spatial solve needs a disk grid".into(),
        ));
    }
    let k = tm.problem().sectors.k;
    let c = dir.theta.cos();
    if c.abs() < GRAZING_MARGIN {
        return Err(Error::GrazingIncidence(c.abs()));
    }
    let th = fold_incidence(dir.theta, side);
    let s = k * th.sin();
    let p0 = [s * dir.phi.cos(), s * dir.phi.sin()];
    let varpi0 = k * c.abs();
    let (b, a, cond) = tm.solve_with_delta(p0, varpi0, side)?;
    Ok(WaveCoefficients {
        k,
        side,
        theta0: th,
        p0,
        varpi0,
        b_minus: b,
        a_plus: a,
        condition: cond,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplitudeTable3d {
    pub incidence: Direction,
    pub side: Side,
    pub directions: Vec<Direction>,
    pub values: Vec<C>,
}

/// `f = -(i / 2 pi) * coefficient`, the transmitted side for cos(theta) >= 0
/// and the reflected side otherwise.
pub fn amplitude_3d(w: &WaveCoefficients, grid: &DiskGrid, dirs: &[Direction]) -> AmplitudeTable3d {
    let pre = C::new(0.0, -1.0 / (2.0 * PI));
    let values = dirs
        .iter()
        .map(|d| {
            let (s, c) = d.theta.sin_cos();
            // (theta, phi) and (-theta, phi + pi) are the same direction
            let (s, phi) = if s < 0.0 {
                (-s, d.phi + PI)
            } else {
                (s, d.phi)
            };
            let tr = s.atan2(c.abs());
            let v = if c >= 0.0 { &w.a_plus } else { &w.b_minus };
            pre * grid.interpolate_osc(v, tr, phi)
        })
        .collect();
    AmplitudeTable3d {
        incidence: Direction::new(w.theta0, w.p0[1].atan2(w.p0[0])),
        side: w.side,
        directions: dirs.to_vec(),
        values,
    }
}

/// First Born amplitude `-v~~~(k rhat - k rhat0) / (4 pi)`.
pub fn born_amplitude_3d(
    spec: &PotentialSpec,
    k: f64,
    incident: Direction,
    scattered: Direction,
) -> Result<C> {
    if spec.dim != 3 {
        return Err(Error::GridMismatch(
            "spatial Born formula for a planar potential".into(),
        ));
    }
    let (a0, t0) = incident.unit();
    let (a, t) = scattered.unit();
    let kt = [k * (t[0] - t0[0]), k * (t[1] - t0[1])];
    Ok(-transform_full(spec, k * (a - a0), kt)? / (4.0 * PI))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entry3d {
    pub k: f64,
    pub tm_residual: f64,
    pub max_amplitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate3d {
    pub alpha: f64,
    pub beta: f64,
    pub angle: f64,
    pub tol: f64,
    pub scale: f64,
    pub support: SupportReport,
    pub grid: Grid3d,
    pub entries: Vec<Entry3d>,
    pub worst_tm_residual: f64,
    pub worst_amplitude: f64,
    pub certified: bool,
}

/// Invisibility certificate for `v~ = 0 when K.e <= 2 alpha`, e at `angle`
/// in the transverse plane.  The potential is rotated so that e is the first
/// transverse axis before solving.
#[allow(clippy::too_many_arguments)]
pub fn certify_invisibility_3d(
    spec: &PotentialSpec,
    alpha: f64,
    angle: f64,
    ks: &[f64],
    incidences: &[Direction],
    dirs: &[Direction],
    grid: Grid3d,
    settings: &EvolveSettings,
    tol: f64,
) -> Result<Certificate3d> {
    if spec.dim != 3 {
        return Err(Error::GridMismatch(
            "spatial certificate for a planar potential".into(),
        ));
    }
    if let Some(&k) = ks.iter().find(|&&k| !(k > 0.0 && k <= alpha)) {
        return Err(Error::PremiseViolated(format!(
            "k = {k} is not in (0, alpha = {alpha}]"
        )));
    }
    let rot = spec.rotated(-angle);
    let kmax = ks.iter().copied().fold(0.0, f64::max);
    let (beta, support) = support_premise(&rot, alpha, 2.0, 0.0, (grid.p_max_over_k + 1.0) * kmax)?;
    let inner = EvolveSettings {
        execution: par::Execution::Sequential,
        ..*settings
    };
    let entries: Vec<Entry3d> = par::map_slice(settings.execution, ks, |&k| {
        let g = grid.build(k)?;
        let pb = Problem::new(&rot, &g.sectors)?;
        let tm = fundamental_tm(&pb, &inner)?;
        let mut worst = 0.0f64;
        for &d in incidences {
            let w = solve_3d(&tm, d, d.side())?;
            let f = amplitude_3d(&w, &g, dirs);
            worst = f.values.iter().map(|v| v.norm()).fold(worst, f64::max);
        }
        Ok(Entry3d {
            k,
            tm_residual: tm.m.distance_from_identity(),
            max_amplitude: worst,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let scale = potential_scale(spec);
    let worst_tm = entries.iter().map(|e| e.tm_residual).fold(0.0, f64::max);
    let worst_f = entries.iter().map(|e| e.max_amplitude).fold(0.0, f64::max);
    Ok(Certificate3d {
        alpha,
        beta,
        angle,
        tol,
        scale,
        support,
        grid,
        entries,
        worst_tm_residual: worst_tm,
        worst_amplitude: worst_f,
        certified: worst_tm <= tol && worst_f <= tol * scale,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BornExactness3d {
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    /// max |Dyson(1) - M| / max |M - I|.
    pub dyson_residual: f64,
    pub nilpotency_residual: f64,
    pub worst_amplitude_error: f64,
    pub born_scale: f64,
}

/// Engine versus the spatial Born formula under `v~ = 0 for K.e <= alpha`.
#[allow(clippy::too_many_arguments)]
pub fn born_exactness_3d(
    spec: &PotentialSpec,
    alpha: f64,
    angle: f64,
    k: f64,
    incidences: &[Direction],
    dirs: &[Direction],
    grid: Grid3d,
    settings: &EvolveSettings,
) -> Result<BornExactness3d> {
    if spec.dim != 3 {
        return Err(Error::GridMismatch(
            "spatial report for a planar potential".into(),
        ));
    }
    if !(k > 0.0 && k <= alpha) {
        return Err(Error::PremiseViolated(format!(
            "k = {k} is not in (0, alpha = {alpha}]"
        )));
    }
    let rot = spec.rotated(-angle);
    let (beta, _) = support_premise(&rot, alpha, 1.0, 0.0, (grid.p_max_over_k + 1.0) * k)?;
    let g = grid.build(k)?;
    let pb = Problem::new(&rot, &g.sectors)?;
    let tm = fundamental_tm(&pb, settings)?;
    let dyson = truncated_dyson(&pb, 1, 8, 0.1)?;
    let off = tm.m.distance_from_identity();
    let dyson_residual = if off == 0.0 {
        0.0
    } else {
        dyson.max_abs_diff(&tm.m) / off
    };
    // rotate directions with the potential
    let turn = |d: &Direction| Direction::new(d.theta, d.phi - angle);
    let rdirs: Vec<Direction> = dirs.iter().map(turn).collect();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let mut nil = 0.0f64;
    for (i, d) in incidences.iter().enumerate() {
        let d = turn(d);
        let w = solve_3d(&tm, d, d.side())?;
        let f = amplitude_3d(&w, &g, &rdirs);
        let fb: Vec<C> = rdirs
            .iter()
            .map(|&s| born_amplitude_3d(&rot, k, d, s))
            .collect::<Result<_>>()?;
        let sc = fb.iter().map(|v| v.norm()).fold(0.0, f64::max);
        scale = scale.max(sc);
        let diff = f
            .values
            .iter()
            .zip(&fb)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if sc > 0.0 {
            worst = worst.max(diff / sc);
        } else if diff > 0.0 {
            worst = f64::INFINITY;
        }
        let kc = tm.kernel_columns(w.p0)?;
        nil = nil.max(nilpotency_residuals(&tm, &kc, 0xd15c + i as u64).0);
    }
    Ok(BornExactness3d {
        k,
        alpha,
        beta,
        dyson_residual,
        nilpotency_residual: nil,
        worst_amplitude_error: worst,
        born_scale: scale,
    })
}
