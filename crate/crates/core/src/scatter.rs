//! Scattering solution from the fundamental transfer matrix.
//!
//! The incident wave enters the transfer relations as `(2 pi)^d varpi0 delta`.
//! Writing every unknown as `delta part + smooth part` and cancelling the
//! delta parts leaves a second-kind system on the oscillating nodes:
//!
//! ```text
//! M22 b = -(2 pi)^d varpi0 k_{2l}(., p0)        (l = 1 left, 2 right incidence)
//! a     =  (2 pi)^d varpi0 k_{1l}(., p0) + M12 b
//! ```
//!
//! `b` is the smooth reflected-side coefficient, `a` the smooth part of the
//! transmitted-side coefficient with the incident wave removed.
//!
//! The same relations hold for the auxiliary route with `M` replaced by the
//! full-grid propagator and `b` unknown on every node: its evanescent part is
//! the decaying wave the potential excites on the incidence side.  Dropping it
//! (the fundamental route) is exact for sheets and terminating series but
//! leaves an error of second order in the coupling for generic smooth
//! potentials; the auxiliary route has no such error but diverges for sheets.

use crate::error::{Error, Result};
use crate::grid::{build_grid, MomentumGrid, Point, C};
use crate::hamiltonian::Problem;
use crate::par;
use crate::potential::PotentialSpec;
use crate::transfer::{delta_columns, fundamental_tm, propagate, EvolveSettings, FundamentalTm};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Incidence closer than this to the light cone (|cos theta0|) is refused.
pub const GRAZING_MARGIN: f64 = 1e-3;

/// Condition estimates above this are reported as singular.
pub const CONDITION_LIMIT: f64 = 1e13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct WaveCoefficients {
    pub k: f64,
    pub side: Side,
    /// Incidence angle, folded into the half that matches `side`.
    pub theta0: f64,
    pub p0: Point,
    pub varpi0: f64,
    /// Smooth part of the reflected-side coefficient on the oscillating nodes.
    pub b_minus: Vec<C>,
    /// Smooth transmitted-side coefficient (incident wave removed).
    pub a_plus: Vec<C>,
    /// 1-norm condition estimate of the solved system.
    pub condition: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplitudeTable {
    pub theta0: f64,
    pub side: Side,
    pub thetas: Vec<f64>,
    pub values: Vec<C>,
}

/// Which closure of the transfer relations a solve uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Oscillating sandwich of the propagator.
    #[default]
    Fundamental,
    /// Full-grid propagator with evanescent unknowns on the incidence side.
    Auxiliary,
}

/// A transfer-matrix closure able to solve for an incident delta at `p0`.
pub trait Closure {
    fn problem(&self) -> &Problem;
    /// Returns `(b, a, condition)` on the oscillating nodes.
    fn solve_with_delta(&self, p0: Point, varpi0: f64, side: Side)
        -> Result<(Vec<C>, Vec<C>, f64)>;
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

impl Closure for FundamentalTm<'_> {
    fn problem(&self) -> &Problem {
        self.problem
    }

    fn solve_with_delta(
        &self,
        p0: Point,
        varpi0: f64,
        side: Side,
    ) -> Result<(Vec<C>, Vec<C>, f64)> {
        solve_with_delta(self, p0, varpi0, side)
    }
}

/// Solve the scattering system for an incident delta at `p0` with
/// `varpi(p0) = varpi0`.  Returns `(b, a, condition)`.
pub fn solve_with_delta(
    tm: &FundamentalTm,
    p0: Point,
    varpi0: f64,
    side: Side,
) -> Result<(Vec<C>, Vec<C>, f64)> {
    let n = tm.n_osc();
    let kc = tm.kernel_columns(p0)?;
    let d = tm.problem.sectors.delta_norm() * varpi0;
    let l = side_index(side);
    let a22 = tm.block(1, 1);
    let m12 = tm.block(0, 1);
    let rhs = DMatrix::from_fn(n, 1, |i, _| -kc[(n + i, l)] * d);
    let (b, cond) = solve_checked(a22, &rhs)?;
    let a = &m12 * &b;
    let a_plus = (0..n).map(|i| kc[(i, l)] * d + a[(i, 0)]).collect();
    Ok((b.iter().copied().collect(), a_plus, cond))
}

/// Second-component columns of the lab-frame propagator across the support
/// on the full grid, for the auxiliary route.
#[derive(Debug, Clone)]
pub struct AuxiliarySystem<'a> {
    pub problem: &'a Problem,
    pub settings: EvolveSettings,
    /// `U22` with every row divided by its largest entry.
    u22: DMatrix<C>,
    /// The row scales removed from `U22`.
    scale: Vec<f64>,
    /// Oscillating rows of `U12`.
    u12: DMatrix<C>,
}

pub fn auxiliary_system<'a>(
    pb: &'a Problem,
    settings: &EvolveSettings,
) -> Result<AuxiliarySystem<'a>> {
    let n = pb.n();
    let m = pb.n_osc();
    let mut y = DMatrix::<C>::zeros(2 * n, n);
    for i in 0..n {
        y[(n + i, i)] = C::new(1.0, 0.0);
    }
    if let Some((lo, hi)) = pb.support() {
        propagate(pb, &mut y, &[], lo, hi, true, settings)?;
    }
    let mut u22 = y.rows(n, n).into_owned();
    let mut scale = Vec::with_capacity(n);
    for r in 0..n {
        let s = u22.row(r).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let s = if s > 0.0 { s } else { 1.0 };
        u22.row_mut(r).iter_mut().for_each(|v| *v /= s);
        scale.push(s);
    }
    Ok(AuxiliarySystem {
        problem: pb,
        settings: *settings,
        u22,
        scale,
        u12: y.rows(0, m).into_owned(),
    })
}

impl Closure for AuxiliarySystem<'_> {
    fn problem(&self) -> &Problem {
        self.problem
    }

    fn solve_with_delta(
        &self,
        p0: Point,
        varpi0: f64,
        side: Side,
    ) -> Result<(Vec<C>, Vec<C>, f64)> {
        let pb = self.problem;
        let n = pb.n();
        let m = pb.n_osc();
        let kc = delta_columns(pb, &self.settings, p0)?;
        let d = pb.sectors.delta_norm() * varpi0;
        let l = side_index(side);
        let rhs = DMatrix::from_fn(n, 1, |i, _| -kc[(n + i, l)] * d / self.scale[i]);
        let (b, cond) = solve_checked(self.u22.clone(), &rhs)?;
        let a = &self.u12 * &b;
        let a_plus = (0..m).map(|i| kc[(i, l)] * d + a[(i, 0)]).collect();
        Ok((b.iter().take(m).copied().collect(), a_plus, cond))
    }
}

/// Dense LU solve with a 1-norm condition estimate.
pub fn solve_checked(a: DMatrix<C>, rhs: &DMatrix<C>) -> Result<(DMatrix<C>, f64)> {
    let norm1 = |m: &DMatrix<C>| {
        (0..m.ncols())
            .map(|c| m.column(c).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let an = norm1(&a);
    let lu = a.lu();
    let inv = lu.try_inverse().ok_or(Error::SingularSystem {
        condition: f64::INFINITY,
    })?;
    let cond = an * norm1(&inv);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::SingularSystem { condition: cond });
    }
    let x = inv * rhs;
    Ok((x, cond))
}

/// Fold an incidence angle into the half matching `side`, keeping sin(theta0).
pub fn fold_incidence(theta0: f64, side: Side) -> f64 {
    let c = theta0.cos();
    let wrong = match side {
        Side::Left => c < 0.0,
        Side::Right => c > 0.0,
    };
    if wrong {
        PI - theta0
    } else {
        theta0
    }
}

/// Planar solve for incidence angle `theta0` from the given side.
pub fn solve_incident(tm: &impl Closure, theta0: f64, side: Side) -> Result<WaveCoefficients> {
    let k = tm.problem().sectors.k;
    let c = theta0.cos();
    if c.abs() < GRAZING_MARGIN {
        return Err(Error::GrazingIncidence(c.abs()));
    }
    let th = fold_incidence(theta0, side);
    let p0 = [k * th.sin(), 0.0];
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

/// Smooth coefficient seen by a detector at angle `theta`: the transmitted
/// side for cos(theta) >= 0, the reflected side otherwise, interpolated at the
/// oscillating-sector angle `phi` with `k sin(phi) = k sin(theta)`.
pub fn coefficient_at(w: &WaveCoefficients, grid: &MomentumGrid, theta: f64) -> C {
    let (s, c) = theta.sin_cos();
    if c >= 0.0 {
        grid.interpolate_osc(&w.a_plus, s.atan2(c))
    } else {
        grid.interpolate_osc(&w.b_minus, s.atan2(-c))
    }
}

/// Planar scattering amplitude `f(theta) = -(i / sqrt(2 pi)) * coefficient`.
pub fn amplitude(w: &WaveCoefficients, grid: &MomentumGrid, thetas: &[f64]) -> AmplitudeTable {
    let pre = C::new(0.0, -1.0 / (2.0 * PI).sqrt());
    AmplitudeTable {
        theta0: w.theta0,
        side: w.side,
        thetas: thetas.to_vec(),
        values: thetas
            .iter()
            .map(|&t| pre * coefficient_at(w, grid, t))
            .collect(),
    }
}

/// Differential cross-section |f|^2.
pub fn cross_section(t: &AmplitudeTable) -> Vec<f64> {
    t.values.iter().map(|v| v.norm_sqr()).collect()
}

/// Uniform mesh of `n` angles over [0, 2 pi) offset by half a cell, skipping
/// angles within the grazing margin.
pub fn theta_mesh(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| 2.0 * PI * (j as f64 + 0.5) / n as f64)
        .filter(|t| t.cos().abs() >= GRAZING_MARGIN)
        .collect()
}

/// Smallest singular value of M22 over its largest, for each wavenumber.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanPoint {
    pub k: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl ScanPoint {
    pub fn ratio(&self) -> f64 {
        self.sigma_min / self.sigma_max
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanGrid {
    pub n_osc: usize,
    pub n_ev: usize,
    pub p_max_over_k: f64,
}

pub fn singular_values(m: &DMatrix<C>) -> (f64, f64) {
    let sv = m.clone().singular_values();
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sv.iter().copied().fold(0.0, f64::max);
    (lo, hi)
}

pub fn spectral_singularity_scan(
    spec: &PotentialSpec,
    ks: &[f64],
    grid: ScanGrid,
    settings: &EvolveSettings,
) -> Result<Vec<ScanPoint>> {
    let inner = EvolveSettings {
        execution: par::Execution::Sequential,
        ..*settings
    };
    par::map_slice(settings.execution, ks, |&k| {
        let g = build_grid(k, grid.n_osc, grid.n_ev, grid.p_max_over_k * k)?;
        let pb = Problem::new(spec, &g.sectors)?;
        let tm = fundamental_tm(&pb, &inner)?;
        let (lo, hi) = singular_values(&tm.block(1, 1));
        Ok(ScanPoint {
            k,
            sigma_min: lo,
            sigma_max: hi,
        })
    })
    .into_iter()
    .collect()
}
