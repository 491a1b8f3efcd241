//! Born approximation, one-sided support conditions and invisibility
//! certificates.
//!
//! If the transverse transform of the potential vanishes for `K.e <= beta`,
//! every application of the interaction operator pushes momentum support up
//! by `beta` along `e`.  With `beta >= 2 alpha` and `k <= alpha` nothing ever
//! returns to the oscillating sector and the fundamental transfer matrix is
//! the identity (invisibility); with `beta >= alpha` the series stops after
//! the first term and the first Born amplitude is exact.

use crate::error::{Error, Result};
use crate::grid::{build_grid, Point, Sectors, C};
use crate::hamiltonian::Problem;
use crate::par;
use crate::potential::{interaction_operator, PotentialSpec, Transverse};
use crate::quad::Rule;
use crate::scatter::{amplitude, solve_incident, theta_mesh, ScanGrid, Side};
use crate::transfer::{fundamental_tm, EvolveSettings, FundamentalTm};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Full Fourier transform `\int dx dr e^{-i (kx x + kt.r)} v(x, r)`.
/// y-independent terms have no pointwise transform and are refused.
pub fn transform_full(spec: &PotentialSpec, kx: f64, kt: Point) -> Result<C> {
    if spec.has_uniform_part() {
        return Err(Error::Unsupported(
            "the transform of a y-independent potential is singular".into(),
        ));
    }
    let mut acc = C::new(0.0, 0.0);
    if spec.support().is_none() {
        return Ok(acc);
    }
    for w in spec.breakpoints().windows(2) {
        let (a, b) = (w[0], w[1]);
        let np = ((b - a) / 0.25).ceil().max(1.0) as usize;
        let h = (b - a) / np as f64;
        for j in 0..np {
            let r = Rule::gauss_legendre(24, a + h * j as f64, a + h * (j + 1) as f64);
            for (&x, &wt) in r.nodes.iter().zip(&r.weights) {
                acc += spec.fourier(x, kt) * C::from_polar(wt, -kx * x);
            }
        }
    }
    let tdim = spec.tdim();
    for (at, i) in spec.sheets() {
        let c = &spec.components[i];
        acc += spec.coupling
            * c.weight
            * c.transverse.transform(kt, tdim)
            * C::from_polar(1.0, -kx * at);
    }
    Ok(acc)
}

/// First Born amplitude in the plane, `-v~~(k (cos t - cos t0), k (sin t - sin t0)) / (2 sqrt(2 pi))`.
pub fn born_amplitude_2d(spec: &PotentialSpec, k: f64, theta0: f64, theta: f64) -> Result<C> {
    let kx = k * (theta.cos() - theta0.cos());
    let ky = k * (theta.sin() - theta0.sin());
    Ok(-transform_full(spec, kx, [ky, 0.0])? / (2.0 * (2.0 * PI).sqrt()))
}

/// Side of incidence for a planar angle.
pub fn side_of(theta0: f64) -> Side {
    if theta0.cos() >= 0.0 {
        Side::Left
    } else {
        Side::Right
    }
}

/// Largest modulus of a transverse profile.
fn peak(t: &Transverse, tdim: usize) -> f64 {
    match t {
        Transverse::Gaussian { width, .. } => {
            (2.0 * PI).powf(0.5 * tdim as f64) * width.powi(tdim as i32)
        }
        Transverse::Points { points } => points.iter().map(|p| p.strength.norm()).sum(),
        Transverse::Band { width, .. } => {
            if tdim == 1 {
                1.0
            } else {
                (2.0 * PI).sqrt() * width
            }
        }
        Transverse::Uniform => 1.0,
    }
}

/// Momentum-space amplitude scale of a potential: sum over terms of
/// |coupling * weight| times the peak of the transverse transform.
pub fn potential_scale(spec: &PotentialSpec) -> f64 {
    let tdim = spec.tdim();
    let c: f64 = spec
        .components
        .iter()
        .map(|c| (spec.coupling * c.weight).norm() * peak(&c.transverse, tdim))
        .sum();
    let t: f64 = spec
        .tables
        .iter()
        .map(|t| spec.coupling.norm() * t.values.iter().map(|v| v.norm()).fold(0.0, f64::max))
        .sum();
    c + t
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportReport {
    pub beta: f64,
    pub angle: f64,
    /// Largest sampled |v~(x, K)| with K.e in [-k_range, beta].
    pub max_below: f64,
    pub scale: f64,
    pub samples: usize,
    pub passes: bool,
}

/// Sample `v~(x, K)` for `K.e` in `[-k_range, beta]` (and `|K x e| <= k_range`
/// in three dimensions) and check that it vanishes to 1e-12 of the scale.
/// Separable terms are bounded by |weight| * |g~(K)|, which can only overstate.
pub fn check_support_condition(
    spec: &PotentialSpec,
    beta: f64,
    angle: f64,
    k_range: f64,
    n_samples: usize,
) -> SupportReport {
    let tdim = spec.tdim();
    let (s, c) = angle.sin_cos();
    let n = n_samples.max(2);
    let along: Vec<f64> = (0..n)
        .map(|i| -k_range + (beta + k_range) * i as f64 / (n - 1) as f64)
        .collect();
    let across: Vec<f64> = if tdim == 1 {
        vec![0.0]
    } else {
        (0..n)
            .map(|i| -k_range + 2.0 * k_range * i as f64 / (n - 1) as f64)
            .collect()
    };
    let xs: Vec<f64> = match spec.support() {
        Some((lo, hi)) => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
        None => vec![],
    };
    let mut worst = 0.0f64;
    let mut count = 0;
    if spec.support().is_some() {
        for &u in &along {
            for &v in &across {
                let kk = [u * c - v * s, u * s + v * c];
                let kk = if tdim == 1 { [u * c, 0.0] } else { kk };
                count += 1;
                let mut m = 0.0;
                for comp in &spec.components {
                    let amp = (spec.coupling * comp.weight).norm();
                    let g = match comp.transverse {
                        // a delta at K = 0
                        Transverse::Uniform => {
                            if kk[0].abs() <= 1e-300 && kk[1].abs() <= 1e-300
                                || u <= 0.0 && beta >= 0.0
                            {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        _ => comp.transverse.transform(kk, tdim).norm(),
                    };
                    m += amp * g;
                }
                for t in &spec.tables {
                    m += xs
                        .iter()
                        .map(|&x| (spec.coupling * t.value(x, kk[0])).norm())
                        .fold(0.0, f64::max);
                }
                worst = worst.max(m);
            }
        }
    }
    let scale = potential_scale(spec);
    SupportReport {
        beta,
        angle,
        max_below: worst,
        scale,
        samples: count,
        passes: worst <= 1e-12 * scale,
    }
}

/// Check the one-sided support premise `v~ = 0 for K.e <= factor * alpha`.
pub fn support_premise(
    spec: &PotentialSpec,
    alpha: f64,
    factor: f64,
    angle: f64,
    k_range: f64,
) -> Result<(f64, SupportReport)> {
    let need = factor * alpha;
    let beta = spec.support_lower_edge(angle).ok_or_else(|| {
        Error::PremiseViolated("the transverse transform has no one-sided support".into())
    })?;
    if beta < need {
        return Err(Error::PremiseViolated(format!(
            "support edge {beta} is below the required {need}"
        )));
    }
    let rep = check_support_condition(spec, need, angle, k_range, 129);
    if !rep.passes {
        return Err(Error::PremiseViolated(format!(
            "sampled transform {:.3e} below K = {need} (scale {:.3e})",
            rep.max_below, rep.scale
        )));
    }
    Ok((beta, rep))
}

/// max |M - I| over the oscillating block operator.
pub fn tm_residual(tm: &FundamentalTm) -> f64 {
    tm.m.distance_from_identity()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvisibilityEntry {
    pub k: f64,
    pub tm_residual: f64,
    pub max_amplitude: f64,
    pub worst_theta0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvisibilityCertificate {
    pub alpha: f64,
    pub beta: f64,
    pub tol: f64,
    pub scale: f64,
    pub support: SupportReport,
    pub grid: ScanGrid,
    pub entries: Vec<InvisibilityEntry>,
    pub worst_tm_residual: f64,
    pub worst_amplitude: f64,
    pub certified: bool,
}

/// Engine residuals at one wavenumber, no premise checked.
pub fn invisibility_entry(
    spec: &PotentialSpec,
    k: f64,
    theta0s: &[f64],
    n_theta: usize,
    grid: ScanGrid,
    settings: &EvolveSettings,
) -> Result<InvisibilityEntry> {
    let g = build_grid(k, grid.n_osc, grid.n_ev, grid.p_max_over_k * k)?;
    let pb = Problem::new(spec, &g.sectors)?;
    let tm = fundamental_tm(&pb, settings)?;
    let thetas = theta_mesh(n_theta);
    let mut worst = (0.0f64, f64::NAN);
    for &t0 in theta0s {
        let w = solve_incident(&tm, t0, side_of(t0))?;
        let f = amplitude(&w, &g, &thetas);
        let m = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !(m <= worst.0) {
            worst = (m, t0);
        }
    }
    Ok(InvisibilityEntry {
        k,
        tm_residual: tm_residual(&tm),
        max_amplitude: worst.0,
        worst_theta0: worst.1,
    })
}

/// Certify omnidirectional invisibility for every sampled `k <= alpha`.
/// Refuses (premise error) unless `v~ = 0` for `K <= 2 alpha`.
#[allow(clippy::too_many_arguments)]
pub fn certify_invisibility(
    spec: &PotentialSpec,
    alpha: f64,
    ks: &[f64],
    theta0s: &[f64],
    n_theta: usize,
    grid: ScanGrid,
    settings: &EvolveSettings,
    tol: f64,
) -> Result<InvisibilityCertificate> {
    if let Some(&k) = ks.iter().find(|&&k| !(k > 0.0 && k <= alpha)) {
        return Err(Error::PremiseViolated(format!(
            "k = {k} is not in (0, alpha = {alpha}]"
        )));
    }
    let kmax = ks.iter().copied().fold(0.0, f64::max);
    let (beta, support) = support_premise(spec, alpha, 2.0, 0.0, (grid.p_max_over_k + 1.0) * kmax)?;
    let inner = EvolveSettings {
        execution: par::Execution::Sequential,
        ..*settings
    };
    let entries: Vec<InvisibilityEntry> = par::map_slice(settings.execution, ks, |&k| {
        invisibility_entry(spec, k, theta0s, n_theta, grid, &inner)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let scale = potential_scale(spec);
    let worst_tm = entries.iter().map(|e| e.tm_residual).fold(0.0, f64::max);
    let worst_f = entries.iter().map(|e| e.max_amplitude).fold(0.0, f64::max);
    Ok(InvisibilityCertificate {
        alpha,
        beta,
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
pub struct BornExactness {
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Relative size of `(M_{i1 j1} - delta) (M_{i2 j2} - delta) phi`, worst of 16.
    pub nilpotency_residual: f64,
    /// The same with the kernel columns at p0 in place of phi.
    pub kernel_nilpotency: f64,
    /// max |f - f_Born| / max |f_Born| per incidence angle.
    pub amplitude_errors: Vec<(f64, f64)>,
    pub worst_amplitude_error: f64,
    pub born_scale: f64,
    /// Relative difference between the solved b and `-(2 pi) varpi0 k21(., p0)`.
    pub closed_form_b_error: f64,
}

fn inf_norm(m: &DMatrix<C>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn vec_max(v: &DVector<C>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Worst relative residual of every product `D_{i1 j1} D_{i2 j2} phi` with
/// `D = M - I` blocks, and of `D_{ij} k_{jl}` for the kernel columns `kc`.
pub fn nilpotency_residuals(tm: &FundamentalTm, kc: &DMatrix<C>, seed: u64) -> (f64, f64) {
    let n = tm.n_osc();
    let d = |i: usize, j: usize| {
        let mut b = tm.block(i, j);
        if i == j {
            for q in 0..n {
                b[(q, q)] -= C::new(1.0, 0.0);
            }
        }
        b
    };
    let blocks: Vec<DMatrix<C>> = (0..4).map(|ij| d(ij / 2, ij % 2)).collect();
    let norms: Vec<f64> = blocks.iter().map(inf_norm).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    let phi = DVector::from_fn(n, |_, _| {
        C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let pn = vec_max(&phi);
    let mut worst = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            let r = &blocks[a] * (&blocks[b] * &phi);
            worst = worst.max(ratio(vec_max(&r), norms[a] * norms[b] * pn));
        }
    }
    let mut kworst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..2 {
                let col = DVector::from_fn(n, |q, _| kc[(j * n + q, l)]);
                let r = &blocks[2 * i + j] * &col;
                kworst = kworst.max(ratio(vec_max(&r), norms[2 * i + j] * vec_max(&col)));
            }
        }
    }
    (worst, kworst)
}

/// Compare the engine with the first Born amplitude under `v~ = 0 for
/// K <= alpha`, `k <= alpha`, where they must agree.
pub fn born_exactness_report(
    spec: &PotentialSpec,
    alpha: f64,
    k: f64,
    theta0s: &[f64],
    n_theta: usize,
    grid: ScanGrid,
    settings: &EvolveSettings,
) -> Result<BornExactness> {
    if !(k > 0.0 && k <= alpha) {
        return Err(Error::PremiseViolated(format!(
            "k = {k} is not in (0, alpha = {alpha}]"
        )));
    }
    let (beta, _) = support_premise(spec, alpha, 1.0, 0.0, (grid.p_max_over_k + 1.0) * k)?;
    let g = build_grid(k, grid.n_osc, grid.n_ev, grid.p_max_over_k * k)?;
    let pb = Problem::new(spec, &g.sectors)?;
    let tm = fundamental_tm(&pb, settings)?;
    let thetas = theta_mesh(n_theta);
    let mut errors = Vec::new();
    let mut born_scale = 0.0f64;
    let mut kernel_nil = 0.0f64;
    let mut b_err = 0.0f64;
    let mut nil = 0.0f64;
    for (idx, &t0) in theta0s.iter().enumerate() {
        let side = side_of(t0);
        let w = solve_incident(&tm, t0, side)?;
        let f = amplitude(&w, &g, &thetas);
        let fb: Vec<C> = thetas
            .iter()
            .map(|&t| born_amplitude_2d(spec, k, t0, t))
            .collect::<Result<_>>()?;
        let sc = fb.iter().map(|v| v.norm()).fold(0.0, f64::max);
        born_scale = born_scale.max(sc);
        let diff = f
            .values
            .iter()
            .zip(&fb)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        errors.push((t0, ratio(diff, sc)));
        let kc = tm.kernel_columns(w.p0)?;
        let (a, b) = nilpotency_residuals(&tm, &kc, 0x5eed + idx as u64);
        nil = nil.max(a);
        kernel_nil = kernel_nil.max(b);
        // b = -(2 pi) varpi0 k_{2l}(., p0) once the series has stopped
        let n = tm.n_osc();
        let l = if side == Side::Left { 0 } else { 1 };
        let dn = pb.sectors.delta_norm() * w.varpi0;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for q in 0..n {
            let closed = -kc[(n + q, l)] * dn;
            num = num.max((closed - w.b_minus[q]).norm());
            den = den.max(closed.norm());
        }
        b_err = b_err.max(ratio(num, den));
    }
    let worst = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(BornExactness {
        k,
        alpha,
        beta,
        nilpotency_residual: nil,
        kernel_nilpotency: kernel_nil,
        amplitude_errors: errors,
        worst_amplitude_error: worst,
        born_scale,
        closed_form_b_error: b_err,
    })
}

/// Largest first-Born |f| for incidence from the left and from the right.
pub fn born_asymmetry(spec: &PotentialSpec, k: f64, n: usize) -> Result<(f64, f64)> {
    let mesh = theta_mesh(n);
    let mut left = 0.0f64;
    let mut right = 0.0f64;
    for &t0 in &mesh {
        for &t in &mesh {
            let f = born_amplitude_2d(spec, k, t0, t)?.norm();
            match side_of(t0) {
                Side::Left => left = left.max(f),
                Side::Right => right = right.max(f),
            }
        }
    }
    Ok((left, right))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftReport {
    pub beta: f64,
    pub gamma: f64,
    /// max |(V g)(p)| for p.e <= beta + gamma, relative to |V| |g|.
    pub leakage: f64,
    pub iterations: usize,
    /// max |P V...V phi| after `iterations` applications, relative to prod |V| |phi|.
    pub projected_image: f64,
}

fn along(s: &Sectors, i: usize, angle: f64) -> f64 {
    let p = s.points[i];
    if s.dim == 1 {
        p[0] * angle.cos()
    } else {
        p[0] * angle.cos() + p[1] * angle.sin()
    }
}

/// Support-shift checks on the grid: one application of the interaction
/// operator to random data supported on `p.e > gamma` (leakage below
/// `beta + gamma`), and `ceil((k + alpha) / beta)` applications to data
/// supported on `p.e > -alpha`, whose oscillating part must vanish.
pub fn verify_support_shift(
    spec: &PotentialSpec,
    sectors: &Sectors,
    angle: f64,
    gamma: f64,
    alpha: f64,
    xs: &[f64],
    seed: u64,
) -> Result<ShiftReport> {
    let beta = spec
        .support_lower_edge(angle)
        .ok_or_else(|| Error::PremiseViolated("no one-sided support".into()))?;
    if xs.is_empty() {
        return Err(Error::InvalidConfig("no x samples".into()));
    }
    let n = sectors.len();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut random = |keep: &dyn Fn(usize) -> bool| {
        DVector::from_fn(n, |i, _| {
            if keep(i) {
                C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                C::new(0.0, 0.0)
            }
        })
    };
    let ops: Vec<DMatrix<C>> = xs
        .iter()
        .map(|&x| interaction_operator(spec, sectors, x))
        .collect();
    let mut leak = 0.0f64;
    for v in &ops {
        let g = random(&|i| along(sectors, i, angle) > gamma);
        let img = v * &g;
        let below = (0..n)
            .filter(|&i| along(sectors, i, angle) <= beta + gamma)
            .map(|i| img[i].norm())
            .fold(0.0, f64::max);
        leak = leak.max(ratio(below, inf_norm(v) * vec_max(&g)));
    }
    let k = sectors.k;
    let iterations = if beta.is_finite() && beta > 0.0 {
        ((k + alpha) / beta).ceil().max(1.0) as usize
    } else {
        1
    };
    let mut phi = random(&|i| along(sectors, i, angle) > -alpha);
    let mut bound = vec_max(&phi);
    for it in 0..iterations {
        let v = &ops[it % ops.len()];
        bound *= inf_norm(v);
        phi = v * phi;
    }
    let proj = (0..sectors.n_osc)
        .map(|i| phi[i].norm())
        .fold(0.0, f64::max);
    Ok(ShiftReport {
        beta,
        gamma,
        leakage: leak,
        iterations,
        projected_image: ratio(proj, bound),
    })
}
