//! Acceptance suite: one PASS/FAIL line per criterion.  Runtime limits are
//! part of each criterion.  Exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use tmscatter::closed_form::{auxiliary_divergence, delta2d_amplitude, delta3d_amplitude};
use tmscatter::hamiltonian::Problem;
use tmscatter::invisibility::{born_exactness_report, certify_invisibility, verify_support_shift};
use tmscatter::oracles::born_series_greens_2d;
use tmscatter::oracles::oned;
use tmscatter::par::Execution;
use tmscatter::potential::{Transverse, XProfile};
use tmscatter::scatter::{amplitude, auxiliary_system, solve_incident, theta_mesh, ScanGrid};
use tmscatter::threed::{amplitude_3d, direction_mesh, solve_3d, Grid3d};
use tmscatter::transfer::{auxiliary_tm, fundamental_tm, sandwich};
use tmscatter::{build_grid, EvolveSettings, PotentialSpec, Side, C};

type Outcome = Result<(bool, String), String>;

fn rel_max(got: &[C], want: &[C]) -> f64 {
    let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max);
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn delta_line() -> Outcome {
    let (z, a, k, t0) = (C::new(1.0, 0.5), 0.7, 1.0, 0.3);
    let g = build_grid(k, 64, 8, 4.0 * k).map_err(e)?;
    let pb = Problem::new(&PotentialSpec::delta_line(z, a), &g.sectors).map_err(e)?;
    let tm = fundamental_tm(&pb, &EvolveSettings::default()).map_err(e)?;
    let thetas = theta_mesh(64);
    let exact: Vec<C> = thetas
        .iter()
        .map(|&t| delta2d_amplitude(z, a, k, t, t0))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    let mut worst = 0.0f64;
    for side in [Side::Left, Side::Right] {
        let w = solve_incident(&tm, t0, side).map_err(e)?;
        // the exact amplitude depends on theta0 only through sin(theta0)
        worst = worst.max(rel_max(&amplitude(&w, &g, &thetas).values, &exact));
    }
    Ok((
        worst <= 1e-8,
        format!("max relative error {worst:.2e} (both sides, 64 angles)"),
    ))
}

fn divergence() -> Outcome {
    let d = auxiliary_divergence(C::new(1.0, 0.5), 1.0, &[4.0, 8.0, 16.0, 32.0, 64.0], 64, 16)
        .map_err(e)?;
    let slope_err = (d.slope - d.analytic_slope).norm() / d.analytic_slope.norm();
    let moment_err = (d.osc_moment - C::new(PI, 0.0)).norm();
    Ok((
        slope_err <= 0.05 && moment_err <= 1e-12,
        format!(
            "slope {:.6} vs {:.6} (rel {slope_err:.2e}); oscillating moment - pi = {moment_err:.1e}",
            d.slope, d.analytic_slope
        ),
    ))
}

fn delta_3d() -> Outcome {
    let (z, k) = (C::new(0.8, 0.3), 1.0);
    let g = Grid3d::default().build(k).map_err(e)?;
    let moment: C = g.sectors.w_over_varpi[..g.n_osc()].iter().sum();
    let moment_err = (moment - C::new(2.0 * PI * k, 0.0)).norm();
    let pb = Problem::new(&PotentialSpec::point_delta_3d(z), &g.sectors).map_err(e)?;
    let tm = fundamental_tm(&pb, &EvolveSettings::default()).map_err(e)?;
    let exact = delta3d_amplitude(z, k).map_err(e)?;
    let dirs = direction_mesh(6, 8);
    let mut worst = 0.0f64;
    for inc in direction_mesh(2, 3) {
        let w = solve_3d(&tm, inc, inc.side()).map_err(e)?;
        for v in amplitude_3d(&w, &g, &dirs).values {
            worst = worst.max((v - exact).norm() / exact.norm());
        }
    }
    Ok((
        worst <= 1e-4 && moment_err <= 1e-10,
        format!("max relative error {worst:.2e}; disk moment - 2 pi k = {moment_err:.1e}"),
    ))
}

fn band(coupling: C, lo: f64, hi: f64) -> PotentialSpec {
    PotentialSpec::band_limited(coupling, XProfile::Bump { lo: -1.0, hi: 1.0 }, lo, hi)
}

fn invisibility() -> Outcome {
    let alpha = 1.0;
    let spec = band(C::new(0.8, 0.3), 2.0 * alpha, 2.0 * alpha + 4.0);
    let grid = ScanGrid {
        n_osc: 24,
        n_ev: 16,
        p_max_over_k: 16.0,
    };
    let c = certify_invisibility(
        &spec,
        alpha,
        &[0.5 * alpha, 0.99 * alpha],
        &[0.3, 1.2, 2.5, 4.0],
        64,
        grid,
        &EvolveSettings::default(),
        1e-7,
    )
    .map_err(e)?;
    Ok((
        c.worst_tm_residual <= 1e-7 && c.worst_amplitude <= 1e-7 * c.scale,
        format!(
            "|M - I|max {:.1e}, max|f| {:.1e} (scale {:.3})",
            c.worst_tm_residual, c.worst_amplitude, c.scale
        ),
    ))
}

fn born_exactness() -> Outcome {
    let alpha = 1.0;
    let spec = band(C::new(0.8, 0.3), alpha, alpha + 2.0);
    // the flat edges of the band bump need a fine mesh to interpolate
    let grid = ScanGrid {
        n_osc: 192,
        n_ev: 16,
        p_max_over_k: 4.0,
    };
    // sin(theta0) < 0 so that the transfer k (sin theta - sin theta0) reaches the band
    let r = born_exactness_report(
        &spec,
        alpha,
        0.9,
        &[-0.9, PI + 0.9],
        64,
        grid,
        &EvolveSettings::default(),
    )
    .map_err(e)?;
    if r.born_scale == 0.0 {
        return Err(
            "the Born amplitude vanishes on the mesh; the comparison would be empty".into(),
        );
    }
    let nil = r.nilpotency_residual.max(r.kernel_nilpotency);
    Ok((
        r.worst_amplitude_error <= 1e-4 && nil <= 1e-8,
        format!(
            "amplitude error {:.2e} (64 angles, Born scale {:.3e}), nilpotency {:.1e}",
            r.worst_amplitude_error, r.born_scale, nil
        ),
    ))
}

fn composition() -> Outcome {
    let spec = PotentialSpec::gaussian(C::new(0.6, 0.2), 0.5, 1.0);
    let g = build_grid(1.0, 12, 6, 4.0).map_err(e)?;
    let pb = Problem::new(&spec, &g.sectors).map_err(e)?;
    let st = EvolveSettings::default();
    let tms = [1, 2, 4, 8]
        .iter()
        .map(|&s| auxiliary_tm(&pb, s, &st).map(|m| sandwich(&m, pb.n_osc())))
        .collect::<Result<Vec<_>, _>>()
        .map_err(e)?;
    let mut worst = 0.0f64;
    for i in 0..tms.len() {
        for j in i + 1..tms.len() {
            worst = worst.max(tms[i].max_abs_diff(&tms[j]));
        }
    }
    let scale = tms[0].distance_from_identity();
    Ok((
        worst <= 1e-8,
        format!("pairwise max difference {worst:.1e} (|M - I| = {scale:.3})"),
    ))
}

fn reduction_1d() -> Outcome {
    let (k, z, l) = (1.0, 0.3, 1.0);
    let g = build_grid(k, 16, 4, 4.0).map_err(e)?;
    let pb = Problem::new(
        &PotentialSpec::rect_barrier(C::new(z * k * k, 0.0), 0.0, l / k),
        &g.sectors,
    )
    .map_err(e)?;
    let tm =
        fundamental_tm(&pb, &EvolveSettings::default().with_step(l / k / 2000.0)).map_err(e)?;
    let n = tm.n_osc();
    let (mut err, mut det, mut off) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        let w = g.sectors.varpi[i].re;
        let exact = oned::rect_barrier(C::new(z * k * k, 0.0), 0.0, l / k, w);
        let got = nalgebra::Matrix2::new(
            tm.m.mat[(i, i)],
            tm.m.mat[(i, n + i)],
            tm.m.mat[(n + i, i)],
            tm.m.mat[(n + i, n + i)],
        );
        let scale = exact.iter().map(|v| v.norm()).fold(0.0, f64::max);
        err = err.max((got - exact).iter().map(|v| v.norm()).fold(0.0, f64::max) / scale);
        det = det.max((got.determinant() - C::new(1.0, 0.0)).norm());
        for j in 0..n {
            if j != i {
                for (r, c) in [(i, j), (i, n + j), (n + i, j), (n + i, n + j)] {
                    off = off.max(tm.m.mat[(r, c)].norm());
                }
            }
        }
    }
    Ok((
        err <= 1e-8 && det <= 1e-10,
        format!("channel error {err:.1e}, |det - 1| {det:.1e}, off-diagonal {off:.1e}"),
    ))
}

fn oracle_agreement() -> Outcome {
    let angles = [0.2, 0.9, 1.7, 2.6, 4.0];
    let (k, t0) = (1.0, 0.3);
    let spec = PotentialSpec::gaussian(C::new(0.1 * k * k, 0.0), 0.5, 1.0);
    let oracle =
        born_series_greens_2d(&spec, k, t0, &angles, 8, 0.1, Execution::Parallel).map_err(e)?;
    let ratio = oracle.ratios.iter().copied().fold(0.0, f64::max);
    let g = build_grid(k, 48, 16, 4.0 * k).map_err(e)?;
    let pb = Problem::new(&spec, &g.sectors).map_err(e)?;
    let st = EvolveSettings::default();
    let tm = fundamental_tm(&pb, &st).map_err(e)?;
    let f = amplitude(
        &solve_incident(&tm, t0, Side::Left).map_err(e)?,
        &g,
        &angles,
    );
    let rel = rel_each(&f.values, oracle.total());
    let aux = auxiliary_system(&pb, &st).map_err(e)?;
    let fa = amplitude(
        &solve_incident(&aux, t0, Side::Left).map_err(e)?,
        &g,
        &angles,
    );
    let rel_aux = rel_each(&fa.values, oracle.total());
    Ok((
        rel <= 1e-3 && ratio < 0.9,
        format!(
            "fundamental route {rel:.2e}; series ratio {ratio:.3}\n    note: auxiliary (full-grid) route {rel_aux:.2e} against the same oracle"
        ),
    ))
}

fn rel_each(got: &[C], want: &[C]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm() / b.norm())
        .fold(0.0, f64::max)
}

fn support_shift() -> Outcome {
    let (k, alpha) = (1.0, 1.0);
    let spec = band(C::new(0.8, 0.3), 0.7, 2.5);
    let g = build_grid(k, 32, 24, 8.0).map_err(e)?;
    let xs = [-0.6, -0.1, 0.0, 0.35, 0.8];
    let r = verify_support_shift(&spec, &g.sectors, 0.0, -0.4, alpha, &xs, 7).map_err(e)?;
    Ok((
        r.leakage <= 1e-10 && r.projected_image <= 1e-12,
        format!(
            "leakage {:.1e}; image after {} applications {:.1e}",
            r.leakage, r.iterations, r.projected_image
        ),
    ))
}

fn naive_substitution(others_pass: bool, failing: &[usize]) -> Outcome {
    let tr = Transverse::Gaussian {
        width: 0.7,
        center: [0.0; 2],
    };
    let spec = PotentialSpec::sheet(2, C::new(1.5, 0.5), 0.0, tr.clone())
        .plus(&PotentialSpec::sheet(2, C::new(1.5, 0.5), 0.8, tr))
        .map_err(e)?;
    let g = build_grid(1.0, 24, 12, 6.0).map_err(e)?;
    let pb = Problem::new(&spec, &g.sectors).map_err(e)?;
    let st = EvolveSettings::default();
    let fundamental = fundamental_tm(&pb, &st).map_err(e)?;
    let naive = sandwich(
        &auxiliary_tm(&pb.projected(), 2, &st).map_err(e)?,
        pb.n_osc(),
    );
    let rel = naive.max_abs_diff(&fundamental.m) / fundamental.m.distance_from_identity();
    let mut msg = format!("relative difference {rel:.2e}");
    if !others_pass {
        msg += &format!("; criteria 1-8 not all passing (failing: {failing:?})");
    }
    Ok((rel >= 1e-4 && others_pass, msg))
}

fn report(n: usize, name: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let out = run();
    let dt = t.elapsed();
    let (ok, msg) = match out {
        Ok((ok, msg)) => (ok && dt <= limit, msg),
        Err(err) => (false, format!("error: {err}")),
    };
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!(
        "criterion {n:>2} {verdict} {name}: {msg} [{:.2} s, limit {} s]",
        dt.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let mut results = vec![
        report(1, "delta line 2D", s(1), delta_line),
        report(2, "implicit regularization", s(1), divergence),
        report(3, "point delta 3D", s(120), delta_3d),
        report(4, "invisibility certificate", s(120), invisibility),
        report(5, "first-Born exactness", s(120), born_exactness),
        report(6, "composition", s(60), composition),
        report(7, "1D reduction", s(30), reduction_1d),
        report(8, "Green's-function oracle", s(120), oracle_agreement),
        report(9, "support shift", s(30), support_shift),
    ];
    let failing: Vec<usize> = results[..8]
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    let others = failing.is_empty();
    results.push(report(10, "naive substitution", s(60), || {
        naive_substitution(others, &failing)
    }));
    let passed = results.iter().filter(|ok| **ok).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
