//! Transfer matrices and scattering solves against exact results.

use std::f64::consts::PI;

use tmscatter::closed_form::{delta2d_amplitude, multi_delta_solve};
use tmscatter::error::Error;
use tmscatter::hamiltonian::{BlockOperator, Problem};
use tmscatter::potential::{Transverse, XProfile};
use tmscatter::scatter::{
    amplitude, cross_section, solve_incident, spectral_singularity_scan, theta_mesh, ScanGrid,
};
use tmscatter::transfer::{
    auxiliary_tm, compose, evolve, fundamental_tm, sandwich, slice_tms, truncated_dyson,
};
use tmscatter::{build_grid, EvolveSettings, PotentialSpec, Scheme, Side, C};

const I: C = C::new(0.0, 1.0);

fn gaussian() -> PotentialSpec {
    PotentialSpec::gaussian(C::new(0.6, 0.2), 0.5, 1.0)
}

#[test]
fn zero_potential_gives_identities() {
    let g = build_grid(1.0, 8, 4, 4.0).unwrap();
    let pb = Problem::new(&PotentialSpec::zero(2), &g.sectors).unwrap();
    let st = EvolveSettings::default();
    assert_eq!(
        fundamental_tm(&pb, &st).unwrap().m.distance_from_identity(),
        0.0
    );
    assert_eq!(
        auxiliary_tm(&pb, 3, &st).unwrap().distance_from_identity(),
        0.0
    );
    assert_eq!(
        truncated_dyson(&pb, 2, 4, 0.5)
            .unwrap()
            .distance_from_identity(),
        0.0
    );
}

#[test]
fn delta_line_matrix_entries() {
    // (M - I)_{jl}(p, q) = -(i z / 2) s_j e^{-i a (p - q)} w_q / (2 pi varpi_q)
    let (z, a) = (C::new(0.9, -0.4), 0.35);
    let g = build_grid(1.3, 12, 6, 5.0).unwrap();
    let pb = Problem::new(&PotentialSpec::delta_line(z, a), &g.sectors).unwrap();
    let m = fundamental_tm(&pb, &EvolveSettings::default()).unwrap().m;
    let n = m.n;
    let s = &g.sectors;
    let mut worst = 0.0f64;
    for r in 0..2 * n {
        for c in 0..2 * n {
            let (j, p) = (r / n, r % n);
            let q = c % n;
            let sj = if j == 0 { 1.0 } else { -1.0 };
            let id = if r == c { 1.0 } else { 0.0 };
            let phase = C::from_polar(1.0, -a * (s.points[p][0] - s.points[q][0]));
            let want = id - 0.5 * I * z * sj * phase * s.w_over_varpi[q] / (2.0 * PI);
            worst = worst.max((m.mat[(r, c)] - want).norm());
        }
    }
    assert!(worst < 1e-14, "{worst:e}");
}

#[test]
fn multi_delta_lines_match_closed_form() {
    let lines = [
        (C::new(0.8, 0.2), -0.4),
        (C::new(-0.3, 0.6), 0.5),
        (C::new(1.1, 0.0), 1.3),
    ];
    let (k, t0) = (1.2, -0.5);
    let g = build_grid(k, 64, 4, 4.0 * k).unwrap();
    let pb = Problem::new(&PotentialSpec::multi_delta(&lines), &g.sectors).unwrap();
    let tm = fundamental_tm(&pb, &EvolveSettings::default()).unwrap();
    let exact = multi_delta_solve(&lines, k, t0, Side::Left).unwrap();
    let thetas = theta_mesh(40);
    let f = amplitude(&solve_incident(&tm, t0, Side::Left).unwrap(), &g, &thetas);
    for (t, v) in thetas.iter().zip(&f.values) {
        let e = exact.amplitude(*t);
        assert!(
            (v - e).norm() < 1e-12 * e.norm().max(1e-3),
            "{t}: {v} vs {e}"
        );
    }
}

#[test]
fn delta_line_both_sides_and_cross_section() {
    let (z, a, k, t0) = (C::new(0.4, 0.3), -0.2, 0.8, 0.6);
    let g = build_grid(k, 48, 4, 4.0 * k).unwrap();
    let pb = Problem::new(&PotentialSpec::delta_line(z, a), &g.sectors).unwrap();
    let tm = fundamental_tm(&pb, &EvolveSettings::default()).unwrap();
    let thetas = theta_mesh(16);
    for side in [Side::Left, Side::Right] {
        let f = amplitude(&solve_incident(&tm, t0, side).unwrap(), &g, &thetas);
        let expect = 2.0 / PI * (z / (4.0 + I * z)).norm_sqr();
        for (t, s) in thetas.iter().zip(cross_section(&f)) {
            assert!((s - expect).abs() < 1e-12, "{side:?} {t}");
            let e = delta2d_amplitude(z, a, k, *t, t0).unwrap();
            let i = thetas.iter().position(|u| u == t).unwrap();
            assert!((f.values[i] - e).norm() < 1e-12);
        }
    }
}

#[test]
fn grazing_incidence_is_refused() {
    let g = build_grid(1.0, 8, 4, 4.0).unwrap();
    let pb = Problem::new(&gaussian(), &g.sectors).unwrap();
    let tm = fundamental_tm(&pb, &EvolveSettings::default()).unwrap();
    assert!(matches!(
        solve_incident(&tm, PI / 2.0, Side::Left),
        Err(Error::GrazingIncidence(_))
    ));
}

#[test]
fn spectral_singularity_of_a_delta_line() {
    // 4 + i z = 0 makes M22 singular for every k
    let spec = PotentialSpec::delta_line(C::new(0.0, 4.0), 0.0);
    let g = build_grid(1.0, 16, 4, 4.0).unwrap();
    let pb = Problem::new(&spec, &g.sectors).unwrap();
    let tm = fundamental_tm(&pb, &EvolveSettings::default()).unwrap();
    assert!(matches!(
        solve_incident(&tm, 0.2, Side::Left),
        Err(Error::SingularSystem { .. })
    ));
    let grid = ScanGrid {
        n_osc: 16,
        n_ev: 4,
        p_max_over_k: 4.0,
    };
    let scan =
        spectral_singularity_scan(&spec, &[0.5, 1.0], grid, &EvolveSettings::default()).unwrap();
    for p in scan {
        assert!(p.ratio() < 1e-12, "{p:?}");
    }
    let ok = PotentialSpec::delta_line(C::new(0.0, 1.0), 0.0);
    let scan = spectral_singularity_scan(&ok, &[1.0], grid, &EvolveSettings::default()).unwrap();
    assert!(scan[0].ratio() > 0.1);
}

#[test]
fn slicing_and_composition_agree() {
    let g = build_grid(1.0, 10, 6, 4.0).unwrap();
    let pb = Problem::new(&gaussian(), &g.sectors).unwrap();
    let st = EvolveSettings::default();
    let one = auxiliary_tm(&pb, 1, &st).unwrap();
    let parts = slice_tms(&pb, 3, &st).unwrap();
    let assoc = compose(&[parts[0].clone(), compose(&parts[1..]).unwrap()]).unwrap();
    assert!(assoc.max_abs_diff(&compose(&parts).unwrap()) < 1e-13);
    let fund = fundamental_tm(&pb, &st).unwrap();
    // the oscillating block of the auxiliary matrix is the fundamental matrix
    assert!(sandwich(&one, pb.n_osc()).max_abs_diff(&fund.m) < 1e-9);
    assert!(sandwich(&compose(&parts).unwrap(), pb.n_osc()).max_abs_diff(&fund.m) < 1e-9);
}

#[test]
fn composing_across_grids_is_an_error() {
    let a = build_grid(1.0, 8, 4, 4.0).unwrap();
    let b = build_grid(1.0, 8, 4, 5.0).unwrap();
    let st = EvolveSettings::default();
    let ta = auxiliary_tm(&Problem::new(&gaussian(), &a.sectors).unwrap(), 1, &st).unwrap();
    let tb = auxiliary_tm(&Problem::new(&gaussian(), &b.sectors).unwrap(), 1, &st).unwrap();
    assert!(matches!(compose(&[ta, tb]), Err(Error::GridMismatch(_))));
    assert!(compose(&[]).is_err());
    let id = BlockOperator::identity(3);
    assert_eq!(
        compose(&[id.clone(), id.clone(), id])
            .unwrap()
            .distance_from_identity(),
        0.0
    );
}

#[test]
fn integrators_agree() {
    let g = build_grid(1.0, 10, 6, 4.0).unwrap();
    let pb = Problem::new(&gaussian(), &g.sectors).unwrap();
    let rk = fundamental_tm(&pb, &EvolveSettings::default()).unwrap();
    let mid = fundamental_tm(
        &pb,
        &EvolveSettings::default()
            .with_scheme(Scheme::Midpoint)
            .with_step(0.002),
    )
    .unwrap();
    assert!(rk.m.max_abs_diff(&mid.m) < 1e-6);
    let coarse = fundamental_tm(&pb, &EvolveSettings::default().with_step(0.1)).unwrap();
    let d = rk.m.max_abs_diff(&coarse.m);
    assert!(d > 0.0 && d < 1e-6, "{d:e}");
}

#[test]
fn lab_frame_evolution_has_the_free_part() {
    // outside the support the lab propagator is exp(-Im(varpi) x sigma_3)
    let g = build_grid(1.0, 6, 4, 3.0).unwrap();
    let pb = Problem::new(&PotentialSpec::zero(2), &g.sectors).unwrap();
    let u = evolve(&pb, 0.0, 0.5, &EvolveSettings::default()).unwrap();
    let n = pb.n();
    for i in 0..n {
        let d = g.sectors.varpi[i].im * 0.5;
        assert!((u.mat[(i, i)].re - (-d).exp()).abs() < 1e-15);
        assert!((u.mat[(n + i, n + i)].re - d.exp()).abs() < 1e-12 * d.exp());
    }
}

#[test]
fn overflow_is_reported() {
    let g = build_grid(1.0, 6, 4, 40.0).unwrap();
    let pb = Problem::new(&PotentialSpec::zero(2), &g.sectors).unwrap();
    assert!(matches!(
        evolve(&pb, 0.0, 30.0, &EvolveSettings::default()),
        Err(Error::Overflow(_))
    ));
}

#[test]
fn dyson_first_order_and_its_error() {
    let g = build_grid(1.0, 10, 6, 4.0).unwrap();
    let st = EvolveSettings::default().with_step(0.01);
    // first Born exact class: the series stops after one term
    let band = PotentialSpec::band_limited(
        C::new(0.8, 0.3),
        XProfile::Bump { lo: -1.0, hi: 1.0 },
        1.0,
        3.0,
    );
    let pb = Problem::new(&band, &g.sectors).unwrap();
    let d1 = truncated_dyson(&pb, 1, 8, 0.1).unwrap();
    assert!(d1.max_abs_diff(&fundamental_tm(&pb, &st).unwrap().m) < 1e-6);
    // a gaussian does not stop: the first-order error scales like z^2
    let err = |z: f64| {
        let pb = Problem::new(
            &PotentialSpec::gaussian(C::new(z, 0.0), 0.5, 1.0),
            &g.sectors,
        )
        .unwrap();
        let d1 = truncated_dyson(&pb, 1, 8, 0.1).unwrap();
        d1.max_abs_diff(&fundamental_tm(&pb, &st).unwrap().m)
    };
    let ratio = err(0.2) / err(0.1);
    assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    // and two orders do better
    let pb = Problem::new(
        &PotentialSpec::gaussian(C::new(0.1, 0.0), 0.5, 1.0),
        &g.sectors,
    )
    .unwrap();
    let d2 = truncated_dyson(&pb, 2, 8, 0.1).unwrap();
    assert!(d2.max_abs_diff(&fundamental_tm(&pb, &st).unwrap().m) < 0.2 * err(0.1));
}

#[test]
fn y_independent_amplitudes_are_unsupported() {
    let g = build_grid(1.0, 8, 4, 4.0).unwrap();
    let pb = Problem::new(
        &PotentialSpec::rect_barrier(C::new(0.3, 0.0), 0.0, 1.0),
        &g.sectors,
    )
    .unwrap();
    let tm = fundamental_tm(&pb, &EvolveSettings::default()).unwrap();
    assert!(matches!(
        solve_incident(&tm, 0.2, Side::Left),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn sheet_with_gaussian_profile_is_reciprocal_in_the_forward_direction() {
    // a real symmetric profile: f(theta0 -> theta) = f(pi + theta -> pi + theta0)
    let spec = PotentialSpec::sheet(
        2,
        C::new(0.7, 0.0),
        0.0,
        Transverse::Gaussian {
            width: 0.8,
            center: [0.0; 2],
        },
    );
    let k = 1.0;
    let g = build_grid(k, 64, 4, 4.0).unwrap();
    let pb = Problem::new(&spec, &g.sectors).unwrap();
    let tm = fundamental_tm(&pb, &EvolveSettings::default()).unwrap();
    let (t0, t) = (0.3, 1.1);
    let a = amplitude(&solve_incident(&tm, t0, Side::Left).unwrap(), &g, &[t]).values[0];
    let b = amplitude(
        &solve_incident(&tm, PI + t, Side::Right).unwrap(),
        &g,
        &[PI + t0],
    )
    .values[0];
    assert!((a - b).norm() < 1e-10 * a.norm(), "{a} {b}");
}

#[test]
fn sequential_and_parallel_agree() {
    let g = build_grid(1.0, 12, 6, 4.0).unwrap();
    let pb = Problem::new(&gaussian(), &g.sectors).unwrap();
    let par = fundamental_tm(
        &pb,
        &EvolveSettings::default().with_execution(tmscatter::par::Execution::Parallel),
    )
    .unwrap();
    let seq = fundamental_tm(
        &pb,
        &EvolveSettings::default().with_execution(tmscatter::par::Execution::Sequential),
    )
    .unwrap();
    assert_eq!(par.m, seq.m);
}
