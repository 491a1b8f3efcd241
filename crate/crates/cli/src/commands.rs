//! The subcommand pipelines.

use crate::config::Loaded;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;
use tmscatter::hamiltonian::Problem;
use tmscatter::invisibility::{born_exactness_report, certify_invisibility, side_of};
use tmscatter::oracles::born_series_greens_2d;
use tmscatter::output::{
    amplitude_3d_rows, amplitude_rows, csv_string, AMPLITUDE_3D_COLUMNS, AMPLITUDE_COLUMNS,
};
use tmscatter::scatter::{
    amplitude, auxiliary_system, solve_incident, spectral_singularity_scan, theta_mesh,
    AmplitudeTable, Route, WaveCoefficients,
};
use tmscatter::threed::{
    amplitude_3d, born_exactness_3d, certify_invisibility_3d, direction_mesh, solve_3d,
    AmplitudeTable3d, Direction,
};
use tmscatter::transfer::{auxiliary_tm, fundamental_tm, sandwich};
use tmscatter::{build_grid, par, Error, Result, Sectors};

pub enum Status {
    Ok,
    NotCertified,
}

pub fn run(name: &str, l: &Loaded) -> Result<Status> {
    match name {
        "amplitude" => amplitude_cmd(l),
        "cross-section" => cross_section_cmd(l),
        "certify" => certify_cmd(l),
        "born-exact" => born_exact_cmd(l),
        "scan-ss" => scan_cmd(l),
        "compose-bench" => compose_cmd(l),
        "oracle-compare" => oracle_cmd(l),
        _ => Err(Error::InvalidConfig(format!("unknown command {name}"))),
    }
    .map(|certified| {
        if certified {
            Status::Ok
        } else {
            Status::NotCertified
        }
    })
}

fn spatial(l: &Loaded) -> bool {
    l.spec.dim == 3
}

fn emit(l: &Loaded, text: String) -> Result<()> {
    match &l.config.output.path {
        Some(p) => tmscatter::output::write_atomic(p, text.as_bytes()),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn emit_csv(
    l: &Loaded,
    command: &str,
    extra: Vec<String>,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<()> {
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{command} output")));
    }
    let mut header = l.header(command);
    header.extend(extra);
    emit(l, csv_string(&header, columns, rows))
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    config_blob: &'a str,
    result: T,
}

fn emit_json<T: Serialize>(l: &Loaded, command: &str, result: T) -> Result<()> {
    let r = Report {
        command,
        config_blob: &l.hash,
        result,
    };
    let mut s = serde_json::to_string_pretty(&r)
        .map_err(|e| Error::InvalidConfig(format!("cannot serialize output: {e}")))?;
    s.push('\n');
    emit(l, s)
}

/// Solve for one incidence with the configured closure.
fn solve_planar(
    l: &Loaded,
    k: f64,
    theta0: f64,
) -> Result<(WaveCoefficients, tmscatter::MomentumGrid)> {
    let g = l.config.grid.scan();
    let grid = build_grid(k, g.n_osc, g.n_ev, g.p_max_over_k * k)?;
    let pb = Problem::new(&l.spec, &grid.sectors)?;
    let st = l.settings();
    let side = side_of(theta0);
    let w = match l.config.solver.route {
        Route::Fundamental => solve_incident(&fundamental_tm(&pb, &st)?, theta0, side)?,
        Route::Auxiliary => solve_incident(&auxiliary_system(&pb, &st)?, theta0, side)?,
    };
    Ok((w, grid))
}

fn planar_amplitude(l: &Loaded) -> Result<AmplitudeTable> {
    let k = l.config.grid.first_k()?;
    let t0 = l.config.incidence.first()?;
    let (w, g) = solve_planar(l, k, t0)?;
    Ok(amplitude(&w, &g, &theta_mesh(l.config.output.n_theta)))
}

fn spatial_amplitude(l: &Loaded) -> Result<AmplitudeTable3d> {
    let k = l.config.grid.first_k()?;
    let dir = Direction::new(l.config.incidence.first()?, l.config.incidence.phi0);
    let grid = l.config.grid.disk().build(k)?;
    let pb = Problem::new(&l.spec, &grid.sectors)?;
    let st = l.settings();
    let w = match l.config.solver.route {
        Route::Fundamental => solve_3d(&fundamental_tm(&pb, &st)?, dir, dir.side())?,
        Route::Auxiliary => solve_3d(&auxiliary_system(&pb, &st)?, dir, dir.side())?,
    };
    let o = &l.config.output;
    Ok(amplitude_3d(
        &w,
        &grid,
        &direction_mesh(o.n_polar, o.n_azimuthal),
    ))
}

fn incidence_line(k: f64, theta0: f64) -> String {
    format!("k {k} theta0_rad {theta0} side {:?}", side_of(theta0))
}

fn direction_line(k: f64, t: &AmplitudeTable3d) -> String {
    format!(
        "k {k} theta0_rad {} phi0_rad {} side {:?}",
        t.incidence.theta, t.incidence.phi, t.side
    )
}

fn amplitude_cmd(l: &Loaded) -> Result<bool> {
    let k = l.config.grid.first_k()?;
    if spatial(l) {
        let t = spatial_amplitude(l)?;
        let extra = vec![direction_line(k, &t)];
        emit_csv(
            l,
            "amplitude",
            extra,
            &AMPLITUDE_3D_COLUMNS,
            &amplitude_3d_rows(&t),
        )?;
    } else {
        let t = planar_amplitude(l)?;
        emit_csv(
            l,
            "amplitude",
            vec![incidence_line(k, t.theta0)],
            &AMPLITUDE_COLUMNS,
            &amplitude_rows(&t),
        )?;
    }
    Ok(true)
}

fn cross_section_cmd(l: &Loaded) -> Result<bool> {
    let k = l.config.grid.first_k()?;
    if spatial(l) {
        let t = spatial_amplitude(l)?;
        let o = &l.config.output;
        let cell = (PI / o.n_polar as f64) * (2.0 * PI / o.n_azimuthal as f64);
        let rows: Vec<Vec<f64>> = t
            .directions
            .iter()
            .zip(&t.values)
            .map(|(d, f)| vec![d.theta, d.phi, f.norm_sqr()])
            .collect();
        let total: f64 = rows.iter().map(|r| r[2] * r[0].sin() * cell).sum();
        let extra = vec![
            direction_line(k, &t),
            format!("total_cross_section {}", tmscatter::output::fmt_f64(total)),
        ];
        emit_csv(
            l,
            "cross-section",
            extra,
            &["theta_rad", "phi_rad", "dsigma"],
            &rows,
        )?;
    } else {
        let t = planar_amplitude(l)?;
        let cell = 2.0 * PI / l.config.output.n_theta as f64;
        let rows: Vec<Vec<f64>> = t
            .thetas
            .iter()
            .zip(&t.values)
            .map(|(&th, f)| vec![th, f.norm_sqr()])
            .collect();
        let total: f64 = rows.iter().map(|r| r[1] * cell).sum();
        let extra = vec![
            incidence_line(k, t.theta0),
            format!("total_cross_section {}", tmscatter::output::fmt_f64(total)),
        ];
        emit_csv(l, "cross-section", extra, &["theta_rad", "dsigma"], &rows)?;
    }
    Ok(true)
}

fn certify_cmd(l: &Loaded) -> Result<bool> {
    let c = &l.config;
    let st = l.settings();
    if spatial(l) {
        let o = &c.output;
        let cert = certify_invisibility_3d(
            &l.spec,
            c.solver.alpha,
            c.solver.angle,
            &c.grid.k,
            &c.incidence.directions(),
            &direction_mesh(o.n_polar, o.n_azimuthal),
            c.grid.disk(),
            &st,
            c.solver.tol,
        )?;
        let ok = cert.certified;
        emit_json(l, "certify", cert)?;
        Ok(ok)
    } else {
        let cert = certify_invisibility(
            &l.spec,
            c.solver.alpha,
            &c.grid.k,
            &c.incidence.theta0,
            c.output.n_theta,
            c.grid.scan(),
            &st,
            c.solver.tol,
        )?;
        let ok = cert.certified;
        emit_json(l, "certify", cert)?;
        Ok(ok)
    }
}

fn born_exact_cmd(l: &Loaded) -> Result<bool> {
    let c = &l.config;
    let st = l.settings();
    let inner = tmscatter::EvolveSettings {
        execution: par::Execution::Sequential,
        ..st
    };
    if spatial(l) {
        let o = &c.output;
        let dirs = direction_mesh(o.n_polar, o.n_azimuthal);
        let reports = par::map_slice(st.execution, &c.grid.k, |&k| {
            born_exactness_3d(
                &l.spec,
                c.solver.alpha,
                c.solver.angle,
                k,
                &c.incidence.directions(),
                &dirs,
                c.grid.disk(),
                &inner,
            )
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        emit_json(l, "born-exact", reports)?;
    } else {
        let reports = par::map_slice(st.execution, &c.grid.k, |&k| {
            born_exactness_report(
                &l.spec,
                c.solver.alpha,
                k,
                &c.incidence.theta0,
                c.output.n_theta,
                c.grid.scan(),
                &inner,
            )
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        emit_json(l, "born-exact", reports)?;
    }
    Ok(true)
}

fn scan_cmd(l: &Loaded) -> Result<bool> {
    if spatial(l) {
        return Err(Error::Unsupported(
            "scan-ss is implemented for planar potentials".into(),
        ));
    }
    let scan = spectral_singularity_scan(
        &l.spec,
        &l.config.grid.k,
        l.config.grid.scan(),
        &l.settings(),
    )?;
    let rows: Vec<Vec<f64>> = scan
        .iter()
        .map(|p| vec![p.k, p.sigma_min, p.sigma_max, p.ratio()])
        .collect();
    emit_csv(
        l,
        "scan-ss",
        vec![],
        &["k", "sigma_min", "sigma_max", "ratio"],
        &rows,
    )
    .map(|_| true)
}

fn sectors_for(l: &Loaded, k: f64) -> Result<Sectors> {
    Ok(if spatial(l) {
        l.config.grid.disk().build(k)?.sectors
    } else {
        let g = l.config.grid.scan();
        build_grid(k, g.n_osc, g.n_ev, g.p_max_over_k * k)?.sectors
    })
}

fn compose_cmd(l: &Loaded) -> Result<bool> {
    let k = l.config.grid.first_k()?;
    let sectors = sectors_for(l, k)?;
    let pb = Problem::new(&l.spec, &sectors)?;
    let st = l.settings();
    let fund = fundamental_tm(&pb, &st)?;
    let scale = fund.m.distance_from_identity();
    let mut rows = Vec::new();
    for &s in &l.config.solver.slices {
        let start = Instant::now();
        let m = sandwich(&auxiliary_tm(&pb, s, &st)?, pb.n_osc());
        // timings vary between runs, so they stay out of the table
        eprintln!("slices {s}: {:.3} s", start.elapsed().as_secs_f64());
        let d = m.max_abs_diff(&fund.m);
        rows.push(vec![s as f64, d, if scale > 0.0 { d / scale } else { d }]);
    }
    let extra = vec![format!(
        "k {k} distance_from_identity {}",
        tmscatter::output::fmt_f64(scale)
    )];
    emit_csv(
        l,
        "compose-bench",
        extra,
        &["slices", "max_abs_diff", "relative_diff"],
        &rows,
    )?;
    Ok(true)
}

fn oracle_cmd(l: &Loaded) -> Result<bool> {
    if spatial(l) {
        return Err(Error::Unsupported(
            "oracle-compare is implemented for planar potentials".into(),
        ));
    }
    let k = l.config.grid.first_k()?;
    let t0 = l.config.incidence.first()?;
    let table = planar_amplitude(l)?;
    let s = &l.config.solver;
    let series = born_series_greens_2d(
        &l.spec,
        k,
        t0,
        &table.thetas,
        s.oracle_order,
        s.oracle_cell,
        l.settings().execution,
    )?;
    let oracle = series.total();
    let scale = oracle.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    let rows: Vec<Vec<f64>> = table
        .thetas
        .iter()
        .zip(table.values.iter().zip(oracle))
        .map(|(&th, (f, o))| {
            let d = (f - o).norm();
            worst = worst.max(d);
            vec![th, f.re, f.im, o.re, o.im, d]
        })
        .collect();
    let extra = vec![
        incidence_line(k, table.theta0),
        format!("oracle cells {:?} ratios {:?}", series.cells, series.ratios),
        format!(
            "max_relative_error {}",
            tmscatter::output::fmt_f64(if scale > 0.0 { worst / scale } else { worst })
        ),
    ];
    emit_csv(
        l,
        "oracle-compare",
        extra,
        &[
            "theta_rad",
            "re_f",
            "im_f",
            "re_oracle",
            "im_oracle",
            "abs_diff",
        ],
        &rows,
    )?;
    Ok(true)
}
