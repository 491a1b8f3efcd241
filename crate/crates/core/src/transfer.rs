//! Transfer matrices: evolution, slicing, composition and the fundamental
//! transfer matrix restricted to the oscillating sector.
//!
//! Each smooth stretch of the potential is cut into sub-slices short enough
//! that `max Im(varpi) * width <= max_growth`.  Inside a sub-slice the state is
//! integrated in the frame anchored at the sub-slice start, where the free
//! evanescent growth has been divided out; the growth is applied exactly when
//! the sub-slice is left.  Sheets (delta functions in x) are exact jumps
//! `I - i A` because their generator squares to zero.

use crate::error::{Error, Result};
use crate::grid::{maxabs, Point, C};
use crate::hamiltonian::{conjugate_free, BlockOperator, Problem, Source, SourceData, EXP_LIMIT};
use crate::par::{self, Execution};
use crate::quad::Rule;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Classical fourth-order Runge–Kutta.
    #[default]
    Rk4,
    /// Exponential midpoint rule (second-order Magnus), exponential applied
    /// by a converged Taylor series of its action.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSettings {
    pub scheme: Scheme,
    /// Largest integration step in x.
    pub max_step: f64,
    /// Largest `Im(varpi) * width` of an anchored sub-slice.
    pub max_growth: f64,
    pub execution: Execution,
    /// Columns per parallel work item.
    pub chunk: usize,
}

impl Default for EvolveSettings {
    fn default() -> Self {
        EvolveSettings {
            scheme: Scheme::Rk4,
            max_step: 0.02,
            max_growth: 20.0,
            execution: Execution::Parallel,
            chunk: 16,
        }
    }
}

impl EvolveSettings {
    pub fn with_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }

    pub fn with_scheme(mut self, s: Scheme) -> Self {
        self.scheme = s;
        self
    }

    pub fn with_execution(mut self, e: Execution) -> Self {
        self.execution = e;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.max_step > 0.0 && self.max_growth > 0.0 && self.max_growth <= EXP_LIMIT) {
            return Err(Error::InvalidConfig(format!(
                "bad evolution settings {self:?}"
            )));
        }
        Ok(())
    }
}

/// Multiply rows by the lab-frame free propagator over `t`.
fn free_rows(pb: &Problem, y: &mut DMatrix<C>, t: f64) -> Result<()> {
    let n = pb.n();
    let g = pb.sectors.max_decay();
    if g * t.abs() > EXP_LIMIT {
        return Err(Error::Overflow(format!(
            "free propagation exp({:.1})",
            g * t.abs()
        )));
    }
    for p in pb.n_osc()..n {
        let d = pb.sectors.varpi[p].im * t;
        let (a, b) = ((-d).exp(), d.exp());
        for c in 0..y.ncols() {
            y[(p, c)] *= a;
            y[(n + p, c)] *= b;
        }
    }
    Ok(())
}

struct Stepper<'a> {
    pb: &'a Problem,
    sources: &'a [Source],
    data: SourceData,
    settings: EvolveSettings,
}

impl Stepper<'_> {
    fn f(&self, x: f64, c: f64, y: &DMatrix<C>, src: bool) -> DMatrix<C> {
        self.pb.rhs(x, c, y, self.sources, &self.data, false, src)
    }

    fn step(&self, x: f64, h: f64, c: f64, y: &mut DMatrix<C>) {
        match self.settings.scheme {
            Scheme::Rk4 => {
                let k1 = self.f(x, c, y, true);
                let k2 = self.f(x + 0.5 * h, c, &(&*y + &k1 * C::from(0.5 * h)), true);
                let k3 = self.f(x + 0.5 * h, c, &(&*y + &k2 * C::from(0.5 * h)), true);
                let k4 = self.f(x + h, c, &(&*y + &k3 * C::from(h)), true);
                *y += (k1 + (k2 + k3) * C::from(2.0) + k4) * C::from(h / 6.0);
            }
            Scheme::Midpoint => {
                let xm = x + 0.5 * h;
                let mut term = self.f(xm, c, y, true) * C::from(h);
                let mut acc = &*y + &term;
                for k in 2..80 {
                    term = self.f(xm, c, &term, false) * C::from(h / k as f64);
                    acc += &term;
                    if maxabs(&term) <= 1e-17 * maxabs(&acc) {
                        break;
                    }
                }
                *y = acc;
            }
        }
    }

    fn sheets_at(&self, x: f64, y: &mut DMatrix<C>) {
        if self
            .pb
            .sheet_positions()
            .iter()
            .any(|&a| (a - x).abs() < 1e-14)
        {
            let d = self.pb.rhs(x, x, y, self.sources, &self.data, true, true);
            *y += d;
        }
    }

    fn smooth(&self, a: f64, b: f64, y: &mut DMatrix<C>) -> Result<()> {
        let g = self.pb.sectors.max_decay();
        let nsub = if g > 0.0 {
            ((b - a) * g / self.settings.max_growth).ceil().max(1.0) as usize
        } else {
            1
        };
        let w = (b - a) / nsub as f64;
        for s in 0..nsub {
            let c = a + w * s as f64;
            let nsteps = (w / self.settings.max_step).ceil().max(1.0) as usize;
            let h = w / nsteps as f64;
            for i in 0..nsteps {
                self.step(c + h * i as f64, h, c, y);
            }
            free_rows(self.pb, y, w)?;
        }
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(format!("state after evolving ({a}, {b})")));
        }
        Ok(())
    }

    fn run(&self, y: &mut DMatrix<C>, from: f64, to: f64, include_start: bool) -> Result<()> {
        let mut pts: Vec<f64> = self
            .pb
            .breakpoints()
            .into_iter()
            .filter(|&b| b > from && b < to)
            .collect();
        pts.insert(0, from);
        pts.push(to);
        if include_start {
            self.sheets_at(from, y);
        }
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            // an empty window would apply the sheet at `from` a second time
            if b <= a {
                continue;
            }
            if self.pb.smooth_active(a, b) {
                self.smooth(a, b, y)?;
            } else {
                free_rows(self.pb, y, b - a)?;
            }
            self.sheets_at(b, y);
        }
        Ok(())
    }
}

/// Evolve the columns of `y` (lab frame) from `from` to `to`.  Sheets at
/// `from` are applied only when `include_start` is set.
pub(crate) fn propagate(
    pb: &Problem,
    y: &mut DMatrix<C>,
    sources: &[Source],
    from: f64,
    to: f64,
    include_start: bool,
    settings: &EvolveSettings,
) -> Result<()> {
    settings.validate()?;
    let m = y.ncols();
    let chunk = settings.chunk.max(1);
    if settings.execution.is_parallel() && m > chunk {
        let blocks: Vec<(usize, usize)> = (0..m)
            .step_by(chunk)
            .map(|s| (s, (s + chunk).min(m)))
            .collect();
        let y0 = &*y;
        let done = par::map_slice(settings.execution, &blocks, |&(s, e)| {
            let mut yb = y0.columns(s, e - s).into_owned();
            let src: Vec<Source> = sources
                .iter()
                .filter(|q| q.col >= s && q.col < e)
                .map(|q| Source {
                    col: q.col - s,
                    ..*q
                })
                .collect();
            let st = Stepper {
                pb,
                sources: &src,
                data: pb.source_data(&src)?,
                settings: *settings,
            };
            st.run(&mut yb, from, to, include_start)?;
            Ok::<_, Error>(yb)
        });
        for (&(s, _), r) in blocks.iter().zip(done) {
            let r = r?;
            y.columns_mut(s, r.ncols()).copy_from(&r);
        }
        return Ok(());
    }
    let st = Stepper {
        pb,
        sources,
        data: pb.source_data(sources)?,
        settings: *settings,
    };
    st.run(y, from, to, include_start)
}

/// Lab-frame propagator U(x1, x0) on the full grid.
pub fn evolve(pb: &Problem, x0: f64, x1: f64, settings: &EvolveSettings) -> Result<BlockOperator> {
    let n = pb.n();
    let mut y = DMatrix::identity(2 * n, 2 * n);
    propagate(pb, &mut y, &[], x0, x1, true, settings)?;
    Ok(BlockOperator {
        n,
        mat: y,
        tag: pb.sectors.tag(),
    })
}

/// Slice boundaries: the support cut into `slices` equal pieces.
pub fn slice_bounds(pb: &Problem, slices: usize) -> Vec<f64> {
    match pb.support() {
        None => vec![],
        Some((lo, hi)) => {
            let s = slices.max(1);
            (0..=s)
                .map(|j| {
                    if j == s {
                        hi
                    } else {
                        lo + (hi - lo) * j as f64 / s as f64
                    }
                })
                .collect()
        }
    }
}

/// Auxiliary transfer matrices of the individual slices, in slice order.
pub fn slice_tms(
    pb: &Problem,
    slices: usize,
    settings: &EvolveSettings,
) -> Result<Vec<BlockOperator>> {
    let b = slice_bounds(pb, slices);
    if b.is_empty() {
        return Ok(vec![BlockOperator {
            tag: pb.sectors.tag(),
            ..BlockOperator::identity(pb.n())
        }]);
    }
    let amax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if pb.sectors.max_decay() * amax > EXP_LIMIT {
        return Err(Error::Overflow(format!(
            "auxiliary frame factor exp({:.1})",
            pb.sectors.max_decay() * amax
        )));
    }
    let inner = EvolveSettings {
        execution: Execution::Sequential,
        ..*settings
    };
    let out = par::map_range(settings.execution, b.len() - 1, |j| {
        let u = {
            let n = pb.n();
            let mut y = DMatrix::identity(2 * n, 2 * n);
            propagate(pb, &mut y, &[], b[j], b[j + 1], j == 0, &inner)?;
            BlockOperator {
                n,
                mat: y,
                tag: pb.sectors.tag(),
            }
        };
        Ok::<_, Error>(conjugate_free(&u, &pb.sectors, b[j + 1], b[j]))
    });
    out.into_iter().collect()
}

/// Product `tms[last] ... tms[0]`.
pub fn compose(tms: &[BlockOperator]) -> Result<BlockOperator> {
    let first = tms
        .first()
        .ok_or_else(|| Error::InvalidConfig("nothing to compose".into()))?;
    for t in tms {
        if t.n != first.n || t.tag != first.tag {
            return Err(Error::GridMismatch(
                "transfer matrices were built on different grids".into(),
            ));
        }
    }
    let mut acc = first.clone();
    for t in &tms[1..] {
        acc = t.mul(&acc);
    }
    Ok(acc)
}

/// Auxiliary transfer matrix of the whole potential from `slices` slices.
pub fn auxiliary_tm(
    pb: &Problem,
    slices: usize,
    settings: &EvolveSettings,
) -> Result<BlockOperator> {
    compose(&slice_tms(pb, slices, settings)?)
}

/// Oscillating-sector restriction P A P.
pub fn sandwich(aux: &BlockOperator, n_osc: usize) -> BlockOperator {
    aux.restrict(n_osc)
}

/// The fundamental transfer matrix on the oscillating nodes together with the
/// means to evaluate its kernel on an incident delta.
#[derive(Debug, Clone)]
pub struct FundamentalTm<'a> {
    pub problem: &'a Problem,
    pub settings: EvolveSettings,
    /// Nystrom matrix on the oscillating nodes, blocks component-major.
    pub m: BlockOperator,
}

pub fn fundamental_tm<'a>(pb: &'a Problem, settings: &EvolveSettings) -> Result<FundamentalTm<'a>> {
    let n = pb.n();
    let k = pb.n_osc();
    let mut y = DMatrix::<C>::zeros(2 * n, 2 * k);
    for i in 0..k {
        y[(i, i)] = C::new(1.0, 0.0);
        y[(n + i, k + i)] = C::new(1.0, 0.0);
    }
    if let Some((lo, hi)) = pb.support() {
        propagate(pb, &mut y, &[], lo, hi, true, settings)?;
    }
    let mat = DMatrix::from_fn(2 * k, 2 * k, |r, c| {
        let rr = if r < k { r } else { n + r - k };
        y[(rr, c)]
    });
    Ok(FundamentalTm {
        problem: pb,
        settings: *settings,
        m: BlockOperator {
            n: k,
            mat,
            tag: pb.sectors.tag(),
        },
    })
}

impl FundamentalTm<'_> {
    pub fn n_osc(&self) -> usize {
        self.m.n
    }

    pub fn block(&self, j: usize, l: usize) -> DMatrix<C> {
        self.m.block(j, l)
    }

    /// Smooth kernels `k_{jl}(p_i, p0)` for l = 0, 1: column `l` of the result
    /// holds rows `(j, i)` stacked component-major over the oscillating nodes.
    pub fn kernel_columns(&self, p0: Point) -> Result<DMatrix<C>> {
        let n = self.problem.n();
        let k = self.problem.n_osc();
        let y = delta_columns(self.problem, &self.settings, p0)?;
        Ok(DMatrix::from_fn(2 * k, 2, |r, c| {
            let rr = if r < k { r } else { n + r - k };
            y[(rr, c)]
        }))
    }
}

/// Smooth part of the lab-frame propagator across the support applied to
/// `e_l delta(p - p0)`, l = 0, 1, on the full grid (2N x 2).
pub fn delta_columns(pb: &Problem, settings: &EvolveSettings, p0: Point) -> Result<DMatrix<C>> {
    let n = pb.n();
    let mut y = DMatrix::<C>::zeros(2 * n, 2);
    let sources = [
        Source {
            col: 0,
            comp: 0,
            p0,
        },
        Source {
            col: 1,
            comp: 1,
            p0,
        },
    ];
    if let Some((lo, hi)) = pb.support() {
        let st = EvolveSettings {
            execution: Execution::Sequential,
            ..*settings
        };
        propagate(pb, &mut y, &sources, lo, hi, true, &st)?;
    }
    Ok(y)
}

/// Truncated Dyson series `P [I + sum_{n <= n_max} (-i)^n \int H...H] P` in
/// the interaction picture, each ordered integral done with `order`-point
/// Gauss–Legendre panels of width at most `panel`.
pub fn truncated_dyson(
    pb: &Problem,
    n_max: usize,
    order: usize,
    panel: f64,
) -> Result<BlockOperator> {
    if pb.has_sheets() {
        return Err(Error::Unsupported(
            "Dyson series for sheet potentials".into(),
        ));
    }
    let n = pb.n();
    let k = pb.n_osc();
    let mut start = DMatrix::<C>::zeros(2 * n, 2 * k);
    for i in 0..k {
        start[(i, i)] = C::new(1.0, 0.0);
        start[(n + i, k + i)] = C::new(1.0, 0.0);
    }
    let mut total = start.clone();
    if let Some((lo, hi)) = pb.support() {
        let g = pb.sectors.max_decay();
        if g * lo.abs().max(hi.abs()) > EXP_LIMIT {
            return Err(Error::Overflow(
                "interaction picture over the support".into(),
            ));
        }
        let data = pb.source_data(&[])?;
        let bps = pb.breakpoints();
        let nodes = |a: f64, b: f64| -> Vec<(f64, f64)> {
            let mut cuts: Vec<f64> = bps.iter().copied().filter(|&v| v > a && v < b).collect();
            cuts.insert(0, a);
            cuts.push(b);
            let mut out = Vec::new();
            for w in cuts.windows(2) {
                let np = ((w[1] - w[0]) / panel).ceil().max(1.0) as usize;
                let h = (w[1] - w[0]) / np as f64;
                for j in 0..np {
                    let r =
                        Rule::gauss_legendre(order, w[0] + h * j as f64, w[0] + h * (j + 1) as f64);
                    out.extend(r.nodes.iter().copied().zip(r.weights.iter().copied()));
                }
            }
            out
        };
        // G_m(x) = \int_lo^x (-i H(y)) G_{m-1}(y) dy
        fn level(
            pb: &Problem,
            data: &SourceData,
            nodes: &dyn Fn(f64, f64) -> Vec<(f64, f64)>,
            start: &DMatrix<C>,
            lo: f64,
            x: f64,
            m: usize,
        ) -> DMatrix<C> {
            let mut acc = DMatrix::<C>::zeros(start.nrows(), start.ncols());
            for (y, w) in nodes(lo, x) {
                let inner = if m == 1 {
                    start.clone()
                } else {
                    level(pb, data, nodes, start, lo, y, m - 1)
                };
                acc += pb.rhs(y, 0.0, &inner, &[], data, false, false) * C::from(w);
            }
            acc
        }
        for m in 1..=n_max {
            total += level(pb, &data, &nodes, &start, lo, hi, m);
        }
    }
    let mat = DMatrix::from_fn(2 * k, 2 * k, |r, c| {
        let rr = if r < k { r } else { n + r - k };
        total[(rr, c)]
    });
    Ok(BlockOperator {
        n: k,
        mat,
        tag: pb.sectors.tag(),
    })
}
