//! Effective Hamiltonians on a momentum grid.
//!
//! States are two-component grid functions stacked component-major: rows
//! `0..N` hold the first component, rows `N..2N` the second.  In the frame
//! anchored at `c` the generator is
//!
//! ```text
//! H_c(x)_{jl}(p, q) = s_j/2 * R_j(p) * V(x)(p, q) * C_l(q) / varpi(q)
//! R_j(p) = exp(s_j (-i Re varpi(p) x + Im varpi(p) (x - c))),   C_l = 1 / R_l
//! ```
//!
//! with `s = (+1, -1)`.  Anchoring at `c = x` gives the lab-frame potential
//! term, anchoring at `c = 0` the global interaction picture.  Only the
//! rank-structure `V (z_1 + z_2)` is ever multiplied, so one application costs
//! a single N x N by N x m product, done as real GEMMs.

use crate::error::{Error, Result};
use crate::grid::{maxabs, Point, Sectors, C};
use crate::potential::{interaction_operator, PotentialSpec, Table, Transverse, XProfile};
use nalgebra::{DMatrix, DVector};

/// Largest exponent allowed before an `Overflow` error.
pub const EXP_LIMIT: f64 = 700.0;

const I: C = C::new(0.0, 1.0);

/// Operator on two-component grid functions, stored as a dense 2N x 2N matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    pub n: usize,
    pub mat: DMatrix<C>,
    /// Fingerprint of the grid the operator lives on (0 when unknown).
    pub tag: u64,
}

impl BlockOperator {
    pub fn identity(n: usize) -> BlockOperator {
        BlockOperator {
            n,
            mat: DMatrix::identity(2 * n, 2 * n),
            tag: 0,
        }
    }

    pub fn from_matrix(mat: DMatrix<C>) -> BlockOperator {
        assert_eq!(mat.nrows(), mat.ncols());
        assert_eq!(mat.nrows() % 2, 0);
        BlockOperator {
            n: mat.nrows() / 2,
            mat,
            tag: 0,
        }
    }

    /// Block (j, l), zero-based component indices.
    pub fn block(&self, j: usize, l: usize) -> DMatrix<C> {
        self.mat
            .view((j * self.n, l * self.n), (self.n, self.n))
            .into_owned()
    }

    /// Restriction to the first `m` nodes of each component (the sandwich by
    /// the oscillating projection when `m = n_osc`).
    pub fn restrict(&self, m: usize) -> BlockOperator {
        let idx = |r: usize| if r < m { r } else { self.n + r - m };
        BlockOperator {
            n: m,
            mat: DMatrix::from_fn(2 * m, 2 * m, |r, c| self.mat[(idx(r), idx(c))]),
            tag: self.tag,
        }
    }

    pub fn mul(&self, other: &BlockOperator) -> BlockOperator {
        BlockOperator {
            n: self.n,
            mat: &self.mat * &other.mat,
            tag: self.tag,
        }
    }

    /// max |A - I|.
    pub fn distance_from_identity(&self) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..self.mat.nrows() {
            for c in 0..self.mat.ncols() {
                let id = if r == c { 1.0 } else { 0.0 };
                d = d.max((self.mat[(r, c)] - id).norm());
            }
        }
        d
    }

    pub fn max_abs_diff(&self, other: &BlockOperator) -> f64 {
        maxabs(&(&self.mat - &other.mat))
    }
}

/// Complex matrix stored as separate real and imaginary parts.
#[derive(Debug, Clone)]
pub(crate) struct Split {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Split {
    fn from_fn(n: usize, f: impl Fn(usize, usize) -> C) -> Split {
        let full = DMatrix::from_fn(n, n, f);
        Split {
            re: full.map(|v| v.re),
            im: full.map(|v| v.im),
        }
    }

    /// out += coef * self * z
    fn mul_acc(&self, coef: C, z: &DMatrix<C>, out: &mut DMatrix<C>) {
        let (n, m) = z.shape();
        let mut zz = DMatrix::<f64>::zeros(n, 2 * m);
        for c in 0..m {
            for r in 0..n {
                let v = z[(r, c)];
                zz[(r, c)] = v.re;
                zz[(r, m + c)] = v.im;
            }
        }
        let p = &self.re * &zz;
        let q = &self.im * &zz;
        for c in 0..m {
            for r in 0..out.nrows() {
                let v = C::new(p[(r, c)] - q[(r, m + c)], p[(r, m + c)] + q[(r, c)]);
                out[(r, c)] += coef * v;
            }
        }
    }

    fn zero_outside(&mut self, m: usize) {
        let n = self.re.nrows();
        for r in 0..n {
            for c in 0..n {
                if r >= m || c >= m {
                    self.re[(r, c)] = 0.0;
                    self.im[(r, c)] = 0.0;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Identity,
    /// `(2 pi)^-d g~(p_i - q_j)` without quadrature weights.
    Matrix(Split, Transverse),
    Table(Table),
}

#[derive(Debug, Clone)]
struct Term {
    weight: C,
    x: Option<XProfile>,
    op: Op,
}

/// A delta-function column: column `col` of the state carries
/// `e_comp * delta(p - p0)` besides its smooth part.
#[derive(Debug, Clone, Copy)]
pub struct Source {
    pub col: usize,
    pub comp: usize,
    pub p0: Point,
}

/// Coefficient, term and its cached transverse columns.
type TermRef<'a> = (C, &'a Term, &'a Vec<Option<DVector<C>>>);

/// A potential compiled onto a grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: PotentialSpec,
    pub sectors: Sectors,
    smooth: Vec<Term>,
    sheets: Vec<(f64, Term)>,
    projected: bool,
}

/// Per-evolution cache of source columns `(2 pi)^-d g~(p_i - p0)` for each term.
pub(crate) struct SourceData {
    smooth: Vec<Vec<Option<DVector<C>>>>,
    sheets: Vec<Vec<Option<DVector<C>>>>,
}

impl Problem {
    pub fn new(spec: &PotentialSpec, sectors: &Sectors) -> Result<Problem> {
        spec.validate()?;
        if spec.tdim() != sectors.dim {
            return Err(Error::GridMismatch(format!(
                "{}-dimensional potential on a grid with {} transverse dimensions",
                spec.dim, sectors.dim
            )));
        }
        let n = sectors.len();
        let norm = sectors.convolution_norm();
        let tdim = spec.tdim();
        let make_op = |t: &Transverse| -> Op {
            if *t == Transverse::Uniform {
                return Op::Identity;
            }
            let m = Split::from_fn(n, |i, j| {
                let p = sectors.points[i];
                let q = sectors.points[j];
                t.transform([p[0] - q[0], p[1] - q[1]], tdim) * norm
            });
            Op::Matrix(m, t.clone())
        };
        let mut smooth = Vec::new();
        let mut sheets = Vec::new();
        for c in &spec.components {
            let term = Term {
                weight: c.weight * spec.coupling,
                x: Some(c.x.clone()),
                op: make_op(&c.transverse),
            };
            match c.x.sheet() {
                Some(at) => {
                    if spec.in_window(at) {
                        sheets.push((at, term));
                    }
                }
                None => smooth.push(term),
            }
        }
        for t in &spec.tables {
            smooth.push(Term {
                weight: spec.coupling,
                x: None,
                op: Op::Table(t.clone()),
            });
        }
        sheets.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Problem {
            spec: spec.clone(),
            sectors: sectors.clone(),
            smooth,
            sheets,
            projected: false,
        })
    }

    /// The same problem with V replaced by P V P, P the oscillating projection.
    pub fn projected(&self) -> Problem {
        let mut p = self.clone();
        let m = self.sectors.n_osc;
        for t in p
            .smooth
            .iter_mut()
            .chain(p.sheets.iter_mut().map(|s| &mut s.1))
        {
            if let Op::Matrix(s, _) = &mut t.op {
                s.zero_outside(m);
            }
        }
        p.projected = true;
        p
    }

    pub fn n(&self) -> usize {
        self.sectors.len()
    }

    pub fn n_osc(&self) -> usize {
        self.sectors.n_osc
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.spec.support()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.spec.breakpoints()
    }

    pub fn sheet_positions(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.sheets.iter().map(|s| s.0).collect();
        v.dedup();
        v
    }

    pub fn has_sheets(&self) -> bool {
        !self.sheets.is_empty()
    }

    pub fn has_uniform_part(&self) -> bool {
        self.smooth
            .iter()
            .chain(self.sheets.iter().map(|s| &s.1))
            .any(|t| matches!(t.op, Op::Identity))
    }

    /// Whether any smooth term is nonzero somewhere in (a, b), judged at the
    /// midpoint (callers split at breakpoints first).
    pub fn smooth_active(&self, a: f64, b: f64) -> bool {
        let m = 0.5 * (a + b);
        self.spec.in_window(m)
            && self.smooth.iter().any(|t| match &t.x {
                Some(x) => x.value(m) != 0.0,
                None => true,
            })
    }

    fn coef(&self, t: &Term, x: f64) -> C {
        if !self.spec.in_window(x) {
            return C::new(0.0, 0.0);
        }
        match &t.x {
            Some(p) => t.weight * p.value(x),
            None => t.weight,
        }
    }

    pub(crate) fn source_data(&self, sources: &[Source]) -> Result<SourceData> {
        if !sources.is_empty() && self.has_uniform_part() {
            return Err(Error::Unsupported(
                "incident-delta columns are not smooth for y-independent potentials".into(),
            ));
        }
        let tdim = self.sectors.dim;
        let norm = self.sectors.convolution_norm();
        let m = self.n_osc();
        let projected = self.projected;
        let col = |t: &Term, p0: Point| -> Option<DVector<C>> {
            match &t.op {
                Op::Matrix(_, tr) => Some(DVector::from_fn(self.n(), |i, _| {
                    if projected && i >= m {
                        return C::new(0.0, 0.0);
                    }
                    let p = self.sectors.points[i];
                    tr.transform([p[0] - p0[0], p[1] - p0[1]], tdim) * norm
                })),
                _ => None,
            }
        };
        Ok(SourceData {
            smooth: self
                .smooth
                .iter()
                .map(|t| sources.iter().map(|s| col(t, s.p0)).collect())
                .collect(),
            sheets: self
                .sheets
                .iter()
                .map(|(_, t)| sources.iter().map(|s| col(t, s.p0)).collect())
                .collect(),
        })
    }

    /// Row and column factors of the frame anchored at `c`.
    fn factors(&self, x: f64, c: f64) -> ([Vec<C>; 2], [Vec<C>; 2]) {
        let n = self.n();
        let mut row = [Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut col = [Vec::with_capacity(n), Vec::with_capacity(n)];
        for i in 0..n {
            let w = self.sectors.varpi[i];
            let e = C::new(w.im * (x - c), -w.re * x);
            for (j, s) in [1.0, -1.0].into_iter().enumerate() {
                let r = (e * s).exp();
                row[j].push(r * (0.5 * s));
                col[j].push(r.inv());
            }
        }
        (row, col)
    }

    /// `-i (H_c(x) Y + S)` for the smooth terms, or for the sheets located at
    /// `x` when `sheet` is set.  `with_sources` switches the delta columns on.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn rhs(
        &self,
        x: f64,
        c: f64,
        y: &DMatrix<C>,
        sources: &[Source],
        data: &SourceData,
        sheet: bool,
        with_sources: bool,
    ) -> DMatrix<C> {
        let n = self.n();
        let m = y.ncols();
        let (row, col) = self.factors(x, c);
        let wov = &self.sectors.w_over_varpi;
        let vp = &self.sectors.varpi;
        let osc = self.n_osc();
        let keep = |q: usize| !self.projected || q < osc;
        let mut u = DMatrix::<C>::zeros(n, m);
        let mut z: Option<DMatrix<C>> = None;
        let mut zd: Option<DMatrix<C>> = None;

        let terms: Vec<TermRef> = if sheet {
            self.sheets
                .iter()
                .zip(&data.sheets)
                .filter(|((at, _), _)| (*at - x).abs() < 1e-14)
                .map(|((_, t), d)| (t.weight, t, d))
                .collect()
        } else {
            self.smooth
                .iter()
                .zip(&data.smooth)
                .map(|(t, d)| (self.coef(t, x), t, d))
                .filter(|(k, _, _)| *k != C::new(0.0, 0.0))
                .collect()
        };
        for (k, t, srcs) in terms {
            match &t.op {
                Op::Matrix(mat, _) => {
                    let z = z.get_or_insert_with(|| {
                        DMatrix::from_fn(n, m, |q, j| {
                            if !keep(q) {
                                return C::new(0.0, 0.0);
                            }
                            (col[0][q] * y[(q, j)] + col[1][q] * y[(n + q, j)]) * wov[q]
                        })
                    });
                    mat.mul_acc(k, z, &mut u);
                }
                Op::Identity => {
                    let zd = zd.get_or_insert_with(|| {
                        DMatrix::from_fn(n, m, |q, j| {
                            if !keep(q) {
                                return C::new(0.0, 0.0);
                            }
                            (col[0][q] * y[(q, j)] + col[1][q] * y[(n + q, j)]) / vp[q]
                        })
                    });
                    u += &*zd * k;
                }
                Op::Table(tab) => {
                    let z = z.get_or_insert_with(|| {
                        DMatrix::from_fn(n, m, |q, j| {
                            if !keep(q) {
                                return C::new(0.0, 0.0);
                            }
                            (col[0][q] * y[(q, j)] + col[1][q] * y[(n + q, j)]) * wov[q]
                        })
                    });
                    let norm = self.sectors.convolution_norm();
                    let pts = &self.sectors.points;
                    let mat = DMatrix::from_fn(n, n, |i, j| {
                        if !keep(i) || !keep(j) {
                            return C::new(0.0, 0.0);
                        }
                        tab.value(x, pts[i][0] - pts[j][0]) * norm
                    });
                    u += (mat * &*z) * k;
                }
            }
            if with_sources {
                for (s, v) in sources.iter().zip(srcs) {
                    let ph = {
                        let w0 = self.sectors.varpi_at(s.p0);
                        let sg = if s.comp == 0 { 1.0 } else { -1.0 };
                        C::from_polar(1.0, sg * w0.re * x) / w0
                    };
                    let coef = k * ph;
                    match (&t.op, v) {
                        (Op::Matrix(..), Some(v)) => {
                            for i in 0..n {
                                u[(i, s.col)] += v[i] * coef;
                            }
                        }
                        (Op::Table(tab), _) => {
                            let norm = self.sectors.convolution_norm();
                            for i in 0..n {
                                if keep(i) {
                                    let p = self.sectors.points[i][0];
                                    u[(i, s.col)] += tab.value(x, p - s.p0[0]) * norm * coef;
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        let mut out = DMatrix::<C>::zeros(2 * n, m);
        for j in 0..m {
            for p in 0..n {
                if !keep(p) {
                    continue;
                }
                let v = u[(p, j)];
                out[(p, j)] = -I * row[0][p] * v;
                out[(n + p, j)] = -I * row[1][p] * v;
            }
        }
        out
    }

    /// Dense generator anchored at `c` (potential part only).
    fn dense(&self, x: f64, c: f64) -> BlockOperator {
        let n = self.n();
        let v = if self.projected {
            let mut v = interaction_operator(&self.spec, &self.sectors, x);
            let m = self.n_osc();
            for r in 0..n {
                for q in 0..n {
                    if r >= m || q >= m {
                        v[(r, q)] = C::new(0.0, 0.0);
                    }
                }
            }
            v
        } else {
            interaction_operator(&self.spec, &self.sectors, x)
        };
        let (row, col) = self.factors(x, c);
        let vp = &self.sectors.varpi;
        let mat = DMatrix::from_fn(2 * n, 2 * n, |r, q| {
            let (j, p) = (r / n, r % n);
            let (l, qq) = (q / n, q % n);
            row[j][p] * v[(p, qq)] * col[l][qq] / vp[qq]
        });
        BlockOperator {
            n,
            mat,
            tag: self.sectors.tag(),
        }
    }
}

/// Lab-frame generator `H(x)`: potential term plus `-i Im(varpi) sigma_3`.
pub fn hamiltonian_full(problem: &Problem, x: f64) -> BlockOperator {
    let mut h = problem.dense(x, x);
    let n = problem.n();
    for i in 0..n {
        let g = problem.sectors.varpi[i].im;
        h.mat[(i, i)] += -I * g;
        h.mat[(n + i, n + i)] += I * g;
    }
    h
}

/// Interaction-picture generator (potential part, frame anchored at 0).
pub fn hamiltonian_interaction(problem: &Problem, x: f64) -> Result<BlockOperator> {
    let g = problem.sectors.max_decay();
    if g * x.abs() > EXP_LIMIT {
        return Err(Error::Overflow(format!(
            "exp({:.1}) at x = {x} in the interaction picture",
            g * x.abs()
        )));
    }
    Ok(problem.dense(x, 0.0))
}

/// `exp(i H0 x) = diag(exp(Im varpi x), exp(-Im varpi x))` applied as
/// `left * A * right` scalings: rows by `exp(a sigma_3 Im varpi)`, columns by
/// `exp(-b sigma_3 Im varpi)`.
pub fn conjugate_free(op: &BlockOperator, sectors: &Sectors, a: f64, b: f64) -> BlockOperator {
    let n = op.n;
    let f = |r: usize, t: f64| {
        let (j, p) = (r / n, r % n);
        let s = if j == 0 { 1.0 } else { -1.0 };
        (s * sectors.varpi[p].im * t).exp()
    };
    let mat = DMatrix::from_fn(2 * n, 2 * n, |r, c| op.mat[(r, c)] * f(r, a) * f(c, -b));
    BlockOperator {
        n,
        mat,
        tag: op.tag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn problem() -> Problem {
        let g = build_grid(1.0, 10, 5, 4.0).unwrap();
        let spec = PotentialSpec::gaussian(C::new(0.4, -0.2), 0.5, 0.8);
        Problem::new(&spec, &g.sectors).unwrap()
    }

    #[test]
    fn interaction_picture_relation() {
        // H_int = e^{iH0x} H e^{-iH0x} - H0
        let pb = problem();
        let x = 0.37;
        let h = hamiltonian_full(&pb, x);
        let mut h0 = BlockOperator::identity(pb.n());
        h0.mat.fill(C::new(0.0, 0.0));
        for i in 0..pb.n() {
            let g = pb.sectors.varpi[i].im;
            h0.mat[(i, i)] = -I * g;
            h0.mat[(pb.n() + i, pb.n() + i)] = I * g;
        }
        let conj = conjugate_free(&h, &pb.sectors, x, x);
        let lhs = BlockOperator {
            n: pb.n(),
            mat: conj.mat - h0.mat,
            tag: 0,
        };
        let rhs = hamiltonian_interaction(&pb, x).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12 * maxabs(&rhs.mat));
    }

    #[test]
    fn fast_application_matches_dense() {
        let pb = problem();
        let n = pb.n();
        let y = DMatrix::from_fn(2 * n, 3, |r, c| {
            C::new((r + 2 * c) as f64 * 0.1, (r as f64).sin())
        });
        let data = pb.source_data(&[]).unwrap();
        for &(x, c) in &[(0.3, 0.0), (-0.8, -1.0), (1.1, 1.1)] {
            let fast = pb.rhs(x, c, &y, &[], &data, false, true);
            let dense = pb.dense(x, c).mat * &y * (-I);
            assert!(maxabs(&(fast - dense)) < 1e-12);
        }
        let pp = pb.projected();
        let fast = pp.rhs(
            0.2,
            0.0,
            &y,
            &[],
            &pp.source_data(&[]).unwrap(),
            false,
            true,
        );
        let dense = pp.dense(0.2, 0.0).mat * &y * (-I);
        assert!(maxabs(&(fast - dense)) < 1e-12);
    }

    #[test]
    fn kernel_squares_to_zero_at_a_point() {
        // the potential part at a single x is nilpotent because K^2 = 0
        let pb = problem();
        let h = hamiltonian_interaction(&pb, 0.4).unwrap();
        let sq = &h.mat * &h.mat;
        assert!(maxabs(&sq) < 1e-12 * maxabs(&h.mat).powi(2) * pb.n() as f64);
    }

    #[test]
    fn overflow_guard() {
        let pb = problem();
        assert!(matches!(
            hamiltonian_interaction(&pb, 400.0),
            Err(Error::Overflow(_))
        ));
    }
}
