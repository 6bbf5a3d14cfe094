//! Sketch-and-project iterations for `AXB = C`.
//!
//! [`general_step`] is the projection in its full form. The other `*_step`
//! functions are the cheap closed forms it collapses to for particular
//! sketches and weights. [`Solver`] binds a method and a sketch distribution
//! to one equation and caches every draw-independent factor; [`solve`] runs
//! the outer loop.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, ensure_shape, pseudoinverse, serde_rows, Mat, SpdMat, Vector};
use crate::samplers::{Pick, Sampler, SketchSpec};

/// Relative tolerance for the consistency check on a supplied solution.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Maximum number of consecutive degenerate Gaussian draws before giving up.
pub const MAX_REDRAWS: usize = 16;

/// Relative size of a Gaussian denominator below which the draw is rejected.
const GAUSS_GUARD: f64 = 1e-14;

/// Divergence threshold factor.
const DIVERGENCE_FACTOR: f64 = 1e12;

/// A consistent linear matrix equation `A X B = C` with `A: p×m`, `B: n×q`.
#[derive(Clone, Debug)]
pub struct MatrixEquation {
    a: Mat,
    b: Mat,
    c: Mat,
    g: SpdMat,
    x_star: Option<Mat>,
}

impl MatrixEquation {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Dimension("A and B must be nonempty".into()));
        }
        ensure_finite(&a, "A")?;
        ensure_finite(&b, "B")?;
        ensure_finite(&c, "C")?;
        ensure_shape(&c, a.nrows(), b.ncols(), "C")?;
        let g = SpdMat::identity(a.ncols());
        Ok(Self {
            a,
            b,
            c,
            g,
            x_star: None,
        })
    }

    /// Replaces the weight `G` (must be `m × m`).
    pub fn with_weight(mut self, g: SpdMat) -> Result<Self> {
        if g.dim() != self.m() {
            return Err(Error::Dimension(format!(
                "weight is {0}x{0}, expected {1}x{1}",
                g.dim(),
                self.m()
            )));
        }
        self.g = g;
        Ok(self)
    }

    /// Attaches a known solution after checking `‖AX*B − C‖ ≤ 1e-8 (1 + ‖C‖)`.
    pub fn with_solution(mut self, x_star: Mat) -> Result<Self> {
        ensure_finite(&x_star, "X*")?;
        ensure_shape(&x_star, self.m(), self.n(), "X*")?;
        let gap = self.residual(&x_star).norm();
        let bound = CONSISTENCY_TOL * (1.0 + self.c.norm());
        if gap > bound {
            return Err(Error::InvalidArgument(format!(
                "supplied solution is inconsistent: ‖AX*B − C‖ = {gap:e} > {bound:e}"
            )));
        }
        self.x_star = Some(x_star);
        Ok(self)
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }
    pub fn b(&self) -> &Mat {
        &self.b
    }
    pub fn c(&self) -> &Mat {
        &self.c
    }
    pub fn g(&self) -> &SpdMat {
        &self.g
    }
    pub fn x_star(&self) -> Option<&Mat> {
        self.x_star.as_ref()
    }
    pub fn p(&self) -> usize {
        self.a.nrows()
    }
    pub fn m(&self) -> usize {
        self.a.ncols()
    }
    pub fn n(&self) -> usize {
        self.b.nrows()
    }
    pub fn q(&self) -> usize {
        self.b.ncols()
    }

    /// `C − AXB`.
    pub fn residual(&self, x: &Mat) -> Mat {
        &self.c - &self.a * x * &self.b
    }

    fn check_iterate(&self, x: &Mat) -> Result<()> {
        ensure_shape(x, self.m(), self.n(), "X")
    }
}

/// The iteration variants, named as on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    General,
    Grk,
    Grbk,
    RkA,
    RkB,
    CdPd,
    Rcd,
    GaussGrk,
    GaussRkA,
    GaussRkB,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::General,
        Method::Grk,
        Method::Grbk,
        Method::RkA,
        Method::RkB,
        Method::CdPd,
        Method::Rcd,
        Method::GaussGrk,
        Method::GaussRkA,
        Method::GaussRkB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::General => "general",
            Method::Grk => "grk",
            Method::Grbk => "grbk",
            Method::RkA => "rk-a",
            Method::RkB => "rk-b",
            Method::CdPd => "cd-pd",
            Method::Rcd => "rcd",
            Method::GaussGrk => "gauss-grk",
            Method::GaussRkA => "gauss-rk-a",
            Method::GaussRkB => "gauss-rk-b",
        }
    }

    /// The sketch distribution the method is normally run with.
    pub fn default_sketch(self, p: usize, q: usize, tau1: usize, tau2: usize) -> SketchSpec {
        match self {
            Method::General | Method::Grk => SketchSpec::CoordinatePair,
            Method::Grbk => SketchSpec::BlockPartition {
                tau1: tau1.clamp(1, p),
                tau2: tau2.clamp(1, q),
            },
            Method::RkA => SketchSpec::RowOnly,
            Method::RkB => SketchSpec::ColOnly,
            Method::CdPd => SketchSpec::DiagonalWeighted,
            Method::Rcd => SketchSpec::ColumnOfA,
            Method::GaussGrk => SketchSpec::Gaussian {
                sigma1: SpdMat::identity(p),
                sigma2: SpdMat::identity(q),
            },
            Method::GaussRkA => SketchSpec::GaussianRow {
                sigma1: SpdMat::identity(p),
            },
            Method::GaussRkB => SketchSpec::GaussianCol {
                sigma2: SpdMat::identity(q),
            },
        }
    }

    /// Sketch ids this method's closed-form update can consume.
    pub fn compatible_sketches(self) -> &'static [&'static str] {
        match self {
            Method::General => &[
                "coord",
                "row",
                "col",
                "block",
                "discrete",
                "gauss",
                "gauss-row",
                "gauss-col",
                "col-of-a",
                "diag",
                "identity",
            ],
            Method::Grk => &["coord"],
            Method::Grbk => &["block", "identity", "coord"],
            Method::RkA => &["row", "diag"],
            Method::RkB => &["col"],
            Method::CdPd => &["diag", "row"],
            Method::Rcd => &["col-of-a"],
            Method::GaussGrk => &["gauss"],
            Method::GaussRkA => &["gauss-row"],
            Method::GaussRkB => &["gauss-col"],
        }
    }

    pub fn check_compatible(self, spec: &SketchSpec) -> Result<()> {
        if self.compatible_sketches().contains(&spec.id()) {
            Ok(())
        } else {
            Err(Error::Incompatible {
                method: self.as_str().into(),
                sketch: spec.id().into(),
                reason: format!("expected one of {}", self.compatible_sketches().join(", ")),
            })
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let ids: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
                Error::InvalidArgument(format!(
                    "unknown method `{s}` (expected one of {})",
                    ids.join(", ")
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopCriterion {
    /// `‖X − X*‖²_F / ‖X*‖²_F`; needs a known solution.
    RelErrorSq,
    /// `‖C − AXB‖²_F / ‖C‖²_F`.
    RelResidual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iters: usize,
    pub tol: f64,
    pub criterion: StopCriterion,
    /// Error is evaluated and recorded every `stride` iterations.
    pub stride: usize,
    /// Wall-clock budget in seconds.
    pub time_limit: Option<f64>,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            tol: 1e-6,
            criterion: StopCriterion::RelErrorSq,
            stride: 1,
            time_limit: Some(120.0),
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument("time limit must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIters,
    TimeLimit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub sketch: String,
    #[serde(with = "serde_rows")]
    pub x: Mat,
    pub iters: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub final_error: f64,
    pub error_trace: Vec<(usize, f64)>,
    pub wall_time: f64,
}

fn ensure_rows(m: &Mat, rows: usize, what: &str) -> Result<()> {
    if m.nrows() == rows {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} has {} rows, expected {rows}",
            m.nrows()
        )))
    }
}

fn finite_or_err(x: Mat, what: &str) -> Result<Mat> {
    ensure_finite(&x, what)?;
    Ok(x)
}

/// `X − G⁻¹AᵀS (SᵀAG⁻¹AᵀS)† Sᵀ(AXB − C)P (PᵀBᵀBP)† PᵀBᵀ`, with `G` taken from the equation.
pub fn general_step(x: &Mat, eq: &MatrixEquation, s: &Mat, p: &Mat) -> Result<Mat> {
    general_step_weighted(x, eq, eq.g(), s, p)
}

/// [`general_step`] with an explicit weight in place of the equation's own.
pub fn general_step_weighted(
    x: &Mat,
    eq: &MatrixEquation,
    g: &SpdMat,
    s: &Mat,
    p: &Mat,
) -> Result<Mat> {
    eq.check_iterate(x)?;
    ensure_rows(s, eq.p(), "S")?;
    ensure_rows(p, eq.q(), "P")?;
    if g.dim() != eq.m() {
        return Err(Error::Dimension(
            "weight does not match the column count of A".into(),
        ));
    }
    // With G = LLᵀ and M = L⁻¹AᵀS, G⁻¹AᵀS (SᵀAG⁻¹AᵀS)† = L⁻ᵀ (M†)ᵀ and
    // (PᵀBᵀBP)† PᵀBᵀ = (BP)†; this avoids squaring the conditioning.
    let m_fac = g.solve_factor(&(eq.a().transpose() * s));
    let left = g.solve_factor_t(&pseudoinverse(&m_fac, None)?.transpose());
    let right = pseudoinverse(&(eq.b() * p), None)?;
    let sketched = s.transpose() * (eq.a() * x * eq.b() - eq.c()) * p;
    finite_or_err(x - left * sketched * right, "general step")
}

fn nonzero(v: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::ZeroSlice(what()))
    }
}

/// `X − a_iᵀ(a_i X b_j − C_ij) b_jᵀ / (‖a_i‖²‖b_j‖²)`.
pub fn grk_step(x: &Mat, eq: &MatrixEquation, i: usize, j: usize) -> Result<Mat> {
    eq.check_iterate(x)?;
    let a_i = eq.a().row(i);
    let b_j = eq.b().column(j);
    let na = nonzero(a_i.norm_squared(), || format!("row {i} of A"))?;
    let nb = nonzero(b_j.norm_squared(), || format!("column {j} of B"))?;
    let r = (a_i * x * b_j)[(0, 0)] - eq.c()[(i, j)];
    let mut out = x.clone();
    out.ger(-r / (na * nb), &a_i.transpose(), &b_j, 1.0);
    finite_or_err(out, "GRK step")
}

fn select_rows(m: &Mat, rows: &[usize]) -> Mat {
    m.select_rows(rows)
}

fn select_cols(m: &Mat, cols: &[usize]) -> Mat {
    m.select_columns(cols)
}

fn check_index_set(set: &[usize], bound: usize, what: &str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} index set is empty")));
    }
    if let Some(&bad) = set.iter().find(|&&k| k >= bound) {
        return Err(Error::Dimension(format!(
            "{what} index {bad} out of range 0..{bound}"
        )));
    }
    Ok(())
}

/// `X + A_{I,:}† (C_{I,J} − A_{I,:} X B_{:,J}) B_{:,J}†`.
pub fn grbk_step(x: &Mat, eq: &MatrixEquation, rows: &[usize], cols: &[usize]) -> Result<Mat> {
    check_index_set(rows, eq.p(), "row")?;
    check_index_set(cols, eq.q(), "column")?;
    let a_pinv = pseudoinverse(&select_rows(eq.a(), rows), None)?;
    let b_pinv = pseudoinverse(&select_cols(eq.b(), cols), None)?;
    grbk_step_cached(x, eq, rows, cols, &a_pinv, &b_pinv)
}

fn grbk_step_cached(
    x: &Mat,
    eq: &MatrixEquation,
    rows: &[usize],
    cols: &[usize],
    a_pinv: &Mat,
    b_pinv: &Mat,
) -> Result<Mat> {
    eq.check_iterate(x)?;
    let a_i = select_rows(eq.a(), rows);
    let b_j = select_cols(eq.b(), cols);
    let c_ij = eq.c().select_rows(rows).select_columns(cols);
    let r = c_ij - a_i * x * b_j;
    finite_or_err(x + a_pinv * r * b_pinv, "GRBK step")
}

/// `X + a_iᵀ(C_{i,:} − a_i X B) B† / ‖a_i‖²`.
pub fn rka_step(x: &Mat, eq: &MatrixEquation, i: usize, b_pinv: &Mat) -> Result<Mat> {
    eq.check_iterate(x)?;
    ensure_shape(b_pinv, eq.q(), eq.n(), "B† (stale pseudoinverse?)")?;
    let a_i = eq.a().row(i);
    let na = nonzero(a_i.norm_squared(), || format!("row {i} of A"))?;
    let r = eq.c().row(i) - a_i * x * eq.b(); // 1×q
    let upd = r * b_pinv; // 1×n
    let mut out = x.clone();
    out.ger(1.0 / na, &a_i.transpose(), &upd.transpose(), 1.0);
    finite_or_err(out, "RK-A step")
}

/// `X + A†(C_{:,j} − A X b_j) b_jᵀ / ‖b_j‖²`.
pub fn rkb_step(x: &Mat, eq: &MatrixEquation, j: usize, a_pinv: &Mat) -> Result<Mat> {
    eq.check_iterate(x)?;
    ensure_shape(a_pinv, eq.m(), eq.p(), "A† (stale pseudoinverse?)")?;
    let b_j = eq.b().column(j);
    let nb = nonzero(b_j.norm_squared(), || format!("column {j} of B"))?;
    let r = eq.c().column(j) - eq.a() * (x * b_j); // p
    let upd = a_pinv * r; // m
    let mut out = x.clone();
    out.ger(1.0 / nb, &upd, &b_j, 1.0);
    finite_or_err(out, "RK-B step")
}

/// Coordinate descent for symmetric positive definite `A` in the `A`-norm:
/// `X − e_i (A_{i,:} X B − C_{i,:}) B† / A_ii`. Only row `i` changes.
pub fn cdpd_step(x: &Mat, eq: &MatrixEquation, i: usize, b_pinv: &Mat) -> Result<Mat> {
    eq.check_iterate(x)?;
    ensure_shape(b_pinv, eq.q(), eq.n(), "B† (stale pseudoinverse?)")?;
    if !eq.a().is_square() {
        return Err(Error::NotSpd("A is not square".into()));
    }
    let aii = eq.a()[(i, i)];
    if !(aii > 0.0) {
        return Err(Error::NotSpd(format!(
            "diagonal entry A[{i},{i}] = {aii} is not positive"
        )));
    }
    // A is symmetric, so row i and column i coincide.
    let r = eq.a().row(i) * x * eq.b() - eq.c().row(i);
    let upd = r * b_pinv;
    let mut out = x.clone();
    for (k, v) in upd.iter().enumerate() {
        out[(i, k)] -= v / aii;
    }
    finite_or_err(out, "CD-pd step")
}

/// Coordinate descent on the normal equations:
/// `X − e_i A_{:,i}ᵀ(AXB − C) B† / ‖A_{:,i}‖²`. Only row `i` changes.
pub fn rcd_step(x: &Mat, eq: &MatrixEquation, i: usize, b_pinv: &Mat) -> Result<Mat> {
    eq.check_iterate(x)?;
    ensure_shape(b_pinv, eq.q(), eq.n(), "B† (stale pseudoinverse?)")?;
    let col = eq.a().column(i);
    let na = nonzero(col.norm_squared(), || format!("column {i} of A"))?;
    let r = col.transpose() * (eq.a() * x * eq.b() - eq.c()); // 1×q
    let upd = r * b_pinv;
    let mut out = x.clone();
    for (k, v) in upd.iter().enumerate() {
        out[(i, k)] -= v / na;
    }
    finite_or_err(out, "RCD step")
}

fn gauss_guard(v: f64, scale: f64, what: &str) -> Result<f64> {
    if v > GAUSS_GUARD * scale {
        Ok(v)
    } else {
        Err(Error::DegenerateDraw(format!("{what} is numerically zero")))
    }
}

/// `X + Aᵀζ(ζᵀCη − ζᵀAXBη) ηᵀBᵀ / (‖Aᵀζ‖²‖Bη‖²)`.
///
/// Returns [`Error::DegenerateDraw`] when either denominator is numerically
/// zero; callers redraw.
pub fn gauss_step(x: &Mat, eq: &MatrixEquation, zeta: &Vector, eta: &Vector) -> Result<Mat> {
    eq.check_iterate(x)?;
    if zeta.len() != eq.p() || eta.len() != eq.q() {
        return Err(Error::Dimension(
            "Gaussian vectors do not match (p, q)".into(),
        ));
    }
    let at_z = eq.a().tr_mul(zeta); // m
    let b_e = eq.b() * eta; // n
    let na = gauss_guard(at_z.norm(), eq.a().norm() * zeta.norm(), "Aᵀζ")?;
    let nb = gauss_guard(b_e.norm(), eq.b().norm() * eta.norm(), "Bη")?;
    let r = zeta.dot(&(eq.c() * eta)) - at_z.dot(&(x * &b_e));
    let mut out = x.clone();
    out.ger(r / (na * na * nb * nb), &at_z, &b_e, 1.0);
    finite_or_err(out, "Gaussian step")
}

/// Row-side Gaussian sketch with `P = I`: `X + Aᵀζ(ζᵀC − ζᵀAXB) B† / ‖Aᵀζ‖²`.
pub fn gauss_rka_step(x: &Mat, eq: &MatrixEquation, zeta: &Vector, b_pinv: &Mat) -> Result<Mat> {
    eq.check_iterate(x)?;
    ensure_shape(b_pinv, eq.q(), eq.n(), "B† (stale pseudoinverse?)")?;
    if zeta.len() != eq.p() {
        return Err(Error::Dimension("ζ does not have p entries".into()));
    }
    let at_z = eq.a().tr_mul(zeta);
    let na = gauss_guard(at_z.norm(), eq.a().norm() * zeta.norm(), "Aᵀζ")?;
    let r = eq.c().tr_mul(zeta) - eq.b().tr_mul(&x.tr_mul(&at_z)); // q
    let upd = b_pinv.tr_mul(&r); // n
    let mut out = x.clone();
    out.ger(1.0 / (na * na), &at_z, &upd, 1.0);
    finite_or_err(out, "Gaussian RK-A step")
}

/// Column-side Gaussian sketch with `S = I`: `X + A†(Cη − AXBη) ηᵀBᵀ / ‖Bη‖²`.
pub fn gauss_rkb_step(x: &Mat, eq: &MatrixEquation, eta: &Vector, a_pinv: &Mat) -> Result<Mat> {
    eq.check_iterate(x)?;
    ensure_shape(a_pinv, eq.m(), eq.p(), "A† (stale pseudoinverse?)")?;
    if eta.len() != eq.q() {
        return Err(Error::Dimension("η does not have q entries".into()));
    }
    let b_e = eq.b() * eta;
    let nb = gauss_guard(b_e.norm(), eq.b().norm() * eta.norm(), "Bη")?;
    let r = eq.c() * eta - eq.a() * (x * &b_e); // p
    let upd = a_pinv * r; // m
    let mut out = x.clone();
    out.ger(1.0 / (nb * nb), &upd, &b_e, 1.0);
    finite_or_err(out, "Gaussian RK-B step")
}

/// A method and sketch distribution bound to one equation, with all
/// draw-independent factors precomputed.
#[derive(Clone, Debug)]
pub struct Solver<'a> {
    eq: &'a MatrixEquation,
    method: Method,
    sampler: Sampler,
    weight: SpdMat,
    a_pinv: Option<Mat>,
    b_pinv: Option<Mat>,
    row_block_pinvs: Vec<Mat>,
    col_block_pinvs: Vec<Mat>,
}

impl<'a> Solver<'a> {
    pub fn new(eq: &'a MatrixEquation, method: Method, spec: &SketchSpec) -> Result<Self> {
        method.check_compatible(spec)?;
        if method != Method::General && !eq.g().is_identity() {
            return Err(Error::Incompatible {
                method: method.as_str().into(),
                sketch: spec.id().into(),
                reason: "a custom weight G is only honoured by the general method".into(),
            });
        }
        let sampler = Sampler::new(spec, eq.a(), eq.b())?;
        let weight = match method {
            Method::General => eq.g().clone(),
            Method::CdPd => SpdMat::new(eq.a().clone())?,
            Method::Rcd => SpdMat::new(eq.a().transpose() * eq.a())
                .map_err(|_| Error::RankDeficient("RCD needs A with full column rank".into()))?,
            _ => SpdMat::identity(eq.m()),
        };
        let needs_b_pinv = matches!(
            method,
            Method::RkA | Method::CdPd | Method::Rcd | Method::GaussRkA
        );
        let needs_a_pinv = matches!(method, Method::RkB | Method::GaussRkB);
        let mut solver = Solver {
            eq,
            method,
            sampler,
            weight,
            a_pinv: needs_a_pinv
                .then(|| pseudoinverse(eq.a(), None))
                .transpose()?,
            b_pinv: needs_b_pinv
                .then(|| pseudoinverse(eq.b(), None))
                .transpose()?,
            row_block_pinvs: Vec::new(),
            col_block_pinvs: Vec::new(),
        };
        if method == Method::Grbk {
            match spec {
                SketchSpec::BlockPartition { .. } => {
                    solver.row_block_pinvs = solver
                        .sampler
                        .row_blocks()
                        .iter()
                        .map(|rows| pseudoinverse(&select_rows(eq.a(), rows), None))
                        .collect::<Result<_>>()?;
                    solver.col_block_pinvs = solver
                        .sampler
                        .col_blocks()
                        .iter()
                        .map(|cols| pseudoinverse(&select_cols(eq.b(), cols), None))
                        .collect::<Result<_>>()?;
                }
                SketchSpec::IdentityPair => {
                    solver.row_block_pinvs = vec![pseudoinverse(eq.a(), None)?];
                    solver.col_block_pinvs = vec![pseudoinverse(eq.b(), None)?];
                }
                _ => {}
            }
        }
        Ok(solver)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    /// The weight `G` whose norm the method contracts: the equation's own for
    /// `general`, `A` for CD-pd, `AᵀA` for RCD, identity otherwise.
    pub fn weight(&self) -> &SpdMat {
        &self.weight
    }

    /// Applies the method's update for one pick.
    pub fn apply(&self, x: &Mat, pick: &Pick) -> Result<Mat> {
        let eq = self.eq;
        let b_pinv = || self.b_pinv.as_ref().expect("B† cached for this method");
        let a_pinv = || self.a_pinv.as_ref().expect("A† cached for this method");
        match (self.method, pick) {
            (Method::General, _) => {
                let draw = self.sampler.materialize(pick.clone());
                general_step_weighted(x, eq, &self.weight, &draw.s, &draw.p)
            }
            (Method::Grk | Method::Grbk, Pick::Coordinate { i, j }) => grk_step(x, eq, *i, *j),
            (
                Method::Grbk,
                Pick::Block {
                    row_block,
                    col_block,
                },
            ) => grbk_step_cached(
                x,
                eq,
                &self.sampler.row_blocks()[*row_block],
                &self.sampler.col_blocks()[*col_block],
                &self.row_block_pinvs[*row_block],
                &self.col_block_pinvs[*col_block],
            ),
            (Method::Grbk, Pick::Identity) => {
                eq.check_iterate(x)?;
                let r = eq.residual(x);
                finite_or_err(
                    x + &self.row_block_pinvs[0] * r * &self.col_block_pinvs[0],
                    "GRBK step",
                )
            }
            (Method::RkA, Pick::Row { i }) => rka_step(x, eq, *i, b_pinv()),
            (Method::RkB, Pick::Col { j }) => rkb_step(x, eq, *j, a_pinv()),
            (Method::CdPd, Pick::Row { i }) => cdpd_step(x, eq, *i, b_pinv()),
            (Method::Rcd, Pick::ColumnOfA { i }) => rcd_step(x, eq, *i, b_pinv()),
            (
                Method::GaussGrk,
                Pick::Gaussian {
                    zeta: Some(z),
                    eta: Some(e),
                },
            ) => gauss_step(x, eq, z, e),
            (
                Method::GaussRkA,
                Pick::Gaussian {
                    zeta: Some(z),
                    eta: None,
                },
            ) => gauss_rka_step(x, eq, z, b_pinv()),
            (
                Method::GaussRkB,
                Pick::Gaussian {
                    zeta: None,
                    eta: Some(e),
                },
            ) => gauss_rkb_step(x, eq, e, a_pinv()),
            (method, pick) => Err(Error::Incompatible {
                method: method.as_str().into(),
                sketch: self.sampler.spec().id().into(),
                reason: format!("cannot apply pick {pick:?}"),
            }),
        }
    }

    /// Draws a sketch and applies one update, redrawing degenerate Gaussian
    /// sketches up to [`MAX_REDRAWS`] times.
    pub fn step<R: Rng + ?Sized>(&self, x: &Mat, rng: &mut R) -> Result<Mat> {
        let mut last = None;
        for _ in 0..MAX_REDRAWS {
            let pick = self.sampler.pick(rng);
            match self.apply(x, &pick) {
                Err(Error::DegenerateDraw(msg)) => last = Some(msg),
                other => return other,
            }
        }
        Err(Error::DegenerateDraw(format!(
            "{MAX_REDRAWS} consecutive degenerate draws ({})",
            last.unwrap_or_default()
        )))
    }

    fn error(&self, x: &Mat, criterion: StopCriterion) -> Result<f64> {
        let eq = self.eq;
        match criterion {
            StopCriterion::RelErrorSq => {
                let xs = eq.x_star().ok_or_else(|| {
                    Error::InvalidArgument("relative-error stopping needs a known solution".into())
                })?;
                let denom = xs.norm_squared();
                let diff = (x - xs).norm_squared();
                Ok(if denom > 0.0 { diff / denom } else { diff })
            }
            StopCriterion::RelResidual => {
                let denom = eq.c().norm_squared();
                let r = eq.residual(x).norm_squared();
                Ok(if denom > 0.0 { r / denom } else { r })
            }
        }
    }

    fn divergence_bound(&self, x0: &Mat) -> Result<f64> {
        let scale = match self.eq.x_star() {
            Some(xs) => xs.norm(),
            None => {
                let a_pinv = match &self.a_pinv {
                    Some(p) => p.clone(),
                    None => pseudoinverse(self.eq.a(), None)?,
                };
                let b_pinv = match &self.b_pinv {
                    Some(p) => p.clone(),
                    None => pseudoinverse(self.eq.b(), None)?,
                };
                (a_pinv * self.eq.c() * b_pinv).norm()
            }
        };
        Ok(DIVERGENCE_FACTOR * (1.0 + x0.norm() + scale))
    }

    /// Runs the outer loop from `x0`.
    pub fn run<R: Rng + ?Sized>(
        &self,
        x0: Mat,
        stop: &StopRule,
        rng: &mut R,
    ) -> Result<SolveReport> {
        stop.validate()?;
        self.eq.check_iterate(&x0)?;
        ensure_finite(&x0, "X⁰")?;
        let bound = self.divergence_bound(&x0)?;
        let limit = stop.time_limit.map(Duration::from_secs_f64);
        let start = Instant::now();
        let mut x = x0;
        let mut err = self.error(&x, stop.criterion)?;
        let mut trace = vec![(0, err)];
        let mut iters = 0;
        let mut reason = if err < stop.tol {
            StopReason::Converged
        } else {
            StopReason::MaxIters
        };
        while reason != StopReason::Converged && iters < stop.max_iters {
            x = self.step(&x, rng)?;
            iters += 1;
            let at_stride = iters % stop.stride == 0 || iters == stop.max_iters;
            if at_stride {
                let norm = x.norm();
                if !(norm <= bound) {
                    return Err(Error::Diverged { iter: iters, norm });
                }
                err = self.error(&x, stop.criterion)?;
                trace.push((iters, err));
                if err < stop.tol {
                    reason = StopReason::Converged;
                    break;
                }
            }
            if let Some(limit) = limit {
                if iters % 64 == 0 && start.elapsed() >= limit {
                    reason = StopReason::TimeLimit;
                    break;
                }
            }
        }
        let wall_time = start.elapsed().as_secs_f64();
        if trace.last().map(|&(k, _)| k) != Some(iters) {
            err = self.error(&x, stop.criterion)?;
            trace.push((iters, err));
        }
        Ok(SolveReport {
            method: self.method,
            sketch: self.sampler.spec().id().into(),
            x,
            iters,
            converged: reason == StopReason::Converged,
            stop_reason: reason,
            final_error: err,
            error_trace: trace,
            wall_time,
        })
    }
}

/// Solves from the zero matrix.
pub fn solve<R: Rng + ?Sized>(
    eq: &MatrixEquation,
    method: Method,
    spec: &SketchSpec,
    stop: &StopRule,
    rng: &mut R,
) -> Result<SolveReport> {
    solve_from(eq, method, spec, stop, Mat::zeros(eq.m(), eq.n()), rng)
}

pub fn solve_from<R: Rng + ?Sized>(
    eq: &MatrixEquation,
    method: Method,
    spec: &SketchSpec,
    stop: &StopRule,
    x0: Mat,
    rng: &mut R,
) -> Result<SolveReport> {
    Solver::new(eq, method, spec)?.run(x0, stop, rng)
}
