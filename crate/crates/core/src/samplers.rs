//! Distributions over sketch pairs `(S, P)`.
//!
//! A [`SketchSpec`] describes the distribution; a [`Sampler`] binds it to a
//! concrete `(A, B)` pair, precomputes the categorical tables, and produces
//! [`Pick`]s (cheap index labels) or fully materialized [`SketchDraw`]s.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity_columns, numerical_rank, serde_rows, Mat, SpdMat, Vector};

/// Tolerance on `|Σ p_i - 1|` for user-supplied probability vectors.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SketchSpec {
    /// `S = e_i`, `P = e_j` with row/column-norm probabilities.
    CoordinatePair,
    /// `S = e_i` (row-norm probabilities of `A`), `P = I_q`.
    RowOnly,
    /// `S = I_p`, `P = e_j` (column-norm probabilities of `B`).
    ColOnly,
    /// `S = I_{:,I_k}`, `P = I_{:,J_l}` over contiguous partitions, cells uniform.
    BlockPartition { tau1: usize, tau2: usize },
    /// Finite lists of sketches with explicit probabilities.
    CompleteDiscrete {
        #[serde(with = "serde_rows::list")]
        s_list: Vec<Mat>,
        s_probs: Vec<f64>,
        #[serde(with = "serde_rows::list")]
        p_list: Vec<Mat>,
        p_probs: Vec<f64>,
    },
    /// `S = ζ ~ N(0, Σ₁)`, `P = η ~ N(0, Σ₂)`.
    Gaussian { sigma1: SpdMat, sigma2: SpdMat },
    /// `S = ζ ~ N(0, Σ₁)`, `P = I_q`.
    GaussianRow { sigma1: SpdMat },
    /// `S = I_p`, `P = η ~ N(0, Σ₂)`.
    GaussianCol { sigma2: SpdMat },
    /// `S = A e_i` with column-norm probabilities of `A`, `P = I_q`.
    ColumnOfA,
    /// `S = e_i` with `p_i = A_ii / Tr(A)`, `P = I_q` (square `A` only).
    DiagonalWeighted,
    /// `S = I_p`, `P = I_q`.
    IdentityPair,
}

impl SketchSpec {
    /// Identifier used on the command line.
    pub fn id(&self) -> &'static str {
        match self {
            SketchSpec::CoordinatePair => "coord",
            SketchSpec::RowOnly => "row",
            SketchSpec::ColOnly => "col",
            SketchSpec::BlockPartition { .. } => "block",
            SketchSpec::CompleteDiscrete { .. } => "discrete",
            SketchSpec::Gaussian { .. } => "gauss",
            SketchSpec::GaussianRow { .. } => "gauss-row",
            SketchSpec::GaussianCol { .. } => "gauss-col",
            SketchSpec::ColumnOfA => "col-of-a",
            SketchSpec::DiagonalWeighted => "diag",
            SketchSpec::IdentityPair => "identity",
        }
    }

    /// All identifiers accepted by [`SketchSpec::from_id`].
    pub const IDS: &'static [&'static str] = &[
        "coord",
        "row",
        "col",
        "block",
        "gauss",
        "gauss-row",
        "gauss-col",
        "col-of-a",
        "diag",
        "identity",
    ];

    /// Builds a parameter-free spec from its identifier. Gaussian variants use
    /// identity covariances; `block` takes `tau1`/`tau2`. Complete discrete
    /// specs only come from JSON configs.
    pub fn from_id(id: &str, p: usize, q: usize, tau1: usize, tau2: usize) -> Result<Self> {
        Ok(match id {
            "coord" => SketchSpec::CoordinatePair,
            "row" => SketchSpec::RowOnly,
            "col" => SketchSpec::ColOnly,
            "block" => SketchSpec::BlockPartition { tau1, tau2 },
            "gauss" => SketchSpec::Gaussian {
                sigma1: SpdMat::identity(p),
                sigma2: SpdMat::identity(q),
            },
            "gauss-row" => SketchSpec::GaussianRow {
                sigma1: SpdMat::identity(p),
            },
            "gauss-col" => SketchSpec::GaussianCol {
                sigma2: SpdMat::identity(q),
            },
            "col-of-a" => SketchSpec::ColumnOfA,
            "diag" => SketchSpec::DiagonalWeighted,
            "identity" => SketchSpec::IdentityPair,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown sketch `{other}` (expected one of {})",
                    Self::IDS.join(", ")
                )))
            }
        })
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(
            self,
            SketchSpec::Gaussian { .. }
                | SketchSpec::GaussianRow { .. }
                | SketchSpec::GaussianCol { .. }
        )
    }

    /// Checks the spec against `A` (`p × m`) and `B` (`n × q`).
    pub fn validate(&self, a: &Mat, b: &Mat) -> Result<()> {
        let (p, q) = (a.nrows(), b.ncols());
        match self {
            SketchSpec::CoordinatePair => {
                row_probabilities(a)?;
                col_probabilities(b)?;
            }
            SketchSpec::RowOnly => {
                row_probabilities(a)?;
            }
            SketchSpec::ColOnly => {
                col_probabilities(b)?;
            }
            SketchSpec::BlockPartition { tau1, tau2 } => {
                block_partition(p, *tau1)?;
                block_partition(q, *tau2)?;
            }
            SketchSpec::CompleteDiscrete {
                s_list,
                s_probs,
                p_list,
                p_probs,
            } => {
                check_members("S", s_list, p)?;
                check_members("P", p_list, q)?;
                check_probabilities("S", s_probs, s_list.len())?;
                check_probabilities("P", p_probs, p_list.len())?;
            }
            SketchSpec::Gaussian { sigma1, sigma2 } => {
                check_cov("Σ₁", sigma1, p)?;
                check_cov("Σ₂", sigma2, q)?;
            }
            SketchSpec::GaussianRow { sigma1 } => check_cov("Σ₁", sigma1, p)?,
            SketchSpec::GaussianCol { sigma2 } => check_cov("Σ₂", sigma2, q)?,
            SketchSpec::ColumnOfA => {
                col_probabilities(a)?;
            }
            SketchSpec::DiagonalWeighted => {
                diagonal_probabilities(a)?;
            }
            SketchSpec::IdentityPair => {}
        }
        Ok(())
    }
}

fn check_members(name: &str, list: &[Mat], rows: usize) -> Result<()> {
    if list.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} list is empty")));
    }
    for (k, m) in list.iter().enumerate() {
        if m.nrows() != rows {
            return Err(Error::Dimension(format!(
                "{name}_{k} has {} rows, expected {rows}",
                m.nrows()
            )));
        }
    }
    Ok(())
}

fn check_probabilities(name: &str, probs: &[f64], len: usize) -> Result<()> {
    if probs.len() != len {
        return Err(Error::InvalidArgument(format!(
            "{name} probabilities have length {}, expected {len}",
            probs.len()
        )));
    }
    if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{name} probabilities must be finite and nonnegative"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidArgument(format!(
            "{name} probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

fn check_cov(name: &str, sigma: &SpdMat, dim: usize) -> Result<()> {
    if sigma.dim() != dim {
        return Err(Error::Dimension(format!(
            "{name} is {0}x{0}, expected {dim}x{dim}",
            sigma.dim()
        )));
    }
    Ok(())
}

fn normalize(weights: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroSlice(format!("{what}: all weights vanish")));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// `p_i = ‖A_{i,:}‖² / ‖A‖²_F`.
pub fn row_probabilities(a: &Mat) -> Result<Vec<f64>> {
    normalize(
        a.row_iter().map(|r| r.norm_squared()).collect(),
        "matrix has no nonzero row",
    )
}

/// `p_j = ‖B_{:,j}‖² / ‖B‖²_F`.
pub fn col_probabilities(b: &Mat) -> Result<Vec<f64>> {
    normalize(
        b.column_iter().map(|c| c.norm_squared()).collect(),
        "matrix has no nonzero column",
    )
}

/// `p_i = A_ii / Tr(A)` for a square matrix with positive diagonal.
pub fn diagonal_probabilities(a: &Mat) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(
            "diagonal sampling needs a square A".into(),
        ));
    }
    let d: Vec<f64> = a.diagonal().iter().copied().collect();
    if d.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NotSpd("diagonal entries must be positive".into()));
    }
    normalize(d, "zero diagonal")
}

fn ensure_full_row_rank(m: &Mat, what: String) -> Result<()> {
    if numerical_rank(m, None)? == m.nrows() {
        Ok(())
    } else {
        Err(Error::RankDeficient(format!(
            "{what} does not have full row rank"
        )))
    }
}

/// `p_i = Tr(S_iᵀAAᵀS_i) / ‖Aᵀ𝐒‖²_F`, requiring every `S_iᵀA` to have full row rank.
pub fn convenient_probabilities(a: &Mat, s_list: &[Mat]) -> Result<Vec<f64>> {
    check_members("S", s_list, a.nrows())?;
    let mut weights = Vec::with_capacity(s_list.len());
    for (k, s) in s_list.iter().enumerate() {
        let sta = s.transpose() * a;
        ensure_full_row_rank(&sta, format!("S_{k}^T A"))?;
        weights.push(sta.norm_squared());
    }
    normalize(weights, "S list")
}

/// `p_j = Tr(P_jᵀBᵀBP_j) / ‖B𝐏‖²_F`, requiring every `P_jᵀBᵀ` to have full row rank.
pub fn convenient_probabilities_cols(b: &Mat, p_list: &[Mat]) -> Result<Vec<f64>> {
    check_members("P", p_list, b.ncols())?;
    let mut weights = Vec::with_capacity(p_list.len());
    for (k, p) in p_list.iter().enumerate() {
        let bp = b * p;
        ensure_full_row_rank(&bp.transpose(), format!("P_{k}^T B^T"))?;
        weights.push(bp.norm_squared());
    }
    normalize(weights, "P list")
}

/// Contiguous partition of `0..dim` into blocks of size `tau` (the last block
/// takes the remainder). Indices are zero-based.
pub fn block_partition(dim: usize, tau: usize) -> Result<Vec<Vec<usize>>> {
    if tau == 0 || tau > dim {
        return Err(Error::InvalidArgument(format!(
            "block size {tau} must lie in 1..={dim}"
        )));
    }
    let blocks = dim.div_ceil(tau);
    Ok((0..blocks)
        .map(|k| (k * tau..((k + 1) * tau).min(dim)).collect())
        .collect())
}

/// Inverse-CDF sampler over a finite distribution.
#[derive(Clone, Debug)]
pub struct Categorical {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl Categorical {
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        let last_positive = probs
            .iter()
            .rposition(|&p| p > 0.0)
            .ok_or_else(|| Error::InvalidArgument("distribution has no positive mass".into()))?;
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { cdf, last_positive })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        Self::new(&vec![1.0 / len as f64; len])
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    /// Smallest index `i` with `u < F(i)` for a single uniform `u ∈ [0, 1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.last_positive)
    }
}

/// Index-level description of a draw; enough for the specialized updates.
#[derive(Clone, Debug, PartialEq)]
pub enum Pick {
    Identity,
    Coordinate {
        i: usize,
        j: usize,
    },
    /// `S = e_i`, `P = I`.
    Row {
        i: usize,
    },
    /// `S = I`, `P = e_j`.
    Col {
        j: usize,
    },
    Block {
        row_block: usize,
        col_block: usize,
    },
    Member {
        s: usize,
        p: usize,
    },
    /// `S = A e_i`, `P = I`.
    ColumnOfA {
        i: usize,
    },
    /// Gaussian vectors; `None` marks an identity side.
    Gaussian {
        zeta: Option<Vector>,
        eta: Option<Vector>,
    },
}

/// A realized sketch pair.
#[derive(Clone, Debug)]
pub struct SketchDraw {
    pub s: Mat,
    pub p: Mat,
    pub pick: Pick,
}

/// A [`SketchSpec`] bound to a particular `(A, B)`.
#[derive(Clone, Debug)]
pub struct Sampler {
    spec: SketchSpec,
    p: usize,
    q: usize,
    a: Mat,
    rows: Option<Categorical>,
    cols: Option<Categorical>,
    row_blocks: Vec<Vec<usize>>,
    col_blocks: Vec<Vec<usize>>,
    chol1: Option<Mat>,
    chol2: Option<Mat>,
}

fn chol_unless_identity(sigma: &SpdMat) -> Option<Mat> {
    (!sigma.is_identity()).then(|| sigma.cholesky_factor())
}

impl Sampler {
    pub fn new(spec: &SketchSpec, a: &Mat, b: &Mat) -> Result<Self> {
        spec.validate(a, b)?;
        let (p, q) = (a.nrows(), b.ncols());
        let mut sampler = Sampler {
            spec: spec.clone(),
            p,
            q,
            a: Mat::zeros(0, 0),
            rows: None,
            cols: None,
            row_blocks: Vec::new(),
            col_blocks: Vec::new(),
            chol1: None,
            chol2: None,
        };
        match spec {
            SketchSpec::CoordinatePair => {
                sampler.rows = Some(Categorical::new(&row_probabilities(a)?)?);
                sampler.cols = Some(Categorical::new(&col_probabilities(b)?)?);
            }
            SketchSpec::RowOnly => sampler.rows = Some(Categorical::new(&row_probabilities(a)?)?),
            SketchSpec::ColOnly => sampler.cols = Some(Categorical::new(&col_probabilities(b)?)?),
            SketchSpec::BlockPartition { tau1, tau2 } => {
                sampler.row_blocks = block_partition(p, *tau1)?;
                sampler.col_blocks = block_partition(q, *tau2)?;
                sampler.rows = Some(Categorical::uniform(sampler.row_blocks.len())?);
                sampler.cols = Some(Categorical::uniform(sampler.col_blocks.len())?);
            }
            SketchSpec::CompleteDiscrete {
                s_probs, p_probs, ..
            } => {
                sampler.rows = Some(Categorical::new(s_probs)?);
                sampler.cols = Some(Categorical::new(p_probs)?);
            }
            SketchSpec::Gaussian { sigma1, sigma2 } => {
                sampler.chol1 = chol_unless_identity(sigma1);
                sampler.chol2 = chol_unless_identity(sigma2);
            }
            SketchSpec::GaussianRow { sigma1 } => sampler.chol1 = chol_unless_identity(sigma1),
            SketchSpec::GaussianCol { sigma2 } => sampler.chol2 = chol_unless_identity(sigma2),
            SketchSpec::ColumnOfA => {
                sampler.rows = Some(Categorical::new(&col_probabilities(a)?)?);
                sampler.a = a.clone();
            }
            SketchSpec::DiagonalWeighted => {
                sampler.rows = Some(Categorical::new(&diagonal_probabilities(a)?)?)
            }
            SketchSpec::IdentityPair => {}
        }
        Ok(sampler)
    }

    pub fn spec(&self) -> &SketchSpec {
        &self.spec
    }

    pub fn row_blocks(&self) -> &[Vec<usize>] {
        &self.row_blocks
    }

    pub fn col_blocks(&self) -> &[Vec<usize>] {
        &self.col_blocks
    }

    fn gaussian<R: Rng + ?Sized>(dim: usize, chol: &Option<Mat>, rng: &mut R) -> Vector {
        let z = crate::linalg::standard_normal_vector(dim, rng);
        match chol {
            Some(l) => l * z,
            None => z,
        }
    }

    fn rows(&self) -> &Categorical {
        self.rows
            .as_ref()
            .expect("row distribution is set for this spec")
    }

    fn cols(&self) -> &Categorical {
        self.cols
            .as_ref()
            .expect("column distribution is set for this spec")
    }

    /// Draws the next pick. Row-side randomness is consumed before column-side.
    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> Pick {
        match &self.spec {
            SketchSpec::CoordinatePair => {
                let i = self.rows().sample(rng);
                let j = self.cols().sample(rng);
                Pick::Coordinate { i, j }
            }
            SketchSpec::RowOnly | SketchSpec::DiagonalWeighted => Pick::Row {
                i: self.rows().sample(rng),
            },
            SketchSpec::ColOnly => Pick::Col {
                j: self.cols().sample(rng),
            },
            SketchSpec::BlockPartition { .. } => {
                let row_block = self.rows().sample(rng);
                let col_block = self.cols().sample(rng);
                Pick::Block {
                    row_block,
                    col_block,
                }
            }
            SketchSpec::CompleteDiscrete { .. } => {
                let s = self.rows().sample(rng);
                let p = self.cols().sample(rng);
                Pick::Member { s, p }
            }
            SketchSpec::Gaussian { .. } => {
                let zeta = Self::gaussian(self.p, &self.chol1, rng);
                let eta = Self::gaussian(self.q, &self.chol2, rng);
                Pick::Gaussian {
                    zeta: Some(zeta),
                    eta: Some(eta),
                }
            }
            SketchSpec::GaussianRow { .. } => Pick::Gaussian {
                zeta: Some(Self::gaussian(self.p, &self.chol1, rng)),
                eta: None,
            },
            SketchSpec::GaussianCol { .. } => Pick::Gaussian {
                zeta: None,
                eta: Some(Self::gaussian(self.q, &self.chol2, rng)),
            },
            SketchSpec::ColumnOfA => Pick::ColumnOfA {
                i: self.rows().sample(rng),
            },
            SketchSpec::IdentityPair => Pick::Identity,
        }
    }

    /// Builds the explicit `(S, P)` matrices for a pick.
    pub fn materialize(&self, pick: Pick) -> SketchDraw {
        let (p, q) = (self.p, self.q);
        let (s, pm) = match &pick {
            Pick::Identity => (Mat::identity(p, p), Mat::identity(q, q)),
            Pick::Coordinate { i, j } => (identity_columns(p, &[*i]), identity_columns(q, &[*j])),
            Pick::Row { i } => (identity_columns(p, &[*i]), Mat::identity(q, q)),
            Pick::Col { j } => (Mat::identity(p, p), identity_columns(q, &[*j])),
            Pick::Block {
                row_block,
                col_block,
            } => (
                identity_columns(p, &self.row_blocks[*row_block]),
                identity_columns(q, &self.col_blocks[*col_block]),
            ),
            Pick::Member { s, p: pi } => match &self.spec {
                SketchSpec::CompleteDiscrete { s_list, p_list, .. } => {
                    (s_list[*s].clone(), p_list[*pi].clone())
                }
                _ => unreachable!("member picks only come from complete discrete specs"),
            },
            Pick::ColumnOfA { i } => (self.a.columns(*i, 1).into_owned(), Mat::identity(q, q)),
            Pick::Gaussian { zeta, eta } => (
                zeta.as_ref().map_or_else(
                    || Mat::identity(p, p),
                    |z| Mat::from_column_slice(p, 1, z.as_slice()),
                ),
                eta.as_ref().map_or_else(
                    || Mat::identity(q, q),
                    |e| Mat::from_column_slice(q, 1, e.as_slice()),
                ),
            ),
        };
        SketchDraw { s, p: pm, pick }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SketchDraw {
        let pick = self.pick(rng);
        self.materialize(pick)
    }

    /// Finite support of the `S` side as `(probability, S_i)`, or `None` when
    /// `S` is continuous. Zero-probability members are omitted.
    pub fn row_support(&self) -> Option<Vec<(f64, Mat)>> {
        let p = self.p;
        let weighted = |probs: Vec<f64>, build: &dyn Fn(usize) -> Mat| {
            probs
                .into_iter()
                .enumerate()
                .filter(|(_, w)| *w > 0.0)
                .map(|(i, w)| (w, build(i)))
                .collect::<Vec<_>>()
        };
        match &self.spec {
            SketchSpec::CoordinatePair | SketchSpec::RowOnly | SketchSpec::DiagonalWeighted => {
                Some(weighted(self.probs(self.rows()), &|i| {
                    identity_columns(p, &[i])
                }))
            }
            SketchSpec::ColOnly | SketchSpec::IdentityPair | SketchSpec::GaussianCol { .. } => {
                Some(vec![(1.0, Mat::identity(p, p))])
            }
            SketchSpec::BlockPartition { .. } => Some(weighted(self.probs(self.rows()), &|k| {
                identity_columns(p, &self.row_blocks[k])
            })),
            SketchSpec::CompleteDiscrete { s_list, .. } => {
                Some(weighted(self.probs(self.rows()), &|k| s_list[k].clone()))
            }
            SketchSpec::ColumnOfA => Some(weighted(self.probs(self.rows()), &|i| {
                self.a.columns(i, 1).into_owned()
            })),
            SketchSpec::Gaussian { .. } | SketchSpec::GaussianRow { .. } => None,
        }
    }

    /// Finite support of the `P` side, as for [`Sampler::row_support`].
    pub fn col_support(&self) -> Option<Vec<(f64, Mat)>> {
        let q = self.q;
        let weighted = |probs: Vec<f64>, build: &dyn Fn(usize) -> Mat| {
            probs
                .into_iter()
                .enumerate()
                .filter(|(_, w)| *w > 0.0)
                .map(|(i, w)| (w, build(i)))
                .collect::<Vec<_>>()
        };
        match &self.spec {
            SketchSpec::CoordinatePair | SketchSpec::ColOnly => {
                Some(weighted(self.probs(self.cols()), &|j| {
                    identity_columns(q, &[j])
                }))
            }
            SketchSpec::RowOnly
            | SketchSpec::DiagonalWeighted
            | SketchSpec::ColumnOfA
            | SketchSpec::IdentityPair
            | SketchSpec::GaussianRow { .. } => Some(vec![(1.0, Mat::identity(q, q))]),
            SketchSpec::BlockPartition { .. } => Some(weighted(self.probs(self.cols()), &|k| {
                identity_columns(q, &self.col_blocks[k])
            })),
            SketchSpec::CompleteDiscrete { p_list, .. } => {
                Some(weighted(self.probs(self.cols()), &|k| p_list[k].clone()))
            }
            SketchSpec::Gaussian { .. } | SketchSpec::GaussianCol { .. } => None,
        }
    }

    fn probs(&self, c: &Categorical) -> Vec<f64> {
        let mut prev = 0.0;
        c.cdf
            .iter()
            .map(|&v| {
                let p = v - prev;
                prev = v;
                p.max(0.0)
            })
            .collect()
    }
}

/// One-shot draw; prefer a [`Sampler`] when drawing repeatedly.
pub fn draw<R: Rng + ?Sized>(
    spec: &SketchSpec,
    a: &Mat,
    b: &Mat,
    rng: &mut R,
) -> Result<SketchDraw> {
    Ok(Sampler::new(spec, a, b)?.draw(rng))
}

/// Outcome of one complete-discrete condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub condition: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompleteDiscreteReport {
    pub checks: Vec<ConditionCheck>,
}

impl CompleteDiscreteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.condition.as_str())
            .collect()
    }
}

fn hcat(list: &[Mat]) -> Mat {
    let rows = list[0].nrows();
    let cols: usize = list.iter().map(Mat::ncols).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c0 = 0;
    for m in list {
        out.view_mut((0, c0), m.shape()).copy_from(m);
        c0 += m.ncols();
    }
    out
}

fn full_row_rank(m: &Mat) -> bool {
    numerical_rank(m, None).is_ok_and(|r| r == m.nrows())
}

/// Checks the complete-discrete-pair conditions; failures are reported, not raised.
pub fn validate_complete_discrete(spec: &SketchSpec, a: &Mat, b: &Mat) -> CompleteDiscreteReport {
    let mut checks = Vec::new();
    let mut push =
        |condition: String, passed: bool| checks.push(ConditionCheck { condition, passed });
    let SketchSpec::CompleteDiscrete {
        s_list,
        s_probs,
        p_list,
        p_probs,
    } = spec
    else {
        push(
            format!("spec `{}` is a complete discrete list", spec.id()),
            false,
        );
        return CompleteDiscreteReport { checks };
    };
    let shapes_ok = check_members("S", s_list, a.nrows()).is_ok()
        && check_members("P", p_list, b.ncols()).is_ok();
    push("member shapes".into(), shapes_ok);
    if !shapes_ok {
        return CompleteDiscreteReport { checks };
    }
    for (i, s) in s_list.iter().enumerate() {
        push(
            format!("S_{i}^T A rank"),
            full_row_rank(&(s.transpose() * a)),
        );
    }
    for (j, p) in p_list.iter().enumerate() {
        push(
            format!("P_{j}^T B^T rank"),
            full_row_rank(&(b * p).transpose()),
        );
    }
    push(
        "A^T S full row rank".into(),
        full_row_rank(&(a.transpose() * hcat(s_list))),
    );
    push(
        "B P full row rank".into(),
        full_row_rank(&(b * hcat(p_list))),
    );
    push(
        "S probabilities positive".into(),
        s_probs.len() == s_list.len() && s_probs.iter().all(|&p| p > 0.0),
    );
    push(
        "P probabilities positive".into(),
        p_probs.len() == p_list.len() && p_probs.iter().all(|&p| p > 0.0),
    );
    CompleteDiscreteReport { checks }
}

/// The `𝐒 = [S_1, …, S_r]` concatenation.
pub fn stack_columns(list: &[Mat]) -> Result<Mat> {
    if list.is_empty() {
        return Err(Error::InvalidArgument("empty list".into()));
    }
    if list.iter().any(|m| m.nrows() != list[0].nrows()) {
        return Err(Error::Dimension("members have different row counts".into()));
    }
    Ok(hcat(list))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_normal;
    use crate::rng::seeded;
    use nalgebra::dmatrix;

    fn approx_eq(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn row_probability_examples() {
        let a = dmatrix![3.0, 4.0; 0.0, 5.0];
        assert_eq!(row_probabilities(&a).unwrap(), vec![0.5, 0.5]);
        let i3 = Mat::identity(3, 3);
        assert!(approx_eq(
            &row_probabilities(&i3).unwrap(),
            &[1.0 / 3.0; 3],
            1e-15
        ));
        let z = dmatrix![1.0, 1.0; 0.0, 0.0; 2.0, 0.0];
        assert_eq!(
            row_probabilities(&z).unwrap(),
            vec![2.0 / 6.0, 0.0, 4.0 / 6.0]
        );
        assert!(matches!(
            row_probabilities(&Mat::zeros(2, 2)),
            Err(Error::ZeroSlice(_))
        ));
        let b = dmatrix![3.0, 0.0; 4.0, 5.0];
        assert_eq!(col_probabilities(&b).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn convenient_probability_examples() {
        let mut rng = seeded(2);
        let a = standard_normal(4, 3, &mut rng);
        let coords: Vec<Mat> = (0..4).map(|i| identity_columns(4, &[i])).collect();
        let conv = convenient_probabilities(&a, &coords).unwrap();
        assert!(approx_eq(&conv, &row_probabilities(&a).unwrap(), 1e-15));

        let single = vec![Mat::identity(4, 4)];
        let wide = standard_normal(4, 5, &mut rng);
        assert_eq!(convenient_probabilities(&wide, &single).unwrap(), vec![1.0]);

        let i2 = Mat::identity(2, 2);
        let list = vec![
            identity_columns(2, &[0]),
            identity_columns(2, &[1]),
            i2.clone(),
        ];
        let probs = convenient_probabilities(&i2, &list).unwrap();
        assert!(approx_eq(&probs, &[0.25, 0.25, 0.5], 1e-15));

        // S^T A with a zero row is rank deficient.
        let deficient = dmatrix![1.0, 0.0; 0.0, 0.0];
        assert!(matches!(
            convenient_probabilities(&deficient, &list),
            Err(Error::RankDeficient(_))
        ));

        let b = standard_normal(3, 4, &mut rng);
        let pcoords: Vec<Mat> = (0..4).map(|j| identity_columns(4, &[j])).collect();
        let pc = convenient_probabilities_cols(&b, &pcoords).unwrap();
        assert!(approx_eq(&pc, &col_probabilities(&b).unwrap(), 1e-15));
    }

    #[test]
    fn block_partition_examples() {
        assert_eq!(
            block_partition(5, 2).unwrap(),
            vec![vec![0, 1], vec![2, 3], vec![4]]
        );
        assert_eq!(block_partition(4, 4).unwrap(), vec![vec![0, 1, 2, 3]]);
        assert_eq!(
            block_partition(4, 1).unwrap(),
            vec![vec![0], vec![1], vec![2], vec![3]]
        );
        assert!(block_partition(4, 0).is_err());
        assert!(block_partition(4, 5).is_err());
    }

    #[test]
    fn categorical_skips_zero_mass() {
        let c = Categorical::new(&[0.0, 0.5, 0.0, 0.5, 0.0]).unwrap();
        let mut rng = seeded(4);
        for _ in 0..2000 {
            let k = c.sample(&mut rng);
            assert!(k == 1 || k == 3);
        }
        assert!(Categorical::new(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn identity_pair_draw() {
        let a = Mat::identity(3, 2);
        let b = Mat::identity(2, 4);
        let d = draw(&SketchSpec::IdentityPair, &a, &b, &mut seeded(0)).unwrap();
        assert_eq!(d.s, Mat::identity(3, 3));
        assert_eq!(d.p, Mat::identity(4, 4));
    }

    #[test]
    fn coordinate_frequencies_match_probabilities() {
        let i2 = Mat::identity(2, 2);
        let sampler = Sampler::new(&SketchSpec::CoordinatePair, &i2, &i2).unwrap();
        let mut rng = seeded(17);
        let n = 100_000;
        let mut counts = [[0usize; 2]; 2];
        for _ in 0..n {
            match sampler.pick(&mut rng) {
                Pick::Coordinate { i, j } => {
                    counts[0][i] += 1;
                    counts[1][j] += 1;
                }
                other => panic!("unexpected pick {other:?}"),
            }
        }
        let sigma = (0.25 / n as f64).sqrt();
        for side in counts {
            for c in side {
                assert!((c as f64 / n as f64 - 0.5).abs() <= 3.0 * sigma);
            }
        }
    }

    #[test]
    fn gaussian_sample_mean_is_centered() {
        let a = Mat::identity(3, 3);
        let spec = SketchSpec::from_id("gauss", 3, 3, 1, 1).unwrap();
        let sampler = Sampler::new(&spec, &a, &a).unwrap();
        let mut rng = seeded(23);
        let n = 100_000;
        let mut sum = Vector::zeros(3);
        for _ in 0..n {
            if let Pick::Gaussian { zeta: Some(z), .. } = sampler.pick(&mut rng) {
                sum += z;
            }
        }
        let sigma = (1.0 / n as f64).sqrt();
        for v in (sum / n as f64).iter() {
            assert!(v.abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn correlated_gaussian_covariance() {
        let sigma = SpdMat::new(dmatrix![2.0, 0.6; 0.6, 1.0]).unwrap();
        let a = Mat::identity(2, 2);
        let spec = SketchSpec::GaussianRow {
            sigma1: sigma.clone(),
        };
        let sampler = Sampler::new(&spec, &a, &a).unwrap();
        let mut rng = seeded(31);
        let n = 100_000;
        let mut acc = Mat::zeros(2, 2);
        for _ in 0..n {
            let d = sampler.draw(&mut rng);
            assert_eq!(d.p, Mat::identity(2, 2));
            acc += &d.s * d.s.transpose();
        }
        let cov = acc / n as f64;
        // Var of the empirical second moment is O(σ²/N); 0.05 is far beyond 4σ here.
        assert!((cov - sigma.as_mat()).abs().max() < 0.05);
    }

    #[test]
    fn fixed_seed_gives_identical_draws() {
        let mut rng = seeded(9);
        let a = standard_normal(5, 3, &mut rng);
        let b = standard_normal(3, 6, &mut rng);
        for spec in [
            SketchSpec::CoordinatePair,
            SketchSpec::BlockPartition { tau1: 2, tau2: 4 },
            SketchSpec::from_id("gauss", 5, 6, 1, 1).unwrap(),
        ] {
            let s = Sampler::new(&spec, &a, &b).unwrap();
            let (mut r1, mut r2) = (seeded(42), seeded(42));
            for _ in 0..50 {
                let (d1, d2) = (s.draw(&mut r1), s.draw(&mut r2));
                assert_eq!(d1.s, d2.s);
                assert_eq!(d1.p, d2.p);
                assert_eq!(d1.pick, d2.pick);
            }
        }
    }

    #[test]
    fn block_union_covers_all_indices() {
        for (dim, tau) in [(7, 3), (10, 10), (9, 1), (12, 5)] {
            let blocks = block_partition(dim, tau).unwrap();
            let mut all: Vec<usize> = blocks.concat();
            all.sort_unstable();
            assert_eq!(all, (0..dim).collect::<Vec<_>>());
        }
    }

    #[test]
    fn complete_discrete_member_frequencies() {
        let i2 = Mat::identity(2, 2);
        let s_list = vec![
            identity_columns(2, &[0]),
            identity_columns(2, &[1]),
            i2.clone(),
        ];
        let s_probs = convenient_probabilities(&i2, &s_list).unwrap();
        let spec = SketchSpec::CompleteDiscrete {
            s_list: s_list.clone(),
            s_probs: s_probs.clone(),
            p_list: vec![i2.clone()],
            p_probs: vec![1.0],
        };
        let sampler = Sampler::new(&spec, &i2, &i2).unwrap();
        let mut rng = seeded(3);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            if let Pick::Member { s, .. } = sampler.pick(&mut rng) {
                counts[s] += 1;
            }
        }
        for (c, p) in counts.iter().zip(&s_probs) {
            let f = *c as f64 / n as f64;
            assert!((f - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        }
    }

    #[test]
    fn complete_discrete_validation() {
        let mut rng = seeded(12);
        let a = standard_normal(3, 2, &mut rng);
        let b = standard_normal(2, 3, &mut rng);
        let coords = |d: usize| {
            (0..d)
                .map(|i| identity_columns(d, &[i]))
                .collect::<Vec<_>>()
        };
        let spec = SketchSpec::CompleteDiscrete {
            s_list: coords(3),
            s_probs: row_probabilities(&a).unwrap(),
            p_list: coords(3),
            p_probs: col_probabilities(&b).unwrap(),
        };
        assert!(validate_complete_discrete(&spec, &a, &b).passed());

        let mut z = a.clone();
        z.row_mut(1).fill(0.0);
        let report = validate_complete_discrete(&spec, &z, &b);
        assert!(report.failures().contains(&"S_1^T A rank"));

        let i2 = Mat::identity(2, 2);
        let spec = SketchSpec::CompleteDiscrete {
            s_list: coords(2),
            s_probs: vec![0.5, 0.5],
            p_list: coords(2),
            p_probs: vec![0.5, 0.5],
        };
        let report = validate_complete_discrete(&spec, &i2, &i2);
        assert!(report.passed());
        assert!(report
            .checks
            .iter()
            .any(|c| c.condition == "A^T S full row rank" && c.passed));

        // A single coordinate cannot span R^2.
        let spec = SketchSpec::CompleteDiscrete {
            s_list: vec![identity_columns(2, &[0])],
            s_probs: vec![1.0],
            p_list: coords(2),
            p_probs: vec![0.5, 0.5],
        };
        let report = validate_complete_discrete(&spec, &i2, &i2);
        assert_eq!(report.failures(), vec!["A^T S full row rank"]);
    }

    #[test]
    fn spec_validation_errors() {
        let a = Mat::identity(3, 3);
        assert!(SketchSpec::BlockPartition { tau1: 4, tau2: 1 }
            .validate(&a, &a)
            .is_err());
        let bad = SketchSpec::CompleteDiscrete {
            s_list: vec![Mat::identity(3, 3)],
            s_probs: vec![0.9],
            p_list: vec![Mat::identity(3, 3)],
            p_probs: vec![1.0],
        };
        assert!(bad.validate(&a, &a).is_err());
        let wrong_rows = SketchSpec::CompleteDiscrete {
            s_list: vec![Mat::identity(2, 2)],
            s_probs: vec![1.0],
            p_list: vec![Mat::identity(3, 3)],
            p_probs: vec![1.0],
        };
        assert!(matches!(
            wrong_rows.validate(&a, &a),
            Err(Error::Dimension(_))
        ));
        assert!(SketchSpec::from_id("nope", 1, 1, 1, 1).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = SketchSpec::CompleteDiscrete {
            s_list: vec![identity_columns(2, &[0]), identity_columns(2, &[1])],
            s_probs: vec![0.25, 0.75],
            p_list: vec![Mat::identity(2, 2)],
            p_probs: vec![1.0],
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.starts_with(r#"{"kind":"complete-discrete""#));
        let back: SketchSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let block: SketchSpec =
            serde_json::from_str(r#"{"kind":"block-partition","tau1":2,"tau2":3}"#).unwrap();
        assert_eq!(block, SketchSpec::BlockPartition { tau1: 2, tau2: 3 });
    }
}
