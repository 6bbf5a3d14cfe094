//! Small-scale convergence theory: projectors, expected projectors, rates,
//! closed-form bounds, a brute-force projection oracle, and Monte Carlo
//! checks of the Gaussian and appendix inequalities.
//!
//! Everything here forms Kronecker products explicitly and is therefore
//! limited to `mn ≤ 4096`.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_shape, is_symmetric, kron, numerical_rank, pseudoinverse, random_spd, serde_rows,
    standard_normal, sym_eig_extremes, unvec, vec, weighted_frob_sq, Mat, SpdMat, KRON_CAP,
};
use crate::rng::substream;
use crate::samplers::{
    convenient_probabilities, convenient_probabilities_cols, stack_columns,
    validate_complete_discrete, Sampler, SketchSpec,
};
use crate::solvers::{MatrixEquation, Method, Solver};

/// Minimum number of Monte Carlo draws for continuous sketches.
pub const MIN_MC_TRIALS: usize = 100;

/// Symmetry tolerance for [`rate_rho`].
const RATE_SYMMETRY_TOL: f64 = 1e-8;

/// `Z₁′ = G⁻¹AᵀS (SᵀAG⁻¹AᵀS)† SᵀA`.
pub fn projector_z1p(a: &Mat, g: &SpdMat, s: &Mat) -> Result<Mat> {
    if s.nrows() != a.nrows() || g.dim() != a.ncols() {
        return Err(Error::Dimension("S, A and G are not compatible".into()));
    }
    // L⁻ᵀ (M†)ᵀ SᵀA with M = L⁻¹AᵀS; see `general_step_weighted`.
    let m_fac = g.solve_factor(&(a.transpose() * s));
    Ok(g.solve_factor_t(&pseudoinverse(&m_fac, None)?.transpose()) * s.transpose() * a)
}

/// `Z₂ = BP (PᵀBᵀBP)† PᵀBᵀ`.
pub fn projector_z2(b: &Mat, p: &Mat) -> Result<Mat> {
    if p.nrows() != b.ncols() {
        return Err(Error::Dimension("P and B are not compatible".into()));
    }
    let bp = b * p;
    Ok(&bp * pseudoinverse(&bp, None)?)
}

/// `d = rank((PᵀBᵀ) ⊗ (SᵀA)) = rank(PᵀBᵀ) · rank(SᵀA)`.
pub fn draw_rank(a: &Mat, b: &Mat, s: &Mat, p: &Mat) -> Result<usize> {
    let r1 = numerical_rank(&(s.transpose() * a), None)?;
    let r2 = numerical_rank(&(b * p), None)?;
    Ok(r1 * r2)
}

fn check_cap(m: usize, n: usize) -> Result<()> {
    if m * n > KRON_CAP {
        return Err(Error::KronCap {
            rows: m * n,
            cols: m * n,
            cap: KRON_CAP,
        });
    }
    Ok(())
}

/// `G^{1/2} M G^{-1/2}`, the similarity that symmetrizes `Z₁′`.
fn to_hat(m: &Mat, g: &SpdMat) -> Mat {
    if g.is_identity() {
        m.clone()
    } else {
        g.sqrt() * m * g.inv_sqrt()
    }
}

fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// `E[Z₂ ⊗ Z₁′]` together with its factors.
///
/// Row and column sketches are drawn independently, so the expectation
/// factors as `E[Z₂] ⊗ E[Z₁′]`. Each factor is an exact weighted sum when its
/// side is discrete and a Monte Carlo average otherwise.
#[derive(Clone, Debug)]
pub struct ExpectedProjector {
    /// `E[Z₂ ⊗ Z₁′]` (`mn × mn`).
    pub e: Mat,
    /// `(I ⊗ G^{1/2}) E (I ⊗ G^{-1/2}) = E[Z₂] ⊗ E[Ẑ₁]`, symmetric.
    pub e_hat: Mat,
    pub z1p: Mat,
    pub z1_hat: Mat,
    pub z2: Mat,
    pub exact: bool,
    pub trials: usize,
    /// Delta-method standard error of `λ_min(e_hat)`; zero when exact.
    pub lambda_min_stderr: f64,
}

enum Side {
    Exact(Mat),
    Sampled,
}

/// Computes [`ExpectedProjector`] for `spec` on `(A, B)` with weight `G`.
///
/// `mc_trials` is used only when a side is continuous and must then be at
/// least [`MIN_MC_TRIALS`].
pub fn expected_projector<R: Rng + Clone>(
    spec: &SketchSpec,
    a: &Mat,
    b: &Mat,
    g: &SpdMat,
    mc_trials: usize,
    rng: &mut R,
) -> Result<ExpectedProjector> {
    let (m, n) = (a.ncols(), b.nrows());
    check_cap(m, n)?;
    if g.dim() != m {
        return Err(Error::Dimension("weight does not match A".into()));
    }
    let sampler = Sampler::new(spec, a, b)?;
    let left = match sampler.row_support() {
        Some(support) => {
            let mut acc = Mat::zeros(m, m);
            for (w, s) in &support {
                acc += projector_z1p(a, g, s)? * *w;
            }
            Side::Exact(acc)
        }
        None => Side::Sampled,
    };
    let right = match sampler.col_support() {
        Some(support) => {
            let mut acc = Mat::zeros(n, n);
            for (w, p) in &support {
                acc += projector_z2(b, p)? * *w;
            }
            Side::Exact(acc)
        }
        None => Side::Sampled,
    };
    let exact = matches!((&left, &right), (Side::Exact(_), Side::Exact(_)));
    if !exact && mc_trials < MIN_MC_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "continuous sketches need at least {MIN_MC_TRIALS} Monte Carlo trials"
        )));
    }
    let trials = if exact { 0 } else { mc_trials };

    // First pass: Monte Carlo means. The RNG state is replayed for the
    // second pass so per-draw influence terms can be formed without storage.
    let replay = rng.clone();
    let (mut z1_sum, mut z2_sum) = (Mat::zeros(m, m), Mat::zeros(n, n));
    for _ in 0..trials {
        let draw = sampler.draw(rng);
        if matches!(left, Side::Sampled) {
            z1_sum += projector_z1p(a, g, &draw.s)?;
        }
        if matches!(right, Side::Sampled) {
            z2_sum += projector_z2(b, &draw.p)?;
        }
    }
    let z1p = match &left {
        Side::Exact(z) => z.clone(),
        Side::Sampled => z1_sum / trials as f64,
    };
    let z2 = match &right {
        Side::Exact(z) => z.clone(),
        Side::Sampled => z2_sum / trials as f64,
    };
    let z1_hat = symmetrize(&to_hat(&z1p, g));
    let z2 = symmetrize(&z2);
    let e = kron(&z2, &z1p)?;
    let e_hat = kron(&z2, &z1_hat)?;

    let mut lambda_min_stderr = 0.0;
    if !exact {
        // λ_min perturbs as vᵀ δE v; with v = vec(V) that is ⟨V, δẐ₁ V Z̄₂⟩ + ⟨V, Z̄₁ V δZ₂⟩.
        let eig = SymmetricEigen::new(e_hat.clone());
        let k = eig.eigenvalues.imin();
        let v = unvec(&eig.eigenvectors.column(k).into_owned(), m, n)?;
        let mut replay = replay;
        let mut infl = Vec::with_capacity(trials);
        for _ in 0..trials {
            let draw = sampler.draw(&mut replay);
            let z1t = match &left {
                Side::Exact(_) => z1_hat.clone(),
                Side::Sampled => to_hat(&projector_z1p(a, g, &draw.s)?, g),
            };
            let z2t = match &right {
                Side::Exact(_) => z2.clone(),
                Side::Sampled => projector_z2(b, &draw.p)?,
            };
            let f = v.dot(&(&z1t * &v * &z2)) + v.dot(&(&z1_hat * &v * &z2t));
            infl.push(f);
        }
        let mean = infl.iter().sum::<f64>() / trials as f64;
        let var = infl.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
        lambda_min_stderr = (var / trials as f64).sqrt();
    }

    Ok(ExpectedProjector {
        e,
        e_hat,
        z1p,
        z1_hat,
        z2,
        exact,
        trials,
        lambda_min_stderr,
    })
}

/// `ρ = 1 − λ_min(E)` for a symmetric `E` (the `G = I` case).
pub fn rate_rho(e: &Mat) -> Result<f64> {
    if !is_symmetric(e, RATE_SYMMETRY_TOL) {
        return Err(Error::InvalidArgument(
            "rate needs a symmetric expected projector; use rate_rho_weighted for G ≠ I".into(),
        ));
    }
    let (lo, _) = sym_eig_extremes(&symmetrize(e))?;
    Ok(1.0 - lo)
}

/// `ρ` for a general weight: the eigenvalues of `E[Z₂ ⊗ Z₁′]` are those of
/// its symmetrization `(I ⊗ G^{1/2}) E (I ⊗ G^{-1/2})`.
pub fn rate_rho_weighted(e: &Mat, g: &SpdMat) -> Result<f64> {
    let m = g.dim();
    if !e.nrows().is_multiple_of(m) || !e.is_square() {
        return Err(Error::Dimension(
            "E is not (n·m)×(n·m) for this weight".into(),
        ));
    }
    let n = e.nrows() / m;
    let id = Mat::identity(n, n);
    let e_hat = kron(&id, &g.sqrt())? * e * kron(&id, &g.inv_sqrt())?;
    rate_rho(&symmetrize(&e_hat))
}

/// `ρσ = 1 − σ²`, with `σ` the smallest nonzero singular value of `E`.
pub fn rate_rho_sigma(e: &Mat) -> Result<f64> {
    Ok(match crate::linalg::min_nonzero_singular(e)? {
        Some(s) => 1.0 - s * s,
        None => 1.0,
    })
}

/// Distribution summary of the per-draw rank `d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DStats {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    pub exact: bool,
}

/// `E[d]` (exact for discrete sides, Monte Carlo over `trials` draws otherwise).
pub fn d_stats<R: Rng>(
    spec: &SketchSpec,
    a: &Mat,
    b: &Mat,
    trials: usize,
    rng: &mut R,
) -> Result<DStats> {
    let sampler = Sampler::new(spec, a, b)?;
    let side_ranks = |support: Option<Vec<(f64, Mat)>>,
                      rank: &dyn Fn(&Mat) -> Result<usize>|
     -> Result<Option<Vec<(f64, usize)>>> {
        support
            .map(|s| s.iter().map(|(w, m)| Ok((*w, rank(m)?))).collect())
            .transpose()
    };
    let left = side_ranks(sampler.row_support(), &|s| {
        numerical_rank(&(s.transpose() * a), None)
    })?;
    let right = side_ranks(sampler.col_support(), &|p| numerical_rank(&(b * p), None))?;
    if let (Some(l), Some(r)) = (&left, &right) {
        let mean = l.iter().map(|(w, k)| w * *k as f64).sum::<f64>()
            * r.iter().map(|(w, k)| w * *k as f64).sum::<f64>();
        let min =
            l.iter().map(|x| x.1).min().unwrap_or(0) * r.iter().map(|x| x.1).min().unwrap_or(0);
        let max =
            l.iter().map(|x| x.1).max().unwrap_or(0) * r.iter().map(|x| x.1).max().unwrap_or(0);
        return Ok(DStats {
            mean,
            min,
            max,
            exact: true,
        });
    }
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "continuous sketches need trials > 0".into(),
        ));
    }
    let (mut sum, mut min, mut max) = (0usize, usize::MAX, 0usize);
    for _ in 0..trials {
        let d = sampler.draw(rng);
        let k = draw_rank(a, b, &d.s, &d.p)?;
        sum += k;
        min = min.min(k);
        max = max.max(k);
    }
    Ok(DStats {
        mean: sum as f64 / trials as f64,
        min,
        max,
        exact: false,
    })
}

/// `1 − E[d]/mn`.
pub fn lower_bound_rho<R: Rng>(
    spec: &SketchSpec,
    a: &Mat,
    b: &Mat,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let d = d_stats(spec, a, b, trials, rng)?;
    Ok(1.0 - d.mean / (a.ncols() * b.nrows()) as f64)
}

/// Smallest eigenvalue of `MᵀM` restricted to its range, i.e. the smallest
/// nonzero eigenvalue; equals `λ_min(MMᵀ)` when `M` has full row rank.
fn min_nonzero_gram_eig(m: &Mat) -> Result<f64> {
    let s = crate::linalg::min_nonzero_singular(m)?
        .ok_or_else(|| Error::RankDeficient("stacked sketch is zero".into()))?;
    Ok(s * s)
}

/// Closed-form bound for complete discrete pairs sampled with the
/// convenient probabilities:
/// `1 − λ(𝐒ᵀAAᵀ𝐒) λ(𝐏ᵀBᵀB𝐏) / (‖Aᵀ𝐒‖²_F ‖B𝐏‖²_F)`, where `λ(·)` is the
/// smallest eigenvalue on the range (the `m` resp. `n` nonzero eigenvalues).
/// For coordinate lists this is the GRK bound with `λ_min(AᵀA) λ_min(BBᵀ)`.
pub fn rate_bound_convenient(a: &Mat, b: &Mat, s_list: &[Mat], p_list: &[Mat]) -> Result<f64> {
    let spec = SketchSpec::CompleteDiscrete {
        s_list: s_list.to_vec(),
        s_probs: convenient_probabilities(a, s_list)?,
        p_list: p_list.to_vec(),
        p_probs: convenient_probabilities_cols(b, p_list)?,
    };
    let report = validate_complete_discrete(&spec, a, b);
    if !report.passed() {
        return Err(Error::RankDeficient(format!(
            "not a complete discrete sampling pair: {}",
            report.failures().join(", ")
        )));
    }
    let at_s = a.transpose() * stack_columns(s_list)?;
    let bp = b * stack_columns(p_list)?;
    let num = min_nonzero_gram_eig(&at_s)? * min_nonzero_gram_eig(&bp)?;
    Ok(1.0 - num / (at_s.norm_squared() * bp.norm_squared()))
}

fn gauss_omega_ratio(omega: &Mat) -> Result<f64> {
    let (lo, _) = sym_eig_extremes(omega)?;
    if !(lo > 0.0) {
        return Err(Error::RankDeficient("Ω is not positive definite".into()));
    }
    Ok(lo / omega.trace())
}

fn omega1(a: &Mat, sigma1: &SpdMat) -> Result<Mat> {
    if sigma1.dim() != a.nrows() {
        return Err(Error::Dimension("Σ₁ does not match A".into()));
    }
    if numerical_rank(a, None)? < a.ncols() {
        return Err(Error::RankDeficient("A must have full column rank".into()));
    }
    Ok(symmetrize(&(a.transpose() * sigma1.as_mat() * a)))
}

fn omega2(b: &Mat, sigma2: &SpdMat) -> Result<Mat> {
    if sigma2.dim() != b.ncols() {
        return Err(Error::Dimension("Σ₂ does not match B".into()));
    }
    if numerical_rank(b, None)? < b.nrows() {
        return Err(Error::RankDeficient("B must have full row rank".into()));
    }
    Ok(symmetrize(&(b * sigma2.as_mat() * b.transpose())))
}

/// Gaussian bound `1 − 4 λ_min(Ω₂ ⊗ Ω₁) / (π² Tr Ω₁ Tr Ω₂)` with
/// `Ω₁ = AᵀΣ₁A`, `Ω₂ = BΣ₂Bᵀ`.
pub fn rate_bound_gauss(a: &Mat, b: &Mat, sigma1: &SpdMat, sigma2: &SpdMat) -> Result<f64> {
    let r1 = gauss_omega_ratio(&omega1(a, sigma1)?)?;
    let r2 = gauss_omega_ratio(&omega2(b, sigma2)?)?;
    Ok(1.0 - 4.0 / (PI * PI) * r1 * r2)
}

/// Row-side Gaussian with `P = I` (B full row rank): `1 − 2 λ_min(Ω₁) / (π Tr Ω₁)`.
pub fn rate_bound_gauss_row(a: &Mat, b: &Mat, sigma1: &SpdMat) -> Result<f64> {
    if numerical_rank(b, None)? < b.nrows() {
        return Err(Error::RankDeficient("B must have full row rank".into()));
    }
    Ok(1.0 - 2.0 / PI * gauss_omega_ratio(&omega1(a, sigma1)?)?)
}

/// Column-side Gaussian with `S = I` (A full column rank): `1 − 2 λ_min(Ω₂) / (π Tr Ω₂)`.
pub fn rate_bound_gauss_col(a: &Mat, b: &Mat, sigma2: &SpdMat) -> Result<f64> {
    if numerical_rank(a, None)? < a.ncols() {
        return Err(Error::RankDeficient("A must have full column rank".into()));
    }
    Ok(1.0 - 2.0 / PI * gauss_omega_ratio(&omega2(b, sigma2)?)?)
}

/// The weight under which a sketch's closed-form analysis is stated:
/// `A` for diagonal sampling, `AᵀA` for column-of-A sampling, `I` otherwise.
pub fn implied_weight(spec: &SketchSpec, a: &Mat) -> Result<SpdMat> {
    match spec {
        SketchSpec::DiagonalWeighted => SpdMat::new(a.clone()),
        SketchSpec::ColumnOfA => SpdMat::new(a.transpose() * a)
            .map_err(|_| Error::RankDeficient("A must have full column rank".into())),
        _ => Ok(SpdMat::identity(a.ncols())),
    }
}

fn probs_match(given: &[f64], wanted: &[f64]) -> bool {
    given.len() == wanted.len()
        && given
            .iter()
            .zip(wanted)
            .all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// The method-specific closed-form bound for `spec`, when one applies.
pub fn closed_form_bound(spec: &SketchSpec, a: &Mat, b: &Mat) -> Result<Option<f64>> {
    let (m, n) = (a.ncols(), b.nrows());
    let full_col = |x: &Mat| numerical_rank(x, None).map(|r| r == x.ncols());
    let full_row = |x: &Mat| numerical_rank(x, None).map(|r| r == x.nrows());
    let coords = |d: usize| {
        (0..d)
            .map(|i| crate::linalg::identity_columns(d, &[i]))
            .collect::<Vec<_>>()
    };
    Ok(match spec {
        SketchSpec::CoordinatePair => {
            rate_bound_convenient(a, b, &coords(a.nrows()), &coords(b.ncols())).ok()
        }
        SketchSpec::IdentityPair => rate_bound_convenient(
            a,
            b,
            &[Mat::identity(a.nrows(), a.nrows())],
            &[Mat::identity(b.ncols(), b.ncols())],
        )
        .ok(),
        SketchSpec::RowOnly if full_row(b)? => {
            let (lo, _) = sym_eig_extremes(&(a.transpose() * a))?;
            Some(1.0 - lo / a.norm_squared())
        }
        SketchSpec::ColOnly if full_col(a)? => {
            let (lo, _) = sym_eig_extremes(&(b * b.transpose()))?;
            Some(1.0 - lo / b.norm_squared())
        }
        SketchSpec::CompleteDiscrete {
            s_list,
            s_probs,
            p_list,
            p_probs,
        } => {
            let conv = convenient_probabilities(a, s_list)
                .ok()
                .zip(convenient_probabilities_cols(b, p_list).ok());
            match conv {
                Some((c1, c2)) if probs_match(s_probs, &c1) && probs_match(p_probs, &c2) => {
                    rate_bound_convenient(a, b, s_list, p_list).ok()
                }
                _ => None,
            }
        }
        SketchSpec::BlockPartition { tau1, tau2 } => {
            let rows = crate::samplers::block_partition(a.nrows(), *tau1)?;
            let cols = crate::samplers::block_partition(b.ncols(), *tau2)?;
            let s_list: Vec<Mat> = rows
                .iter()
                .map(|r| crate::linalg::identity_columns(a.nrows(), r))
                .collect();
            let p_list: Vec<Mat> = cols
                .iter()
                .map(|c| crate::linalg::identity_columns(b.ncols(), c))
                .collect();
            let uniform1 = vec![1.0 / s_list.len() as f64; s_list.len()];
            let uniform2 = vec![1.0 / p_list.len() as f64; p_list.len()];
            let spec = SketchSpec::CompleteDiscrete {
                s_list,
                s_probs: uniform1,
                p_list,
                p_probs: uniform2,
            };
            return closed_form_bound(&spec, a, b);
        }
        SketchSpec::Gaussian { sigma1, sigma2 } => rate_bound_gauss(a, b, sigma1, sigma2).ok(),
        SketchSpec::GaussianRow { sigma1 } => rate_bound_gauss_row(a, b, sigma1).ok(),
        SketchSpec::GaussianCol { sigma2 } => rate_bound_gauss_col(a, b, sigma2).ok(),
        SketchSpec::DiagonalWeighted if full_row(b)? => {
            let (lo, _) = sym_eig_extremes(a)?;
            Some(1.0 - lo / a.trace())
        }
        SketchSpec::ColumnOfA if full_row(b)? && full_col(a)? => {
            let (lo, _) = sym_eig_extremes(&(a.transpose() * a))?;
            Some(1.0 - lo / a.norm_squared())
        }
        _ => {
            let _ = (m, n);
            None
        }
    })
}

/// Everything the oracle knows about one sketch distribution on one instance.
#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub sketch: String,
    pub rho_exact: f64,
    /// Standard error of `rho_exact` (zero for exact enumeration).
    pub rho_stderr: f64,
    pub rho_sigma: f64,
    pub lower_bound: f64,
    pub closed_form_bound: Option<f64>,
    pub d_stats: DStats,
    pub exact: bool,
    pub mc_trials: usize,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "serialize_opt_mat"
    )]
    pub e_matrix: Option<Mat>,
}

fn serialize_opt_mat<S: serde::Serializer>(
    m: &Option<Mat>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match m {
        Some(m) => serde_rows::serialize(m, s),
        None => s.serialize_none(),
    }
}

/// Builds a [`RateReport`]. The closed-form bound is included only when `G`
/// is the weight the bound is stated for (see [`implied_weight`]).
pub fn rate_report<R: Rng + Clone>(
    spec: &SketchSpec,
    a: &Mat,
    b: &Mat,
    g: &SpdMat,
    mc_trials: usize,
    include_e: bool,
    rng: &mut R,
) -> Result<RateReport> {
    let ep = expected_projector(spec, a, b, g, mc_trials, rng)?;
    let rho_exact = rate_rho(&ep.e_hat)?;
    let rho_sigma = rate_rho_sigma(&ep.e_hat)?;
    let d = d_stats(spec, a, b, mc_trials.max(1), rng)?;
    let lower_bound = 1.0 - d.mean / (a.ncols() * b.nrows()) as f64;
    let bound = if implied_weight(spec, a)
        .is_ok_and(|w| (w.as_mat() - g.as_mat()).norm() <= 1e-12 * (1.0 + g.as_mat().norm()))
    {
        closed_form_bound(spec, a, b)?
    } else {
        None
    };
    Ok(RateReport {
        sketch: spec.id().into(),
        rho_exact,
        rho_stderr: ep.lambda_min_stderr,
        rho_sigma,
        lower_bound,
        closed_form_bound: bound,
        d_stats: d,
        exact: ep.exact,
        mc_trials: ep.trials,
        e_matrix: include_e.then_some(ep.e),
    })
}

/// Solves `min ½‖X′ − X‖²_{F(G)}` subject to `SᵀAX′BP = SᵀCP` by vectorizing
/// and solving the KKT system with a minimum-norm least-squares solve.
/// Independent of the closed form used by the solvers.
pub fn brute_force_project(x: &Mat, eq: &MatrixEquation, s: &Mat, p: &Mat) -> Result<Mat> {
    let (m, n) = (eq.m(), eq.n());
    check_cap(m, n)?;
    ensure_shape(x, m, n, "X")?;
    let sta = s.transpose() * eq.a(); // k×m
    let ptbt = p.transpose() * eq.b().transpose(); // l×n
    let mcon = kron(&ptbt, &sta)?; // kl × mn
    let rhs_c = vec(&(s.transpose() * eq.c() * p));
    let h = kron(&Mat::identity(n, n), eq.g().as_mat())?;
    let k = mcon.nrows();
    let dim = m * n + k;
    if dim > KRON_CAP {
        return Err(Error::KronCap {
            rows: dim,
            cols: dim,
            cap: KRON_CAP,
        });
    }
    let mut kkt = Mat::zeros(dim, dim);
    kkt.view_mut((0, 0), (m * n, m * n)).copy_from(&h);
    kkt.view_mut((0, m * n), (m * n, k))
        .copy_from(&mcon.transpose());
    kkt.view_mut((m * n, 0), (k, m * n)).copy_from(&mcon);
    let mut rhs = crate::linalg::Vector::zeros(dim);
    rhs.rows_mut(0, m * n).copy_from(&(&h * vec(x)));
    rhs.rows_mut(m * n, k).copy_from(&rhs_c);
    let sol = pseudoinverse(&kkt, None)? * rhs;
    unvec(&sol.rows(0, m * n).into_owned(), m, n)
}

/// Residuals of the projector identities for one draw.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectorLaws {
    /// `‖K² − K‖` for `K = Z₂ ⊗ Z₁′`.
    pub idempotency: f64,
    /// `‖(I⊗G)K − ((I⊗G)K)ᵀ‖`.
    pub self_adjoint: f64,
    /// `|Tr K − d|`.
    pub trace_gap: f64,
    /// `‖Z̃₁ − Z̃₁G⁻¹Z̃₁‖ + ‖Z̃₁ − Z̃₁ᵀ‖` with `Z̃₁ = GZ₁′`.
    pub tilde_identities: f64,
    /// `‖Ẑ₁² − Ẑ₁‖ + ‖Ẑ₁ − Ẑ₁ᵀ‖` with `Ẑ₁ = G^{-1/2}Z̃₁G^{-1/2}`.
    pub hat_identities: f64,
    /// `‖Z₂² − Z₂‖ + ‖Z₂ − Z₂ᵀ‖`.
    pub z2_identities: f64,
    pub d: usize,
}

impl ProjectorLaws {
    pub fn max_residual(&self) -> f64 {
        [
            self.idempotency,
            self.self_adjoint,
            self.tilde_identities,
            self.hat_identities,
            self.z2_identities,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates the projector identities for one sketch pair. Residuals are
/// relative to the scale of the matrices involved.
pub fn projector_laws(a: &Mat, b: &Mat, g: &SpdMat, s: &Mat, p: &Mat) -> Result<ProjectorLaws> {
    let (m, n) = (a.ncols(), b.nrows());
    check_cap(m, n)?;
    let z1p = projector_z1p(a, g, s)?;
    let z2 = projector_z2(b, p)?;
    let k = kron(&z2, &z1p)?;
    let ig = kron(&Mat::identity(n, n), g.as_mat())?;
    let rel = |x: f64, scale: f64| x / scale.max(1.0);
    let idempotency = rel((&k * &k - &k).norm(), k.norm());
    let igk = &ig * &k;
    let self_adjoint = rel((&igk - igk.transpose()).norm(), igk.norm());
    let d = draw_rank(a, b, s, p)?;
    let trace_gap = (k.trace() - d as f64).abs();
    let zt = g.as_mat() * &z1p;
    let tilde_identities = rel(
        (&zt - &zt * g.solve(&zt)).norm() + (&zt - zt.transpose()).norm(),
        zt.norm(),
    );
    let zh = g.inv_sqrt() * &zt * g.inv_sqrt();
    let hat_identities = rel(
        (&zh * &zh - &zh).norm() + (&zh - zh.transpose()).norm(),
        zh.norm(),
    );
    let z2_identities = rel(
        (&z2 * &z2 - &z2).norm() + (&z2 - z2.transpose()).norm(),
        z2.norm(),
    );
    Ok(ProjectorLaws {
        idempotency,
        self_adjoint,
        trace_gap,
        tilde_identities,
        hat_identities,
        z2_identities,
        d,
    })
}

/// Monte Carlo check of `E[ξξᵀ/ξᵀξ] ⪰ (2/π) Ω / Tr Ω` for `ξ ~ N(0, Ω)`.
#[derive(Clone, Debug, Serialize)]
pub struct GaussianMomentReport {
    #[serde(with = "serde_rows")]
    pub estimate: Mat,
    /// `λ_min(Ê − (2/π) Ω / Tr Ω)`.
    pub margin: f64,
    pub stderr: f64,
    pub trials: usize,
    pub passed: bool,
}

pub fn check_gaussian_moments<R: Rng>(
    omega: &SpdMat,
    trials: usize,
    rng: &mut R,
) -> Result<GaussianMomentReport> {
    let dim = omega.dim();
    if dim > 8 {
        return Err(Error::InvalidArgument(
            "Gaussian moment check supports dim ≤ 8".into(),
        ));
    }
    if trials < 10_000 {
        return Err(Error::InvalidArgument(
            "Gaussian moment check needs at least 10⁴ trials".into(),
        ));
    }
    let l = omega.cholesky_factor();
    let xs: Vec<_> = (0..trials)
        .map(|_| &l * crate::linalg::standard_normal_vector(dim, rng))
        .collect();
    let mut est = Mat::zeros(dim, dim);
    for x in &xs {
        let nn = x.norm_squared();
        if nn > 0.0 {
            est.ger(1.0 / nn, x, x, 1.0);
        }
    }
    est /= trials as f64;
    let target = omega.as_mat() * (2.0 / PI / omega.as_mat().trace());
    let diff = symmetrize(&(&est - target));
    let eig = SymmetricEigen::new(diff);
    let k = eig.eigenvalues.imin();
    let margin = eig.eigenvalues[k];
    let v = eig.eigenvectors.column(k);
    let f: Vec<f64> = xs
        .iter()
        .map(|x| {
            let nn = x.norm_squared();
            if nn > 0.0 {
                v.dot(x).powi(2) / nn
            } else {
                0.0
            }
        })
        .collect();
    let mean = f.iter().sum::<f64>() / trials as f64;
    let var = f.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
    let stderr = (var / trials as f64).sqrt();
    Ok(GaussianMomentReport {
        estimate: est,
        margin,
        stderr,
        trials,
        passed: margin >= -3.0 * stderr,
    })
}

/// One numerical check with its margin (nonnegative means it holds).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub instance: usize,
    pub margin: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AppendixReport {
    pub checks: Vec<InequalityCheck>,
    /// Instances whose expected projector was singular in the
    /// positive-definiteness check.
    pub singular_cases: usize,
}

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn worst_margin(&self, name: &str) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.name == name)
            .map(|c| c.margin)
            .reduce(f64::min)
    }
}

/// Tolerance on the appendix margins.
pub const APPENDIX_TOL: f64 = 1e-10;

fn random_psd<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> Mat {
    let f = standard_normal(dim, rank, rng);
    &f * f.transpose()
}

fn lambda_min(m: &Mat) -> Result<f64> {
    Ok(sym_eig_extremes(&symmetrize(m))?.0)
}

/// Random-instance checks of three supporting facts:
///
/// - `second-moment`: `E[H²] ⪰ E[H]ᵀE[H]` for a finite distribution of SPD `H`;
/// - `kron-monotone`: `λ_min(A₂ᵀ⊗B₂) ≥ λ_min(A₁ᵀ⊗B₁)` when `A₂ ⪰ A₁ ⪰ 0`, `B₂ ⪰ B₁ ⪰ 0`;
/// - `pd-iff-full-rank`: `E[Z₂ ⊗ Z̃₁]` is positive definite exactly when the
///   stacked sketched operator over the support has full column rank.
///
/// Instance `i` uses its own substream of `seed`, so the report is reproducible.
pub fn check_appendix_inequalities(
    dim: usize,
    instances: usize,
    seed: u64,
) -> Result<AppendixReport> {
    if !(1..=8).contains(&dim) {
        return Err(Error::InvalidArgument(
            "appendix checks support 1 ≤ dim ≤ 8".into(),
        ));
    }
    let mut report = AppendixReport::default();
    for inst in 0..instances {
        let rng = &mut substream(seed, inst as u64);
        let d = rng.random_range(1..=dim);

        // Second moment of a random SPD-valued variable with 2-4 atoms.
        let atoms = rng.random_range(2..=4);
        let hs: Vec<Mat> = (0..atoms)
            .map(|_| random_spd(d, 0.1, 5.0, rng).map(|s| s.as_mat().clone()))
            .collect::<Result<_>>()?;
        let mut w: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let (mut eh, mut eh2) = (Mat::zeros(d, d), Mat::zeros(d, d));
        for (h, p) in hs.iter().zip(&w) {
            eh += h * *p;
            eh2 += h * h * *p;
        }
        let margin = lambda_min(&(eh2 - eh.transpose() * &eh))?;
        report.checks.push(InequalityCheck {
            name: "second-moment".into(),
            instance: inst,
            margin,
            passed: margin >= -APPENDIX_TOL,
        });

        // Kronecker eigenvalue monotonicity; the smaller pair may be singular.
        let d2 = rng.random_range(1..=dim);
        let a1 = random_psd(d, rng.random_range(0..=d), rng);
        let a2 = &a1 + random_psd(d, rng.random_range(0..=d), rng);
        let b1 = random_psd(d2, rng.random_range(0..=d2), rng);
        let b2 = &b1 + random_psd(d2, rng.random_range(0..=d2), rng);
        let scale = 1.0 + a2.norm() * b2.norm();
        let margin = (lambda_min(&kron(&a2.transpose(), &b2)?)?
            - lambda_min(&kron(&a1.transpose(), &b1)?)?)
            / scale;
        report.checks.push(InequalityCheck {
            name: "kron-monotone".into(),
            instance: inst,
            margin,
            passed: margin >= -APPENDIX_TOL,
        });

        // Positive definiteness versus stacked full column rank.
        let (agree, pd) = pd_rank_agreement(dim, rng)?;
        report.singular_cases += usize::from(!pd);
        report.checks.push(InequalityCheck {
            name: "pd-iff-full-rank".into(),
            instance: inst,
            margin: if agree { 0.0 } else { -1.0 },
            passed: agree,
        });
    }
    Ok(report)
}

/// Builds a random discrete sketch distribution (sometimes deliberately
/// rank deficient) and compares the two characterizations. Returns
/// `(agree, positive_definite)`.
fn pd_rank_agreement<R: Rng>(dim: usize, rng: &mut R) -> Result<(bool, bool)> {
    let side = |lim: usize, rng: &mut R| rng.random_range(1..=lim.clamp(1, 3));
    let (p, m, n, q) = (
        side(dim, rng),
        side(dim, rng),
        side(dim, rng),
        side(dim, rng),
    );
    let mut a = standard_normal(p, m, rng);
    let b = standard_normal(n, q, rng);
    if rng.random_bool(0.25) {
        // Kill a column so Aᵀ𝐒 loses row rank.
        let j = rng.random_range(0..m);
        a.column_mut(j).fill(0.0);
    }
    let g = random_spd(m, 0.5, 2.0, rng)?;
    let members = |rows: usize, rng: &mut R| -> Vec<Mat> {
        let count = rng.random_range(1..=3);
        (0..count)
            .map(|_| standard_normal(rows, rng.random_range(1..=rows), rng))
            .collect()
    };
    let s_list = members(p, rng);
    let p_list = members(q, rng);
    let probs = |k: usize| vec![1.0 / k as f64; k];
    let spec = SketchSpec::CompleteDiscrete {
        s_probs: probs(s_list.len()),
        p_probs: probs(p_list.len()),
        s_list: s_list.clone(),
        p_list: p_list.clone(),
    };
    // E[Z₂ ⊗ Z̃₁] with Z̃₁ = GZ₁′, by brute double sum over the support.
    let mut e = Mat::zeros(m * n, m * n);
    let w = 1.0 / (s_list.len() * p_list.len()) as f64;
    for s in &s_list {
        let zt = g.as_mat() * projector_z1p(&a, &g, s)?;
        for pm in &p_list {
            e += kron(&projector_z2(&b, pm)?, &zt)? * w;
        }
    }
    let _ = spec;
    let e = symmetrize(&e);
    let scale = e.norm().max(1e-300);
    let pd = lambda_min(&e)? > 1e-9 * scale;

    let blocks: Vec<Mat> = s_list
        .iter()
        .flat_map(|s| p_list.iter().map(move |pm| (s, pm)))
        .map(|(s, pm)| kron(&(&b * pm).transpose(), &(s.transpose() * &a)))
        .collect::<Result<_>>()?;
    let rows: usize = blocks.iter().map(Mat::nrows).sum();
    let mut stacked = Mat::zeros(rows, m * n);
    let mut r0 = 0;
    for blk in &blocks {
        stacked.view_mut((r0, 0), blk.shape()).copy_from(blk);
        r0 += blk.nrows();
    }
    let full = numerical_rank(&stacked, Some(1e-9))? == m * n;
    Ok((pd == full, pd))
}

/// Per-iteration error statistics over independent runs.
#[derive(Clone, Debug)]
pub struct Trajectories {
    /// `errors[t][k] = ‖X_t^k − X*‖²_{F(W)}` with `W` the method's weight.
    pub errors: Vec<Vec<f64>>,
    /// `mean_iterate[k]`, the average of `X^k` over runs.
    pub mean_iterate: Vec<Mat>,
}

impl Trajectories {
    pub fn trials(&self) -> usize {
        self.errors.len()
    }

    pub fn mean_error(&self, k: usize) -> f64 {
        self.errors.iter().map(|e| e[k]).sum::<f64>() / self.trials() as f64
    }

    /// `M_{k+1} / M_k` with a delta-method standard error.
    pub fn step_ratio(&self, k: usize) -> (f64, f64) {
        let nt = self.trials() as f64;
        let (mk, mk1) = (self.mean_error(k), self.mean_error(k + 1));
        let r = mk1 / mk;
        let dev: Vec<f64> = self.errors.iter().map(|e| e[k + 1] - r * e[k]).collect();
        let mean = dev.iter().sum::<f64>() / nt;
        let var = dev.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nt - 1.0);
        (r, (var / nt).sqrt() / mk)
    }

    /// Geometric-mean rate `(M_K / M_0)^{1/K}` with a delta-method standard error.
    pub fn empirical_rate(&self, k: usize) -> (f64, f64) {
        let nt = self.trials() as f64;
        let (m0, mk) = (self.mean_error(0), self.mean_error(k));
        let mean = mk;
        let var = self
            .errors
            .iter()
            .map(|e| (e[k] - mean).powi(2))
            .sum::<f64>()
            / (nt - 1.0);
        let ratio = mk / m0;
        let se_ratio = (var / nt).sqrt() / m0;
        let rate = ratio.powf(1.0 / k as f64);
        (rate, rate / (k as f64 * ratio) * se_ratio)
    }
}

/// Runs `trials` independent `iters`-step trajectories from `x0`, trial `t`
/// on substream `t` of `seed`. Trials run in parallel; results do not depend
/// on the thread count.
pub fn simulate_trajectories(
    eq: &MatrixEquation,
    method: Method,
    spec: &SketchSpec,
    x0: &Mat,
    iters: usize,
    trials: usize,
    seed: u64,
) -> Result<Trajectories> {
    let xs = eq
        .x_star()
        .ok_or_else(|| {
            Error::InvalidArgument("trajectory statistics need a known solution".into())
        })?
        .clone();
    let solver = Solver::new(eq, method, spec)?;
    let runs: Vec<(Vec<f64>, Vec<Mat>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, t as u64);
            let mut x = x0.clone();
            let mut errs = Vec::with_capacity(iters + 1);
            let mut path = Vec::with_capacity(iters + 1);
            for k in 0..=iters {
                if k > 0 {
                    x = solver.step(&x, &mut rng)?;
                }
                errs.push(weighted_frob_sq(&(&x - &xs), solver.weight())?);
                path.push(x.clone());
            }
            Ok((errs, path))
        })
        .collect::<Result<_>>()?;
    let mut mean_iterate = vec![Mat::zeros(eq.m(), eq.n()); iters + 1];
    for (_, path) in &runs {
        for (acc, x) in mean_iterate.iter_mut().zip(path) {
            *acc += x;
        }
    }
    for acc in &mut mean_iterate {
        *acc /= trials as f64;
    }
    Ok(Trajectories {
        errors: runs.into_iter().map(|(e, _)| e).collect(),
        mean_iterate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity_columns;
    use crate::rng::seeded;
    use crate::samplers::{col_probabilities, row_probabilities};
    use crate::solvers::{general_step, grk_step};
    use nalgebra::dmatrix;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Brute double sum Σ_i Σ_j p_i p_j (Z₂(P_j) ⊗ Z₁′(S_i)); independent of the factored path.
    fn brute_expectation(spec: &SketchSpec, a: &Mat, b: &Mat, g: &SpdMat) -> Mat {
        let sampler = Sampler::new(spec, a, b).unwrap();
        let (m, n) = (a.ncols(), b.nrows());
        let mut e = Mat::zeros(m * n, m * n);
        for (wi, s) in sampler.row_support().unwrap() {
            for (wj, p) in sampler.col_support().unwrap() {
                let k = projector_z2(b, &p)
                    .unwrap()
                    .kronecker(&projector_z1p(a, g, &s).unwrap());
                e += k * (wi * wj);
            }
        }
        e
    }

    #[test]
    fn projector_examples() {
        let mut rng = seeded(1);
        let a = standard_normal(5, 3, &mut rng);
        let z = projector_z1p(&a, &SpdMat::identity(3), &Mat::identity(5, 5)).unwrap();
        assert!((z - Mat::identity(3, 3)).norm() < 1e-10);
        let z = projector_z1p(
            &Mat::identity(3, 3),
            &SpdMat::identity(3),
            &identity_columns(3, &[0]),
        )
        .unwrap();
        assert!(
            (z - identity_columns(3, &[0]) * identity_columns(3, &[0]).transpose()).norm() < 1e-15
        );
    }

    #[test]
    fn identity_coordinate_expectation() {
        let i2 = Mat::identity(2, 2);
        let ep = expected_projector(
            &SketchSpec::CoordinatePair,
            &i2,
            &i2,
            &SpdMat::identity(2),
            0,
            &mut seeded(0),
        )
        .unwrap();
        assert!(ep.exact);
        assert!((&ep.e - Mat::identity(4, 4) * 0.25).norm() < 1e-15);
        assert!(close(rate_rho(&ep.e).unwrap(), 0.75, 1e-12));
        assert!(close(rate_rho_sigma(&ep.e).unwrap(), 15.0 / 16.0, 1e-12));
        let lb = lower_bound_rho(&SketchSpec::CoordinatePair, &i2, &i2, 0, &mut seeded(0)).unwrap();
        assert!(close(lb, 0.75, 1e-15));
        assert!(close(rate_rho(&Mat::identity(3, 3)).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn coordinate_expectation_is_normalized_gram() {
        let mut rng = seeded(2);
        let a = standard_normal(4, 3, &mut rng);
        let b = standard_normal(2, 5, &mut rng);
        let ep = expected_projector(
            &SketchSpec::CoordinatePair,
            &a,
            &b,
            &SpdMat::identity(3),
            0,
            &mut rng,
        )
        .unwrap();
        assert!((&ep.z1p - a.transpose() * &a / a.norm_squared()).norm() < 1e-14);
        assert!((&ep.z2 - &b * b.transpose() / b.norm_squared()).norm() < 1e-14);
        let brute = brute_expectation(&SketchSpec::CoordinatePair, &a, &b, &SpdMat::identity(3));
        assert!((&ep.e - brute).norm() < 1e-13);
    }

    #[test]
    fn weighted_rate_matches_symmetrized() {
        let mut rng = seeded(3);
        let a = standard_normal(4, 3, &mut rng);
        let b = standard_normal(3, 4, &mut rng);
        let g = random_spd(3, 0.5, 3.0, &mut rng).unwrap();
        let spec = SketchSpec::BlockPartition { tau1: 2, tau2: 3 };
        let ep = expected_projector(&spec, &a, &b, &g, 0, &mut rng).unwrap();
        let brute = brute_expectation(&spec, &a, &b, &g);
        assert!((&ep.e - &brute).norm() < 1e-12);
        let r1 = rate_rho_weighted(&brute, &g).unwrap();
        let r2 = rate_rho(&ep.e_hat).unwrap();
        assert!(close(r1, r2, 1e-10));
        assert!(rate_rho(&brute).is_err() || g.is_identity());
    }

    #[test]
    fn rank_lower_bound_examples() {
        let mut rng = seeded(4);
        let a = standard_normal(3, 2, &mut rng);
        let b = standard_normal(2, 3, &mut rng);
        let d = d_stats(&SketchSpec::CoordinatePair, &a, &b, 0, &mut rng).unwrap();
        assert_eq!((d.min, d.max), (1, 1));
        assert!(close(
            lower_bound_rho(&SketchSpec::CoordinatePair, &a, &b, 0, &mut rng).unwrap(),
            0.75,
            1e-15
        ));
        assert!(close(
            lower_bound_rho(&SketchSpec::IdentityPair, &a, &b, 0, &mut rng).unwrap(),
            0.0,
            1e-15
        ));
    }

    #[test]
    fn convenient_bound_examples() {
        let i2 = Mat::identity(2, 2);
        let coords: Vec<Mat> = (0..2).map(|i| identity_columns(2, &[i])).collect();
        assert!(close(
            rate_bound_convenient(&i2, &i2, &coords, &coords).unwrap(),
            0.75,
            1e-15
        ));

        let mut rng = seeded(5);
        let a = standard_normal(5, 3, &mut rng);
        let b = standard_normal(2, 4, &mut rng);
        let c5: Vec<Mat> = (0..5).map(|i| identity_columns(5, &[i])).collect();
        let c4: Vec<Mat> = (0..4).map(|i| identity_columns(4, &[i])).collect();
        let (la, _) = sym_eig_extremes(&(a.transpose() * &a)).unwrap();
        let (lb, _) = sym_eig_extremes(&(&b * b.transpose())).unwrap();
        let grk = 1.0 - la * lb / (a.norm_squared() * b.norm_squared());
        let conv = rate_bound_convenient(&a, &b, &c5, &c4).unwrap();
        assert!(close(conv, grk, 1e-12));
        assert!(
            rate_bound_convenient(&a, &b, &[Mat::identity(5, 5)], &[Mat::identity(4, 4)]).is_err()
        );

        let spec = SketchSpec::CompleteDiscrete {
            s_list: c5.clone(),
            s_probs: row_probabilities(&a).unwrap(),
            p_list: c4.clone(),
            p_probs: col_probabilities(&b).unwrap(),
        };
        let ep = expected_projector(&spec, &a, &b, &SpdMat::identity(3), 0, &mut rng).unwrap();
        assert!(rate_rho(&ep.e).unwrap() <= conv + 1e-12);
    }

    #[test]
    fn gauss_bound_examples() {
        let i2 = Mat::identity(2, 2);
        let s2 = SpdMat::identity(2);
        assert!(close(
            rate_bound_gauss(&i2, &i2, &s2, &s2).unwrap(),
            1.0 - 1.0 / (PI * PI),
            1e-15
        ));
        let one = dmatrix![1.0];
        let s1 = SpdMat::identity(1);
        assert!(close(
            rate_bound_gauss(&one, &one, &s1, &s1).unwrap(),
            1.0 - 4.0 / (PI * PI),
            1e-15
        ));
        let mut rng = seeded(6);
        let a = standard_normal(4, 3, &mut rng);
        let b = standard_normal(3, 4, &mut rng);
        let sig = random_spd(4, 0.5, 2.0, &mut rng).unwrap();
        let scaled = SpdMat::new(sig.as_mat() * 7.5).unwrap();
        let id4 = SpdMat::identity(4);
        let r1 = rate_bound_gauss(&a, &b, &sig, &id4).unwrap();
        let r2 = rate_bound_gauss(&a, &b, &scaled, &id4).unwrap();
        assert!(close(r1, r2, 1e-12));
        assert!(rate_bound_gauss(&a.transpose(), &b, &SpdMat::identity(3), &id4).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let mut rng = seeded(7);
        let a = standard_normal(2, 2, &mut rng);
        let b = standard_normal(2, 2, &mut rng);
        let xs = Mat::from_element(2, 2, 1.0);
        let eq = MatrixEquation::new(a.clone(), b.clone(), &a * &xs * &b).unwrap();
        let (s, p) = (identity_columns(2, &[0]), identity_columns(2, &[0]));
        let x = standard_normal(2, 2, &mut rng);
        let bf = brute_force_project(&x, &eq, &s, &p).unwrap();
        assert!((&bf - grk_step(&x, &eq, 0, 0).unwrap()).norm() < 1e-10);
        let again = brute_force_project(&bf, &eq, &s, &p).unwrap();
        assert!((&again - &bf).norm() < 1e-10);
        let lhs = s.transpose() * &a * &bf * &b * &p;
        let rhs = s.transpose() * eq.c() * &p;
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn brute_force_matches_general_step_weighted() {
        let mut rng = seeded(8);
        for _ in 0..30 {
            let a = standard_normal(4, 3, &mut rng);
            let b = standard_normal(3, 4, &mut rng);
            let xs = standard_normal(3, 3, &mut rng);
            let g = random_spd(3, 0.3, 3.0, &mut rng).unwrap();
            let eq = MatrixEquation::new(a.clone(), b.clone(), &a * &xs * &b)
                .unwrap()
                .with_weight(g)
                .unwrap();
            let x = standard_normal(3, 3, &mut rng);
            let s = standard_normal(4, 2, &mut rng);
            let p = standard_normal(4, 2, &mut rng);
            let bf = brute_force_project(&x, &eq, &s, &p).unwrap();
            let gs = general_step(&x, &eq, &s, &p).unwrap();
            assert!((&bf - &gs).norm() <= 1e-8 * (1.0 + gs.norm()));
        }
    }

    #[test]
    fn projector_laws_hold() {
        let mut rng = seeded(9);
        for _ in 0..50 {
            let a = standard_normal(4, 3, &mut rng);
            let b = standard_normal(2, 5, &mut rng);
            let g = random_spd(3, 0.2, 5.0, &mut rng).unwrap();
            let s = standard_normal(4, rng.random_range(1..5), &mut rng);
            let p = standard_normal(5, rng.random_range(1..6), &mut rng);
            let laws = projector_laws(&a, &b, &g, &s, &p).unwrap();
            assert!(laws.max_residual() < 1e-9, "{laws:?}");
            assert!(laws.trace_gap < 1e-6);
        }
    }

    #[test]
    fn gaussian_moment_examples() {
        let mut rng = seeded(10);
        let r = check_gaussian_moments(&SpdMat::identity(1), 10_000, &mut rng).unwrap();
        assert!(r.passed && close(r.estimate[(0, 0)], 1.0, 1e-15));
        let r = check_gaussian_moments(&SpdMat::identity(2), 100_000, &mut rng).unwrap();
        assert!(r.passed);
        assert!((r.estimate - Mat::identity(2, 2) * 0.5).abs().max() < 0.01);
        let r = check_gaussian_moments(
            &SpdMat::new(dmatrix![1.0, 0.0; 0.0, 4.0]).unwrap(),
            100_000,
            &mut rng,
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
        assert!(check_gaussian_moments(&SpdMat::identity(2), 10, &mut rng).is_err());
    }

    #[test]
    fn gaussian_expected_projector_has_stderr() {
        let mut rng = seeded(11);
        let a = standard_normal(3, 3, &mut rng);
        let b = standard_normal(3, 3, &mut rng);
        let spec = SketchSpec::from_id("gauss", 3, 3, 1, 1).unwrap();
        assert!(expected_projector(&spec, &a, &b, &SpdMat::identity(3), 50, &mut rng).is_err());
        let ep = expected_projector(&spec, &a, &b, &SpdMat::identity(3), 4000, &mut rng).unwrap();
        assert!(!ep.exact && ep.lambda_min_stderr > 0.0);
        let rho = rate_rho(&ep.e).unwrap();
        let bound = rate_bound_gauss(&a, &b, &SpdMat::identity(3), &SpdMat::identity(3)).unwrap();
        assert!(rho <= bound + 3.0 * ep.lambda_min_stderr);
    }

    #[test]
    fn appendix_checks_pass() {
        let r = check_appendix_inequalities(5, 20, 77).unwrap();
        assert!(
            r.passed(),
            "{:?}",
            r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>()
        );
        let r2 = check_appendix_inequalities(5, 20, 77).unwrap();
        assert_eq!(r.checks, r2.checks);
    }

    #[test]
    fn constant_h_is_equality_case() {
        let mut rng = seeded(12);
        let h = random_spd(3, 0.5, 2.0, &mut rng).unwrap().as_mat().clone();
        let gap = lambda_min(&(&h * &h - h.transpose() * &h)).unwrap();
        assert!(gap.abs() < 1e-12);
    }

    #[test]
    fn rate_report_round_trip() {
        let i2 = Mat::identity(2, 2);
        let r = rate_report(
            &SketchSpec::CoordinatePair,
            &i2,
            &i2,
            &SpdMat::identity(2),
            0,
            true,
            &mut seeded(0),
        )
        .unwrap();
        assert!(close(r.rho_exact, 0.75, 1e-12));
        assert_eq!(r.closed_form_bound, Some(0.75));
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["e_matrix"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn implied_weights_give_known_rates() {
        let mut rng = seeded(13);
        let a = random_spd(3, 1.0, 3.0, &mut rng).unwrap().as_mat().clone();
        let b = standard_normal(2, 4, &mut rng);
        let g = implied_weight(&SketchSpec::DiagonalWeighted, &a).unwrap();
        let r = rate_report(
            &SketchSpec::DiagonalWeighted,
            &a,
            &b,
            &g,
            0,
            false,
            &mut rng,
        )
        .unwrap();
        // With P = I and B of full row rank, E[Z₂] = I and ρ is exactly 1 − λ_min(A)/Tr(A)... as a bound.
        assert!(r.rho_exact <= r.closed_form_bound.unwrap() + 1e-12);
        let a2 = standard_normal(5, 3, &mut rng);
        let g = implied_weight(&SketchSpec::ColumnOfA, &a2).unwrap();
        let r = rate_report(&SketchSpec::ColumnOfA, &a2, &b, &g, 0, false, &mut rng).unwrap();
        assert!(r.rho_exact <= r.closed_form_bound.unwrap() + 1e-12);
    }
}
