//! Dense matrix primitives shared by every other module.
//!
//! Matrices are plain [`nalgebra::DMatrix<f64>`] values (aliased as [`Mat`]);
//! everything that needs a validated symmetric positive definite weight takes
//! an [`SpdMat`]. `vec` stacks columns, so `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Upper limit on either dimension of an explicitly formed Kronecker product.
pub const KRON_CAP: usize = 4096;

/// Relative symmetry tolerance used when validating weights.
const SPD_SYMMETRY_TOL: f64 = 1e-12;

/// Relative symmetry tolerance for the symmetric eigen path.
const EIG_SYMMETRY_TOL: f64 = 1e-10;

pub fn ensure_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn ensure_shape(m: &Mat, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.nrows() == rows && m.ncols() == cols {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )))
    }
}

fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// True when `|M_ij - M_ji| <= rel_tol * max|M|` for all entries.
pub fn is_symmetric(m: &Mat, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = max_abs(m);
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

fn symmetrized(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// A validated symmetric positive definite matrix, carrying its Cholesky factor.
#[derive(Clone, Debug)]
pub struct SpdMat {
    mat: Mat,
    chol: Cholesky<f64, Dyn>,
    identity: bool,
}

impl SpdMat {
    pub fn new(mat: Mat) -> Result<Self> {
        ensure_finite(&mat, "SPD matrix")?;
        if !mat.is_square() {
            return Err(Error::NotSpd(format!(
                "matrix is {}x{}, not square",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if !is_symmetric(&mat, SPD_SYMMETRY_TOL) {
            return Err(Error::NotSpd("matrix is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(symmetrized(&mat));
        let lambda_min = eig.eigenvalues.min();
        if !(lambda_min > 0.0) {
            return Err(Error::NotSpd(format!(
                "smallest eigenvalue {lambda_min:e} is not positive"
            )));
        }
        let chol = Cholesky::new(mat.clone())
            .ok_or_else(|| Error::NotSpd("Cholesky factorization failed".into()))?;
        let identity = mat == Mat::identity(mat.nrows(), mat.ncols());
        Ok(Self {
            mat,
            chol,
            identity,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mat = Mat::identity(n, n);
        let chol = Cholesky::new(mat.clone()).expect("identity is SPD");
        Self {
            mat,
            chol,
            identity: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// Lower-triangular Cholesky factor `L` with `G = L Lᵀ`.
    pub fn cholesky_factor(&self) -> Mat {
        self.chol.l()
    }

    /// `G⁻¹ M`.
    pub fn solve(&self, m: &Mat) -> Mat {
        if self.identity {
            m.clone()
        } else {
            self.chol.solve(m)
        }
    }

    /// `L⁻¹ M` for the Cholesky factor `G = L Lᵀ`.
    pub fn solve_factor(&self, m: &Mat) -> Mat {
        if self.identity {
            m.clone()
        } else {
            self.chol
                .l_dirty()
                .solve_lower_triangular(m)
                .expect("Cholesky factor has a positive diagonal")
        }
    }

    /// `L⁻ᵀ M` for the Cholesky factor `G = L Lᵀ`.
    pub fn solve_factor_t(&self, m: &Mat) -> Mat {
        if self.identity {
            m.clone()
        } else {
            self.chol
                .l_dirty()
                .tr_solve_lower_triangular(m)
                .expect("Cholesky factor has a positive diagonal")
        }
    }

    pub fn inverse(&self) -> Mat {
        self.chol.inverse()
    }

    /// Symmetric square root `G^{1/2}`.
    pub fn sqrt(&self) -> Mat {
        self.spectral_map(f64::sqrt)
    }

    /// `G^{-1/2}`.
    pub fn inv_sqrt(&self) -> Mat {
        self.spectral_map(|l| 1.0 / l.sqrt())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(symmetrized(&self.mat))
            .eigenvalues
            .min()
    }

    fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Mat {
        if self.identity {
            return self.mat.clone();
        }
        let eig = SymmetricEigen::new(symmetrized(&self.mat));
        let mapped = eig.eigenvalues.map(f);
        &eig.eigenvectors * Mat::from_diagonal(&mapped) * eig.eigenvectors.transpose()
    }
}

impl PartialEq for SpdMat {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

impl Serialize for SpdMat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serde_rows::serialize(&self.mat, serializer)
    }
}

impl<'de> Deserialize<'de> for SpdMat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let mat = serde_rows::deserialize(deserializer)?;
        SpdMat::new(mat).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing a matrix as an array of rows.
pub mod serde_rows {
    use super::Mat;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 {
            return Err("matrix must have at least one row and one column".into());
        }
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err("matrix entries must be finite".into());
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Ok(Mat::from_row_slice(nrows, ncols, &flat))
    }

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }

    pub mod list {
        use super::Mat;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(ms: &[Mat], s: S) -> Result<S::Ok, S::Error> {
            ms.iter()
                .map(super::to_rows)
                .collect::<Vec<_>>()
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Mat>, D::Error> {
            let lists = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
            lists
                .iter()
                .map(|rows| super::from_rows(rows).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}

pub fn frob_sq(x: &Mat) -> f64 {
    x.norm_squared()
}

/// `‖X‖²_{F(G)} = Tr(XᵀGX)`.
pub fn weighted_frob_sq(x: &Mat, g: &SpdMat) -> Result<f64> {
    if g.dim() != x.nrows() {
        return Err(Error::Dimension(format!(
            "weight is {0}x{0} but X has {1} rows",
            g.dim(),
            x.nrows()
        )));
    }
    if g.is_identity() {
        return Ok(frob_sq(x));
    }
    Ok((g.as_mat() * x).component_mul(x).sum().max(0.0))
}

/// The default relative cutoff `max(rows, cols) · ε`.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

pub fn singular_values(m: &Mat) -> Result<Vector> {
    ensure_finite(m, "SVD input")?;
    Ok(m.clone().svd(false, false).singular_values)
}

/// Moore–Penrose pseudoinverse via SVD.
///
/// Singular values `<= tol · σ_max` are treated as zero; `tol` defaults to
/// [`default_rank_tol`].
pub fn pseudoinverse(m: &Mat, tol: Option<f64>) -> Result<Mat> {
    ensure_finite(m, "pseudoinverse input")?;
    let (rows, cols) = m.shape();
    let rel = tol.unwrap_or_else(|| default_rank_tol(rows, cols));
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    if sigma_max == 0.0 {
        return Ok(Mat::zeros(cols, rows));
    }
    let cutoff = rel * sigma_max;
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Decomposition("SVD did not produce U".into()))?;
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Decomposition("SVD did not produce Vᵀ".into()))?;
    let mut out = Mat::zeros(cols, rows);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            // out += v_k u_kᵀ / s
            out.ger(1.0 / s, &v_t.row(k).transpose(), &u.column(k), 1.0);
        }
    }
    Ok(out)
}

/// Number of singular values above `tol · σ_max` (default tolerance as in
/// [`pseudoinverse`]).
pub fn numerical_rank(m: &Mat, tol: Option<f64>) -> Result<usize> {
    let (rows, cols) = m.shape();
    let sv = singular_values(m)?;
    let sigma_max = sv.max();
    if sigma_max == 0.0 {
        return Ok(0);
    }
    let cutoff = tol.unwrap_or_else(|| default_rank_tol(rows, cols)) * sigma_max;
    Ok(sv.iter().filter(|&&s| s > cutoff).count())
}

pub fn kron(a: &Mat, b: &Mat) -> Result<Mat> {
    let rows = a.nrows() * b.nrows();
    let cols = a.ncols() * b.ncols();
    if rows > KRON_CAP || cols > KRON_CAP {
        return Err(Error::KronCap {
            rows,
            cols,
            cap: KRON_CAP,
        });
    }
    Ok(a.kronecker(b))
}

/// Column-stacking vectorization.
pub fn vec(x: &Mat) -> Vector {
    Vector::from_column_slice(x.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Result<Mat> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "vector of length {} cannot be reshaped to {rows}x{cols}",
            v.len()
        )));
    }
    Ok(Mat::from_column_slice(rows, cols, v.as_slice()))
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_eig_extremes(m: &Mat) -> Result<(f64, f64)> {
    ensure_finite(m, "eigen input")?;
    if !is_symmetric(m, EIG_SYMMETRY_TOL) {
        return Err(Error::InvalidArgument(
            "eigen extremes require a symmetric matrix".into(),
        ));
    }
    let eig = SymmetricEigen::new(symmetrized(m));
    Ok((eig.eigenvalues.min(), eig.eigenvalues.max()))
}

/// Smallest of the `min(rows, cols)` singular values (zero when rank deficient).
pub fn min_singular(m: &Mat) -> Result<f64> {
    Ok(singular_values(m)?.min())
}

/// Smallest singular value above the default rank cutoff, `None` for a zero matrix.
pub fn min_nonzero_singular(m: &Mat) -> Result<Option<f64>> {
    let (rows, cols) = m.shape();
    let sv = singular_values(m)?;
    let cutoff = default_rank_tol(rows, cols) * sv.max();
    Ok(sv.iter().copied().filter(|&s| s > cutoff).reduce(f64::min))
}

/// Matrix with i.i.d. standard normal entries, drawn in row-major order.
pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Mat::from_row_slice(rows, cols, &data)
}

pub fn standard_normal_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vector {
    Vector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// `rows × cols` matrix with orthonormal columns: Gaussian entries followed by
/// a thin QR factorization.
pub fn orthonormal_columns<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Mat> {
    if cols == 0 || rows == 0 {
        return Err(Error::InvalidArgument("dimensions must be positive".into()));
    }
    if cols > rows {
        return Err(Error::InvalidArgument(format!(
            "cannot build {cols} orthonormal columns in R^{rows}"
        )));
    }
    let g = standard_normal(rows, cols, rng);
    Ok(g.qr().q())
}

/// Columns of the `dim × dim` identity indexed by `idx` (i.e. `I_{:,idx}`).
pub fn identity_columns(dim: usize, idx: &[usize]) -> Mat {
    let mut m = Mat::zeros(dim, idx.len());
    for (c, &r) in idx.iter().enumerate() {
        m[(r, c)] = 1.0;
    }
    m
}

/// Random symmetric positive definite matrix `QᵀDQ` with eigenvalues in `[lo, hi]`.
pub fn random_spd<R: Rng + ?Sized>(dim: usize, lo: f64, hi: f64, rng: &mut R) -> Result<SpdMat> {
    let q = orthonormal_columns(dim, dim, rng)?;
    let diag = Vector::from_iterator(dim, (0..dim).map(|_| rng.random_range(lo..=hi)));
    let m = &q * Mat::from_diagonal(&diag) * q.transpose();
    SpdMat::new(symmetrized(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use nalgebra::dmatrix;

    fn rel_diff(a: &Mat, b: &Mat) -> f64 {
        (a - b).norm() / (1.0 + a.norm().max(b.norm()))
    }

    #[test]
    fn weighted_norm_examples() {
        let x = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(weighted_frob_sq(&x, &SpdMat::identity(2)).unwrap(), 30.0);
        let g = SpdMat::new(Mat::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]))).unwrap();
        assert!((weighted_frob_sq(&Mat::identity(2, 2), &g).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(weighted_frob_sq(&Mat::zeros(2, 5), &g).unwrap(), 0.0);
        assert!(matches!(
            weighted_frob_sq(&Mat::zeros(3, 1), &g),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn weighted_norm_matches_kron_form() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let g = random_spd(4, 0.5, 3.0, &mut rng).unwrap();
            let x = standard_normal(4, 3, &mut rng);
            let w = kron(&Mat::identity(3, 3), g.as_mat()).unwrap();
            let v = vec(&x);
            let via_kron = (v.transpose() * &w * &v)[(0, 0)];
            let direct = weighted_frob_sq(&x, &g).unwrap();
            assert!((via_kron - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn spd_validation() {
        assert!(matches!(
            SpdMat::new(dmatrix![1.0, 2.0; 0.0, 1.0]),
            Err(Error::NotSpd(_))
        ));
        assert!(matches!(
            SpdMat::new(dmatrix![1.0, 0.0; 0.0, -1.0]),
            Err(Error::NotSpd(_))
        ));
        assert!(matches!(
            SpdMat::new(dmatrix![1.0, f64::NAN; f64::NAN, 1.0]),
            Err(Error::NonFinite(_))
        ));
        let g = SpdMat::new(dmatrix![4.0, 1.0; 1.0, 3.0]).unwrap();
        let s = g.sqrt();
        assert!(rel_diff(&(&s * &s), g.as_mat()) < 1e-13);
        let is = g.inv_sqrt();
        assert!(rel_diff(&(&is * g.as_mat() * &is), &Mat::identity(2, 2)) < 1e-13);
        assert!(rel_diff(&g.solve(g.as_mat()), &Mat::identity(2, 2)) < 1e-13);
    }

    #[test]
    fn pseudoinverse_examples() {
        let d = dmatrix![2.0, 0.0; 0.0, 0.0];
        assert_eq!(
            pseudoinverse(&d, None).unwrap(),
            dmatrix![0.5, 0.0; 0.0, 0.0]
        );
        let i3 = Mat::identity(3, 3);
        assert!(rel_diff(&pseudoinverse(&i3, None).unwrap(), &i3) < 1e-15);
        let mut rng = seeded(11);
        let m = standard_normal(3, 2, &mut rng);
        let mp = pseudoinverse(&m, None).unwrap();
        assert!(rel_diff(&(&mp * &m), &Mat::identity(2, 2)) < 1e-10);
        assert_eq!(
            pseudoinverse(&Mat::zeros(2, 3), None).unwrap(),
            Mat::zeros(3, 2)
        );
        assert!(matches!(
            pseudoinverse(&dmatrix![f64::INFINITY], None),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn penrose_identities_over_ranks() {
        let mut rng = seeded(21);
        for t in 0..100 {
            let rows = 2 + t % 5;
            let cols = 2 + (t / 5) % 5;
            let rank = t % (rows.min(cols) + 1);
            let m = if rank == 0 {
                Mat::zeros(rows, cols)
            } else {
                standard_normal(rows, rank, &mut rng) * standard_normal(rank, cols, &mut rng)
            };
            let mp = pseudoinverse(&m, None).unwrap();
            let scale = 1e-10 * (1.0 + singular_values(&m).unwrap().max());
            let inv_scale = 1e-10 * (1.0 + singular_values(&mp).unwrap().max());
            assert!((&m * &mp * &m - &m).norm() <= scale * m.norm().max(1.0));
            assert!((&mp * &m * &mp - &mp).norm() <= inv_scale * mp.norm().max(1.0));
            let mmp = &m * &mp;
            let mpm = &mp * &m;
            assert!((&mmp - mmp.transpose()).norm() <= 1e-10);
            assert!((&mpm - mpm.transpose()).norm() <= 1e-10);
            assert_eq!(numerical_rank(&m, None).unwrap(), rank);
        }
    }

    #[test]
    fn kron_and_vec() {
        let i2 = Mat::identity(2, 2);
        assert_eq!(kron(&i2, &i2).unwrap(), Mat::identity(4, 4));
        let x = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(vec(&x).as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(unvec(&vec(&x), 2, 2).unwrap(), x);
        let big = Mat::zeros(65, 1);
        assert!(matches!(kron(&big, &big), Err(Error::KronCap { .. })));
    }

    #[test]
    fn vec_of_triple_product() {
        let mut rng = seeded(5);
        for _ in 0..20 {
            let a = standard_normal(2, 2, &mut rng);
            let x = standard_normal(2, 2, &mut rng);
            let b = standard_normal(2, 2, &mut rng);
            let lhs = vec(&(&a * &x * &b));
            let rhs = kron(&b.transpose(), &a).unwrap() * vec(&x);
            assert!((&lhs - &rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = seeded(6);
        for _ in 0..20 {
            let a = standard_normal(2, 3, &mut rng);
            let b = standard_normal(3, 2, &mut rng);
            let c = standard_normal(3, 2, &mut rng);
            let d = standard_normal(2, 4, &mut rng);
            let lhs = kron(&a, &b).unwrap() * kron(&c, &d).unwrap();
            let rhs = kron(&(&a * &c), &(&b * &d)).unwrap();
            assert!(rel_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn eigen_extremes() {
        let d = Mat::from_diagonal(&Vector::from_vec(vec![1.0, 3.0]));
        assert_eq!(sym_eig_extremes(&d).unwrap(), (1.0, 3.0));
        let (lo, hi) = sym_eig_extremes(&Mat::identity(4, 4)).unwrap();
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        assert!(sym_eig_extremes(&dmatrix![1.0, 2.0; 0.0, 1.0]).is_err());

        let mut rng = seeded(8);
        let g = standard_normal(5, 5, &mut rng);
        let s = &g + g.transpose();
        let (lo, hi) = sym_eig_extremes(&s).unwrap();
        // Oracle: characteristic values from a full Schur decomposition.
        let full = s.clone().schur().eigenvalues().unwrap();
        let (flo, fhi) = full
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        assert!((lo - flo).abs() <= 1e-10 * flo.abs().max(1.0));
        assert!((hi - fhi).abs() <= 1e-10 * fhi.abs().max(1.0));

        assert!((min_singular(&d).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(min_singular(&dmatrix![1.0, 0.0; 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(
            min_nonzero_singular(&dmatrix![2.0, 0.0; 0.0, 0.0]).unwrap(),
            Some(2.0)
        );
    }

    #[test]
    fn orthonormal_factor() {
        let mut rng = seeded(1);
        let q = orthonormal_columns(3, 3, &mut rng).unwrap();
        assert!(rel_diff(&(q.transpose() * &q), &Mat::identity(3, 3)) < 1e-10);
        assert!((q.determinant().abs() - 1.0).abs() < 1e-10);
        let q = orthonormal_columns(5, 2, &mut rng).unwrap();
        assert_eq!(q.shape(), (5, 2));
        assert!(rel_diff(&(q.transpose() * &q), &Mat::identity(2, 2)) < 1e-10);
        let a = orthonormal_columns(6, 3, &mut seeded(99)).unwrap();
        let b = orthonormal_columns(6, 3, &mut seeded(99)).unwrap();
        assert_eq!(a, b);
        assert!(orthonormal_columns(2, 3, &mut rng).is_err());
    }

    #[test]
    fn spd_serde_round_trip_validates() {
        let g = SpdMat::new(dmatrix![2.0, 0.5; 0.5, 1.0]).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, "[[2.0,0.5],[0.5,1.0]]");
        let back: SpdMat = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<SpdMat>("[[1.0,0.0],[0.0,-2.0]]").is_err());
    }
}
