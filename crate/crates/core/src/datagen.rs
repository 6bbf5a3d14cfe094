//! Problem generators: the two synthetic matrix families, equation assembly,
//! a deterministic test image, and loading external Matrix Market pairs.

use std::path::PathBuf;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormal_columns, standard_normal, Mat};
use crate::mtx::{read_matrix_market, ReadOptions};
use crate::rng::seeded;
use crate::solvers::MatrixEquation;

/// Factors of a Type I pair: `A = U₁D₁V₁ᵀ`, `B = U₂D₂V₂ᵀ`.
#[derive(Clone, Debug)]
pub struct TypeIFactors {
    pub a: Mat,
    pub b: Mat,
    pub u1: Mat,
    pub d1: DVector<f64>,
    pub v1: Mat,
    pub u2: Mat,
    pub d2: DVector<f64>,
    pub v2: Mat,
}

fn check_rank(rows: usize, cols: usize, r: usize, what: &str) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "{what} must have positive dimensions"
        )));
    }
    if r == 0 || r > rows.min(cols) {
        return Err(Error::InvalidArgument(format!(
            "rank of {what} must lie in 1..={}, got {r}",
            rows.min(cols)
        )));
    }
    Ok(())
}

fn low_rank<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    r: usize,
    rng: &mut R,
) -> Result<(Mat, DVector<f64>, Mat)> {
    let u = orthonormal_columns(rows, r, rng)?;
    let v = orthonormal_columns(cols, r, rng)?;
    // Open interval (1, 2): reject the endpoint that random_range can return.
    let d = DVector::from_fn(r, |_, _| loop {
        let x: f64 = rng.random_range(1.0..2.0);
        if x > 1.0 {
            break x;
        }
    });
    Ok((u, d, v))
}

/// Type I pair with explicit factors. `A` is `p×m` of rank `r₁`, `B` is
/// `n×q` of rank `r₂`; all nonzero singular values lie in `(1, 2)`.
pub fn gen_type1_factors<R: Rng + ?Sized>(
    p: usize,
    m: usize,
    r1: usize,
    n: usize,
    q: usize,
    r2: usize,
    rng: &mut R,
) -> Result<TypeIFactors> {
    check_rank(p, m, r1, "A")?;
    check_rank(n, q, r2, "B")?;
    let (u1, d1, v1) = low_rank(p, m, r1, rng)?;
    let (u2, d2, v2) = low_rank(n, q, r2, rng)?;
    let a = &u1 * Mat::from_diagonal(&d1) * v1.transpose();
    let b = &u2 * Mat::from_diagonal(&d2) * v2.transpose();
    Ok(TypeIFactors {
        a,
        b,
        u1,
        d1,
        v1,
        u2,
        d2,
        v2,
    })
}

pub fn gen_type1<R: Rng + ?Sized>(
    p: usize,
    m: usize,
    r1: usize,
    n: usize,
    q: usize,
    r2: usize,
    rng: &mut R,
) -> Result<(Mat, Mat)> {
    let f = gen_type1_factors(p, m, r1, n, q, r2, rng)?;
    Ok((f.a, f.b))
}

/// Type II pair: i.i.d. standard normal `A` (`p×m`) and `B` (`n×q`).
pub fn gen_type2<R: Rng + ?Sized>(
    p: usize,
    m: usize,
    n: usize,
    q: usize,
    rng: &mut R,
) -> Result<(Mat, Mat)> {
    if [p, m, n, q].contains(&0) {
        return Err(Error::InvalidArgument("dimensions must be positive".into()));
    }
    let a = standard_normal(p, m, rng);
    let b = standard_normal(n, q, rng);
    Ok((a, b))
}

/// The planted solution of an assembled equation.
#[derive(Clone, Debug)]
pub enum Solution {
    Ones,
    Given(Mat),
}

/// `C = A X* B` with `X*` recorded on the equation.
pub fn assemble(a: Mat, b: Mat, x_star: Solution) -> Result<MatrixEquation> {
    let x = match x_star {
        Solution::Ones => Mat::from_element(a.ncols(), b.nrows(), 1.0),
        Solution::Given(x) => x,
    };
    if x.nrows() != a.ncols() || x.ncols() != b.nrows() {
        return Err(Error::Dimension(format!(
            "X* is {}×{} but A, B need {}×{}",
            x.nrows(),
            x.ncols(),
            a.ncols(),
            b.nrows()
        )));
    }
    let c = &a * &x * &b;
    MatrixEquation::new(a, b, c)?.with_solution(x)
}

/// A deterministic `size×size` test image in `[0, 1]`: a centered disk and
/// two rectangles on a zero background.
pub fn phantom(size: usize) -> Result<Mat> {
    if size < 4 {
        return Err(Error::InvalidArgument("phantom needs size ≥ 4".into()));
    }
    let nf = size as f64;
    Ok(Mat::from_fn(size, size, |i, j| {
        let (y, x) = ((i as f64 + 0.5) / nf, (j as f64 + 0.5) / nf);
        let in_rect =
            |r0: f64, r1: f64, c0: f64, c1: f64| (r0..r1).contains(&y) && (c0..c1).contains(&x);
        if (y - 0.5).powi(2) + (x - 0.5).powi(2) <= 0.22 * 0.22 {
            1.0
        } else if in_rect(0.06, 0.24, 0.06, 0.40) {
            0.5
        } else if in_rect(0.75, 0.92, 0.55, 0.90) {
            0.75
        } else {
            0.0
        }
    }))
}

/// What to generate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Low-rank pair with singular values in (1, 2) and `X*` all ones.
    TypeI {
        p: usize,
        m: usize,
        r1: usize,
        n: usize,
        q: usize,
        r2: usize,
    },
    /// Standard normal pair with `X*` all ones.
    TypeII {
        p: usize,
        m: usize,
        n: usize,
        q: usize,
    },
    /// Standard normal `A` (`p×size`), `B` (`size×q`), and the test image as `X*`.
    Phantom { size: usize, p: usize, q: usize },
    /// Matrix Market files, `X*` all ones. With `transpose_b` the second
    /// file is used transposed.
    External {
        path_a: PathBuf,
        path_b: PathBuf,
        #[serde(default)]
        transpose_b: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(flatten)]
    pub kind: ProblemKind,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, seed: u64) -> Self {
        ProblemSpec { kind, seed }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ProblemKind::TypeI { p, m, r1, n, q, r2 } => {
                check_rank(*p, *m, *r1, "A")?;
                check_rank(*n, *q, *r2, "B")
            }
            ProblemKind::TypeII { p, m, n, q } => {
                if [p, m, n, q].contains(&&0) {
                    return Err(Error::InvalidArgument("dimensions must be positive".into()));
                }
                Ok(())
            }
            ProblemKind::Phantom { size, p, q } => {
                if *size < 4 || *p == 0 || *q == 0 {
                    return Err(Error::InvalidArgument(
                        "phantom needs size ≥ 4 and positive p, q".into(),
                    ));
                }
                Ok(())
            }
            ProblemKind::External { .. } => Ok(()),
        }
    }

    /// Short label used in benchmark output.
    pub fn summary(&self) -> String {
        match &self.kind {
            ProblemKind::TypeI { p, m, r1, n, q, r2 } => format!("type1-{p}x{m}r{r1}-{n}x{q}r{r2}"),
            ProblemKind::TypeII { p, m, n, q } => format!("type2-{p}x{m}-{n}x{q}"),
            ProblemKind::Phantom { size, p, q } => format!("phantom{size}-{p}x{q}"),
            ProblemKind::External {
                path_a,
                path_b,
                transpose_b,
            } => {
                let stem = |p: &PathBuf| {
                    p.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default()
                };
                format!(
                    "{}-{}{}",
                    stem(path_a),
                    stem(path_b),
                    if *transpose_b { "T" } else { "" }
                )
            }
        }
    }

    /// Generates the equation. Randomness comes only from `self.seed`.
    pub fn build(&self) -> Result<MatrixEquation> {
        self.validate()?;
        let rng = &mut seeded(self.seed);
        match &self.kind {
            ProblemKind::TypeI { p, m, r1, n, q, r2 } => {
                let (a, b) = gen_type1(*p, *m, *r1, *n, *q, *r2, rng)?;
                assemble(a, b, Solution::Ones)
            }
            ProblemKind::TypeII { p, m, n, q } => {
                let (a, b) = gen_type2(*p, *m, *n, *q, rng)?;
                assemble(a, b, Solution::Ones)
            }
            ProblemKind::Phantom { size, p, q } => {
                let (a, b) = gen_type2(*p, *size, *size, *q, rng)?;
                assemble(a, b, Solution::Given(phantom(*size)?))
            }
            ProblemKind::External {
                path_a,
                path_b,
                transpose_b,
            } => {
                let a = read_matrix_market(path_a, ReadOptions::default())?;
                let b = read_matrix_market(path_b, ReadOptions::default())?;
                let b = if *transpose_b { b.transpose() } else { b };
                assemble(a, b, Solution::Ones)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{numerical_rank, singular_values};
    use proptest::prelude::*;

    #[test]
    fn type1_full_rank_is_well_conditioned() {
        let (a, b) = gen_type1(6, 6, 6, 4, 5, 4, &mut seeded(1)).unwrap();
        let s = singular_values(&a).unwrap();
        assert!(s.max() / s.min() < 2.0);
        assert_eq!(numerical_rank(&b, None).unwrap(), 4);
    }

    #[test]
    fn type1_rank_and_reproducibility() {
        let (a, b) = gen_type1(8, 6, 3, 5, 7, 2, &mut seeded(2)).unwrap();
        assert_eq!(numerical_rank(&a, None).unwrap(), 3);
        assert_eq!(numerical_rank(&b, None).unwrap(), 2);
        let (a2, b2) = gen_type1(8, 6, 3, 5, 7, 2, &mut seeded(2)).unwrap();
        assert_eq!((a, b), (a2, b2));
        assert!(gen_type1(3, 3, 4, 2, 2, 1, &mut seeded(0)).is_err());
        assert!(gen_type1(3, 3, 0, 2, 2, 1, &mut seeded(0)).is_err());
    }

    #[test]
    fn type2_moments() {
        let (a, _) = gen_type2(200, 200, 1, 1, &mut seeded(3)).unwrap();
        let n = a.len() as f64;
        let mean = a.mean();
        let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 / n.sqrt());
        // Var of the sample variance of N(0,1) is 2/(n−1).
        assert!((var - 1.0).abs() < 3.0 * (2.0 / (n - 1.0)).sqrt());
        assert_eq!(
            gen_type2(2, 3, 4, 5, &mut seeded(4)).unwrap(),
            gen_type2(2, 3, 4, 5, &mut seeded(4)).unwrap()
        );
    }

    #[test]
    fn assemble_examples() {
        let mut rng = seeded(5);
        let (a, b) = gen_type2(4, 3, 2, 5, &mut rng).unwrap();
        let eq = assemble(a.clone(), b.clone(), Solution::Given(Mat::zeros(3, 2))).unwrap();
        assert_eq!(eq.c().norm(), 0.0);
        let x = standard_normal(2, 2, &mut rng);
        let eq = assemble(
            Mat::identity(2, 2),
            Mat::identity(2, 2),
            Solution::Given(x.clone()),
        )
        .unwrap();
        assert_eq!(eq.c(), &x);
        let eq = assemble(a, b, Solution::Ones).unwrap();
        let xs = eq.x_star().unwrap();
        assert_eq!(
            (Mat::zeros(3, 2) - xs).norm_squared() / xs.norm_squared(),
            1.0
        );
        assert!(assemble(
            Mat::identity(2, 2),
            Mat::identity(2, 2),
            Solution::Given(Mat::zeros(3, 2))
        )
        .is_err());
    }

    #[test]
    fn phantom_properties() {
        assert!(phantom(3).is_err());
        for size in [4, 8, 13, 30, 64] {
            let img = phantom(size).unwrap();
            assert!(img.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(img, phantom(size).unwrap());
            if size >= 8 {
                let nz = img.iter().filter(|v| **v != 0.0).count() as f64 / img.len() as f64;
                assert!((0.1..=0.9).contains(&nz), "size {size}: {nz}");
            }
        }
    }

    #[test]
    fn problem_spec_round_trip_and_build() {
        let spec = ProblemSpec::new(
            ProblemKind::TypeI {
                p: 5,
                m: 3,
                r1: 3,
                n: 3,
                q: 5,
                r2: 3,
            },
            9,
        );
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"type-i\""));
        assert_eq!(serde_json::from_str::<ProblemSpec>(&json).unwrap(), spec);
        let eq = spec.build().unwrap();
        let eq2 = spec.build().unwrap();
        assert_eq!(eq.a(), eq2.a());
        assert_eq!(spec.summary(), "type1-5x3r3-3x5r3");
        let bad = ProblemSpec::new(
            ProblemKind::Phantom {
                size: 2,
                p: 3,
                q: 3,
            },
            0,
        );
        assert!(bad.build().is_err());
    }

    #[test]
    fn external_pair_uses_transpose() {
        let dir = tempfile::tempdir().unwrap();
        let (pa, pb) = (dir.path().join("a.mtx"), dir.path().join("b.mtx"));
        let a = standard_normal(5, 3, &mut seeded(6));
        let b = standard_normal(6, 4, &mut seeded(7));
        crate::mtx::write_matrix_market(&pa, &a).unwrap();
        crate::mtx::write_matrix_market(&pb, &b).unwrap();
        let spec = ProblemSpec::new(
            ProblemKind::External {
                path_a: pa,
                path_b: pb,
                transpose_b: true,
            },
            0,
        );
        let eq = spec.build().unwrap();
        assert_eq!(eq.b(), &b.transpose());
        assert_eq!(eq.x_star().unwrap().shape(), (3, 4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn type1_singular_values_and_orthogonality(
            p in 1usize..9, m in 1usize..9, n in 1usize..9, q in 1usize..9, seed in any::<u64>(), f1 in 0.0f64..1.0, f2 in 0.0f64..1.0,
        ) {
            let r1 = 1 + ((p.min(m) - 1) as f64 * f1) as usize;
            let r2 = 1 + ((n.min(q) - 1) as f64 * f2) as usize;
            let f = gen_type1_factors(p, m, r1, n, q, r2, &mut seeded(seed)).unwrap();
            let tol = 1e-10;
            for (x, r) in [(&f.a, r1), (&f.b, r2)] {
                let s = singular_values(x).unwrap();
                let nonzero: Vec<f64> = s.iter().copied().filter(|v| *v > 1e-8).collect();
                prop_assert_eq!(nonzero.len(), r);
                prop_assert!(nonzero.iter().all(|v| *v > 1.0 - tol && *v < 2.0 + tol));
            }
            for u in [&f.u1, &f.v1, &f.u2, &f.v2] {
                prop_assert!((u.transpose() * u - Mat::identity(u.ncols(), u.ncols())).abs().max() < tol);
            }
            prop_assert!(f.d1.iter().all(|d| *d > 1.0 && *d < 2.0));
        }

        #[test]
        fn assembled_equations_are_consistent(p in 1usize..7, m in 1usize..7, n in 1usize..7, q in 1usize..7, seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let (a, b) = gen_type2(p, m, n, q, &mut rng).unwrap();
            let x = standard_normal(m, n, &mut rng);
            let eq = assemble(a, b, Solution::Given(x.clone())).unwrap();
            let r = (eq.a() * &x * eq.b() - eq.c()).norm();
            prop_assert!(r <= 1e-12 * (1.0 + eq.c().norm()));
        }
    }
}
