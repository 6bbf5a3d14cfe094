//! Experiment metrics: relative error, global SSIM and speed-up.

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// `‖X − X*‖²_F / ‖X*‖²_F`. The ratio is squared, matching the stopping
/// statistic used throughout.
pub fn relative_error(x: &Mat, x_star: &Mat) -> Result<f64> {
    if x.shape() != x_star.shape() {
        return Err(Error::Dimension("X and X* differ in shape".into()));
    }
    let den = x_star.norm_squared();
    if den == 0.0 {
        return Err(Error::InvalidArgument(
            "relative error is undefined for X* = 0".into(),
        ));
    }
    Ok((x - x_star).norm_squared() / den)
}

/// SSIM stabilizer parameters. `range` is the dynamic range `L`; when
/// absent it is taken from the reference image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub range: Option<f64>,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            k1: 0.01,
            k2: 0.03,
            range: None,
        }
    }
}

/// Global (unwindowed) structural similarity of `x` against `reference`,
/// with population means, variances and covariance over all pixels.
///
/// Without an explicit range, `L = max − min` of the reference, or 1 for a
/// constant reference.
pub fn ssim(x: &Mat, reference: &Mat, params: SsimParams) -> Result<f64> {
    if x.shape() != reference.shape() {
        return Err(Error::Dimension("SSIM images differ in shape".into()));
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("SSIM of empty images".into()));
    }
    let range = match params.range {
        Some(l) => l,
        None => {
            let l = reference.max() - reference.min();
            if l > 0.0 {
                l
            } else {
                1.0
            }
        }
    };
    if !(range > 0.0) {
        return Err(Error::InvalidArgument(
            "SSIM dynamic range must be positive".into(),
        ));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.mean(), reference.mean());
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(reference.iter()) {
        let (dx, dy) = (a - mx, b - my);
        vx += dx * dx;
        vy += dy * dy;
        cov += dx * dy;
    }
    let (vx, vy, cov) = (vx / n, vy / n, cov / n);
    let c1 = (params.k1 * range).powi(2);
    let c2 = (params.k2 * range).powi(2);
    Ok((2.0 * mx * my + c1) * (2.0 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2)))
}

/// `cpu_ref / cpu_new`.
pub fn speedup(cpu_ref: f64, cpu_new: f64) -> Result<f64> {
    if !(cpu_new > 0.0) || !(cpu_ref >= 0.0) {
        return Err(Error::InvalidArgument(
            "speed-up needs cpu_new > 0 and cpu_ref ≥ 0".into(),
        ));
    }
    Ok(cpu_ref / cpu_new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormal_columns, standard_normal};
    use crate::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn relative_error_examples() {
        let xs = Mat::from_element(3, 2, 1.0);
        assert_eq!(relative_error(&xs, &xs).unwrap(), 0.0);
        assert_eq!(relative_error(&Mat::zeros(3, 2), &xs).unwrap(), 1.0);
        assert_eq!(relative_error(&(&xs * 2.0), &xs).unwrap(), 1.0);
        assert!(relative_error(&xs, &Mat::zeros(3, 2)).is_err());
        assert!(relative_error(&xs, &Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn ssim_examples() {
        let mut rng = seeded(1);
        let x = standard_normal(5, 4, &mut rng);
        assert!((ssim(&x, &x, SsimParams::default()).unwrap() - 1.0).abs() < 1e-15);

        let p = SsimParams {
            range: Some(1.0),
            ..SsimParams::default()
        };
        let c1 = 0.01f64.powi(2);
        let v = ssim(&Mat::zeros(3, 3), &Mat::from_element(3, 3, 1.0), p).unwrap();
        assert!((v - c1 / (1.0 + c1)).abs() < 1e-15);

        let img = crate::datagen::phantom(16).unwrap();
        let noise = standard_normal(16, 16, &mut rng);
        let mut last = 0.0;
        for eps in [1.0, 0.3, 0.1, 0.03, 0.01, 0.0] {
            let s = ssim(&(&img + &noise * eps), &img, SsimParams::default()).unwrap();
            assert!(s > last && s <= 1.0);
            last = s;
        }
        assert_eq!(last, 1.0);
        assert!(ssim(&img, &Mat::zeros(2, 2), SsimParams::default()).is_err());
    }

    #[test]
    fn speedup_examples() {
        assert_eq!(speedup(1.5, 1.5).unwrap(), 1.0);
        assert_eq!(speedup(2.0, 1.0).unwrap(), 2.0);
        assert!(speedup(1.0, 0.0).is_err());
        assert!(speedup(1.0, -1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn relative_error_is_orthogonally_invariant(m in 1usize..6, n in 1usize..6, seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let x = standard_normal(m, n, &mut rng);
            let xs = standard_normal(m, n, &mut rng);
            let u = orthonormal_columns(m, m, &mut rng).unwrap();
            let v = orthonormal_columns(n, n, &mut rng).unwrap();
            let r1 = relative_error(&x, &xs).unwrap();
            let r2 = relative_error(&(&u * &x * &v), &(&u * &xs * &v)).unwrap();
            prop_assert!((r1 - r2).abs() <= 1e-12 * (1.0 + r1));
        }

        #[test]
        fn ssim_bounded_for_nonnegative_images(m in 1usize..6, n in 1usize..6, seed in any::<u64>(), eps in 1e-6f64..1.0) {
            let mut rng = seeded(seed);
            let y = standard_normal(m, n, &mut rng).abs();
            let x = &y + standard_normal(m, n, &mut rng).abs() * eps;
            let s = ssim(&x, &y, SsimParams::default()).unwrap();
            prop_assert!(s < 1.0);
            // The structure term carries the sign of the covariance.
            let cov = x.iter().zip(y.iter()).map(|(a, b)| (a - x.mean()) * (b - y.mean())).sum::<f64>();
            if cov >= 0.0 {
                prop_assert!(s > 0.0);
            }
            prop_assert!(ssim(&y, &y, SsimParams::default()).unwrap() == 1.0);
        }
    }
}
