//! Forecast adequacy statistics and a few sample moments.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SpdMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub msse: Vec<f64>,
    pub mae: Vec<f64>,
    /// Per coordinate; `None` where that coordinate is not positive valued.
    pub mape: Vec<Option<f64>>,
    pub n: usize,
}

impl FitReport {
    pub fn build(
        errors: &[DVector<f64>],
        covs: &[SpdMatrix],
        observations: &[DVector<f64>],
    ) -> Result<Self> {
        let e_star = standardize_errors(errors, covs)?;
        Ok(Self {
            msse: msse(&e_star)?.iter().copied().collect(),
            mae: mae(errors)?.iter().copied().collect(),
            mape: mape(errors, observations)?,
            n: errors.len(),
        })
    }

    /// Mean of `|MSSE_i - 1|` over coordinates.
    pub fn msse_distance(&self) -> f64 {
        self.msse.iter().map(|m| (m - 1.0).abs()).sum::<f64>() / self.msse.len() as f64
    }
}

/// `e*_t = cov_t^{-1/2} e_t` with the symmetric inverse square root.
pub fn standardize_errors(e: &[DVector<f64>], covs: &[SpdMatrix]) -> Result<Vec<DVector<f64>>> {
    if e.len() != covs.len() {
        return Err(Error::DimensionMismatch {
            expected: e.len(),
            found: covs.len(),
        });
    }
    e.iter()
        .zip(covs)
        .map(|(e, c)| {
            if e.len() != c.dim() {
                return Err(Error::DimensionMismatch {
                    expected: c.dim(),
                    found: e.len(),
                });
            }
            Ok(c.inv_sqrt() * e)
        })
        .collect()
}

fn coordinate_mean(xs: &[DVector<f64>], f: impl Fn(f64) -> f64) -> Result<DVector<f64>> {
    let first = xs.first().ok_or(Error::EmptyInput)?;
    let mut acc = DVector::<f64>::zeros(first.len());
    for x in xs {
        if x.len() != acc.len() {
            return Err(Error::DimensionMismatch {
                expected: acc.len(),
                found: x.len(),
            });
        }
        for (a, v) in acc.iter_mut().zip(x.iter()) {
            *a += f(*v);
        }
    }
    Ok(acc / xs.len() as f64)
}

pub fn msse(e_star: &[DVector<f64>]) -> Result<DVector<f64>> {
    coordinate_mean(e_star, |v| v * v)
}

pub fn mae(e: &[DVector<f64>]) -> Result<DVector<f64>> {
    coordinate_mean(e, f64::abs)
}

pub fn mape(e: &[DVector<f64>], y: &[DVector<f64>]) -> Result<Vec<Option<f64>>> {
    if e.is_empty() {
        return Err(Error::EmptyInput);
    }
    if e.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: e.len(),
            found: y.len(),
        });
    }
    let p = e[0].len();
    let n = e.len() as f64;
    let mut out = Vec::with_capacity(p);
    for i in 0..p {
        let mut sum = 0.0;
        let mut positive = true;
        for (et, yt) in e.iter().zip(y) {
            if et.len() != p || yt.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: et.len().min(yt.len()),
                });
            }
            if !(yt[i] > 0.0) {
                positive = false;
                break;
            }
            sum += et[i].abs() / yt[i];
        }
        out.push(positive.then(|| sum / n));
    }
    Ok(out)
}

fn centered_moments(x: &[f64]) -> Result<(f64, f64)> {
    if x.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((mean, m2))
}

/// Sample lag-1 autocorrelation `Σ(x_t - x̄)(x_{t-1} - x̄) / Σ(x_t - x̄)²`.
pub fn lag1_autocorr(x: &[f64]) -> Result<f64> {
    let (mean, m2) = centered_moments(x)?;
    let num: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    Ok(num / (m2 * x.len() as f64))
}

/// Standardized third moment `m3 / m2^{3/2}`.
pub fn skewness(x: &[f64]) -> Result<f64> {
    let (mean, m2) = centered_moments(x)?;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / x.len() as f64;
    Ok(m3 / m2.powf(1.5))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{sample_mvn, RngStream};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Exp};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn standardize_cases() {
        let e = vec![v(&[1.0, -2.0]), v(&[0.5, 3.0])];
        let id = vec![SpdMatrix::identity(2); 2];
        assert_eq!(standardize_errors(&e, &id).unwrap(), e);
        let s = standardize_errors(&[v(&[2.0])], &[SpdMatrix::from_diagonal(&[4.0]).unwrap()]).unwrap();
        assert_abs_diff_eq!(s[0][0], 1.0, epsilon = 1e-14);
        assert!(standardize_errors(&e, &id[..1]).is_err());
    }

    #[test]
    fn whitening_oracle() {
        let cov = SpdMatrix::from_rows(&[&[2.0, 0.8, -0.3], &[0.8, 1.0, 0.2], &[-0.3, 0.2, 0.5]]).unwrap();
        let n = 10_000;
        let draws = sample_mvn(&DVector::zeros(3), &cov, n, &mut RngStream::new(31)).unwrap();
        let covs = vec![cov.clone(); n];
        let white = standardize_errors(&draws, &covs).unwrap();
        let mut c = DMatrix::<f64>::zeros(3, 3);
        for w in &white {
            c += w * w.transpose();
        }
        c /= n as f64;
        assert!((c - DMatrix::<f64>::identity(3, 3)).amax() < 0.05);
    }

    #[test]
    fn msse_cases() {
        assert_eq!(msse(&[v(&[1.0, 1.0]), v(&[1.0, 1.0])]).unwrap(), v(&[1.0, 1.0]));
        assert_eq!(msse(&[v(&[1.0]), v(&[3.0])]).unwrap(), v(&[5.0]));
        assert_eq!(msse(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn mae_cases() {
        assert_eq!(mae(&[v(&[1.0, -1.0]), v(&[3.0, -3.0])]).unwrap(), v(&[2.0, 2.0]));
        assert_eq!(mae(&vec![v(&[0.0, 0.0]); 4]).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(mae(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn mape_cases() {
        let m = mape(&[v(&[1.0]), v(&[1.0])], &[v(&[2.0]), v(&[4.0])]).unwrap();
        assert_eq!(m, vec![Some(0.375)]);
        let m = mape(
            &[v(&[1.0, 1.0]), v(&[1.0, 1.0])],
            &[v(&[2.0, -1.0]), v(&[4.0, 3.0])],
        )
        .unwrap();
        assert_eq!(m, vec![Some(0.375), None]);
        let m = mape(&[v(&[0.0]), v(&[0.0])], &[v(&[2.0]), v(&[4.0])]).unwrap();
        assert_eq!(m, vec![Some(0.0)]);
        assert_eq!(mape(&[], &[]), Err(Error::EmptyInput));
    }

    #[test]
    fn fit_report_build() {
        let e = vec![v(&[1.0, -2.0]), v(&[3.0, 2.0])];
        let y = vec![v(&[2.0, 4.0]), v(&[4.0, 0.0])];
        let r = FitReport::build(&e, &[SpdMatrix::identity(2), SpdMatrix::identity(2)], &y).unwrap();
        assert_eq!(r.msse, vec![5.0, 4.0]);
        assert_eq!(r.mae, vec![2.0, 2.0]);
        assert_eq!(r.mape, vec![Some(0.625), None]);
        assert_eq!(r.n, 2);
        assert_abs_diff_eq!(r.msse_distance(), 3.5);
    }

    #[test]
    fn autocorr_cases() {
        let alt: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((lag1_autocorr(&alt).unwrap() + 1.0).abs() < 0.01);
        assert_eq!(lag1_autocorr(&[2.0; 10]), Err(Error::ZeroVariance));
        assert_eq!(lag1_autocorr(&[1.0, 2.0]), Err(Error::TooShort { needed: 3, got: 2 }));
        let mut rng = RngStream::new(41);
        let noise: Vec<f64> = (0..10_000).map(|_| rng.standard_normal()).collect();
        assert!(lag1_autocorr(&noise).unwrap().abs() < 0.03);
    }

    #[test]
    fn skewness_cases() {
        let mut rng = RngStream::new(42);
        let half: Vec<f64> = (0..500).map(|_| rng.standard_normal().abs() + rng.uniform()).collect();
        let sym: Vec<f64> = half.iter().copied().chain(half.iter().map(|x| -x)).collect();
        assert!(skewness(&sym).unwrap().abs() < 1e-12);
        let exp = Exp::new(1.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| exp.sample(&mut rng)).collect();
        assert!((skewness(&xs).unwrap() - 2.0).abs() < 0.1);
        let normal: Vec<f64> = (0..100_000).map(|_| rng.standard_normal()).collect();
        assert!(skewness(&normal).unwrap().abs() < 0.05);
        assert_eq!(skewness(&[1.0; 5]), Err(Error::ZeroVariance));
    }

    proptest! {
        #[test]
        fn mae_msse_time_permutation(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 2..30), rot in 0usize..30) {
            let xs: Vec<_> = rows.iter().map(|r| v(r)).collect();
            let mut ys = xs.clone();
            let k = rot % ys.len();
            ys.rotate_left(k);
            ys.reverse();
            prop_assert!((mae(&xs).unwrap() - mae(&ys).unwrap()).amax() < 1e-12);
            prop_assert!((msse(&xs).unwrap() - msse(&ys).unwrap()).amax() < 1e-12);
        }

        #[test]
        fn mape_scale_consistent(rows in prop::collection::vec((0.1f64..10.0, -3.0f64..3.0), 1..30), k in 0.01f64..100.0) {
            let y: Vec<_> = rows.iter().map(|r| v(&[r.0])).collect();
            let e: Vec<_> = rows.iter().map(|r| v(&[r.1])).collect();
            let ys: Vec<_> = y.iter().map(|x| x * k).collect();
            let es: Vec<_> = e.iter().map(|x| x * k).collect();
            let a = mape(&e, &y).unwrap()[0].unwrap();
            let b = mape(&es, &ys).unwrap()[0].unwrap();
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a));
        }
    }
}
