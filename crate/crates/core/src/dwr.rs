//! Multivariate discount-weighted-regression local level filter.
//!
//! The observation model is `y_t = μ_t + ε_t`, `μ_t = μ_{t-1} + ω_t` with
//! `ε_t ~ N(0, Σ)`. The level posterior is `N(m_t, P_t Σ)` where
//!
//! ```text
//! m_t = (δ m_{t-1} + P_{t-1} y_t) / (δ + P_{t-1})
//! P_t = 1 / (δ + P_{t-1})
//! ```
//!
//! and `Σ` is estimated by `S_t = (1/t) Σ δ e_i e_iᵀ / (δ + P_{i-1})`.
//! The level-noise scale is never materialized; the discount recursion
//! is used directly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{symmetrize, SpdMatrix};

pub const DEFAULT_P0: f64 = 1.0 / 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DwrConfig {
    pub delta: f64,
    pub m0: DVector<f64>,
    pub p0: f64,
}

impl DwrConfig {
    /// Zero prior mean and `P0 = 1/1000`.
    pub fn new(dim: usize, delta: f64) -> Self {
        Self {
            delta,
            m0: DVector::zeros(dim),
            p0: DEFAULT_P0,
        }
    }

    pub fn with_m0(mut self, m0: DVector<f64>) -> Self {
        self.m0 = m0;
        self
    }

    pub fn with_p0(mut self, p0: f64) -> Self {
        self.p0 = p0;
        self
    }

    pub fn dim(&self) -> usize {
        self.m0.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.p0 > 0.0) || !self.p0.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "prior scale P0 must be positive, got {}",
                self.p0
            )));
        }
        if self.dim() == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "discount factor must lie in (0, 1], got {delta}"
        )))
    }
}

/// Running filter quantities after `t` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub t: usize,
    pub delta: f64,
    #[serde(with = "crate::persist::vector_serde")]
    pub m: DVector<f64>,
    pub p: f64,
    #[serde(with = "crate::persist::matrix_serde")]
    pub sum_outer: DMatrix<f64>,
}

/// `N_p(0, cov)` with `cov = (δ + P_t) S_t / δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastErrorDensity {
    pub mean: DVector<f64>,
    pub cov: SpdMatrix,
}

impl FilterState {
    pub fn init(config: &DwrConfig) -> Result<Self> {
        config.validate()?;
        let p = config.dim();
        Ok(Self {
            t: 0,
            delta: config.delta,
            m: config.m0.clone(),
            p: config.p0,
            sum_outer: DMatrix::zeros(p, p),
        })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    /// Advances the filter by one observation and returns the one-step
    /// forecast error `e_t = y_t - m_{t-1}`.
    pub fn step(&mut self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        let d = self.delta;
        let denom = d + self.p;
        let e = y - &self.m;
        self.m = (&self.m * d + y * self.p) / denom;
        self.sum_outer += (&e * e.transpose()) * (d / denom);
        self.sum_outer = symmetrize(&self.sum_outer);
        self.p = 1.0 / denom;
        self.t += 1;
        Ok(e)
    }

    /// `S_t` as a raw matrix (zero before the first observation).
    pub fn s_raw(&self) -> DMatrix<f64> {
        if self.t == 0 {
            self.sum_outer.clone()
        } else {
            &self.sum_outer / self.t as f64
        }
    }

    /// `S_t`, once it is positive definite.
    pub fn covariance(&self) -> Result<SpdMatrix> {
        if self.t == 0 {
            return Err(Error::CovarianceNotReady { t: 0 });
        }
        SpdMatrix::new(self.s_raw()).map_err(|_| Error::CovarianceNotReady { t: self.t })
    }

    pub fn forecast_error_density(&self) -> Result<ForecastErrorDensity> {
        let s = self.covariance()?;
        let cov = s.scaled((self.delta + self.p) / self.delta)?;
        Ok(ForecastErrorDensity {
            mean: DVector::zeros(self.dim()),
            cov,
        })
    }
}

/// Limit of `P_t`: the positive root of `P² + δP - 1 = 0`.
pub fn steady_state_p(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(((delta * delta + 4.0).sqrt() - delta) / 2.0)
}

/// Steady-state approximation `m0 + P/(δ+P) Σ e_i` of the level estimate.
pub fn steady_state_mean(
    m0: &DVector<f64>,
    errors: &[DVector<f64>],
    delta: f64,
) -> Result<DVector<f64>> {
    let p = steady_state_p(delta)?;
    let gain = p / (delta + p);
    let mut m = m0.clone();
    for e in errors {
        if e.len() != m0.len() {
            return Err(Error::DimensionMismatch {
                expected: m0.len(),
                found: e.len(),
            });
        }
        m += e * gain;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn init_validates() {
        let s = FilterState::init(&DwrConfig::new(2, 0.5)).unwrap();
        assert_eq!(s.t, 0);
        assert_eq!(s.p, 0.001);
        assert!(matches!(
            FilterState::init(&DwrConfig::new(2, 0.0)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            FilterState::init(&DwrConfig::new(2, 1.2)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            FilterState::init(&DwrConfig::new(2, 0.5).with_p0(0.0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn step_zero_observation() {
        let mut s = FilterState::init(&DwrConfig::new(1, 1.0).with_p0(1.0)).unwrap();
        let e = s.step(&v(&[0.0])).unwrap();
        assert_eq!(e[0], 0.0);
        assert_eq!(s.m[0], 0.0);
        assert_eq!(s.p, 0.5);
        assert_eq!(s.s_raw()[(0, 0)], 0.0);
    }

    #[test]
    fn step_hand_values() {
        let mut s = FilterState::init(&DwrConfig::new(1, 0.5)).unwrap();
        let e = s.step(&v(&[2.0])).unwrap();
        assert_eq!(e[0], 2.0);
        assert_abs_diff_eq!(s.m[0], 0.002 / 0.501, epsilon = 1e-15);
        assert_abs_diff_eq!(s.m[0], 0.0039920, epsilon = 1e-7);
        assert_abs_diff_eq!(s.p, 1.9960080, epsilon = 1e-7);
        assert_abs_diff_eq!(s.s_raw()[(0, 0)], 3.9920160, epsilon = 1e-7);
    }

    #[test]
    fn step_rejects_wrong_dimension() {
        let mut s = FilterState::init(&DwrConfig::new(2, 0.5)).unwrap();
        assert_eq!(
            s.step(&v(&[1.0])),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn forecast_density_hand_value() {
        let s = FilterState {
            t: 1,
            delta: 0.9,
            m: v(&[0.0]),
            p: 0.1,
            sum_outer: DMatrix::from_element(1, 1, 1.0),
        };
        let f = s.forecast_error_density().unwrap();
        assert_abs_diff_eq!(f.cov.matrix()[(0, 0)], 1.0 / 0.9, epsilon = 1e-14);
        assert_eq!(f.mean[0], 0.0);
    }

    #[test]
    fn forecast_density_at_limit() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]);
        let s = FilterState {
            t: 1,
            delta: 1.0,
            m: DVector::zeros(2),
            p: steady_state_p(1.0).unwrap(),
            sum_outer: sigma.clone(),
        };
        let f = s.forecast_error_density().unwrap();
        assert_abs_diff_eq!(f.cov.matrix().clone(), sigma * 1.618034, epsilon = 1e-5);
    }

    #[test]
    fn forecast_density_not_ready() {
        let s = FilterState::init(&DwrConfig::new(2, 0.5)).unwrap();
        assert_eq!(
            s.forecast_error_density(),
            Err(Error::CovarianceNotReady { t: 0 })
        );
        let mut s = s;
        s.step(&v(&[1.0, 2.0])).unwrap();
        // rank one after a single bivariate observation
        assert_eq!(
            s.forecast_error_density(),
            Err(Error::CovarianceNotReady { t: 1 })
        );
    }

    #[test]
    fn steady_state_values() {
        assert_abs_diff_eq!(steady_state_p(1.0).unwrap(), 0.6180340, epsilon = 1e-7);
        assert_abs_diff_eq!(steady_state_p(0.2).unwrap(), 0.9049876, epsilon = 1e-7);
        assert!(steady_state_p(0.0).is_err());
    }

    #[test]
    fn steady_state_mean_cases() {
        let m0 = v(&[0.0]);
        assert_eq!(steady_state_mean(&m0, &[], 1.0).unwrap(), m0);
        let m = steady_state_mean(&m0, &[v(&[1.0])], 1.0).unwrap();
        assert_abs_diff_eq!(m[0], 0.381966, epsilon = 1e-6);
    }

    #[test]
    fn steady_state_mean_tracks_exact_recursion() {
        // Start the exact recursion at its limit so only the constant-gain
        // approximation is compared.
        let delta = 0.7;
        let limit = steady_state_p(delta).unwrap();
        let cfg = DwrConfig::new(2, delta).with_p0(limit);
        let mut s = FilterState::init(&cfg).unwrap();
        let mut errs = Vec::new();
        let mut x = 0.3f64;
        for i in 0..100 {
            x = (x * 3.7 + 0.11).fract();
            let y = v(&[x, (i as f64 * 0.37).sin()]);
            errs.push(s.step(&y).unwrap());
        }
        let approx = steady_state_mean(&cfg.m0, &errs, delta).unwrap();
        assert!((approx - &s.m).amax() < 1e-6);
    }

    proptest! {
        #[test]
        fn steady_state_is_fixed_point(delta in 0.001f64..=1.0) {
            let p = steady_state_p(delta).unwrap();
            prop_assert!((p - 1.0 / (delta + p)).abs() < 1e-12);
        }

        #[test]
        fn residual_identity(delta in 0.05f64..=1.0, p0 in 0.001f64..3.0,
                             m in prop::collection::vec(-10.0f64..10.0, 3),
                             y in prop::collection::vec(-10.0f64..10.0, 3)) {
            let cfg = DwrConfig::new(3, delta).with_p0(p0).with_m0(v(&m));
            let mut s = FilterState::init(&cfg).unwrap();
            let y = v(&y);
            let e = s.step(&y).unwrap();
            let r = &y - &s.m;
            let expect = &e * (delta / (delta + p0));
            prop_assert!((r - expect).amax() < 1e-10);
        }
    }
}
