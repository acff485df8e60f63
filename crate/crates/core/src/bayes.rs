//! Log Bayes factor of the one-step forecast error density against the
//! target error density `N_p(0, V)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dwr::FilterState;
use crate::error::{Error, Result};
use crate::matrix::SpdMatrix;

/// In-control description of the process: target mean `μ` and dispersion `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub mu: DVector<f64>,
    pub v: SpdMatrix,
    log_det_v: f64,
}

impl TargetSpec {
    pub fn new(mu: DVector<f64>, v: SpdMatrix) -> Result<Self> {
        if mu.len() != v.dim() {
            return Err(Error::DimensionMismatch {
                expected: v.dim(),
                found: mu.len(),
            });
        }
        let log_det_v = v.log_det();
        Ok(Self { mu, v, log_det_v })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn log_det_v(&self) -> f64 {
        self.log_det_v
    }
}

#[derive(Serialize, Deserialize)]
struct TargetDoc {
    #[serde(with = "crate::persist::vector_serde")]
    mu: DVector<f64>,
    #[serde(with = "crate::persist::spd_serde")]
    v: SpdMatrix,
}

impl Serialize for TargetSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TargetDoc {
            mu: self.mu.clone(),
            v: self.v.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TargetSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = TargetDoc::deserialize(d)?;
        TargetSpec::new(doc.mu, doc.v).map_err(serde::de::Error::custom)
    }
}

/// Forecast ingredients for one time step: `N(mean, (δ + P) S / δ)`.
///
/// Built either from a live [`FilterState`] or from frozen Phase I values.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictive {
    pub mean: DVector<f64>,
    pub delta: f64,
    pub p: f64,
    pub s: SpdMatrix,
}

impl Predictive {
    pub fn new(mean: DVector<f64>, delta: f64, p: f64, s: SpdMatrix) -> Result<Self> {
        crate::dwr::check_delta(delta)?;
        if !(p > 0.0) {
            return Err(Error::InvalidConfig(format!("P must be positive, got {p}")));
        }
        if mean.len() != s.dim() {
            return Err(Error::DimensionMismatch {
                expected: s.dim(),
                found: mean.len(),
            });
        }
        Ok(Self { mean, delta, p, s })
    }

    /// Uses the state's current `m_t`, `P_t`, `S_t` as the forecast for `y_{t+1}`.
    pub fn from_state(state: &FilterState) -> Result<Self> {
        let s = state.covariance()?;
        Self::new(state.m.clone(), state.delta, state.p, s)
    }
}

/// `log BF(t)` evaluated term by term, sharing one factorization of `S`.
pub fn lbf_with(y: &DVector<f64>, pred: &Predictive, target: &TargetSpec) -> Result<f64> {
    let p = target.dim();
    if pred.mean.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: pred.mean.len(),
        });
    }
    if y.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: y.len(),
        });
    }
    let pf = p as f64;
    let d = pred.delta;
    let q_target = target.v.quad_form(&(y - &target.mu))?;
    let q_pred = pred.s.quad_form(&(y - &pred.mean))?;
    Ok(pf * d.ln() / 2.0 + target.log_det_v / 2.0
        - pf * (d + pred.p).ln() / 2.0
        - pred.s.log_det() / 2.0
        + q_target / 2.0
        - d * q_pred / (2.0 * (d + pred.p)))
}

/// `log BF(t)` for the observation following `state` (uses `m_{t-1}`, `P_{t-1}`, `S_{t-1}`).
pub fn lbf(y: &DVector<f64>, state: &FilterState, target: &TargetSpec) -> Result<f64> {
    lbf_with(y, &Predictive::from_state(state)?, target)
}

/// `BF(t) = exp(LBF(t))`; errors instead of returning `inf` or `0`.
pub fn bf(y: &DVector<f64>, state: &FilterState, target: &TargetSpec) -> Result<f64> {
    bf_from_log(lbf(y, state, target)?)
}

pub fn bf_from_log(l: f64) -> Result<f64> {
    let b = l.exp();
    if b.is_finite() && b > 0.0 {
        Ok(b)
    } else {
        Err(Error::Overflow(l))
    }
}

/// Scores each observation before stepping the filter with it.
pub fn lbf_series(
    data: &[DVector<f64>],
    filter: &mut FilterState,
    target: &TargetSpec,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(data.len());
    for y in data {
        out.push(lbf(y, filter, target)?);
        filter.step(y)?;
    }
    Ok(out)
}
