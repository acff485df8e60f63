//! Two-phase monitoring.
//!
//! Phase I runs the filter over historical data for each candidate
//! discount factor, keeps the one whose MSSE is closest to one, models
//! the resulting LBF series as AR(1) and calibrates the chart. Phase II
//! scores new observations against the frozen Phase I model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bayes::{lbf, lbf_with, Predictive, TargetSpec};
use crate::chart::{
    calibrate_c, design_chart, fit_ar1, run_chart, Ar1Model, Calibration, ChartConfig, ChartPoint,
    Ewma, Status,
};
use crate::diagnostics::{mean, FitReport};
use crate::dwr::{steady_state_p, DwrConfig, FilterState, DEFAULT_P0};
use crate::error::{Error, Result};
use crate::matrix::{RngStream, SpdMatrix};

pub const SCHEMA_VERSION: u32 = 1;

pub const MIN_PHASE1_LEN: usize = 30;

/// One-sided run length of charted LBF values that raises a warning.
pub const RUN_WARNING_LEN: usize = 8;

pub fn default_delta_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSource {
    Given(TargetSpec),
    /// Sample mean and covariance of the (possibly differenced) Phase I data.
    Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase1Options {
    pub delta_grid: Vec<f64>,
    pub lambda: f64,
    pub target_arl: f64,
    pub reps: usize,
    pub p0: f64,
    /// Prior mean; defaults to the target mean.
    pub m0: Option<DVector<f64>>,
    /// Observations consumed before diagnostics and LBF are recorded;
    /// defaults to `max(10, 2p)`.
    pub warmup: Option<usize>,
    pub recenter: bool,
    pub tracking: bool,
    pub difference: bool,
    /// Skip calibration and use this multiplier.
    pub c: Option<f64>,
}

impl Default for Phase1Options {
    fn default() -> Self {
        Self {
            delta_grid: default_delta_grid(),
            lambda: 0.05,
            target_arl: 370.4,
            reps: 100_000,
            p0: DEFAULT_P0,
            m0: None,
            warmup: None,
            recenter: false,
            tracking: false,
            difference: false,
            c: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub delta: f64,
    pub fit: Option<FitReport>,
    pub msse_distance: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub t: usize,
    pub message: String,
}

/// Everything Phase II needs, frozen at the end of Phase I.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub schema_version: u32,
    pub delta: f64,
    #[serde(with = "crate::persist::vector_serde")]
    pub m_opt: DVector<f64>,
    #[serde(with = "crate::persist::spd_serde")]
    pub s_opt: SpdMatrix,
    /// Steady-state `P` used for every Phase II forecast.
    pub p_star: f64,
    pub target: TargetSpec,
    pub ar: Ar1Model,
    pub chart: ChartConfig,
    /// Subtracted from every LBF before charting (zero unless recentred).
    pub shift: f64,
    pub recenter: bool,
    pub tracking: bool,
    pub difference: bool,
    #[serde(with = "crate::persist::opt_vector_serde")]
    pub last_observation: Option<DVector<f64>>,
    /// Filter state after the last Phase I observation.
    pub filter: FilterState,
    pub n_phase1: usize,
    pub warmup: usize,
    pub fit_report: FitReport,
    pub candidates: Vec<CandidateReport>,
    pub calibration: Option<Calibration>,
    pub phase1_points: Vec<ChartPoint>,
    pub warnings: Vec<Warning>,
}

impl FittedModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        match raw.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Schema(format!(
                    "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
                )))
            }
            None => return Err(Error::Schema("missing schema_version".into())),
        }
        serde_json::from_value(raw).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    fn frozen_predictive(&self) -> Result<Predictive> {
        Predictive::new(self.m_opt.clone(), self.delta, self.p_star, self.s_opt.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorResult {
    pub points: Vec<ChartPoint>,
    pub signals: Vec<usize>,
    pub lbf: Vec<f64>,
    pub warnings: Vec<Warning>,
}

/// `x_t = y_t - y_{t-1}`.
pub fn difference(data: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    if data.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: data.len(),
        });
    }
    data.windows(2)
        .map(|w| {
            if w[0].len() != w[1].len() {
                return Err(Error::DimensionMismatch {
                    expected: w[0].len(),
                    found: w[1].len(),
                });
            }
            Ok(&w[1] - &w[0])
        })
        .collect()
}

/// Sample mean and covariance (divisor `n - 1`).
pub fn estimate_target(data: &[DVector<f64>]) -> Result<TargetSpec> {
    let p = data.first().ok_or(Error::EmptyInput)?.len();
    if data.len() < p + 2 {
        return Err(Error::TooShort {
            needed: p + 2,
            got: data.len(),
        });
    }
    let n = data.len() as f64;
    let mut mu = DVector::<f64>::zeros(p);
    for y in data {
        if y.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: y.len(),
            });
        }
        mu += y;
    }
    mu /= n;
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for y in data {
        let d = y - &mu;
        cov += &d * d.transpose();
    }
    cov /= n - 1.0;
    TargetSpec::new(mu, SpdMatrix::new(cov)?)
}

struct CandidateRun {
    report: FitReport,
    lbf: Vec<f64>,
    state: FilterState,
}

/// Filters `data` with one discount factor, recording diagnostics and
/// tracking-mode LBF for every observation after the warm-up.
fn run_candidate(
    data: &[DVector<f64>],
    config: &DwrConfig,
    target: &TargetSpec,
    warmup: usize,
) -> Result<CandidateRun> {
    let mut state = FilterState::init(config)?;
    let mut errors = Vec::new();
    let mut covs = Vec::new();
    let mut obs = Vec::new();
    let mut lbfs = Vec::new();
    for (i, y) in data.iter().enumerate() {
        if i >= warmup {
            let density = state.forecast_error_density()?;
            lbfs.push(lbf(y, &state, target)?);
            let e = state.step(y)?;
            errors.push(e);
            covs.push(density.cov);
            obs.push(y.clone());
        } else {
            state.step(y)?;
        }
    }
    let report = FitReport::build(&errors, &covs, &obs)?;
    Ok(CandidateRun {
        report,
        lbf: lbfs,
        state,
    })
}

/// Runs are counted on the charted LBF values, not on the EWMA path.
fn run_warnings(points: &[ChartPoint], center: f64) -> Vec<Warning> {
    let mut out = Vec::new();
    let mut run = 0usize;
    let mut side = 0i8;
    for pt in points {
        let s = if pt.x > center {
            1
        } else if pt.x < center {
            -1
        } else {
            0
        };
        if s != 0 && s == side {
            run += 1;
        } else {
            side = s;
            run = usize::from(s != 0);
        }
        if run == RUN_WARNING_LEN {
            let where_ = if side > 0 { "above" } else { "below" };
            out.push(Warning {
                t: pt.t,
                message: format!("{RUN_WARNING_LEN} consecutive LBF values {where_} the center line"),
            });
        }
    }
    out
}

/// Fits and calibrates the monitoring model on historical data.
pub fn phase1(
    data: &[DVector<f64>],
    target: TargetSource,
    opts: &Phase1Options,
    rng: &RngStream,
) -> Result<FittedModel> {
    let series = if opts.difference {
        difference(data)?
    } else {
        data.to_vec()
    };
    if series.len() < MIN_PHASE1_LEN {
        return Err(Error::TooShort {
            needed: MIN_PHASE1_LEN,
            got: series.len(),
        });
    }
    let p = series[0].len();
    let mut target = match target {
        TargetSource::Given(t) => t,
        TargetSource::Estimate => estimate_target(&series)?,
    };
    if target.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: target.dim(),
        });
    }
    if opts.difference {
        target = TargetSpec::new(DVector::zeros(p), target.v.clone())?;
    }
    if opts.delta_grid.is_empty() {
        return Err(Error::InvalidConfig("empty discount grid".into()));
    }
    let warmup = opts.warmup.unwrap_or((2 * p).max(10));
    if series.len() < warmup + MIN_PHASE1_LEN / 2 {
        return Err(Error::TooShort {
            needed: warmup + MIN_PHASE1_LEN / 2,
            got: series.len(),
        });
    }
    let m0 = opts.m0.clone().unwrap_or_else(|| target.mu.clone());

    let mut candidates = Vec::with_capacity(opts.delta_grid.len());
    let mut best: Option<(f64, f64, CandidateRun)> = None;
    for &delta in &opts.delta_grid {
        let config = DwrConfig::new(p, delta).with_m0(m0.clone()).with_p0(opts.p0);
        config.validate()?;
        match run_candidate(&series, &config, &target, warmup) {
            Ok(run) => {
                let dist = run.report.msse_distance();
                candidates.push(CandidateReport {
                    delta,
                    fit: Some(run.report.clone()),
                    msse_distance: Some(dist),
                    failure: None,
                });
                if best.as_ref().is_none_or(|(_, d, _)| dist < *d) {
                    best = Some((delta, dist, run));
                }
            }
            Err(e @ (Error::CovarianceNotReady { .. } | Error::NotPositiveDefinite)) => {
                candidates.push(CandidateReport {
                    delta,
                    fit: None,
                    msse_distance: None,
                    failure: Some(e.to_string()),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let (delta, _, run) = best.ok_or(Error::DegenerateFit)?;
    let s_opt = run.state.covariance().map_err(|_| Error::DegenerateFit)?;
    let p_star = steady_state_p(delta)?;
    let m_opt = run.state.m.clone();

    // Phase I LBF is computed in the mode Phase II will use.
    let phase1_lbf = if opts.tracking {
        run.lbf
    } else {
        let pred = Predictive::new(m_opt.clone(), delta, p_star, s_opt.clone())?;
        series[warmup..]
            .iter()
            .map(|y| lbf_with(y, &pred, &target))
            .collect::<Result<Vec<_>>>()?
    };

    let ar = fit_ar1(&phase1_lbf, true)?;
    let lbf_mean = mean(&phase1_lbf);
    let (shift, center) = if opts.recenter {
        let probe = design_chart(&ar, opts.lambda, 1.0, lbf_mean)?;
        let z = run_chart(&phase1_lbf, &probe, None);
        (z.iter().map(|p| p.z).sum::<f64>() / z.len() as f64, 0.0)
    } else {
        (0.0, lbf_mean)
    };

    let (c, calibration) = match opts.c {
        Some(c) => (c, None),
        None => {
            let cal = calibrate_c(opts.lambda, &ar, opts.target_arl, opts.reps, rng)?;
            (cal.c, Some(cal))
        }
    };
    let chart = design_chart(&ar, opts.lambda, c, center)?;
    let charted: Vec<f64> = phase1_lbf.iter().map(|x| x - shift).collect();
    let mut phase1_points = run_chart(&charted, &chart, Some(lbf_mean - shift));
    for (i, pt) in phase1_points.iter_mut().enumerate() {
        pt.t = warmup + i + 1;
    }
    let mut warnings: Vec<Warning> = phase1_points
        .iter()
        .filter(|pt| pt.status == Status::OutOfControl)
        .map(|pt| Warning {
            t: pt.t,
            message: "Phase I point outside the control limits".into(),
        })
        .collect();
    warnings.extend(run_warnings(&phase1_points, chart.center));

    Ok(FittedModel {
        schema_version: SCHEMA_VERSION,
        delta,
        m_opt,
        s_opt,
        p_star,
        target,
        ar,
        chart,
        shift,
        recenter: opts.recenter,
        tracking: opts.tracking,
        difference: opts.difference,
        last_observation: if opts.difference { data.last().cloned() } else { None },
        filter: run.state,
        n_phase1: series.len(),
        warmup,
        fit_report: run.report,
        candidates,
        calibration,
        phase1_points,
        warnings,
    })
}

/// Scores and charts new observations with the frozen model.
pub fn phase2(model: &FittedModel, data: &[DVector<f64>]) -> Result<MonitorResult> {
    let series = if model.difference && !data.is_empty() {
        let last = model
            .last_observation
            .clone()
            .ok_or_else(|| Error::Schema("differenced model lacks last_observation".into()))?;
        let mut full = Vec::with_capacity(data.len() + 1);
        full.push(last);
        full.extend_from_slice(data);
        difference(&full)?
    } else {
        data.to_vec()
    };

    let lbf_values = if model.tracking {
        let mut state = model.filter.clone();
        series
            .iter()
            .map(|y| {
                let l = lbf(y, &state, &model.target)?;
                state.step(y)?;
                Ok(l)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let pred = model.frozen_predictive()?;
        series
            .iter()
            .map(|y| lbf_with(y, &pred, &model.target))
            .collect::<Result<Vec<_>>>()?
    };

    let mut chart = Ewma::new(model.chart, model.chart.center);
    let points: Vec<ChartPoint> = lbf_values
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut pt = chart.push(x - model.shift);
            pt.t = model.n_phase1 + i + 1;
            pt
        })
        .collect();
    let signals = points
        .iter()
        .filter(|p| p.status == Status::OutOfControl)
        .map(|p| p.t)
        .collect();
    let warnings = run_warnings(&points, model.chart.center);
    Ok(MonitorResult {
        points,
        signals,
        lbf: lbf_values,
        warnings,
    })
}
