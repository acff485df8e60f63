//! Bayes-factor control charts for autocorrelated multivariate processes.
//!
//! A discount-weighted-regression local level filter ([`dwr`]) produces
//! one-step forecast error densities; [`bayes`] compares each against a
//! target density through the log Bayes factor; [`chart`] monitors that
//! statistic with a modified EWMA chart whose limits account for AR(1)
//! dependence; [`workflow`] ties the pieces into Phase I / Phase II.

pub mod bayes;
pub mod chart;
pub mod diagnostics;
pub mod dwr;
pub mod error;
pub mod matrix;
pub mod persist;
pub mod simulate;
pub mod workflow;

pub use bayes::{bf, lbf, lbf_series, lbf_with, Predictive, TargetSpec};
pub use chart::{
    asymptotic_sigma_z2, calibrate_c, design_chart, estimate_arl, ewma_update, fit_ar1, run_chart,
    simulate_run_length, Ar1Model, ArlEstimate, Calibration, ChartConfig, ChartPoint, RunLength,
    Status,
};
pub use diagnostics::FitReport;
pub use dwr::{steady_state_mean, steady_state_p, DwrConfig, FilterState, ForecastErrorDensity};
pub use error::{Error, Result};
pub use matrix::{RngStream, SpdMatrix};
pub use simulate::{LevelNoise, Scenario, ScenarioName};
pub use workflow::{
    difference, estimate_target, phase1, phase2, FittedModel, MonitorResult, Phase1Options,
    TargetSource,
};

pub use nalgebra::{DMatrix, DVector};
