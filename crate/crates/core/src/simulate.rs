//! Process generators: the four bivariate study scenarios, a local level
//! process matched to the discount filter, and stationary AR(1) streams.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bayes::{lbf_series, TargetSpec};
use crate::chart::Ar1Model;
use crate::diagnostics::{mean, skewness, variance};
use crate::dwr::{DwrConfig, FilterState};
use crate::error::{Error, Result};
use crate::matrix::{sample_mvn, RngStream, SpdMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    InControl,
    MeanShift,
    CovShift,
    BothShift,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 4] = [
        ScenarioName::InControl,
        ScenarioName::MeanShift,
        ScenarioName::CovShift,
        ScenarioName::BothShift,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::InControl => "in_control",
            ScenarioName::MeanShift => "mean_shift",
            ScenarioName::CovShift => "cov_shift",
            ScenarioName::BothShift => "both_shift",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: ScenarioName,
    pub mu: DVector<f64>,
    pub cov: SpdMatrix,
}

impl Scenario {
    pub fn by_name(name: ScenarioName) -> Scenario {
        study_scenarios()
            .into_iter()
            .find(|s| s.name == name)
            .expect("every name has a scenario")
    }
}

/// In-control `N2(μ, V)` and the three shifted variants.
pub fn study_scenarios() -> [Scenario; 4] {
    let mu = DVector::from_vec(vec![0.0, 0.0]);
    let mu_d = DVector::from_vec(vec![0.5, 0.0]);
    let v = SpdMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 5.0]]).expect("V is positive definite");
    let v_d = SpdMatrix::from_rows(&[&[1.0, 2.5], &[2.5, 8.0]]).expect("V_d is positive definite");
    [
        Scenario {
            name: ScenarioName::InControl,
            mu: mu.clone(),
            cov: v.clone(),
        },
        Scenario {
            name: ScenarioName::MeanShift,
            mu: mu_d.clone(),
            cov: v.clone(),
        },
        Scenario {
            name: ScenarioName::CovShift,
            mu,
            cov: v_d.clone(),
        },
        Scenario {
            name: ScenarioName::BothShift,
            mu: mu_d,
            cov: v_d,
        },
    ]
}

/// The in-control scenario as a target density.
pub fn study_target() -> TargetSpec {
    let s = Scenario::by_name(ScenarioName::InControl);
    TargetSpec::new(s.mu, s.cov).expect("dimensions agree")
}

pub fn gen_iid(s: &Scenario, n: usize, rng: &mut RngStream) -> Result<Vec<DVector<f64>>> {
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one draw".into()));
    }
    sample_mvn(&s.mu, &s.cov, n, rng)
}

/// Scale of the level noise `ω_t ~ N(0, Ω_t Σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelNoise {
    /// `Ω_1 = P0/δ`, `Ω_t = P_{t-1}(1/δ - P_{t-2})` with `μ_0 = m0`: the
    /// process for which the discount recursion is the exact Kalman filter,
    /// so `E[e_t e_tᵀ] = (δ + P_{t-1}) Σ / δ` at every step. The steady
    /// value is `P³/δ`.
    Matched,
    /// A fixed `Ω`; zero gives i.i.d. `N(m0, Σ)` draws.
    Constant(f64),
}

/// Local level process `y_t = μ_t + ε_t`, `μ_t = μ_{t-1} + ω_t`, `μ_0 = m0`.
pub fn gen_dwr(
    config: &DwrConfig,
    sigma: &SpdMatrix,
    n: usize,
    noise: LevelNoise,
    rng: &mut RngStream,
) -> Result<Vec<DVector<f64>>> {
    config.validate()?;
    if sigma.dim() != config.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.dim(),
            found: sigma.dim(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one draw".into()));
    }
    let d = config.delta;
    if let LevelNoise::Matched = noise {
        if config.p0 > 1.0 / d {
            return Err(Error::InvalidConfig(format!(
                "matched level noise needs P0 <= 1/delta, got P0 = {}",
                config.p0
            )));
        }
    }
    if let LevelNoise::Constant(w) = noise {
        if !(w >= 0.0) {
            return Err(Error::InvalidConfig(format!("level noise must be >= 0, got {w}")));
        }
    }
    let p = config.dim();
    let zero = DVector::zeros(p);
    let mut level = config.m0.clone();
    let mut p_prev2 = f64::NAN;
    let mut p_prev = config.p0;
    let mut out = Vec::with_capacity(n);
    for t in 1..=n {
        let omega = match noise {
            LevelNoise::Constant(w) => w,
            LevelNoise::Matched if t == 1 => p_prev / d,
            LevelNoise::Matched => p_prev * (1.0 / d - p_prev2),
        };
        if omega > 0.0 {
            let w = sample_mvn(&zero, sigma, 1, rng)?.pop().expect("one draw");
            level += w * omega.sqrt();
        }
        let eps = sample_mvn(&zero, sigma, 1, rng)?.pop().expect("one draw");
        out.push(&level + eps);
        p_prev2 = p_prev;
        p_prev = 1.0 / (d + p_prev);
    }
    Ok(out)
}

/// Stationary-start AR(1) realization.
pub fn gen_ar1(ar: &Ar1Model, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    ar.validate()?;
    let sd = ar.sigma2.sqrt();
    let mut x = ar.mean() + ar.stationary_variance().sqrt() * rng.standard_normal();
    Ok((0..n)
        .map(|_| {
            x = ar.intercept + ar.phi * x + sd * rng.standard_normal();
            x
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub scenario: ScenarioName,
    pub lbf: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub delta: f64,
    pub n: usize,
    pub warmup: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            delta: 0.9,
            n: 1000,
            warmup: 100,
        }
    }
}

/// LBF samples for each of the four scenarios.
///
/// The filter starts at the target mean, is warmed on `warmup` in-control
/// draws, then scores `n` draws from the scenario. Scenario `i` uses
/// `rng.child(i)`.
pub fn lbf_study(cfg: &StudyConfig, rng: &RngStream) -> Result<Vec<PanelSummary>> {
    let target = study_target();
    let in_control = Scenario::by_name(ScenarioName::InControl);
    study_scenarios()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = rng.child(i as u64);
            let warm = gen_iid(&in_control, cfg.warmup.max(1), &mut r)?;
            let scored = gen_iid(s, cfg.n, &mut r)?;
            let mut filter =
                FilterState::init(&DwrConfig::new(2, cfg.delta).with_m0(target.mu.clone()))?;
            for y in &warm {
                filter.step(y)?;
            }
            let lbf = lbf_series(&scored, &mut filter, &target)?;
            Ok(PanelSummary {
                scenario: s.name,
                mean: mean(&lbf),
                std_error: (variance(&lbf) / lbf.len() as f64).sqrt(),
                skewness: skewness(&lbf)?,
                lbf,
            })
        })
        .collect()
}
