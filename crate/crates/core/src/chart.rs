//! Modified EWMA chart for a serially correlated statistic.
//!
//! The charted series is modelled as AR(1); limits are `center ± c·σ_z`
//! with `σ_z²` the asymptotic EWMA variance under that AR(1), and `c` is
//! calibrated to a target in-control ARL by simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RngStream;

/// Run lengths at or beyond this are reported as censored.
pub const RUN_LENGTH_CAP: u64 = 10_000_000;

/// Bisection bracket for the limit multiplier.
pub const C_BRACKET: (f64, f64) = (0.5, 6.0);

/// Relative ARL tolerance at which calibration stops.
pub const ARL_REL_TOL: f64 = 0.02;

/// Bracket width at which calibration stops.
pub const C_WIDTH_TOL: f64 = 1e-3;

/// `x_t = intercept + φ x_{t-1} + ν_t`, `ν_t ~ N(0, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Model {
    pub intercept: f64,
    pub phi: f64,
    pub sigma2: f64,
}

impl Ar1Model {
    pub fn new(intercept: f64, phi: f64, sigma2: f64) -> Result<Self> {
        let m = Self {
            intercept,
            phi,
            sigma2,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi.abs() < 1.0) {
            return Err(Error::NonStationary(self.phi));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "innovation variance must be positive, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.intercept / (1.0 - self.phi)
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma2 / (1.0 - self.phi * self.phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartConfig {
    pub lambda: f64,
    pub c: f64,
    pub center: f64,
    pub sigma_z: f64,
    pub ucl: f64,
    pub lcl: f64,
}

impl ChartConfig {
    pub fn is_out(&self, z: f64) -> bool {
        z > self.ucl || z < self.lcl
    }

    /// Same chart with a different multiplier.
    pub fn with_c(&self, c: f64) -> Self {
        Self {
            c,
            ucl: self.center + c * self.sigma_z,
            lcl: self.center - c * self.sigma_z,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    InControl,
    OutOfControl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub t: usize,
    pub x: f64,
    pub z: f64,
    pub status: Status,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "EWMA smoothing must lie in (0, 1], got {lambda}"
        )))
    }
}

pub fn ewma_update(z_prev: f64, x: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(lambda * x + (1.0 - lambda) * z_prev)
}

/// `lim Var(z_t)` for an AR(1) input.
pub fn asymptotic_sigma_z2(lambda: f64, ar: &Ar1Model) -> Result<f64> {
    check_lambda(lambda)?;
    ar.validate()?;
    let a = ar.phi * (1.0 - lambda);
    if a.abs() >= 1.0 {
        return Err(Error::InvalidConfig(format!("|phi (1 - lambda)| = {} >= 1", a.abs())));
    }
    let phi2 = ar.phi * ar.phi;
    Ok(ar.sigma2 * lambda * (1.0 + a) / ((1.0 - phi2) * (2.0 - lambda) * (1.0 - a)))
}

/// OLS fit of `x_t` on `(1, x_{t-1})`, or on `x_{t-1}` alone.
pub fn fit_ar1(x: &[f64], include_intercept: bool) -> Result<Ar1Model> {
    const MIN_LEN: usize = 10;
    if x.len() < MIN_LEN {
        return Err(Error::TooShort {
            needed: MIN_LEN,
            got: x.len(),
        });
    }
    let lagged = &x[..x.len() - 1];
    let current = &x[1..];
    let m = lagged.len() as f64;

    let (intercept, phi) = if include_intercept {
        let mx = lagged.iter().sum::<f64>() / m;
        let my = current.iter().sum::<f64>() / m;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (a, b) in lagged.iter().zip(current) {
            sxx += (a - mx) * (a - mx);
            sxy += (a - mx) * (b - my);
        }
        if sxx == 0.0 {
            return Err(Error::ZeroVariance);
        }
        let phi = sxy / sxx;
        (my - phi * mx, phi)
    } else {
        let sxx: f64 = lagged.iter().map(|a| a * a).sum();
        if sxx == 0.0 {
            return Err(Error::ZeroVariance);
        }
        let sxy: f64 = lagged.iter().zip(current).map(|(a, b)| a * b).sum();
        (0.0, sxy / sxx)
    };
    // exact unit-root fits come out a few ulps either side of one
    if phi.abs() >= 1.0 - 1e-9 {
        return Err(Error::NonStationary(phi));
    }
    let k = if include_intercept { 2.0 } else { 1.0 };
    let rss: f64 = lagged
        .iter()
        .zip(current)
        .map(|(a, b)| {
            let r = b - intercept - phi * a;
            r * r
        })
        .sum();
    let sigma2 = rss / (m - k);
    if !(sigma2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ar1Model::new(intercept, phi, sigma2)
}

/// Time-invariant limits `center ± c·σ_z`.
pub fn design_chart(ar: &Ar1Model, lambda: f64, c: f64, center: f64) -> Result<ChartConfig> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidConfig(format!("limit multiplier must be positive, got {c}")));
    }
    let sigma_z = asymptotic_sigma_z2(lambda, ar)?.sqrt();
    Ok(ChartConfig {
        lambda,
        c,
        center,
        sigma_z,
        ucl: center + c * sigma_z,
        lcl: center - c * sigma_z,
    })
}

/// Streaming EWMA chart.
#[derive(Debug, Clone)]
pub struct Ewma {
    config: ChartConfig,
    z: f64,
    t: usize,
}

impl Ewma {
    pub fn new(config: ChartConfig, z0: f64) -> Self {
        Self { config, z: z0, t: 0 }
    }

    pub fn push(&mut self, x: f64) -> ChartPoint {
        let l = self.config.lambda;
        self.z = l * x + (1.0 - l) * self.z;
        self.t += 1;
        ChartPoint {
            t: self.t,
            x,
            z: self.z,
            status: if self.config.is_out(self.z) {
                Status::OutOfControl
            } else {
                Status::InControl
            },
        }
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

/// Charts every point; monitoring continues after a signal. `z0` defaults to the center.
pub fn run_chart(x: &[f64], config: &ChartConfig, z0: Option<f64>) -> Vec<ChartPoint> {
    let mut chart = Ewma::new(*config, z0.unwrap_or(config.center));
    x.iter().map(|&v| chart.push(v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLength {
    pub length: u64,
    pub censored: bool,
}

/// First exit time of the EWMA of an in-control AR(1) stream started in
/// its stationary distribution, with `z0` at the chart center.
pub fn simulate_run_length(config: &ChartConfig, ar: &Ar1Model, rng: &mut RngStream) -> RunLength {
    run_length_capped(config, ar, rng, RUN_LENGTH_CAP)
}

fn run_length_capped(config: &ChartConfig, ar: &Ar1Model, rng: &mut RngStream, cap: u64) -> RunLength {
    let sd = ar.sigma2.sqrt();
    let mut x = ar.mean() + ar.stationary_variance().sqrt() * rng.standard_normal();
    let mut z = config.center;
    let (l, ucl, lcl) = (config.lambda, config.ucl, config.lcl);
    for t in 1..=cap {
        x = ar.intercept + ar.phi * x + sd * rng.standard_normal();
        z = l * x + (1.0 - l) * z;
        if z > ucl || z < lcl {
            return RunLength {
                length: t,
                censored: false,
            };
        }
    }
    RunLength {
        length: cap,
        censored: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArlEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub reps: usize,
    pub censored: usize,
}

/// Mean run length over `reps` replications; replication `i` draws from `rng.child(i)`.
pub fn estimate_arl(config: &ChartConfig, ar: &Ar1Model, reps: usize, rng: &RngStream) -> ArlEstimate {
    match estimate_arl_budgeted(config, ar, reps, rng, None) {
        Some(e) => e,
        None => unreachable!("unbudgeted estimate never aborts"),
    }
}

/// Returns `None` once the summed run length exceeds `budget`.
fn estimate_arl_budgeted(
    config: &ChartConfig,
    ar: &Ar1Model,
    reps: usize,
    rng: &RngStream,
    budget: Option<u64>,
) -> Option<ArlEstimate> {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut total: u64 = 0;
    let mut censored = 0;
    for i in 0..reps {
        let cap = match budget {
            Some(b) => RUN_LENGTH_CAP.min(b - total + 1),
            None => RUN_LENGTH_CAP,
        };
        let mut child = rng.child(i as u64);
        let rl = run_length_capped(config, ar, &mut child, cap);
        total += rl.length;
        if let Some(b) = budget {
            if total > b {
                return None;
            }
        }
        if rl.censored {
            censored += 1;
        }
        let v = rl.length as f64;
        sum += v;
        sum_sq += v * v;
    }
    let n = reps as f64;
    let mean = sum / n;
    let var = if reps > 1 {
        (sum_sq - n * mean * mean).max(0.0) / (n - 1.0)
    } else {
        0.0
    };
    Some(ArlEstimate {
        mean,
        std_error: (var / n).sqrt(),
        reps,
        censored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c: f64,
    pub arl: ArlEstimate,
    pub iterations: usize,
}

/// Bisection on `c` over [`C_BRACKET`] until the simulated in-control ARL
/// is within [`ARL_REL_TOL`] of `target_arl` or the bracket is narrower
/// than [`C_WIDTH_TOL`].
///
/// Every candidate reuses the same replication streams, so the estimated
/// ARL is monotone in `c`.
pub fn calibrate_c(
    lambda: f64,
    ar: &Ar1Model,
    target_arl: f64,
    reps: usize,
    rng: &RngStream,
) -> Result<Calibration> {
    if !(target_arl > 1.0) {
        return Err(Error::InvalidConfig(format!("target ARL must exceed 1, got {target_arl}")));
    }
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    let base = design_chart(ar, lambda, 1.0, ar.mean())?;
    let budget = ((1.0 + ARL_REL_TOL) * target_arl * reps as f64).ceil() as u64;
    let (mut lo, mut hi) = C_BRACKET;
    let bracket_failure = Error::BracketFailure {
        target: target_arl,
        lo,
        hi,
    };

    let low = estimate_arl(&base.with_c(lo), ar, reps, rng);
    if low.mean >= target_arl {
        return Err(bracket_failure);
    }
    if let Some(high) = estimate_arl_budgeted(&base.with_c(hi), ar, reps, rng, Some(budget)) {
        if high.mean <= target_arl {
            return Err(bracket_failure);
        }
    }

    let mut iterations = 0;
    loop {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let est = estimate_arl_budgeted(&base.with_c(mid), ar, reps, rng, Some(budget));
        match est {
            Some(e) if ((e.mean - target_arl) / target_arl).abs() <= ARL_REL_TOL => {
                return Ok(Calibration {
                    c: mid,
                    arl: e,
                    iterations,
                });
            }
            Some(e) if e.mean < target_arl => lo = mid,
            _ => hi = mid,
        }
        if hi - lo < C_WIDTH_TOL {
            let c = 0.5 * (lo + hi);
            return Ok(Calibration {
                c,
                arl: estimate_arl(&base.with_c(c), ar, reps, rng),
                iterations,
            });
        }
    }
}
