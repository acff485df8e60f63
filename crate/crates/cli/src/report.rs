//! Phase I text summary and the Phase II run report.

use std::fmt::Write as _;

use bfchart::workflow::Warning;
use bfchart::{ChartConfig, ChartPoint, FitReport, FittedModel, MonitorResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub seed: u64,
    pub model_sha256: String,
    pub data_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub delta: f64,
    pub p_star: f64,
    pub shift: f64,
    pub recenter: bool,
    pub tracking: bool,
    pub difference: bool,
    pub n_phase1: usize,
    pub n_phase2: usize,
}

/// Everything `monitor` writes. Contains no timestamps, so identical
/// inputs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metadata: Metadata,
    pub config: ConfigEcho,
    pub fit_report: FitReport,
    pub chart: ChartConfig,
    pub points: Vec<ChartPoint>,
    pub lbf: Vec<f64>,
    pub signals: Vec<usize>,
    pub phase1_warnings: Vec<Warning>,
    pub warnings: Vec<Warning>,
}

impl RunReport {
    pub fn new(model: &FittedModel, result: MonitorResult, seed: u64, model_sha256: String, data_sha256: String) -> Self {
        Self {
            metadata: Metadata {
                tool: "bfchart".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                schema_version: model.schema_version,
                seed,
                model_sha256,
                data_sha256,
            },
            config: ConfigEcho {
                delta: model.delta,
                p_star: model.p_star,
                shift: model.shift,
                recenter: model.recenter,
                tracking: model.tracking,
                difference: model.difference,
                n_phase1: model.n_phase1,
                n_phase2: result.points.len(),
            },
            fit_report: model.fit_report.clone(),
            chart: model.chart,
            points: result.points,
            lbf: result.lbf,
            signals: result.signals,
            phase1_warnings: model.warnings.clone(),
            warnings: result.warnings,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn join(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

pub fn phase1_summary(model: &FittedModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Phase I: {} observations, warm-up {}", model.n_phase1, model.warmup);
    let _ = writeln!(s, "{:>6}  {:>10}  {:<24} {:<24} MAPE", "delta", "|MSSE-1|", "MSSE", "MAE");
    for c in &model.candidates {
        match (&c.fit, c.msse_distance) {
            (Some(f), Some(d)) => {
                let mape = f
                    .mape
                    .iter()
                    .map(|m| m.map_or("-".to_string(), |v| format!("{v:.4}")))
                    .collect::<Vec<_>>()
                    .join(" ");
                let mark = if c.delta == model.delta { " *" } else { "" };
                let _ = writeln!(
                    s,
                    "{:>6.3}  {:>10.4}  {:<24} {:<24} {mape}{mark}",
                    c.delta,
                    d,
                    join(f.msse.iter().copied()),
                    join(f.mae.iter().copied())
                );
            }
            _ => {
                let why = c.failure.as_deref().unwrap_or("failed");
                let _ = writeln!(s, "{:>6.3}  {why}", c.delta);
            }
        }
    }
    let _ = writeln!(s, "chosen delta: {} (steady-state P = {:.6})", model.delta, model.p_star);
    let ar = &model.ar;
    let _ = writeln!(
        s,
        "LBF AR(1): intercept {:.6}, phi {:.6}, sigma2 {:.6}",
        ar.intercept, ar.phi, ar.sigma2
    );
    let ch = &model.chart;
    let _ = writeln!(s, "EWMA: lambda {}, c {:.4}, sigma_z {:.6}", ch.lambda, ch.c, ch.sigma_z);
    let _ = writeln!(s, "limits: LCL {:.6}  CL {:.6}  UCL {:.6}", ch.lcl, ch.center, ch.ucl);
    if model.recenter {
        let _ = writeln!(s, "recentred: LBF shifted by {:.6}", model.shift);
    }
    if let Some(cal) = &model.calibration {
        let _ = writeln!(
            s,
            "calibrated ARL {:.1} (se {:.1}, {} reps, {} bisection steps)",
            cal.arl.mean, cal.arl.std_error, cal.arl.reps, cal.iterations
        );
    }
    let _ = writeln!(s, "{} warning(s)", model.warnings.len());
    for w in &model.warnings {
        let _ = writeln!(s, "  t={}: {}", w.t, w.message);
    }
    s
}
