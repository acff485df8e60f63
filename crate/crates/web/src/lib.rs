//! Browser demo. Every export takes plain numbers and returns a JSON
//! string that the page draws on a canvas.

use bfchart::simulate::{gen_iid, lbf_study, study_scenarios, study_target, StudyConfig};
use bfchart::{
    phase1, phase2, steady_state_p, ChartConfig, ChartPoint, DVector, Phase1Options, RngStream,
    TargetSource,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

#[derive(Serialize)]
struct PCurve {
    delta: f64,
    limit: f64,
    p: Vec<f64>,
}

pub fn p_curves(deltas: &[f64], p0: f64, steps: usize) -> Result<String, String> {
    let curves = deltas
        .iter()
        .map(|&delta| {
            let limit = steady_state_p(delta).map_err(|e| e.to_string())?;
            let mut p = Vec::with_capacity(steps + 1);
            let mut cur = p0;
            p.push(cur);
            for _ in 0..steps {
                cur = 1.0 / (delta + cur);
                p.push(cur);
            }
            Ok(PCurve { delta, limit, p })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json(&curves))
}

/// `P_t` paths from `p0` for each discount factor, with their limits.
#[wasm_bindgen]
pub fn p_convergence(deltas: &[f64], p0: f64, steps: usize) -> Result<String, JsValue> {
    p_curves(deltas, p0, steps).map_err(to_js)
}

#[derive(Serialize)]
struct EwmaDemo {
    delta: f64,
    chart: ChartConfig,
    phase1: Vec<ChartPoint>,
    phase2: Vec<ChartPoint>,
    signals: Vec<usize>,
    shift_at: usize,
}

pub fn ewma_run(
    n1: usize,
    n2: usize,
    shift_sd: f64,
    shift_at: usize,
    lambda: f64,
    c: f64,
    seed: u32,
) -> Result<String, String> {
    let target = study_target();
    let scen = &study_scenarios()[0];
    let root = RngStream::new(u64::from(seed));
    let hist = gen_iid(scen, n1, &mut root.child(0)).map_err(|e| e.to_string())?;
    let opts = Phase1Options {
        lambda,
        c: Some(c),
        ..Default::default()
    };
    let model = phase1(&hist, TargetSource::Given(target), &opts, &root.child(1)).map_err(|e| e.to_string())?;
    let mut live = gen_iid(scen, n2, &mut root.child(2)).map_err(|e| e.to_string())?;
    let sd = scen.cov.matrix()[(0, 0)].sqrt();
    for y in live.iter_mut().skip(shift_at) {
        *y += DVector::from_vec(vec![shift_sd * sd, 0.0]);
    }
    let r = phase2(&model, &live).map_err(|e| e.to_string())?;
    Ok(json(&EwmaDemo {
        delta: model.delta,
        chart: model.chart,
        phase1: model.phase1_points,
        phase2: r.points,
        signals: r.signals,
        shift_at: model.n_phase1 + shift_at + 1,
    }))
}

/// Phase I on `n1` in-control draws, then Phase II on `n2` draws whose
/// first coordinate moves by `shift_sd` standard deviations from index
/// `shift_at` on.
#[wasm_bindgen]
pub fn ewma_demo(
    n1: usize,
    n2: usize,
    shift_sd: f64,
    shift_at: usize,
    lambda: f64,
    c: f64,
    seed: u32,
) -> Result<String, JsValue> {
    ewma_run(n1, n2, shift_sd, shift_at, lambda, c, seed).map_err(to_js)
}

#[derive(Serialize)]
struct Panel {
    scenario: String,
    mean: f64,
    std_error: f64,
    skewness: f64,
    lo: f64,
    width: f64,
    counts: Vec<usize>,
}

pub fn lbf_panels(delta: f64, n: usize, bins: usize, seed: u32) -> Result<String, String> {
    if bins == 0 {
        return Err("need at least one bin".into());
    }
    let cfg = StudyConfig {
        delta,
        n,
        ..Default::default()
    };
    let panels = lbf_study(&cfg, &RngStream::new(u64::from(seed))).map_err(|e| e.to_string())?;
    let lo = panels.iter().flat_map(|p| &p.lbf).copied().fold(f64::INFINITY, f64::min);
    let hi = panels.iter().flat_map(|p| &p.lbf).copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let out: Vec<Panel> = panels
        .into_iter()
        .map(|p| {
            let mut counts = vec![0; bins];
            for v in &p.lbf {
                counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
            }
            Panel {
                scenario: p.scenario.to_string(),
                mean: p.mean,
                std_error: p.std_error,
                skewness: p.skewness,
                lo,
                width,
                counts,
            }
        })
        .collect();
    Ok(json(&out))
}

/// LBF histograms for the four scenarios on a shared bin grid.
#[wasm_bindgen]
pub fn lbf_histograms(delta: f64, n: usize, bins: usize, seed: u32) -> Result<String, JsValue> {
    lbf_panels(delta, n, bins, seed).map_err(to_js)
}
