use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bfchart::simulate::{gen_dwr, gen_iid, lbf_study, study_scenarios, PanelSummary, StudyConfig};
use bfchart::{
    calibrate_c, phase1, phase2, Ar1Model, DwrConfig, FittedModel, LevelNoise, Phase1Options,
    RngStream, Scenario, ScenarioName, SpdMatrix, TargetSource, TargetSpec,
};
use bfchart_cli::data::{default_columns, fmt17, format_data, read_data};
use bfchart_cli::plot::render_svg;
use bfchart_cli::report::{phase1_summary, RunReport};
use bfchart_cli::{sha256_hex, Failure, EXIT_CALIBRATION, EXIT_SIGNAL};
use clap::{ArgGroup, Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bfchart", version, about = "Bayes-factor EWMA control charts for multivariate series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phase I: choose the discount factor, fit the LBF model and calibrate the chart
    Fit(FitArgs),
    /// Phase II: score new observations against a fitted model
    Monitor(MonitorArgs),
    /// Find the limit multiplier c for a target in-control ARL
    Calibrate(CalibrateArgs),
    /// Generate synthetic series
    Simulate(SimulateArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("target").required(true).args(["target_file", "estimate_target"])))]
struct FitArgs {
    data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    delta_grid: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
    #[arg(long, default_value_t = 370.4)]
    arl: f64,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    /// Use this multiplier instead of calibrating
    #[arg(long)]
    c: Option<f64>,
    /// JSON target: {"mu": [...], "v": {"dim": [p, p], "data": [...]}}
    #[arg(long)]
    target_file: Option<PathBuf>,
    #[arg(long)]
    estimate_target: bool,
    #[arg(long)]
    difference: bool,
    #[arg(long)]
    recenter: bool,
    /// Let the filter mean and covariance keep updating in Phase II
    #[arg(long)]
    tracking: bool,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Args)]
struct MonitorArgs {
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 370.4)]
    arl: f64,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Grid mode: smoothing constants (comma separated)
    #[arg(long, value_delimiter = ',', requires = "table")]
    grid_lambda: Vec<f64>,
    /// Grid mode: AR coefficients (comma separated)
    #[arg(long, value_delimiter = ',', requires = "table")]
    grid_phi: Vec<f64>,
    /// Grid mode output CSV
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["scenario", "dwr"])))]
struct SimulateArgs {
    /// in_control, mean_shift, cov_shift, both_shift, or all (with --lbf)
    #[arg(long)]
    scenario: Option<String>,
    /// Local level process with this discount factor (bivariate, unit-target covariance)
    #[arg(long)]
    dwr: Option<f64>,
    /// Constant level noise scale instead of the matched one (with --dwr)
    #[arg(long, requires = "dwr")]
    level_noise: Option<f64>,
    #[arg(short = 'n', default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prepend a `t` column
    #[arg(long)]
    with_t: bool,
    /// With `--scenario all`: write LBF histograms and a skewness summary
    #[arg(long)]
    lbf: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 40)]
    bins: usize,
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn read_to_string(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn cmd_fit(a: FitArgs) -> Result<i32, Failure> {
    let data = read_data(&a.data)?;
    let target = match &a.target_file {
        Some(path) => {
            let t: TargetSpec = serde_json::from_str(&read_to_string(path)?)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            TargetSource::Given(t)
        }
        None => TargetSource::Estimate,
    };
    let opts = Phase1Options {
        delta_grid: a.delta_grid,
        lambda: a.lambda,
        target_arl: a.arl,
        reps: a.reps,
        warmup: a.warmup,
        recenter: a.recenter,
        tracking: a.tracking,
        difference: a.difference,
        c: a.c,
        ..Default::default()
    };
    let model = phase1(&data.rows, target, &opts, &RngStream::new(a.seed))?;
    write(&a.out, &(model.to_json() + "\n"))?;
    print!("{}", phase1_summary(&model));
    println!("model written to {}", a.out.display());
    Ok(0)
}

fn cmd_monitor(a: MonitorArgs) -> Result<i32, Failure> {
    let model_text = read_to_string(&a.model)?;
    let model = FittedModel::from_json(&model_text)?;
    let data_bytes = fs::read(&a.data).map_err(|e| Failure::io(&a.data, e))?;
    let data = read_data(&a.data)?;
    if data.dim() != model.dim() {
        return Err(Failure::usage(format!(
            "{}: {} data columns, model expects {}",
            a.data.display(),
            data.dim(),
            model.dim()
        )));
    }
    let result = phase2(&model, &data.rows)?;
    let report = RunReport::new(
        &model,
        result,
        a.seed,
        sha256_hex(model_text.as_bytes()),
        sha256_hex(&data_bytes),
    );
    write(&a.out, &report.to_json())?;
    if let Some(plot) = &a.plot {
        write(plot, &render_svg(&model.phase1_points, &report.points, &report.chart))?;
    }
    println!(
        "{} observations, {} signal(s), {} warning(s)",
        report.points.len(),
        report.signals.len(),
        report.warnings.len()
    );
    if let Some(first) = report.signals.first() {
        println!("first signal at t = {first}");
    }
    Ok(if report.signals.is_empty() { 0 } else { EXIT_SIGNAL })
}

fn low_reps_warning(reps: usize) {
    if reps < 1000 {
        eprintln!("warning: only {reps} replications; the ARL standard error will be wide");
    }
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<i32, Failure> {
    low_reps_warning(a.reps);
    let rng = RngStream::new(a.seed);
    if let Some(table) = &a.table {
        let lambdas = if a.grid_lambda.is_empty() { vec![a.lambda] } else { a.grid_lambda };
        let phis = if a.grid_phi.is_empty() { vec![a.phi] } else { a.grid_phi };
        let mut out = String::from("lambda,phi,c,arl,std_error,status\n");
        let mut failed = false;
        for &lambda in &lambdas {
            for &phi in &phis {
                let ar = Ar1Model::new(0.0, phi, a.sigma2)?;
                match calibrate_c(lambda, &ar, a.arl, a.reps, &rng) {
                    Ok(cal) => out.push_str(&format!(
                        "{lambda},{phi},{},{},{},ok\n",
                        fmt17(cal.c),
                        fmt17(cal.arl.mean),
                        fmt17(cal.arl.std_error)
                    )),
                    Err(e @ bfchart::Error::BracketFailure { .. }) => {
                        eprintln!("lambda {lambda}, phi {phi}: {e}");
                        failed = true;
                        out.push_str(&format!("{lambda},{phi},,,,bracket_failure\n"));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        write(table, &out)?;
        println!("{} rows written to {}", lambdas.len() * phis.len(), table.display());
        return Ok(if failed { EXIT_CALIBRATION } else { 0 });
    }
    let ar = Ar1Model::new(0.0, a.phi, a.sigma2)?;
    let cal = calibrate_c(a.lambda, &ar, a.arl, a.reps, &rng)?;
    println!("c = {:.4}", cal.c);
    println!(
        "ARL = {:.2} (se {:.2}, {} reps, {} censored)",
        cal.arl.mean, cal.arl.std_error, cal.arl.reps, cal.arl.censored
    );
    Ok(0)
}

struct Histogram {
    lo: f64,
    width: f64,
    counts: Vec<usize>,
}

fn histogram(x: &[f64], bins: usize) -> Histogram {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0; bins];
    for v in x {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram { lo, width, counts }
}

fn write_study(a: &SimulateArgs) -> Result<(), Failure> {
    if a.bins == 0 {
        return Err(Failure::usage("--bins must be positive"));
    }
    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::io(&a.out_dir, e))?;
    let cfg = StudyConfig {
        n: a.n,
        ..Default::default()
    };
    let panels: Vec<PanelSummary> = lbf_study(&cfg, &RngStream::new(a.seed))?;
    let mut summary = String::from("scenario,n,mean,std_error,skewness,shift_vs_in_control\n");
    let base = panels[0].mean;
    for p in &panels {
        let h = histogram(&p.lbf, a.bins);
        let n = p.lbf.len() as f64;
        let mut csv = String::from("bin_lo,bin_hi,count,density\n");
        for (k, c) in h.counts.iter().enumerate() {
            let lo = h.lo + k as f64 * h.width;
            csv.push_str(&format!(
                "{},{},{c},{}\n",
                fmt17(lo),
                fmt17(lo + h.width),
                fmt17(*c as f64 / (n * h.width))
            ));
        }
        write(&a.out_dir.join(format!("lbf_{}.csv", p.scenario)), &csv)?;
        summary.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.scenario,
            p.lbf.len(),
            fmt17(p.mean),
            fmt17(p.std_error),
            fmt17(p.skewness),
            fmt17(p.mean - base)
        ));
        println!(
            "{:<11} mean {:>8.4} (se {:.4})  skewness {:>7.4}",
            p.scenario.as_str(),
            p.mean,
            p.std_error,
            p.skewness
        );
    }
    write(&a.out_dir.join("lbf_summary.csv"), &summary)
}

fn cmd_simulate(a: SimulateArgs) -> Result<i32, Failure> {
    if a.n == 0 {
        return Err(Failure::usage("-n must be positive"));
    }
    let mut rng = RngStream::new(a.seed);
    let rows = match (a.scenario.as_deref(), a.dwr) {
        (Some("all"), _) => {
            if !a.lbf {
                return Err(Failure::usage("--scenario all needs --lbf"));
            }
            write_study(&a)?;
            return Ok(0);
        }
        (Some(name), _) => {
            if a.lbf {
                return Err(Failure::usage("--lbf needs --scenario all"));
            }
            let name: ScenarioName = name.parse().map_err(|_| {
                let known: Vec<_> = ScenarioName::ALL.iter().map(|n| n.as_str()).collect();
                Failure::usage(format!("unknown scenario '{name}' (known: {}, all)", known.join(", ")))
            })?;
            gen_iid(&Scenario::by_name(name), a.n, &mut rng)?
        }
        (None, Some(delta)) => {
            let cfg = DwrConfig::new(2, delta);
            let noise = a.level_noise.map_or(LevelNoise::Matched, LevelNoise::Constant);
            let sigma: SpdMatrix = study_scenarios()[0].cov.clone();
            gen_dwr(&cfg, &sigma, a.n, noise, &mut rng)?
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let text = format_data(&default_columns(2), &rows, a.with_t);
    match &a.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Monitor(a) => cmd_monitor(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
