mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use qng_core::estimation::{estimate_stream, find_window_offset, predict_clicks};
use qng_core::optimizer::{compare_cw_pulsed, matched_pulsed, profile_csv, refine, sweep, SweepSpec};
use qng_core::timetag::{read_path, simulate_with_workers, write_path};
use qng_core::witnesses::{
    attenuation_trajectory, depth_bisection, evaluate_clicks, nc_exact, qng_approx, qng_depth_closed_form,
    wigner_negativity_threshold,
};
use qng_core::{ClickProbabilities, Depth, DepthReport, Feature};
use serde::Serialize;
use serde_json::json;

use config::{parse_run, parse_spdc, read_bytes};
use manifest::{emit, json_body, write_manifest, RunManifest};

#[derive(Parser)]
#[command(name = "qng", version, about = "Nonclassicality and quantum non-Gaussianity depth of single-photon sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Click probabilities and witness verdicts of a configured source.
    Model {
        config: PathBuf,
        /// Coincidence window for the detector-level prediction, seconds.
        #[arg(long, default_value_t = 2e-9)]
        tau: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// NC and QNG depth of a configured source or of given click probabilities.
    Depth {
        #[arg(required_unless_present_all = ["p1", "p2plus"], conflicts_with_all = ["p1", "p2plus"])]
        config: Option<PathBuf>,
        #[arg(long, requires = "p2plus")]
        p1: Option<f64>,
        #[arg(long, requires = "p1")]
        p2plus: Option<f64>,
        #[arg(long)]
        fiber_loss_db_per_km: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Photon statistics along a list of attenuations, as CSV.
    Trajectory {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40,50,60")]
        atten_db: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic time-tag stream; `.csv` output is text, anything else binary.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Click probabilities estimated from a time-tag file.
    Estimate {
        tags: PathBuf,
        /// Coincidence window, seconds.
        #[arg(long, default_value_t = 2e-9)]
        tau: f64,
        /// Window centre relative to the trigger, seconds; searched when absent.
        #[arg(long, allow_negative_numbers = true)]
        offset: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Depth profile over a parameter grid, as CSV.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep followed by golden-section refinement around the best point.
    Optimize {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum transmittances of a CW source and a pulsed source.
    Compare {
        cw: PathBuf,
        /// Pulsed source; matched to the CW source when absent.
        pulsed: Option<PathBuf>,
        #[arg(long, default_value_t = 80e6)]
        rep_rate_hz: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Worker cap from `QNG_THREADS`.
fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("QNG_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!(qng_core::Error::Validation(format!(
                "QNG_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn depth_label(d: &Depth) -> serde_json::Value {
    match *d {
        Depth::Finite { db } => json!(db),
        Depth::Infinite { verified_to_db } => json!(format!("infinite (verified to {verified_to_db} dB)")),
        Depth::BeyondScan { verified_to_db } => json!(format!("beyond scan (at least {verified_to_db} dB)")),
        Depth::NotWitnessed => json!("not witnessed"),
    }
}

#[derive(Serialize)]
struct DepthEntry {
    depth_db: serde_json::Value,
    #[serde(flatten)]
    report: DepthReport,
}

fn depth_entry(report: DepthReport, fiber: Option<f64>) -> Result<DepthEntry> {
    let report = match fiber {
        Some(loss) if !matches!(report.depth, Depth::Infinite { .. }) => report.with_fiber(loss)?,
        _ => report,
    };
    Ok(DepthEntry {
        depth_db: depth_label(&report.depth),
        report,
    })
}

fn clicks_json(p: &ClickProbabilities) -> serde_json::Value {
    json!({"p0": p.p0, "p1": p.p1, "p2plus": p.p2plus})
}

fn cmd_model(path: &Path, tau: f64, out: Option<&Path>) -> Result<()> {
    let bytes = read_bytes(path)?;
    let doc = parse_run(&bytes, path)?;
    let source = doc.attenuated_source()?;
    let state = source.heralded_state()?;
    let clicks = source.reported_clicks()?;
    let mut verdict = evaluate_clicks(&clicks);
    verdict.nc_exact = nc_exact(&state);
    let detected = predict_clicks(&doc.prediction_config()?, tau, 0.0)?;
    let body = json!({
        "attenuator_db": doc.attenuator_db,
        "p0": clicks.p0,
        "p1": clicks.p1,
        "p2plus": clicks.p2plus,
        "mean_photon_number": state.mean_photon_number(),
        "photon_number": {"p0": state.get(0), "p1": state.get(1), "p2plus": state.multiphoton()},
        "verdict": verdict,
        "detected": {
            "tau_s": tau,
            "p0": detected.p0,
            "p1": detected.p1,
            "p2plus": detected.p2plus,
            "qng_approx": qng_approx(&detected),
        },
        "wigner": wigner_negativity_threshold(clicks.p1)?,
    });
    let mut m = RunManifest::new("model", &[(path, &bytes)]);
    m.seed = Some(doc.seed);
    emit(out, &json_body(&body)?, m)
}

fn cmd_depth(
    config: Option<&Path>,
    p1: Option<f64>,
    p2plus: Option<f64>,
    fiber: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let (body, m) = match (config, p1, p2plus) {
        (Some(path), _, _) => {
            let bytes = read_bytes(path)?;
            let doc = parse_run(&bytes, path)?;
            let source = doc.attenuated_source()?;
            let state = source.heralded_state()?;
            let clicks = source.reported_clicks()?;
            let body = json!({
                "clicks": clicks_json(&clicks),
                "qng": depth_entry(depth_bisection(&state, Feature::Qng), fiber)?,
                "qng_closed_form": depth_entry(qng_depth_closed_form(&clicks)?, fiber)?,
                "nc": depth_entry(depth_bisection(&state, Feature::Nc), fiber)?,
            });
            let mut m = RunManifest::new("depth", &[(path, &bytes)]);
            m.seed = Some(doc.seed);
            (body, m)
        }
        (None, Some(p1), Some(p2plus)) => {
            let clicks = ClickProbabilities::from_p1_p2plus(p1, p2plus)?;
            let body = json!({
                "clicks": clicks_json(&clicks),
                "qng_closed_form": depth_entry(qng_depth_closed_form(&clicks)?, fiber)?,
            });
            let args = format!("--p1 {p1:e} --p2plus {p2plus:e}");
            (body, RunManifest::from_args("depth", &args))
        }
        _ => bail!(qng_core::Error::Usage("depth needs a config or --p1 and --p2plus".into())),
    };
    emit(out, &json_body(&body)?, m)
}

fn cmd_trajectory(path: &Path, atten_db: &[f64], out: Option<&Path>) -> Result<()> {
    let bytes = read_bytes(path)?;
    let doc = parse_run(&bytes, path)?;
    let state = doc.attenuated_source()?.heralded_state()?;
    let mut csv = String::from("attenuation_db,transmittance,p1,p2plus,qng_border\n");
    for p in attenuation_trajectory(&state, atten_db)? {
        let border = 2.0 / 3.0 * p.p1.powi(3);
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.attenuation_db, p.transmittance, p.p1, p.p2plus, border
        ));
    }
    let mut m = RunManifest::new("trajectory", &[(path, &bytes)]);
    m.seed = Some(doc.seed);
    emit(out, csv.as_bytes(), m)
}

fn cmd_simulate(path: &Path, out: &Path, workers: Option<usize>) -> Result<()> {
    let bytes = read_bytes(path)?;
    let cfg = parse_run(&bytes, path)?.run_config()?;
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut n = workers.unwrap_or(available).max(1);
    if let Some(cap) = thread_cap()? {
        n = n.min(cap);
    }
    let sim = simulate_with_workers(&cfg, n)?;
    write_path(out, &sim.tags)?;
    let mut m = RunManifest::new("simulate", &[(path, &bytes)]);
    m.seed = Some(cfg.seed);
    m.outputs.push(out.display().to_string());
    m.result = Some(json!({
        "records": sim.tags.len(),
        "duration_ps": sim.duration_ps,
        "segments": sim.segments.len(),
    }));
    write_manifest(out, &m)
}

fn cmd_estimate(path: &Path, tau: f64, offset: Option<f64>, out: Option<&Path>) -> Result<()> {
    let bytes = read_bytes(path)?;
    let tags = read_path(path)?;
    let offset = match offset {
        Some(o) => o,
        None => find_window_offset(&tags)?,
    };
    let est = estimate_stream(&tags, tau, offset)?;
    emit(out, &json_body(&est)?, RunManifest::new("estimate", &[(path, &bytes)]))
}

fn load_spec(path: &Path) -> Result<(Vec<u8>, SweepSpec)> {
    let bytes = read_bytes(path)?;
    let spec: SweepSpec = serde_json::from_slice(&bytes)
        .map_err(|e| anyhow::Error::new(e).context(format!("invalid sweep spec {}", path.display())))?;
    spec.validate()?;
    Ok((bytes, spec))
}

fn cmd_sweep(path: &Path, out: Option<&Path>, optimize: bool) -> Result<()> {
    let (bytes, spec) = load_spec(path)?;
    let mut result = sweep(&spec)?;
    if optimize {
        result = refine(&result, &spec)?;
    }
    let mut m = RunManifest::new(if optimize { "optimize" } else { "sweep" }, &[(path, &bytes)]);
    m.result = Some(json!({
        "parameter": result.parameter,
        "best_value": result.best_value,
        "best_depth_db": result.best_depth_db,
        "boundary_flag": result.boundary_flag,
        "refined": result.refined,
    }));
    emit(out, profile_csv(&result.profile).as_bytes(), m)
}

fn cmd_compare(cw: &Path, pulsed: Option<&Path>, rep_rate_hz: f64, out: Option<&Path>) -> Result<()> {
    let cw_bytes = read_bytes(cw)?;
    let cw_cfg = parse_spdc(&cw_bytes, cw)?;
    let (pulsed_cfg, m) = match pulsed {
        Some(p) => {
            let bytes = read_bytes(p)?;
            (parse_spdc(&bytes, p)?, RunManifest::new("compare", &[(cw, &cw_bytes), (p, &bytes)]))
        }
        None => (
            matched_pulsed(&cw_cfg, rep_rate_hz)?,
            RunManifest::new("compare", &[(cw, &cw_bytes)]),
        ),
    };
    let report = compare_cw_pulsed(&cw_cfg, &pulsed_cfg)?;
    emit(out, &json_body(&report)?, m)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(cap) = thread_cap()? {
        rayon::ThreadPoolBuilder::new().num_threads(cap).build_global()?;
    }
    match cli.command {
        Command::Model { config, tau, out } => cmd_model(&config, tau, out.as_deref()),
        Command::Depth {
            config,
            p1,
            p2plus,
            fiber_loss_db_per_km,
            out,
        } => cmd_depth(config.as_deref(), p1, p2plus, fiber_loss_db_per_km, out.as_deref()),
        Command::Trajectory { config, atten_db, out } => cmd_trajectory(&config, &atten_db, out.as_deref()),
        Command::Simulate { config, out, workers } => cmd_simulate(&config, &out, workers),
        Command::Estimate { tags, tau, offset, out } => cmd_estimate(&tags, tau, offset, out.as_deref()),
        Command::Sweep { spec, out } => cmd_sweep(&spec, out.as_deref(), false),
        Command::Optimize { spec, out } => cmd_sweep(&spec, out.as_deref(), true),
        Command::Compare {
            cw,
            pulsed,
            rep_rate_hz,
            out,
        } => cmd_compare(&cw, pulsed.as_deref(), rep_rate_hz, out.as_deref()),
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<qng_core::Error>() {
            return e.kind();
        }
        if cause.is::<serde_json::Error>() {
            return "schema";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "internal"
}

fn report_error(kind: &str, message: String) {
    eprintln!("{}", json!({"error": {"kind": kind, "message": message}}));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("usage", e.to_string().trim_end().to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(error_kind(&e), format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
