//! Command-line front end: analytic curves, Monte Carlo validation, single
//! scenario runs and asymmetry sweeps, all emitting plot-ready CSV.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or I/O failure,
//! 3 a requested accuracy bound was not met. Every CSV starts with comment
//! lines carrying the tool version and a digest of the exact inputs, and
//! its bytes are independent of the worker count.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analytic::ccdf_value;
use crate::error::Error;
use crate::montecarlo::{self, McConfig};
use crate::netsim::{self, DropMetrics};
use crate::propagation::RelayKind;
use crate::scenario::{load_scenario, sha256_hex, Scenario, SchemeVariant};
use crate::stats;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "relaysim",
    version,
    about = "Relay-assisted cellular network simulator and SIR analysis toolkit"
)]
pub struct Cli {
    /// Worker threads (0 = one per core). Output bytes never depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form SIR CCDF curves for both relay kinds.
    Analytic(AnalyticArgs),
    /// Check the closed forms against direct Monte Carlo sampling.
    McValidate(McValidateArgs),
    /// Run the configured scenario over its drops.
    Simulate(SimulateArgs),
    /// Compare deployment schemes across asymmetry factors.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Lowest SIR threshold, dB.
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub xi_db_min: f64,
    /// Highest SIR threshold, dB.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub xi_db_max: f64,
    /// Threshold spacing, dB.
    #[arg(long, default_value_t = 5.0)]
    pub xi_db_step: f64,
}

#[derive(Args, Debug)]
pub struct AnalyticArgs {
    /// Interferer density, nodes per unit area.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Serving-link distance, normalized units.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct McValidateArgs {
    /// Relay kind: suav or ground.
    #[arg(long)]
    pub kind: String,
    /// Interferer density, nodes per unit area.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Serving-link distance, normalized units.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Interference truncation radius; sized from the bias bound when
    /// omitted.
    #[arg(long)]
    pub window_radius: Option<f64>,
    /// Largest tolerated absolute deviation from the closed form.
    #[arg(long, default_value_t = 0.01)]
    pub bound: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Directory for drops.csv, summary.csv, positions.csv, manifest.json.
    #[arg(long, default_value = "results")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Asymmetry factors, comma separated. Default 1,2,3,4,5.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub f_values: Option<Vec<f64>>,
    /// Schemes, comma separated. Default: every scheme except upper_bound.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    /// Directory for drops.csv, summary.csv, manifest.json.
    #[arg(long, default_value = "results")]
    pub out_dir: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match pool.install(|| dispatch(&cli.command)) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: &Command) -> CliResult<u8> {
    match cmd {
        Command::Analytic(args) => cmd_analytic(args),
        Command::McValidate(args) => cmd_mc_validate(args),
        Command::Simulate(args) => cmd_simulate(args).map(|()| 0),
        Command::Sweep(args) => cmd_sweep(args).map(|()| 0),
    }
}

impl GridArgs {
    fn thresholds_db(&self) -> CliResult<Vec<f64>> {
        let (lo, hi, step) = (self.xi_db_min, self.xi_db_max, self.xi_db_step);
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(usage("xi grid bounds and step must be finite"));
        }
        if step <= 0.0 {
            return Err(usage("--xi-db-step must be positive"));
        }
        if hi < lo {
            return Err(usage("--xi-db-max must not be below --xi-db-min"));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| lo + i as f64 * step).collect())
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn params_digest(params: &serde_json::Value) -> String {
    sha256_hex(params.to_string().as_bytes())
}

fn write_output(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir).map_err(Error::from)?;
                }
            }
            std::fs::write(p, content).map_err(Error::from)?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn csv_header(subcommand: &str, digest: &str) -> String {
    format!("# relaysim {VERSION} {subcommand}\n# digest: {digest}\n")
}

fn check_field(name: &str, value: f64, min_exclusive: bool) -> CliResult<()> {
    let ok = value.is_finite() && if min_exclusive { value > 0.0 } else { value >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(usage(format!(
            "--{name} must be finite and {} zero",
            if min_exclusive { "above" } else { "at least" }
        )))
    }
}

fn cmd_analytic(args: &AnalyticArgs) -> CliResult<u8> {
    check_field("lambda", args.lambda, false)?;
    check_field("r", args.r, true)?;
    let grid = args.grid.thresholds_db()?;

    let digest = params_digest(&serde_json::json!({
        "subcommand": "analytic",
        "lambda": args.lambda,
        "r": args.r,
        "xi_db": grid,
    }));
    let mut csv = csv_header("analytic", &digest);
    csv.push_str("xi_db,ccdf_suav,ccdf_ground\n");
    for &db in &grid {
        let xi = db_to_linear(db);
        let suav = ccdf_value(RelayKind::SuavRn, args.lambda, args.r, xi);
        let ground = ccdf_value(RelayKind::GroundRn, args.lambda, args.r, xi);
        let _ = writeln!(csv, "{db:.4},{suav:.12},{ground:.12}");
    }
    write_output(args.out.as_deref(), &csv)?;
    Ok(0)
}

fn cmd_mc_validate(args: &McValidateArgs) -> CliResult<u8> {
    let kind: RelayKind = args
        .kind
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    check_field("lambda", args.lambda, false)?;
    check_field("r", args.r, true)?;
    if args.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    check_field("bound", args.bound, true)?;
    let grid = args.grid.thresholds_db()?;

    let cfg = match args.window_radius {
        Some(w) => McConfig::new(kind, args.lambda, args.r, args.samples, w, args.seed),
        None => McConfig::auto_window(kind, args.lambda, args.r, args.samples, args.seed),
    }
    .map_err(|e| usage(e.to_string()))?;

    let thresholds: Vec<f64> = grid.iter().map(|&db| db_to_linear(db)).collect();
    let empirical = montecarlo::empirical_ccdf(&cfg, &thresholds)?;
    let exact = montecarlo::analytic_ccdf(kind, args.lambda, args.r, &thresholds);
    let dev = montecarlo::compare(&empirical, &exact)?;

    let digest = params_digest(&serde_json::json!({
        "subcommand": "mc-validate",
        "kind": kind.name(),
        "lambda": args.lambda,
        "r": args.r,
        "samples": args.samples,
        "seed": args.seed,
        "window_radius": cfg.window_radius,
        "bound": args.bound,
        "xi_db": grid,
    }));
    let mut csv = csv_header("mc-validate", &digest);
    let _ = writeln!(csv, "# window_radius: {:.6}", cfg.window_radius);
    let _ = writeln!(csv, "# max_abs_dev: {:.12}", dev.max_abs);
    csv.push_str("xi_db,empirical,analytic,abs_dev\n");
    for (i, &db) in grid.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{db:.4},{:.12},{:.12},{:.12}",
            empirical[i],
            exact[i],
            (empirical[i] - exact[i]).abs()
        );
    }
    write_output(args.out.as_deref(), &csv)?;

    if dev.max_abs <= args.bound {
        Ok(0)
    } else {
        eprintln!(
            "max deviation {:.6} exceeds bound {:.6}",
            dev.max_abs, args.bound
        );
        Ok(3)
    }
}

#[derive(serde::Serialize)]
struct RunManifest {
    tool_version: &'static str,
    subcommand: &'static str,
    digest: String,
    parameters: serde_json::Value,
    wall_clock_s: f64,
    outputs: Vec<String>,
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> CliResult<()> {
    let json = serde_json::to_string_pretty(manifest).map_err(Error::from)?;
    std::fs::write(dir.join("manifest.json"), json + "\n").map_err(Error::from)?;
    Ok(())
}

fn drop_rows_csv(digest: &str, rows: &[(SchemeVariant, f64, u32, &DropMetrics)]) -> String {
    let mut csv = csv_header("drops", digest);
    csv.push_str("scheme,f,drop,mean_bps,qos_bps\n");
    for (variant, f, drop, m) in rows {
        let _ = writeln!(
            csv,
            "{},{f:.4},{drop},{:.6},{:.6}",
            variant.name(),
            m.mean_bps,
            m.qos_bps
        );
    }
    csv
}

fn summary_csv(digest: &str, groups: &[(SchemeVariant, f64, Vec<DropMetrics>)]) -> String {
    let mut csv = csv_header("summary", digest);
    csv.push_str("scheme,f,drops,mean_bps,mean_ci95_bps,qos_bps,qos_ci95_bps\n");
    for (variant, f, metrics) in groups {
        let means: Vec<f64> = metrics.iter().map(|m| m.mean_bps).collect();
        let qoses: Vec<f64> = metrics.iter().map(|m| m.qos_bps).collect();
        let _ = writeln!(
            csv,
            "{},{f:.4},{},{:.6},{:.6},{:.6},{:.6}",
            variant.name(),
            metrics.len(),
            stats::mean(&means),
            stats::ci95_half_width(&means),
            stats::mean(&qoses),
            stats::ci95_half_width(&qoses)
        );
    }
    csv
}

fn positions_csv(digest: &str, scenario: &Scenario, variant: SchemeVariant) -> CliResult<String> {
    let real = netsim::realize_drop(scenario, scenario.traffic.asymmetry_f, variant, 0)?;
    let mut csv = csv_header("positions", digest);
    csv.push_str("kind,cell,x,y\n");
    for (cell, p) in real.bs_positions.iter().enumerate() {
        let _ = writeln!(csv, "bs,{cell},{:.6},{:.6}", p.x, p.y);
    }
    for rn in &real.relays {
        let _ = writeln!(
            csv,
            "{},{},{:.6},{:.6}",
            rn.kind.name(),
            rn.donor,
            rn.pos.x,
            rn.pos.y
        );
    }
    for u in &real.users {
        let _ = writeln!(csv, "ue,{},{:.6},{:.6}", u.home_cell, u.pos.x, u.pos.y);
    }
    Ok(csv)
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let start = Instant::now();
    let scenario = load_scenario(&args.scenario)?;
    let variant = scenario.deployment.variant;
    let f = scenario.traffic.asymmetry_f;
    let digest = scenario.digest();

    let metrics: crate::error::Result<Vec<DropMetrics>> = (0..scenario.drops)
        .into_par_iter()
        .map(|d| netsim::run_drop(&scenario, f, variant, d))
        .collect();
    let metrics = metrics?;

    let rows: Vec<(SchemeVariant, f64, u32, &DropMetrics)> = metrics
        .iter()
        .enumerate()
        .map(|(d, m)| (variant, f, d as u32, m))
        .collect();
    let drops_csv = drop_rows_csv(&digest, &rows);
    let summary = summary_csv(&digest, &[(variant, f, metrics)]);
    let positions = positions_csv(&digest, &scenario, variant)?;

    std::fs::create_dir_all(&args.out_dir).map_err(Error::from)?;
    std::fs::write(args.out_dir.join("drops.csv"), drops_csv).map_err(Error::from)?;
    std::fs::write(args.out_dir.join("summary.csv"), summary).map_err(Error::from)?;
    std::fs::write(args.out_dir.join("positions.csv"), positions).map_err(Error::from)?;
    write_manifest(
        &args.out_dir,
        &RunManifest {
            tool_version: VERSION,
            subcommand: "simulate",
            digest,
            parameters: serde_json::json!({
                "scenario": args.scenario.display().to_string(),
                "scheme": variant.name(),
                "f": f,
                "drops": scenario.drops,
            }),
            wall_clock_s: start.elapsed().as_secs_f64(),
            outputs: vec![
                "drops.csv".into(),
                "summary.csv".into(),
                "positions.csv".into(),
            ],
        },
    )
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let start = Instant::now();
    let scenario = load_scenario(&args.scenario)?;
    let digest = scenario.digest();

    let f_values = match &args.f_values {
        Some(v) => v.clone(),
        None => vec![1.0, 2.0, 3.0, 4.0, 5.0],
    };
    if f_values.is_empty() {
        return Err(usage("--f-values must name at least one factor"));
    }
    for &f in &f_values {
        if !(f.is_finite() && f >= 1.0) {
            return Err(usage("asymmetry factors must be finite and at least 1"));
        }
    }
    let schemes: Vec<SchemeVariant> = match &args.schemes {
        Some(names) => names
            .iter()
            .map(|n| n.parse::<SchemeVariant>())
            .collect::<crate::error::Result<_>>()
            .map_err(|e| usage(e.to_string()))?,
        None => vec![
            SchemeVariant::Reference,
            SchemeVariant::LoadBalancing,
            SchemeVariant::FixedRelays,
            SchemeVariant::MobileRelays,
        ],
    };
    if schemes.is_empty() {
        return Err(usage("--schemes must name at least one scheme"));
    }

    let mut work: Vec<(SchemeVariant, f64, u32)> = Vec::new();
    for &variant in &schemes {
        for &f in &f_values {
            for d in 0..scenario.drops {
                work.push((variant, f, d));
            }
        }
    }
    let metrics: crate::error::Result<Vec<DropMetrics>> = work
        .par_iter()
        .map(|&(variant, f, d)| netsim::run_drop(&scenario, f, variant, d))
        .collect();
    let metrics = metrics?;

    let rows: Vec<(SchemeVariant, f64, u32, &DropMetrics)> = work
        .iter()
        .zip(&metrics)
        .map(|(&(v, f, d), m)| (v, f, d, m))
        .collect();
    let drops_csv = drop_rows_csv(&digest, &rows);

    let mut groups: Vec<(SchemeVariant, f64, Vec<DropMetrics>)> = Vec::new();
    for chunk in metrics.chunks(scenario.drops as usize) {
        let (variant, f, _) = work[groups.len() * scenario.drops as usize];
        groups.push((variant, f, chunk.to_vec()));
    }
    let summary = summary_csv(&digest, &groups);

    std::fs::create_dir_all(&args.out_dir).map_err(Error::from)?;
    std::fs::write(args.out_dir.join("drops.csv"), drops_csv).map_err(Error::from)?;
    std::fs::write(args.out_dir.join("summary.csv"), summary).map_err(Error::from)?;
    write_manifest(
        &args.out_dir,
        &RunManifest {
            tool_version: VERSION,
            subcommand: "sweep",
            digest,
            parameters: serde_json::json!({
                "scenario": args.scenario.display().to_string(),
                "f_values": f_values,
                "schemes": schemes.iter().map(|s| s.name()).collect::<Vec<_>>(),
                "drops": scenario.drops,
            }),
            wall_clock_s: start.elapsed().as_secs_f64(),
            outputs: vec!["drops.csv".into(), "summary.csv".into()],
        },
    )
}
