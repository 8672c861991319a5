//! `holder-embed` command-line front end. Every stage reads and writes
//! plain JSON/CSV artifacts so a run can be inspected step by step.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use holder_embed::bernstein::{
    kappa_decomposition, moment_convergence_check, uniform_integrability_curve, Functional, KappaDecomposition,
    MomentReport, UiCurve, DEFAULT_ABS_TOL,
};
use holder_embed::orlicz::theta_orlicz_report;
use holder_embed::pipeline::{difference_profiles, replication_envelopes};
use holder_embed::{
    fit_scaling, generate_ensemble, holder_report, run_strengthen, Ensemble, Error, Generator, GeneratorKind,
    ModulusProfile, PipelineOptions, ScalingTable, YoungFunction,
};

/// Largest ensemble (in stored floats) the CLI will generate.
const MAX_ENSEMBLE_FLOATS: usize = 1 << 28;

#[derive(Parser, Debug)]
#[command(name = "holder-embed", version, about = "Hölder-norm strengthening of uniformly convergent path ensembles")]
struct Cli {
    /// Cap on worker threads. Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full pipeline: ensemble, domination, scaling fit, Hölder curve, verdict.
    Strengthen(StrengthenArgs),
    /// Fit a scaling table from saved modulus envelopes.
    FitScaling(FitScalingArgs),
    /// Hölder-norm curve and little-o checks of an ensemble against a table.
    HolderReport(HolderReportArgs),
    /// Luxemburg norm and tail report of domination coefficients.
    OrliczReport(OrliczReportArgs),
    /// Uniform integrability and moment convergence of a functional.
    BernsteinCheck(BernsteinArgs),
    /// Generate an ensemble and write it to disk.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// SMOOTH_DECAY, ROUGH_DECAY, DONSKER or CONSTANT.
    #[arg(long, default_value = "SMOOTH_DECAY", value_parser = parse_kind)]
    kind: GeneratorKind,
    /// Grid resolution.
    #[arg(long, default_value_t = 256)]
    m: usize,
    /// Sequence length N.
    #[arg(long, default_value_t = 32)]
    n_seq: usize,
    /// Replications R.
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rate exponent of the decaying generators.
    #[arg(long)]
    decay: Option<f64>,
    /// Walk steps per sequence index for DONSKER.
    #[arg(long)]
    block: Option<usize>,
}

#[derive(Args, Debug)]
struct StrengthenArgs {
    #[command(flatten)]
    gen: GenArgs,
    /// Ingest an ensemble manifest instead of generating one.
    #[arg(long, conflicts_with_all = ["kind", "m", "n_seq", "reps", "seed", "decay", "block"])]
    ensemble: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    quantile: f64,
    /// Young function, e.g. {"family":"power","p":2}.
    #[arg(long, default_value = r#"{"family":"power","p":2}"#)]
    phi: String,
    #[arg(long)]
    tail_fraction: Option<f64>,
    #[arg(long)]
    decay_factor: Option<f64>,
    #[arg(long)]
    convergence_ratio: Option<f64>,
    #[arg(long)]
    landmarks: Option<usize>,
    #[arg(long)]
    landmark_seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitScalingArgs {
    /// JSON array of modulus profiles.
    #[arg(long)]
    envelopes: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    quantile: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct HolderReportArgs {
    #[arg(long)]
    ensemble: PathBuf,
    /// Scaling table JSON.
    #[arg(long)]
    g: PathBuf,
    #[arg(long)]
    tail_fraction: Option<f64>,
    #[arg(long)]
    decay_factor: Option<f64>,
    #[arg(long)]
    convergence_ratio: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct OrliczReportArgs {
    /// JSON array of samples, or a strengthen report (its `theta` field).
    #[arg(long)]
    theta: PathBuf,
    #[arg(long)]
    phi: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BernsteinArgs {
    #[arg(long)]
    ensemble: PathBuf,
    /// Functional, e.g. {"kind":"max_value"}.
    #[arg(long)]
    functional: String,
    /// Comma-separated truncation levels, strictly increasing.
    #[arg(long)]
    caps: String,
    /// External value of the limit moment.
    #[arg(long)]
    reference: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ABS_TOL)]
    abs_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    gen: GenArgs,
    /// Manifest path; path CSVs are written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-replication modulus envelopes here.
    #[arg(long)]
    envelopes_out: Option<PathBuf>,
}

#[derive(Debug)]
struct CliError {
    kind: String,
    message: String,
    code: u8,
}

#[derive(Serialize)]
struct ErrorJson<'a> {
    error: &'a str,
    message: &'a str,
    exit_code: u8,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { kind: e.kind().to_string(), message: e.to_string(), code: if e.is_validation() { 2 } else { 3 } }
    }
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError { kind: "invalid_parameter".into(), message: message.into(), code: 2 }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_kind(s: &str) -> std::result::Result<GeneratorKind, String> {
    s.parse::<GeneratorKind>().map_err(|e| e.to_string())
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError { kind: "parse".into(), message: format!("{what}: {e}"), code: 2 })
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError {
        kind: "io".into(),
        message: format!("{}: {e}", path.display()),
        code: 2,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::from(Error::from(e)))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError {
        kind: "io".into(),
        message: format!("{}: {e}", path.display()),
        code: 2,
    })
}

fn build_ensemble(g: &GenArgs) -> CliResult<Ensemble> {
    if g.m == 0 || g.n_seq == 0 || g.reps == 0 {
        return Err(CliError::validation("--m, --n-seq and --reps must be positive"));
    }
    let floats =
        (g.m + 1).checked_mul(g.n_seq + 1).and_then(|x| x.checked_mul(g.reps)).filter(|&x| x <= MAX_ENSEMBLE_FLOATS);
    if floats.is_none() {
        return Err(CliError::validation(format!(
            "ensemble of (m + 1)(N + 1)R floats exceeds the limit of {MAX_ENSEMBLE_FLOATS}"
        )));
    }
    let mut gen = Generator::new(g.kind);
    if let Some(d) = g.decay {
        if !(d.is_finite() && d > 0.0) {
            return Err(CliError::validation(format!("--decay must be positive, got {d}")));
        }
        gen = gen.with_decay(d);
    }
    if let Some(b) = g.block {
        if b == 0 {
            return Err(CliError::validation("--block must be positive"));
        }
        gen = gen.with_block(b);
    }
    Ok(generate_ensemble(&gen, g.m, g.n_seq, g.reps, g.seed)?)
}

fn options_with(
    quantile: f64,
    phi: Option<YoungFunction>,
    tail_fraction: Option<f64>,
    decay_factor: Option<f64>,
    convergence_ratio: Option<f64>,
) -> PipelineOptions {
    let d = PipelineOptions::default();
    PipelineOptions {
        quantile,
        phi: phi.unwrap_or(d.phi),
        tail_fraction: tail_fraction.unwrap_or(d.tail_fraction),
        decay_factor: decay_factor.unwrap_or(d.decay_factor),
        convergence_ratio: convergence_ratio.unwrap_or(d.convergence_ratio),
        ..d
    }
}

fn strengthen(a: &StrengthenArgs) -> CliResult<()> {
    let phi: YoungFunction = parse_json("--phi", &a.phi)?;
    let mut opts = options_with(a.quantile, Some(phi), a.tail_fraction, a.decay_factor, a.convergence_ratio);
    if let Some(l) = a.landmarks {
        opts.landmarks = l;
    }
    if let Some(s) = a.landmark_seed {
        opts.landmark_seed = s;
    }
    opts.validate()?;
    let e = match &a.ensemble {
        Some(path) => Ensemble::read_files(path)?,
        None => build_ensemble(&a.gen)?,
    };
    write_json(&a.out, &run_strengthen(&e, &opts)?)
}

fn fit_scaling_cmd(a: &FitScalingArgs) -> CliResult<()> {
    let envs: Vec<ModulusProfile> = parse_json("--envelopes", &read_text(&a.envelopes)?)?;
    write_json(&a.out, &fit_scaling(&envs, a.quantile)?)
}

fn holder_report_cmd(a: &HolderReportArgs) -> CliResult<()> {
    let e = Ensemble::read_files(&a.ensemble)?;
    let g: ScalingTable = parse_json("--g", &read_text(&a.g)?)?;
    let opts =
        options_with(PipelineOptions::default().quantile, None, a.tail_fraction, a.decay_factor, a.convergence_ratio);
    let report = holder_report(&e, &g, &opts)?;
    write_json(&a.out, &report)?;
    match report.non_members() {
        0 => Ok(()),
        k => Err(CliError {
            kind: Error::NotInSpace { lag: 0, value: 0.0 }.kind().into(),
            message: format!("{k} differences are not in the Hölder space; report written"),
            code: 3,
        }),
    }
}

fn read_theta(text: &str) -> CliResult<Vec<f64>> {
    let v: serde_json::Value = parse_json("--theta", text)?;
    let arr = match &v {
        serde_json::Value::Array(a) => a,
        serde_json::Value::Object(o) => match o.get("theta") {
            Some(serde_json::Value::Array(a)) => a,
            _ => return Err(CliError::validation("--theta object has no `theta` array")),
        },
        _ => return Err(CliError::validation("--theta must be a JSON array")),
    };
    arr.iter()
        .filter(|x| !x.is_null())
        .map(|x| x.as_f64().ok_or_else(|| CliError::validation(format!("--theta entry is not a number: {x}"))))
        .collect()
}

fn orlicz_report_cmd(a: &OrliczReportArgs) -> CliResult<()> {
    let phi: YoungFunction = parse_json("--phi", &a.phi)?;
    let theta = read_theta(&read_text(&a.theta)?)?;
    write_json(&a.out, &theta_orlicz_report(&theta, &phi)?)
}

#[derive(Serialize)]
struct BernsteinReport {
    functional: Functional,
    uniform_integrability: UiCurve,
    moment: MomentReport,
    /// Decomposition at `n = N`, one per cap.
    kappa: Vec<KappaDecomposition>,
}

fn parse_caps(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| CliError::validation(format!("--caps entry is not a number: {t:?}")))
        })
        .collect()
}

fn bernstein_cmd(a: &BernsteinArgs) -> CliResult<()> {
    let functional: Functional = parse_json("--functional", &a.functional)?;
    let caps = parse_caps(&a.caps)?;
    if !(a.abs_tol.is_finite() && a.abs_tol >= 0.0) {
        return Err(CliError::validation("--abs-tol must be finite and nonnegative"));
    }
    if let Some(r) = a.reference {
        if !r.is_finite() {
            return Err(CliError::validation("--reference must be finite"));
        }
    }
    let e = Ensemble::read_files(&a.ensemble)?;
    let uniform_integrability = uniform_integrability_curve(&e, &functional, &caps)?;
    let moment = moment_convergence_check(&e, &functional, a.reference, a.abs_tol);
    let kappa = caps
        .iter()
        .map(|&c| kappa_decomposition(&e, &functional, e.n_seq(), c))
        .collect::<holder_embed::Result<Vec<_>>>()?;
    write_json(&a.out, &BernsteinReport { functional, uniform_integrability, moment, kappa })
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let e = build_ensemble(&a.gen)?;
    e.write_files(&a.out)?;
    if let Some(path) = &a.envelopes_out {
        write_json(path, &replication_envelopes(&difference_profiles(&e)))?;
    }
    Ok(())
}

fn dispatch(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Strengthen(a) => strengthen(a),
        Command::FitScaling(a) => fit_scaling_cmd(a),
        Command::HolderReport(a) => holder_report_cmd(a),
        Command::OrliczReport(a) => orlicz_report_cmd(a),
        Command::BernsteinCheck(a) => bernstein_cmd(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.threads {
        None => dispatch(&cli.command),
        Some(0) => Err(CliError::validation("--threads must be positive")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::validation(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(&cli.command))
        }
    }
}

fn report(err: &CliError) -> ExitCode {
    let body = ErrorJson { error: &err.kind, message: &err.message, exit_code: err.code };
    eprintln!("{}", serde_json::to_string(&body).expect("error JSON serializes"));
    ExitCode::from(err.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return report(&CliError {
                kind: "usage".into(),
                message: e.render().to_string().trim().to_string(),
                code: 2,
            })
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
