//! `mordrive` command-line front end.
//!
//! Exit codes: 0 on success, 2 for unreadable or invalid input, 3 for
//! numeric failures on valid input (unfactorable denominators, infeasible
//! matching or gain placement, diverging simulations).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::design::{self, DesignMethod, DesignReport, ReductionComparison};
use crate::drive::{derive_model, DerivedDriveModel, MotorDriveParams};
use crate::error::Error;
use crate::mor::{self, Adjust, ReductionConfig, ReductionResult};
use crate::sim;
use crate::tf::TransferFunction;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Largest transfer-function order accepted from files.
pub const MAX_INPUT_ORDER: usize = 64;
/// Upper bound on samples per simulated trace.
pub const MAX_SAMPLES: usize = 20_000_000;

#[derive(Debug, Parser)]
#[command(name = "mordrive", version, about = "Model-order reduction and current-controller design for DC drives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reduce a stable transfer function.
    Reduce {
        #[arg(long)]
        tf: PathBuf,
        #[arg(long)]
        order: usize,
        /// Defaults to order − 1.
        #[arg(long)]
        numerator_order: Option<usize>,
        /// `none`, `auto`, or a percentage in (0, 15].
        #[arg(long, default_value = "none")]
        adjust: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Design the current-controller gain of a drive.
    Design {
        #[arg(long, required_unless_present = "builtin_example", conflicts_with = "builtin_example")]
        motor: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        zeta: Option<f64>,
        /// Numerator order of the reduced loop model.
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long)]
        report: PathBuf,
        /// Use the built-in 220 V / 8.3 A reference drive instead of a file.
        #[arg(long)]
        builtin_example: bool,
    },
    /// Step or Bode response of a transfer function as CSV.
    Simulate {
        #[arg(value_enum)]
        kind: SimKind,
        #[arg(long)]
        tf: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        w_min: f64,
        #[arg(long, default_value_t = 1e4)]
        w_max: f64,
        #[arg(long, default_value_t = 60)]
        ppd: usize,
    },
    /// Step-response metrics of the full current loop over a gain grid.
    Sweep {
        #[arg(long)]
        motor: PathBuf,
        #[arg(long)]
        kc_min: f64,
        #[arg(long)]
        kc_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Conventional,
    Mor,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimKind {
    Step,
    Bode,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn from_lib(stage: &str, e: &Error) -> Self {
        Self {
            code: if e.is_validation() { EXIT_INPUT } else { EXIT_NUMERIC },
            message: format!("{stage}: {e}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input_digest: String,
    pub tool_version: String,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

struct Clock {
    command: &'static str,
    start: Instant,
}

impl Clock {
    fn start(command: &'static str) -> Self {
        Self {
            command,
            start: Instant::now(),
        }
    }

    fn manifest(&self, input: &[u8], warnings: Vec<String>) -> RunManifest {
        RunManifest {
            command: self.command.to_string(),
            input_digest: digest_hex(input),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time: self.start.elapsed().as_secs_f64(),
            warnings,
        }
    }
}

pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Reduce {
            tf,
            order,
            numerator_order,
            adjust,
            out,
        } => cmd_reduce(&tf, order, numerator_order, &adjust, &out),
        Command::Design {
            motor,
            method,
            zeta,
            q,
            report,
            builtin_example,
        } => {
            let method = match method {
                MethodArg::Conventional => DesignMethod::Conventional,
                MethodArg::Mor => DesignMethod::Mor,
            };
            let source = if builtin_example { None } else { motor.as_deref() };
            cmd_design(source, method, zeta, q, &report)
        }
        Command::Simulate {
            kind,
            tf,
            out,
            t_final,
            dt,
            w_min,
            w_max,
            ppd,
        } => match kind {
            SimKind::Step => cmd_simulate_step(&tf, &out, t_final, dt),
            SimKind::Bode => cmd_simulate_bode(&tf, &out, w_min, w_max, ppd),
        },
        Command::Sweep {
            motor,
            kc_min,
            kc_max,
            steps,
            out,
        } => cmd_sweep(&motor, kc_min, kc_max, steps, &out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("mordrive: {}", e.message);
            e.code
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Reads `{"num": [...], "den": [...]}` (ascending powers); other keys are
/// ignored, so reduction reports read back as their reduced model.
pub fn parse_tf(bytes: &[u8]) -> Result<TransferFunction, CliError> {
    let tf: TransferFunction = serde_json::from_slice(bytes)
        .map_err(|e| CliError::input(format!("transfer function file: {e}")))?;
    if tf.order() > MAX_INPUT_ORDER || tf.num().degree() > MAX_INPUT_ORDER {
        return Err(CliError::input(format!(
            "transfer function order {} exceeds the supported maximum {MAX_INPUT_ORDER}",
            tf.order()
        )));
    }
    Ok(tf)
}

pub fn parse_motor(bytes: &[u8]) -> Result<MotorDriveParams, CliError> {
    let p: MotorDriveParams =
        serde_json::from_slice(bytes).map_err(|e| CliError::input(format!("motor file: {e}")))?;
    p.validate().map_err(|e| CliError::from_lib("motor file", &e))?;
    Ok(p)
}

fn parse_adjust(s: &str) -> Result<Adjust, CliError> {
    match s {
        "none" => Ok(Adjust::None),
        "auto" => Ok(Adjust::Auto),
        other => other
            .trim_end_matches('%')
            .parse::<f64>()
            .ok()
            .filter(|n| *n > 0.0 && *n <= mor::MAX_ADJUST_PERCENT)
            .map(Adjust::Fixed)
            .ok_or_else(|| CliError::input(format!("--adjust expects none, auto or a percentage in (0, 15], got {other:?}"))),
    }
}

/// Names the pipeline stage an error belongs to.
fn reduce_stage(e: &Error) -> &'static str {
    match e {
        Error::Unstable(_) => "stability gate",
        Error::NotFactorable(_) | Error::ZeroConstantTerm | Error::NonConvergence { .. } => {
            "step 1 (stability-equation denominator)"
        }
        Error::MatchInfeasible { .. } | Error::Unsupported(_) | Error::NotNormalized(_) => {
            "step 2 (numerator matching)"
        }
        Error::ZeroDcGain => "normalization",
        Error::SimulationDiverged { .. } | Error::GridMismatch(_) => "step 3 (adjustment scoring)",
        _ => "configuration",
    }
}

#[derive(Serialize)]
struct ReduceReport<'a> {
    num: &'a crate::Polynomial,
    den: &'a crate::Polynomial,
    input: &'a TransferFunction,
    config: &'a ReductionConfig,
    diagnostics: &'a ReductionResult,
    manifest: RunManifest,
}

pub fn cmd_reduce(
    tf_file: &Path,
    order: usize,
    numerator_order: Option<usize>,
    adjust: &str,
    out: &Path,
) -> Result<(), CliError> {
    let clock = Clock::start("reduce");
    let bytes = read_input(tf_file)?;
    let g = parse_tf(&bytes)?;
    let adjust = parse_adjust(adjust)?;
    if order == 0 || order >= g.order() {
        return Err(CliError::input(format!(
            "--order {order} must be between 1 and {} (input order {})",
            g.order().saturating_sub(1),
            g.order()
        )));
    }
    let mut cfg = ReductionConfig::new(order).with_adjust(adjust);
    if let Some(q) = numerator_order {
        cfg = cfg.with_numerator_order(q);
    }
    let res = mor::reduce(&g, &cfg).map_err(|e| CliError::from_lib(reduce_stage(&e), &e))?;
    let report = ReduceReport {
        num: res.reduced.num(),
        den: res.reduced.den(),
        input: &g,
        config: &cfg,
        diagnostics: &res,
        manifest: clock.manifest(&bytes, res.warnings.clone()),
    };
    write_output(out, &to_json(&report))
}

#[derive(Serialize)]
struct PublishedReference {
    k: f64,
    kc: f64,
    /// `Kc` implied by the published `K` with this drive's constants.
    kc_implied_by_k: f64,
    tuned_kc: f64,
    ise: f64,
    note: &'static str,
}

#[derive(Serialize)]
struct DesignFailure {
    kind: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    discriminant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roots: Option<Vec<(f64, f64)>>,
}

#[derive(Serialize)]
struct DesignOutput<'a> {
    status: &'static str,
    method: DesignMethod,
    zeta: f64,
    numerator_order: usize,
    model: &'a DerivedDriveModel,
    design: Option<&'a DesignReport>,
    error: Option<DesignFailure>,
    comparison: Option<ReductionComparison>,
    published_reference: PublishedReference,
    manifest: RunManifest,
}

pub fn cmd_design(
    motor_file: Option<&Path>,
    method: DesignMethod,
    zeta: Option<f64>,
    q: usize,
    report_file: &Path,
) -> Result<(), CliError> {
    let clock = Clock::start("design");
    let (bytes, mut params) = match motor_file {
        Some(path) => {
            let bytes = read_input(path)?;
            let params = parse_motor(&bytes)?;
            (bytes, params)
        }
        None => {
            let params = MotorDriveParams::reference_drive();
            (to_json(&params).into_bytes(), params)
        }
    };
    if let Some(z) = zeta {
        params.zeta = z;
    }
    let model = derive_model(&params).map_err(|e| CliError::from_lib("drive model", &e))?;
    let cfg = ReductionConfig::new(2).with_numerator_order(q);
    if q >= 2 {
        return Err(CliError::input(format!("--q {q} must be 0 or 1 for a second-order design")));
    }

    let outcome = match method {
        DesignMethod::Conventional => design::design_conventional(&model),
        DesignMethod::Mor => design::design_via_mor(&model, &cfg),
    };

    let published_reference = PublishedReference {
        k: design::PUBLISHED_K,
        kc: design::PUBLISHED_KC,
        kc_implied_by_k: model.kc_from_k(design::PUBLISHED_K),
        tuned_kc: design::PUBLISHED_TUNED_KC,
        ise: design::PUBLISHED_ISE,
        note: "published figures for the reference drive; K and Kc are not reproduced by any \
               design path here and are listed for comparison only",
    };

    let (status, design_report, failure, comparison, exit) = match &outcome {
        Ok(report) => {
            let reduction = match &report.reduced_model {
                Some(r) => Some(r.clone()),
                None => mor::reduce(&model.loop_shape, &cfg).ok(),
            };
            let comparison = reduction
                .as_ref()
                .and_then(|r| design::compare_reduction(&model, r, report.k).ok());
            ("ok", Some(report), None, comparison, None)
        }
        Err(e) => {
            let (discriminant, roots) = match e {
                Error::NoRealGain { discriminant, roots } => (Some(*discriminant), Some(roots.clone())),
                Error::MatchInfeasible { discriminant, .. } => (Some(*discriminant), None),
                _ => (None, None),
            };
            let failure = DesignFailure {
                kind: error_kind(e),
                message: e.to_string(),
                discriminant,
                roots,
            };
            ("infeasible", None, Some(failure), None, Some(CliError::from_lib("design", e)))
        }
    };

    let warnings = design_report.map(|r| r.warnings.clone()).unwrap_or_default();
    let output = DesignOutput {
        status,
        method,
        zeta: params.zeta,
        numerator_order: q,
        model: &model,
        design: design_report,
        error: failure,
        comparison,
        published_reference,
        manifest: clock.manifest(&bytes, warnings),
    };
    write_output(report_file, &to_json(&output))?;
    match exit {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NoRealGain { .. } => "no_real_gain",
        Error::NoPositiveGain(_) => "no_positive_gain",
        Error::MatchInfeasible { .. } => "match_infeasible",
        Error::NotFactorable(_) => "not_factorable",
        Error::Unstable(_) => "unstable",
        _ => "other",
    }
}

fn write_manifest_sidecar(out: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    write_output(Path::new(&name), &to_json(manifest))
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

pub fn cmd_simulate_step(
    tf_file: &Path,
    out: &Path,
    t_final: Option<f64>,
    dt: Option<f64>,
) -> Result<(), CliError> {
    let clock = Clock::start("simulate step");
    let bytes = read_input(tf_file)?;
    let g = parse_tf(&bytes)?;
    let (t_final, dt) = match (t_final, dt) {
        (Some(t), Some(d)) => (t, d),
        _ => {
            let (t_def, dt_def) = sim::default_horizon(&g).map_err(|e| CliError::from_lib("horizon", &e))?;
            (t_final.unwrap_or(t_def), dt.unwrap_or(dt_def))
        }
    };
    if dt > 0.0 && t_final / dt > MAX_SAMPLES as f64 {
        return Err(CliError::input(format!(
            "t_final/dt = {} exceeds the sample limit {MAX_SAMPLES}",
            t_final / dt
        )));
    }
    let trace = sim::step_response(&g, t_final, dt).map_err(|e| CliError::from_lib("step response", &e))?;
    let mut csv = String::from("t_s,y\n");
    for (t, y) in trace.t.iter().zip(&trace.y) {
        let _ = writeln!(csv, "{},{}", fmt_num(*t), fmt_num(*y));
    }
    write_output(out, &csv)?;
    let mut warnings = Vec::new();
    if trace.stiffness_warning {
        warnings.push(format!("dt = {dt} exceeds a tenth of the fastest time constant"));
    }
    write_manifest_sidecar(out, &clock.manifest(&bytes, warnings))
}

pub fn cmd_simulate_bode(
    tf_file: &Path,
    out: &Path,
    w_min: f64,
    w_max: f64,
    ppd: usize,
) -> Result<(), CliError> {
    let clock = Clock::start("simulate bode");
    let bytes = read_input(tf_file)?;
    let g = parse_tf(&bytes)?;
    if w_min > 0.0 && w_max > w_min && (w_max / w_min).log10() * ppd as f64 > MAX_SAMPLES as f64 {
        return Err(CliError::input("frequency grid too large"));
    }
    let trace = sim::bode(&g, w_min, w_max, ppd).map_err(|e| CliError::from_lib("bode", &e))?;
    let mut csv = String::from("omega_rad_per_s,mag_db,phase_deg\n");
    for i in 0..trace.omega.len() {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_num(trace.omega[i]),
            fmt_num(trace.mag_db[i]),
            fmt_num(trace.phase_deg[i])
        );
    }
    write_output(out, &csv)?;
    let warnings = trace
        .singular
        .iter()
        .map(|&i| format!("unbounded response at omega = {}", trace.omega[i]))
        .collect();
    write_manifest_sidecar(out, &clock.manifest(&bytes, warnings))
}

pub fn cmd_sweep(motor_file: &Path, kc_min: f64, kc_max: f64, steps: usize, out: &Path) -> Result<(), CliError> {
    let clock = Clock::start("sweep");
    let bytes = read_input(motor_file)?;
    let params = parse_motor(&bytes)?;
    let model = derive_model(&params).map_err(|e| CliError::from_lib("drive model", &e))?;
    if steps > 100_000 {
        return Err(CliError::input(format!("--steps {steps} is too large")));
    }
    let points = design::sweep_gain(&model, kc_min, kc_max, steps).map_err(|e| CliError::from_lib("sweep", &e))?;
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    let mut csv = String::from("kc,overshoot_pct,settling_s,rise_s,ise,stable\n");
    let mut warnings = Vec::new();
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_num(p.kc),
            opt(p.overshoot_pct),
            opt(p.settling_time_2pct),
            opt(p.rise_time_10_90),
            opt(p.ise_vs_reference),
            p.stable
        );
        if p.stable && p.overshoot_pct.is_none() {
            warnings.push(format!("metrics unavailable at Kc = {}", p.kc));
        }
    }
    write_output(out, &csv)?;
    write_manifest_sidecar(out, &clock.manifest(&bytes, warnings))
}
