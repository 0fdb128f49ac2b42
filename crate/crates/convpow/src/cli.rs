//! Command-line front end: measure specs in, comparison tables out.
//!
//! Five subcommands cover the library surface:
//!
//! * `asym` — sweep saddle-point estimates over a `(j, t)` schedule,
//!   optionally against a closed-form or grid-convolution oracle;
//! * `check` — print the regime diagnosis for a single `(j, t)` as JSON;
//! * `clt` — threshold-argument table: estimate vs the finite limit value;
//! * `renewal` — moment-driven renewal-function estimates;
//! * `oracle` — evaluate or dump a tilted grid-convolution table.
//!
//! Data goes to stdout (or `--out`); logs and warnings go to stderr.  All
//! numeric output uses a fixed `{:.12e}` float format and a fixed row
//! order, so identical invocations produce byte-identical files; every
//! format carries a `schema_version` marker (a `# schema_version: 1`
//! comment line for CSV, a top-level field for JSON).  Exit codes: 0
//! success, 1 configuration error, 2 math-domain error, 3 output I/O
//! error, 4 `check` found the suspect regime.  `CONVPOW_THREADS` caps the
//! sweep worker pool.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{self, auto_formula, Formula};
use crate::conditions::{check_conditions, ConditionError, ConditionReport, Regime};
use crate::measure::{discretize, MeasureSpec};
use crate::oracle::{
    convolve_power, default_horizon, exact_affine, exact_power_law, exact_shifted_exp,
};
use crate::renewal::{
    renewal_asymptotic, renewal_b_coeffs, renewal_betas, RenewalError, RenewalInput,
};
use crate::saddle::{solve_kappa, SaddleError};

const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Errors and exit codes.
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable/invalid inputs — exit 1.
    Config(String),
    /// The requested computation has no answer in its domain — exit 2.
    Math(String),
    /// Output could not be written — exit 3.
    Io(String),
    /// `check` diagnosed the suspect regime — exit 4 (not an error in the
    /// usual sense; the report is still printed).
    Suspect,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Math(_) => 2,
            CliError::Io(_) => 3,
            CliError::Suspect => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Math(m) => write!(f, "math-domain error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Suspect => write!(f, "conditions suspect"),
        }
    }
}

impl std::error::Error for CliError {}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

// ---------------------------------------------------------------------------
// Sweep configuration (the programmatic API the flag parser feeds).
// ---------------------------------------------------------------------------

/// How `(j, t)` pairs are generated, in output order.
#[derive(Debug, Clone)]
pub enum Schedule {
    /// `t = c·j` over the listed `j`.
    FixedRatio { c: f64, js: Vec<u64> },
    /// `t = j^q` over the listed `j`.
    Power { q: f64, js: Vec<u64> },
    /// Explicit `(j, t)` pairs.
    Explicit(Vec<(u64, f64)>),
}

impl Schedule {
    pub fn points(&self) -> Vec<(u64, f64)> {
        match self {
            Schedule::FixedRatio { c, js } => js.iter().map(|&j| (j, c * j as f64)).collect(),
            Schedule::Power { q, js } => {
                js.iter().map(|&j| (j, (j as f64).powf(*q))).collect()
            }
            Schedule::Explicit(v) => v.clone(),
        }
    }
}

/// Reference values to put next to the estimates.
#[derive(Debug, Clone)]
pub enum OracleChoice {
    None,
    /// Tilted grid convolution at cell width `h`; `horizon` defaults to
    /// `4t + 10a(j)` per row.
    Grid { h: f64, horizon: Option<f64> },
    /// Closed forms: available for `PowerLaw`, `Affine`, and `ShiftedExp`.
    ExactFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Everything `cmd_asym` needs; the `asym` subcommand's flags build one.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub spec: MeasureSpec,
    pub schedule: Schedule,
    pub formulas: Vec<Formula>,
    pub oracle: OracleChoice,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

// ---------------------------------------------------------------------------
// Flag surface.
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "convpow",
    version,
    about = "Saddle-point estimates and oracles for convolution powers V^{*(j)}(t)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep estimates over a (j, t) schedule, optionally vs an oracle.
    Asym(AsymArgs),
    /// Diagnose the estimate's hypotheses at one (j, t); prints JSON.
    Check(CheckArgs),
    /// Threshold-argument table: estimate vs the finite limit value.
    Clt(CltArgs),
    /// Renewal-function estimates from inter-arrival moments.
    Renewal(RenewalArgs),
    /// Evaluate or dump a tilted grid-convolution table.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScheduleKind {
    /// t = c·j (needs --c and --j)
    Ratio,
    /// t = j^q (needs --q and --j)
    Power,
    /// explicit pairs (needs --jt)
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    None,
    Exact,
    Grid,
}

#[derive(Args)]
struct AsymArgs {
    /// Measure spec: inline JSON object or a path to a JSON file.
    #[arg(long)]
    spec: String,
    /// Schedule kind.
    #[arg(long, value_enum)]
    schedule: ScheduleKind,
    /// Ratio c for --schedule ratio.
    #[arg(long)]
    c: Option<f64>,
    /// Exponent q for --schedule power.
    #[arg(long)]
    q: Option<f64>,
    /// Comma-separated j values, e.g. "10,20,40,80".
    #[arg(long)]
    j: Option<String>,
    /// Comma-separated j:t pairs for --schedule list, e.g. "10:100,20:400".
    #[arg(long)]
    jt: Option<String>,
    /// Comma-separated formulas: thm-a, thm-b, auto.
    #[arg(long, default_value = "thm-a")]
    formula: String,
    /// Reference values: none, exact (closed family forms), grid.
    #[arg(long, value_enum, default_value_t = OracleKind::None)]
    oracle: OracleKind,
    /// Grid oracle cell width.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// Grid oracle horizon (default per row: 4t + 10a(j)).
    #[arg(long)]
    horizon: Option<f64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args)]
struct CheckArgs {
    /// Measure spec: inline JSON object or a path to a JSON file.
    #[arg(long)]
    spec: String,
    #[arg(long)]
    j: u64,
    #[arg(long)]
    t: f64,
    /// Scan start for the frequency sweep.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CltArgs {
    /// Measure spec: inline JSON object or a path to a JSON file.
    #[arg(long)]
    spec: String,
    /// Offset y in the threshold argument.
    #[arg(long, default_value_t = 0.0)]
    y: f64,
    /// Comma-separated j values, e.g. "1e4" is not accepted — integers only.
    #[arg(long)]
    j: String,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args)]
struct RenewalArgs {
    /// Raw moments "m1,m2,m3,m4" of the inter-arrival law.
    #[arg(long, conflicts_with = "input")]
    moments: Option<String>,
    /// Full input as JSON (inline or a path): {"moments": [...], "dist": {...}}.
    #[arg(long)]
    input: Option<String>,
    /// Comma-separated j:t pairs, e.g. "50:5000,100:20000".
    #[arg(long)]
    jt: String,
    /// Check declared moments against the attached distribution's grid
    /// moments before estimating.
    #[arg(long, default_value_t = false)]
    dist_check: bool,
    /// Grid cell width for --dist-check.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// Grid horizon for --dist-check (default: 40·mean).
    #[arg(long)]
    x_max: Option<f64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args)]
struct OracleArgs {
    /// Measure spec: inline JSON object or a path to a JSON file.
    #[arg(long)]
    spec: String,
    /// Convolution power.
    #[arg(long)]
    j: u64,
    /// Exponential tilt applied before convolving.
    #[arg(long, default_value_t = 0.0)]
    kappa: f64,
    /// Grid cell width.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// Grid horizon; values of V^{*(j)} are exact up to here.
    #[arg(long)]
    horizon: f64,
    /// Evaluate at these comma-separated t values instead of dumping the
    /// whole cumulative table.
    #[arg(long)]
    t: Option<String>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

// ---------------------------------------------------------------------------
// Entry point.
// ---------------------------------------------------------------------------

/// Parse argv, dispatch, and return the process exit code.
pub fn run() -> u8 {
    if let Ok(v) = std::env::var("CONVPOW_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring CONVPOW_THREADS={v:?} (want a positive integer)"),
        }
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Asym(a) => build_sweep_config(a).and_then(|cfg| cmd_asym(&cfg)),
        Command::Check(a) => run_check(a),
        Command::Clt(a) => run_clt(a),
        Command::Renewal(a) => run_renewal(a),
        Command::Oracle(a) => run_oracle(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(e, CliError::Suspect) {
                eprintln!("{e}");
            }
            e.exit_code()
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing.
// ---------------------------------------------------------------------------

fn load_spec(arg: &str) -> Result<MeasureSpec, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| CliError::Config(format!("cannot read spec file {arg}: {e}")))?
    };
    MeasureSpec::from_json(&text).map_err(|e| CliError::Config(format!("bad spec: {e}")))
}

fn parse_u64_list(s: &str, what: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<u64>()
                .map_err(|_| CliError::Config(format!("bad {what} entry {p:?}: want an integer")))
        })
        .collect()
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad {what} entry {p:?}: want a number")))
        })
        .collect()
}

fn parse_jt_pairs(s: &str) -> Result<Vec<(u64, f64)>, CliError> {
    s.split(',')
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (js, ts) = p
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("bad pair {p:?}: want j:t")))?;
            let j = js
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("bad j in pair {p:?}")))?;
            let t = ts
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad t in pair {p:?}")))?;
            Ok((j, t))
        })
        .collect()
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        None => Ok(Box::new(std::io::BufWriter::new(std::io::stdout()))),
        Some(p) => {
            let f = std::fs::File::create(p)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(std::io::BufWriter::new(f)))
        }
    }
}

/// Fixed-width scientific formatting shared by every CSV column, so the
/// byte output of a run is a pure function of its configuration.
fn fnum(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt_fnum(x: Option<f64>) -> String {
    x.map(fnum).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// asym.
// ---------------------------------------------------------------------------

fn build_sweep_config(a: AsymArgs) -> Result<SweepConfig, CliError> {
    let spec = load_spec(&a.spec)?;
    let schedule = match a.schedule {
        ScheduleKind::Ratio => {
            let c = a
                .c
                .ok_or_else(|| CliError::Config("--schedule ratio needs --c".into()))?;
            if !(c > 0.0 && c.is_finite()) {
                return Err(CliError::Config(format!("ratio c must be finite and > 0, got {c}")));
            }
            let js = parse_u64_list(
                a.j.as_deref()
                    .ok_or_else(|| CliError::Config("--schedule ratio needs --j".into()))?,
                "--j",
            )?;
            Schedule::FixedRatio { c, js }
        }
        ScheduleKind::Power => {
            let q = a
                .q
                .ok_or_else(|| CliError::Config("--schedule power needs --q".into()))?;
            if !q.is_finite() {
                return Err(CliError::Config(format!("exponent q must be finite, got {q}")));
            }
            let js = parse_u64_list(
                a.j.as_deref()
                    .ok_or_else(|| CliError::Config("--schedule power needs --j".into()))?,
                "--j",
            )?;
            Schedule::Power { q, js }
        }
        ScheduleKind::List => Schedule::Explicit(parse_jt_pairs(
            a.jt.as_deref()
                .ok_or_else(|| CliError::Config("--schedule list needs --jt".into()))?,
        )?),
    };
    let oracle = match a.oracle {
        OracleKind::None => OracleChoice::None,
        OracleKind::Exact => OracleChoice::ExactFamily,
        OracleKind::Grid => {
            if !(a.h > 0.0 && a.h.is_finite()) {
                return Err(CliError::Config(format!("grid step --h must be > 0, got {}", a.h)));
            }
            OracleChoice::Grid { h: a.h, horizon: a.horizon }
        }
    };
    Ok(SweepConfig {
        spec,
        schedule,
        formulas: parse_formulas(&a.formula)?,
        oracle,
        out: a.out,
        format: a.format,
    })
}

/// Marker for "pick thm-a/thm-b from the sweep shape"; resolved before rows
/// are computed so the output schema is fixed up front.
const AUTO_TOKEN: &str = "auto";

fn parse_formulas(s: &str) -> Result<Vec<Formula>, CliError> {
    // "auto" placeholders survive as None until the schedule is known.
    let mut picked: Vec<Option<Formula>> = Vec::new();
    for tok in s.split(',').map(|p| p.trim()).filter(|p| !p.is_empty()) {
        let f = match tok {
            "thm-a" => Some(Formula::ThmA),
            "thm-b" => Some(Formula::ThmB),
            AUTO_TOKEN => None,
            other => {
                return Err(CliError::Config(format!(
                    "unknown formula {other:?}; asym supports thm-a, thm-b, auto"
                )))
            }
        };
        picked.push(f);
    }
    if picked.is_empty() {
        return Err(CliError::Config("no formulas requested".into()));
    }
    // Encode "auto" as a sentinel resolved in cmd_asym; keep order stable.
    Ok(picked
        .into_iter()
        .map(|f| f.unwrap_or(Formula::LinearExpansion)) // sentinel, replaced below
        .collect())
}

/// One computed sweep row.  `skip` holds a short comma-free token; details
/// go to stderr at compute time.
#[derive(Serialize)]
struct AsymRow {
    j: u64,
    t: f64,
    status: &'static str,
    reason: Option<&'static str>,
    kappa: Option<f64>,
    a_j: Option<f64>,
    t_j: Option<f64>,
    logs: Vec<Option<f64>>,
    log_oracle: Option<f64>,
    ratios: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct AsymDoc<'a> {
    schema_version: u32,
    command: &'static str,
    formulas: Vec<&'static str>,
    oracle: &'static str,
    rows: &'a [AsymRow],
}

/// Run the sweep described by `config` and write the table.
///
/// Rows whose `t/j` falls outside the admissible slope range are emitted
/// with `status=skipped, reason=ratio_out_of_range` rather than failing
/// the run; genuine infrastructure failures (an oracle that cannot serve
/// the request) abort with a math-domain error.
pub fn cmd_asym(config: &SweepConfig) -> Result<(), CliError> {
    let points = config.schedule.points();
    if points.is_empty() {
        return Err(CliError::Config("schedule produced no (j, t) points".into()));
    }
    for &(j, t) in &points {
        if j < 1 || !(t > 0.0) || !t.is_finite() {
            return Err(CliError::Config(format!(
                "schedule point (j={j}, t={t}) needs j >= 1 and finite t > 0"
            )));
        }
    }
    // Resolve the "auto" sentinel against the sweep shape, then dedupe.
    let mut formulas: Vec<Formula> = Vec::new();
    for f in &config.formulas {
        let f = match f {
            Formula::LinearExpansion => auto_formula(&points),
            other => *other,
        };
        if !formulas.contains(&f) {
            formulas.push(f);
        }
    }
    if let OracleChoice::ExactFamily = config.oracle {
        if !matches!(
            config.spec,
            MeasureSpec::PowerLaw { .. } | MeasureSpec::Affine { .. } | MeasureSpec::ShiftedExp { .. }
        ) {
            return Err(CliError::Math(format!(
                "no exact closed form for {:?}; use --oracle grid",
                config.spec
            )));
        }
    }

    eprintln!(
        "asym: {} rows, formulas [{}], oracle {}",
        points.len(),
        formulas.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(", "),
        oracle_name(&config.oracle),
    );

    let rows: Vec<Result<AsymRow, CliError>> = points
        .par_iter()
        .map(|&(j, t)| compute_asym_row(config, &formulas, j, t))
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut out = open_out(&config.out)?;
    match config.format {
        OutputFormat::Csv => write_asym_csv(&mut out, &formulas, &config.oracle, &rows)?,
        OutputFormat::Json => {
            let doc = AsymDoc {
                schema_version: SCHEMA_VERSION,
                command: "asym",
                formulas: formulas.iter().map(|f| f.as_str()).collect(),
                oracle: oracle_name(&config.oracle),
                rows: &rows,
            };
            serde_json::to_writer_pretty(&mut out, &doc)
                .map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

fn oracle_name(o: &OracleChoice) -> &'static str {
    match o {
        OracleChoice::None => "none",
        OracleChoice::Grid { .. } => "grid",
        OracleChoice::ExactFamily => "exact",
    }
}

fn compute_asym_row(
    config: &SweepConfig,
    formulas: &[Formula],
    j: u64,
    t: f64,
) -> Result<AsymRow, CliError> {
    let report = match solve_kappa(&config.spec, j, t) {
        Ok(r) => r,
        Err(e) => {
            let reason = match e {
                SaddleError::RatioOutOfRange { .. } => "ratio_out_of_range",
                _ => "saddle_failure",
            };
            eprintln!("asym: skipping (j={j}, t={t}): {e}");
            return Ok(AsymRow {
                j,
                t,
                status: "skipped",
                reason: Some(reason),
                kappa: None,
                a_j: None,
                t_j: None,
                logs: vec![None; formulas.len()],
                log_oracle: None,
                ratios: vec![None; formulas.len()],
            });
        }
    };

    let mut logs = Vec::with_capacity(formulas.len());
    for f in formulas {
        let est = match f {
            Formula::ThmA => asymptotics::thm_a(&config.spec, j, t),
            Formula::ThmB => asymptotics::thm_b(&config.spec, j, t),
            other => {
                return Err(CliError::Config(format!(
                    "formula {} is not available in asym sweeps",
                    other.as_str()
                )))
            }
        }
        .map_err(|e| CliError::Math(format!("(j={j}, t={t}) {}: {e}", f.as_str())))?;
        logs.push(Some(est.log_value));
    }

    let log_oracle = match &config.oracle {
        OracleChoice::None => None,
        OracleChoice::ExactFamily => Some(match &config.spec {
            MeasureSpec::PowerLaw { b, alpha } => exact_power_law(*b, *alpha, j, t).ln_abs(),
            MeasureSpec::Affine { a, b } => exact_affine(*a, *b, j, t).ln_abs(),
            MeasureSpec::ShiftedExp { a } => exact_shifted_exp(*a, j, t).ln_abs(),
            other => unreachable!("exact oracle pre-validated, got {other:?}"),
        }),
        OracleChoice::Grid { h, horizon } => {
            let hor = horizon.unwrap_or_else(|| default_horizon(t, report.a_j));
            let gm = discretize(&config.spec, *h, hor)
                .map_err(|e| CliError::Math(format!("grid oracle at (j={j}, t={t}): {e}")))?;
            let table = convolve_power(&gm, j, report.kappa, hor)
                .map_err(|e| CliError::Math(format!("grid oracle at (j={j}, t={t}): {e}")))?;
            let v = table
                .untilted_value_at(t)
                .map_err(|e| CliError::Math(format!("grid oracle at (j={j}, t={t}): {e}")))?;
            Some(v.ln_abs())
        }
    };

    let ratios = logs
        .iter()
        .map(|l| match (l, log_oracle) {
            (Some(l), Some(o)) => Some((l - o).exp()),
            _ => None,
        })
        .collect();

    Ok(AsymRow {
        j,
        t,
        status: "ok",
        reason: None,
        kappa: Some(report.kappa),
        a_j: Some(report.a_j),
        t_j: Some(report.t_j),
        logs,
        log_oracle,
        ratios,
    })
}

fn write_asym_csv(
    out: &mut dyn Write,
    formulas: &[Formula],
    oracle: &OracleChoice,
    rows: &[AsymRow],
) -> Result<(), CliError> {
    writeln!(out, "# schema_version: {SCHEMA_VERSION}").map_err(io_err)?;
    let mut header = String::from("j,t,status,reason,kappa,a_j,t_j");
    for f in formulas {
        header.push_str(",log_");
        header.push_str(&f.as_str().replace('-', "_"));
    }
    let with_oracle = !matches!(oracle, OracleChoice::None);
    if with_oracle {
        header.push_str(",log_oracle");
        for f in formulas {
            header.push_str(",ratio_");
            header.push_str(&f.as_str().replace('-', "_"));
        }
    }
    writeln!(out, "{header}").map_err(io_err)?;
    for r in rows {
        let mut line = format!(
            "{},{},{},{},{},{},{}",
            r.j,
            fnum(r.t),
            r.status,
            r.reason.unwrap_or(""),
            opt_fnum(r.kappa),
            opt_fnum(r.a_j),
            opt_fnum(r.t_j),
        );
        for l in &r.logs {
            line.push(',');
            line.push_str(&opt_fnum(*l));
        }
        if with_oracle {
            line.push(',');
            line.push_str(&opt_fnum(r.log_oracle));
            for x in &r.ratios {
                line.push(',');
                line.push_str(&opt_fnum(*x));
            }
        }
        writeln!(out, "{line}").map_err(io_err)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// check.
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CheckDoc<'a> {
    schema_version: u32,
    command: &'static str,
    report: &'a ConditionReport,
}

fn run_check(a: CheckArgs) -> Result<(), CliError> {
    let spec = load_spec(&a.spec)?;
    let mut out = open_out(&a.out)?;
    let regime = cmd_check(&spec, a.j, a.t, a.gamma, &mut out)?;
    out.flush().map_err(io_err)?;
    if regime == Regime::Suspect {
        return Err(CliError::Suspect);
    }
    Ok(())
}

/// Print the condition report for `(j, t)` as JSON and return the regime.
pub fn cmd_check(
    spec: &MeasureSpec,
    j: u64,
    t: f64,
    gamma: f64,
    out: &mut dyn Write,
) -> Result<Regime, CliError> {
    let report = check_conditions(spec, j, t, gamma, None).map_err(|e| match e {
        ConditionError::BadInput(m) => CliError::Config(m),
        other => CliError::Math(other.to_string()),
    })?;
    let doc = CheckDoc { schema_version: SCHEMA_VERSION, command: "check", report: &report };
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out).map_err(io_err)?;
    Ok(report.regime)
}

// ---------------------------------------------------------------------------
// clt.
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CltRow {
    j: u64,
    t: f64,
    log_estimate: f64,
    limit: f64,
    gap: f64,
}

#[derive(Serialize)]
struct CltDoc<'a> {
    schema_version: u32,
    command: &'static str,
    y: f64,
    rows: &'a [CltRow],
}

fn run_clt(a: CltArgs) -> Result<(), CliError> {
    let spec = load_spec(&a.spec)?;
    let js = parse_u64_list(&a.j, "--j")?;
    if js.is_empty() {
        return Err(CliError::Config("--j produced no values".into()));
    }
    let mut out = open_out(&a.out)?;
    cmd_clt(&spec, a.y, &js, a.format, &mut out)?;
    out.flush().map_err(io_err)
}

/// Table of threshold arguments `t(j, y)`, the estimate there, the finite
/// limit value, and the relative gap between them.
pub fn cmd_clt(
    spec: &MeasureSpec,
    y: f64,
    js: &[u64],
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let rows: Vec<CltRow> = js
        .iter()
        .map(|&j| {
            let (t, limit, est) = asymptotics::cor_clt(spec, y, j)
                .map_err(|e| CliError::Math(format!("threshold at j={j}: {e}")))?;
            let gap = (est.log_value.exp() - limit).abs() / limit;
            Ok(CltRow { j, t, log_estimate: est.log_value, limit, gap })
        })
        .collect::<Result<_, CliError>>()?;
    match format {
        OutputFormat::Csv => {
            writeln!(out, "# schema_version: {SCHEMA_VERSION}").map_err(io_err)?;
            writeln!(out, "j,t,log_estimate,limit,gap").map_err(io_err)?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.j,
                    fnum(r.t),
                    fnum(r.log_estimate),
                    fnum(r.limit),
                    fnum(r.gap)
                )
                .map_err(io_err)?;
            }
        }
        OutputFormat::Json => {
            let doc =
                CltDoc { schema_version: SCHEMA_VERSION, command: "clt", y, rows: &rows };
            serde_json::to_writer_pretty(&mut *out, &doc)
                .map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// renewal.
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RenewalRow {
    j: u64,
    t: f64,
    log_estimate: f64,
    warning: Option<String>,
}

#[derive(Serialize)]
struct RenewalDoc<'a> {
    schema_version: u32,
    command: &'static str,
    mean: f64,
    betas: &'a [f64],
    b: [f64; 3],
    rows: &'a [RenewalRow],
}

fn renewal_err(e: RenewalError) -> CliError {
    match e {
        RenewalError::MissingMoment { .. }
        | RenewalError::Inadmissible(_)
        | RenewalError::BadInput(_) => CliError::Config(e.to_string()),
        other => CliError::Math(other.to_string()),
    }
}

fn run_renewal(a: RenewalArgs) -> Result<(), CliError> {
    let input = match (&a.moments, &a.input) {
        (Some(m), None) => {
            let moments = parse_f64_list(m, "--moments")?;
            RenewalInput::from_moments(moments).map_err(renewal_err)?
        }
        (None, Some(arg)) => {
            let text = if arg.trim_start().starts_with('{') {
                arg.clone()
            } else {
                std::fs::read_to_string(arg)
                    .map_err(|e| CliError::Config(format!("cannot read input file {arg}: {e}")))?
            };
            RenewalInput::from_json(&text).map_err(renewal_err)?
        }
        _ => {
            return Err(CliError::Config(
                "renewal needs exactly one of --moments or --input".into(),
            ))
        }
    };
    let points = parse_jt_pairs(&a.jt)?;
    if points.is_empty() {
        return Err(CliError::Config("--jt produced no (j, t) points".into()));
    }
    if a.dist_check {
        let x_max = a.x_max.unwrap_or(40.0 * input.mean());
        input
            .verify_dist(a.h, x_max)
            .map_err(renewal_err)?;
        eprintln!("renewal: declared moments agree with the distribution on the grid");
    }
    let mut out = open_out(&a.out)?;
    cmd_renewal(&input, &points, a.format, &mut out)?;
    out.flush().map_err(io_err)
}

/// Moment-driven estimates of `U^{*(j)}(t)` over explicit `(j, t)` pairs.
pub fn cmd_renewal(
    input: &RenewalInput,
    points: &[(u64, f64)],
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let betas = renewal_betas(input, 3).map_err(renewal_err)?;
    let (b1, b2, b3) = renewal_b_coeffs(input).map_err(renewal_err)?;
    let rows: Vec<RenewalRow> = points
        .iter()
        .map(|&(j, t)| {
            let est = renewal_asymptotic(input, j, t).map_err(renewal_err)?;
            if let Some(w) = &est.warning {
                eprintln!("renewal: (j={j}, t={t}): {w}");
            }
            Ok(RenewalRow { j, t, log_estimate: est.log_value, warning: est.warning })
        })
        .collect::<Result<_, CliError>>()?;
    match format {
        OutputFormat::Csv => {
            writeln!(out, "# schema_version: {SCHEMA_VERSION}").map_err(io_err)?;
            writeln!(out, "j,t,log_estimate,warned").map_err(io_err)?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{}",
                    r.j,
                    fnum(r.t),
                    fnum(r.log_estimate),
                    if r.warning.is_some() { "regime_stretched" } else { "" }
                )
                .map_err(io_err)?;
            }
        }
        OutputFormat::Json => {
            let doc = RenewalDoc {
                schema_version: SCHEMA_VERSION,
                command: "renewal",
                mean: input.mean(),
                betas: &betas,
                b: [b1, b2, b3],
                rows: &rows,
            };
            serde_json::to_writer_pretty(&mut *out, &doc)
                .map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle.
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OracleRow {
    j: u64,
    t: f64,
    log_value: f64,
}

#[derive(Serialize)]
struct OracleDoc<'a> {
    schema_version: u32,
    command: &'static str,
    kappa: f64,
    h: f64,
    rows: &'a [OracleRow],
}

fn run_oracle(a: OracleArgs) -> Result<(), CliError> {
    let spec = load_spec(&a.spec)?;
    if a.j < 1 {
        return Err(CliError::Config("--j must be >= 1".into()));
    }
    if !(a.h > 0.0 && a.h.is_finite()) {
        return Err(CliError::Config(format!("--h must be finite and > 0, got {}", a.h)));
    }
    let gm = discretize(&spec, a.h, a.horizon)
        .map_err(|e| CliError::Math(format!("discretization: {e}")))?;
    let table = convolve_power(&gm, a.j, a.kappa, a.horizon)
        .map_err(|e| CliError::Math(format!("convolution: {e}")))?;
    let mut out = open_out(&a.out)?;
    match &a.t {
        Some(ts) => {
            let ts = parse_f64_list(ts, "--t")?;
            let rows: Vec<OracleRow> = ts
                .iter()
                .map(|&t| {
                    let v = table
                        .untilted_value_at(t)
                        .map_err(|e| CliError::Math(format!("value at t={t}: {e}")))?;
                    Ok(OracleRow { j: a.j, t, log_value: v.ln_abs() })
                })
                .collect::<Result<_, CliError>>()?;
            match a.format {
                OutputFormat::Csv => {
                    writeln!(out, "# schema_version: {SCHEMA_VERSION}").map_err(io_err)?;
                    writeln!(out, "j,t,log_value").map_err(io_err)?;
                    for r in &rows {
                        writeln!(out, "{},{},{}", r.j, fnum(r.t), fnum(r.log_value))
                            .map_err(io_err)?;
                    }
                }
                OutputFormat::Json => {
                    let doc = OracleDoc {
                        schema_version: SCHEMA_VERSION,
                        command: "oracle",
                        kappa: a.kappa,
                        h: a.h,
                        rows: &rows,
                    };
                    serde_json::to_writer_pretty(&mut *out, &doc)
                        .map_err(|e| CliError::Io(e.to_string()))?;
                    writeln!(out).map_err(io_err)?;
                }
            }
        }
        None => {
            // Full cumulative table; CSV only (it is a plot-ready dump).
            if a.format == OutputFormat::Json {
                return Err(CliError::Config(
                    "full-table dumps are CSV; pass --t for JSON point queries".into(),
                ));
            }
            writeln!(out, "# schema_version: {SCHEMA_VERSION}").map_err(io_err)?;
            out.write_all(table.to_csv().as_bytes()).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

// ---------------------------------------------------------------------------
// Tests (pure helpers; end-to-end coverage drives the binary).
// ---------------------------------------------------------------------------
