//! `contour-lcu` command-line driver.
//!
//! Every failure is reported as `{"error": {"code", "kind", "message"}}` with
//! exit codes 2 (parse), 3 (precondition), 4 (numerical) and 5 (internal).

mod study;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use contour_lcu::apps::{self, AppOptions, ApplicationProblem, ResourceEstimate, ResourcePath};
use contour_lcu::formats::StateFile;
use contour_lcu::sampler::{prepare_definition2, run_estimator, Definition2Options, SamplingMode};
use contour_lcu::{Error, ErrorClass};

#[derive(Parser, Debug)]
#[command(name = "contour-lcu", version, about = "Contour-integral matrix functions via simulated LCU circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prepare the normalized state f(A)ψ with the LCU circuit.
    Apply(RunArgs),
    /// Estimate ⟨ψ|f(A)†Of(A)|ψ⟩ with the single-ancilla sampler.
    Estimate(RunArgs),
    /// Query and ancilla counts without running a circuit.
    Resources(RunArgs),
    /// Run a registered sweep and write CSV.
    Study(StudyArgs),
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Problem description (JSON).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replaces the problem's epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Quadrature node count, replacing the automatic choice.
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Shots)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Replaces the contour parameter a.
    #[arg(long)]
    contour_param: Option<f64>,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Resource formula family for `resources`.
    #[arg(long, value_enum, default_value_t = PathArg::Lcu)]
    path: PathArg,
}

#[derive(clap::Args, Debug)]
struct StudyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    study: String,
    /// Trial count for coverage studies.
    #[arg(long, default_value_t = 200)]
    trials: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Exact,
    Shots,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum PathArg {
    Lcu,
    Sampler,
}

impl From<Mode> for SamplingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => SamplingMode::ExactExpectation,
            Mode::Shots => SamplingMode::ShotSampled,
        }
    }
}

/// Failures raised by the driver itself, next to library errors.
#[derive(Debug)]
enum CliError {
    Lib(Error),
    Usage(String),
    MissingFile(String),
    Io(String),
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Lib(e) => match e.class() {
                ErrorClass::Parse => 2,
                ErrorClass::Precondition => 3,
                ErrorClass::Numerical => 4,
            },
            CliError::Usage(_) => 2,
            CliError::MissingFile(_) => 3,
            CliError::Io(_) | CliError::Internal(_) => 5,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Lib(e) => e.kind(),
            CliError::Usage(_) => "UsageError",
            CliError::MissingFile(_) => "FileNotFound",
            CliError::Io(_) => "IoError",
            CliError::Internal(_) => "InternalError",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Lib(e) => e.to_string(),
            CliError::Usage(m) | CliError::MissingFile(m) | CliError::Io(m) | CliError::Internal(m) => m.clone(),
        }
    }

    fn record(&self) -> Value {
        json!({ "error": { "code": self.code(), "kind": self.kind(), "message": self.message() } })
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn load_problem(c: &Common) -> CliResult<ApplicationProblem> {
    let path = c.problem.as_ref().ok_or_else(|| CliError::Usage("--problem is required".into()))?;
    let mut p = read_problem(path)?;
    if let Some(e) = c.epsilon {
        p.epsilon = e;
    }
    if let Some(a) = c.contour_param {
        p.contour_param = Some(a);
    }
    Ok(p)
}

pub(crate) fn read_problem(path: &Path) -> CliResult<ApplicationProblem> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingFile(format!("{}: no such file", path.display())),
        _ => CliError::Io(format!("{}: {e}", path.display())),
    })?;
    Ok(ApplicationProblem::from_json(&text)?)
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Internal(e.to_string()))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn json_only(c: &Common, command: &str) -> CliResult<()> {
    if c.format == Format::Csv {
        return Err(CliError::Usage(format!("{command} writes JSON only")));
    }
    Ok(())
}

fn cmd_apply(args: &RunArgs) -> CliResult<String> {
    let c = &args.common;
    json_only(c, "apply")?;
    let problem = load_problem(c)?;
    let opts = AppOptions { m_override: c.m, ..Default::default() };
    let sol = apps::solve_problem(&problem, &opts)?;
    let d = &sol.definition1.diagnostics;
    let out = json!({
        "kind": sol.kind,
        "state": StateFile::from_state(&sol.state),
        "successProbability": sol.success_probability,
        "amplificationRounds": sol.definition1.amplification_rounds,
        "distance": sol.distance,
        "oracleState": StateFile::from_state(&sol.oracle_state),
        "bounds": {
            "epsilon": problem.epsilon,
            "distance": sol.distance,
            "quadratureTarget": d.quadrature_target,
            "aprioriBound": d.apriori_bound,
            "chain": d.chain,
        },
        "contourParam": sol.contour_param,
        "contour": sol.contour,
        "inhomogeneous": sol.inhomogeneous,
        "diagnostics": d,
        "resourceEstimate": sol.resources,
        "warnings": sol.warnings,
    });
    to_json(&out)
}

fn cmd_estimate(args: &RunArgs) -> CliResult<String> {
    let c = &args.common;
    json_only(c, "estimate")?;
    let problem = load_problem(c)?;
    if problem.b.is_some() {
        return Err(Error::InvalidParameter("estimate does not support an inhomogeneous term".into()).into());
    }
    let s = apps::setup(&problem)?;
    let o = problem.observable_or_default();
    let xi2 = problem.xi2_or_default();
    let opts = Definition2Options { m_override: c.m, ..apps::definition2_options(&s, c.mode.into(), c.seed) };
    let prepared = prepare_definition2(&s.a, &s.psi, &o, &s.f, &s.contour, problem.epsilon, xi2, &opts)?;
    let estimate = run_estimator(&prepared.plan, &s.psi, &o)?;
    let mut diagnostics = prepared.diagnostics;
    diagnostics.error = (estimate.mu - diagnostics.truth).abs();
    let resources = apps::estimate_from_setup(&problem, &s, ResourcePath::Sampler)?;
    let mut warnings = s.warnings.clone();
    warnings.extend(diagnostics.warnings.iter().cloned());
    let out = json!({
        "kind": s.kind,
        "estimate": estimate,
        "psiNorm": s.psi_norm,
        "diagnostics": diagnostics,
        "resourceEstimate": resources,
        "warnings": warnings,
    });
    to_json(&out)
}

fn resources_csv(r: &ResourceEstimate) -> String {
    let opt = |x: Option<f64>| x.map(study::fmt_f64).unwrap_or_default();
    let mut s = String::from("path,formulaTag,queriesUA,queriesUpsi,ancillaQubits,repetitionsT,generalQueriesUA,generalQueriesUpsi,generalAncillaQubits\n");
    s.push_str(&format!(
        "{},{},{},{},{},{},{},{},{}\n",
        match r.path {
            ResourcePath::Lcu => "lcu",
            ResourcePath::Sampler => "sampler",
        },
        study::csv_field(&r.formula_tag),
        study::fmt_f64(r.queries_ua),
        study::fmt_f64(r.queries_upsi),
        r.ancilla_qubits,
        opt(r.repetitions_t),
        study::fmt_f64(r.general.queries_ua),
        study::fmt_f64(r.general.queries_upsi),
        r.general.ancilla_qubits,
    ));
    s
}

fn cmd_resources(args: &RunArgs) -> CliResult<String> {
    let c = &args.common;
    let problem = load_problem(c)?;
    let path = match args.path {
        PathArg::Lcu => ResourcePath::Lcu,
        PathArg::Sampler => ResourcePath::Sampler,
    };
    let r = apps::estimate_resources(&problem, path)?;
    match c.format {
        Format::Json => to_json(&r),
        Format::Csv => Ok(resources_csv(&r)),
    }
}

fn cmd_study(args: &StudyArgs) -> CliResult<String> {
    let c = &args.common;
    let problem = match &c.problem {
        Some(_) => Some(load_problem(c)?),
        None => None,
    };
    let cfg = study::StudyConfig {
        problem,
        seed: c.seed,
        epsilon: c.epsilon,
        m: c.m,
        trials: args.trials,
        mode: c.mode.into(),
    };
    Ok(study::run(&args.study, &cfg)?)
}

fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Apply(a) => cmd_apply(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Resources(a) => cmd_resources(a),
        Command::Study(a) => cmd_study(a),
    }
}

fn out_path(cli: &Cli) -> Option<PathBuf> {
    match &cli.command {
        Command::Apply(a) | Command::Estimate(a) | Command::Resources(a) => a.common.out.clone(),
        Command::Study(a) => a.common.out.clone(),
    }
}

fn fail(err: CliError, out: Option<&Path>) -> ExitCode {
    let text = serde_json::to_string_pretty(&err.record()).unwrap_or_default() + "\n";
    eprintln!("contour-lcu: {}", err.message());
    if emit(out, &text).is_err() {
        let _ = std::io::stdout().write_all(text.as_bytes());
    }
    ExitCode::from(err.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail(CliError::Usage(e.to_string().trim_end().to_string()), None);
        }
    };
    let out = out_path(&cli);
    std::panic::set_hook(Box::new(|_| {}));
    let result = std::panic::catch_unwind(|| run(&cli));
    let result = match result {
        Ok(r) => r,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(CliError::Internal(msg))
        }
    };
    match result.and_then(|text| emit(out.as_deref(), &text)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e, out.as_deref()),
    }
}
