//! Command-line surface: `sample`, `analyze`, `validate` and `trace`.
//!
//! Exit codes: 0 success, 1 validation failure, 2 argument error,
//! 3 step-budget abort.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;
use vervaat::oracle::MIN_VALIDATION_SAMPLES;
use vervaat::{
    absorption_bracket, build_path, forward_trajectory, sample_many, small_beta_constant,
    theorem_bounds, validate_run, AbsorptionBracket, RuntimeBounds, SampleResult, StreamFactory,
    TestReport, VervaatParams,
};

pub mod format;

use format::fmt_f64;

/// Header of the sample table.
pub const CSV_HEADER: &str = "index,y_value,steps,d0";

#[derive(Debug, Parser)]
#[command(name = "vervaat", version, about = "Perfect sampling of Vervaat perpetuities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}


#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw exact samples (one row per draw).
    Sample(Options),
    /// Runtime bounds, absorption bracket on E T and the small-beta constant.
    Analyze(Options),
    /// Compare the sampler against the series oracle; exit 1 on failure.
    Validate(Options),
    /// Print one backward path and its forward reconstruction.
    Trace(Options),
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Number of draws (default: 10 for sample, 1000000 for validate, 1 for trace).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Truncation depth of the series oracle (default: error below 1e-9).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Dominating states retained by the absorption solver.
    #[arg(long, default_value_t = 400)]
    pub truncation: usize,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Sample,
    Analyze,
    Validate,
    Trace,
}

/// Validated settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandName,
    pub beta: f64,
    pub n: usize,
    pub seed: u64,
    pub depth: Option<usize>,
    pub truncation: usize,
    pub threads: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Argument(String),
    #[error(transparent)]
    Budget(vervaat::Error),
    #[error("{0}")]
    Core(vervaat::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl From<vervaat::Error> for CliError {
    fn from(e: vervaat::Error) -> Self {
        match e {
            vervaat::Error::Budget { .. } => CliError::Budget(e),
            vervaat::Error::InvalidParameter(msg) | vervaat::Error::Domain(msg) => {
                CliError::Argument(msg)
            }
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Argument(_) | CliError::Io(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Core(_) => 1,
        }
    }
}

/// Result of a successful command: whether every validation check passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ValidationFailed,
}

impl Outcome {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Success => ExitCode::SUCCESS,
            Outcome::ValidationFailed => ExitCode::from(1),
        }
    }
}

impl RunConfig {
    pub fn from_command(command: &Command) -> Result<Self, CliError> {
        let (name, o) = match command {
            Command::Sample(o) => (CommandName::Sample, o),
            Command::Analyze(o) => (CommandName::Analyze, o),
            Command::Validate(o) => (CommandName::Validate, o),
            Command::Trace(o) => (CommandName::Trace, o),
        };
        if !(o.beta > 0.0 && o.beta.is_finite()) {
            return Err(CliError::Argument(format!("--beta must be positive, got {}", o.beta)));
        }
        let n = o.n.unwrap_or(match name {
            CommandName::Sample => 10,
            CommandName::Validate => 1_000_000,
            CommandName::Analyze | CommandName::Trace => 1,
        });
        if n == 0 {
            return Err(CliError::Argument("--n must be at least 1".into()));
        }
        match name {
            CommandName::Validate if n < MIN_VALIDATION_SAMPLES => {
                return Err(CliError::Argument(format!(
                    "validate needs --n >= {MIN_VALIDATION_SAMPLES}, got {n}"
                )));
            }
            CommandName::Trace if n != 1 => {
                return Err(CliError::Argument("trace renders exactly one run (--n 1)".into()));
            }
            _ => {}
        }
        let threads = o
            .threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if threads == 0 {
            return Err(CliError::Argument("--threads must be at least 1".into()));
        }
        let format = match (name, o.format) {
            (CommandName::Sample, f) => f.unwrap_or(Format::Csv),
            (_, None | Some(Format::Json)) => Format::Json,
            (_, Some(Format::Csv)) => {
                return Err(CliError::Argument(
                    "only the sample command supports --format csv".into(),
                ))
            }
        };
        Ok(Self {
            command: name,
            beta: o.beta,
            n,
            seed: o.seed,
            depth: o.depth,
            truncation: o.truncation,
            threads,
            format,
            out: o.out.clone(),
        })
    }

    fn params(&self) -> Result<VervaatParams, CliError> {
        Ok(VervaatParams::new(self.beta)?)
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| CliError::Argument(format!("cannot start {} threads: {e}", self.threads)))
    }
}

/// Runs a parsed command line, writing to `--out` or standard output.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let config = RunConfig::from_command(&cli.command)?;
    match &config.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            let outcome = execute(&config, &mut w)?;
            w.flush()?;
            Ok(outcome)
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            let outcome = execute(&config, &mut w)?;
            w.flush()?;
            Ok(outcome)
        }
    }
}

pub fn execute(config: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match config.command {
        CommandName::Sample => cmd_sample(config, out).map(|_| Outcome::Success),
        CommandName::Analyze => cmd_analyze(config, out).map(|_| Outcome::Success),
        CommandName::Validate => cmd_validate(config, out),
        CommandName::Trace => cmd_trace(config, out).map(|_| Outcome::Success),
    }
}

#[derive(Serialize)]
struct SampleRow {
    index: usize,
    y_value: f64,
    steps: u64,
    d0: u64,
}

#[derive(Serialize)]
struct SampleTable<'a> {
    beta: f64,
    seed: u64,
    n: usize,
    samples: &'a [SampleRow],
}

/// Draws `n` samples; row `i` always comes from substream `i` of `--seed`.
pub fn cmd_sample(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let params = config.params()?;
    let results: Vec<SampleResult> = config
        .pool()?
        .install(|| sample_many(&params, config.n, config.seed))?;
    match config.format {
        Format::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for (i, r) in results.iter().enumerate() {
                writeln!(out, "{i},{},{},{}", fmt_f64(r.value), r.steps, r.d0)?;
            }
        }
        Format::Json => {
            let rows: Vec<SampleRow> = results
                .iter()
                .enumerate()
                .map(|(index, r)| SampleRow {
                    index,
                    y_value: r.value,
                    steps: r.steps,
                    d0: r.d0,
                })
                .collect();
            let table = SampleTable {
                beta: config.beta,
                seed: config.seed,
                n: config.n,
                samples: &rows,
            };
            write_json(out, &table)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub beta: f64,
    pub x0: u64,
    pub w_threshold: f64,
    pub bounds: RuntimeBounds,
    pub bracket: AbsorptionBracket,
    pub c: f64,
}

pub fn analysis_report(config: &RunConfig) -> Result<AnalysisReport, CliError> {
    let params = config.params()?;
    Ok(AnalysisReport {
        beta: params.beta(),
        x0: params.x0(),
        w_threshold: params.w_threshold(),
        bounds: theorem_bounds(&params),
        bracket: absorption_bracket(&params, config.truncation)?,
        c: small_beta_constant(1e-12)?,
    })
}

pub fn cmd_analyze(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    write_json(out, &analysis_report(config)?)
}

#[derive(Serialize)]
struct ValidationOutput<'a> {
    #[serde(flatten)]
    report: &'a TestReport,
    pass: bool,
}

pub fn cmd_validate(config: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let params = config.params()?;
    let report = match config.depth {
        None => config.pool()?.install(|| validate_run(&params, config.n, config.seed))?,
        Some(depth) => config.pool()?.install(|| {
            vervaat::oracle::validate_with_depth(&params, config.n, config.seed, depth)
        })?,
    };
    emit_report(&report, out)
}

/// Writes a report and maps its verdict to an [`Outcome`].
pub fn emit_report(report: &TestReport, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let pass = report.all_pass();
    write_json(out, &ValidationOutput { report, pass })?;
    Ok(if pass {
        Outcome::Success
    } else {
        Outcome::ValidationFailed
    })
}

/// Human-readable rendering of one run; it reproduces row 0 of `sample`
/// for the same seed.
pub fn cmd_trace(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let params = config.params()?;
    let mut src = StreamFactory::new(config.seed).substream(0);
    let path = build_path(&params, &mut src)?;
    let xs = forward_trajectory(&params, &path, &mut src, 0.0)?;
    let t = path.len();

    let mut s = String::new();
    let _ = writeln!(s, "beta = {}", fmt_f64(params.beta()));
    let _ = writeln!(s, "x0 = {}", params.x0());
    let _ = writeln!(s, "floor = {}", params.floor());
    let _ = writeln!(s, "D_0 = {}", path.d0());
    for step in 1..=t {
        let (d, newer) = (path.state(step), path.state(step - 1));
        let mv = if newer > d {
            "up"
        } else if newer < d {
            "down"
        } else {
            "hold"
        };
        let u = path.imputed_u()[step - 1];
        let _ = writeln!(
            s,
            "step {step}: D_-{step} = {d}, forward move = {mv}, U_-{step} = {}, W1_-{step} = {}, coalesced = {}",
            fmt_f64(u),
            fmt_f64(params.w_from_uniform(u)),
            if step == t { "yes" } else { "no" }
        );
    }
    let _ = writeln!(s, "T = {t}");
    for (k, x) in xs.iter().enumerate() {
        let label = match t - k {
            0 => "X_0".to_string(),
            back => format!("X_-{back}"),
        };
        let _ = writeln!(s, "{label} = {}", fmt_f64(*x));
    }
    let _ = writeln!(s, "X0 = {}", fmt_f64(*xs.last().expect("non-empty trajectory")));
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use vervaat::{validate_with, DrivingPair, UniformStream};

    fn config(command: Command) -> Result<RunConfig, CliError> {
        RunConfig::from_command(&command)
    }

    fn opts() -> Options {
        Options {
            beta: 1.0,
            n: None,
            seed: 7,
            depth: None,
            truncation: 400,
            threads: Some(2),
            format: None,
            out: None,
        }
    }

    #[test]
    fn defaults_per_command() {
        let c = config(Command::Sample(opts())).unwrap();
        assert_eq!((c.n, c.format), (10, Format::Csv));
        let c = config(Command::Validate(opts())).unwrap();
        assert_eq!((c.n, c.format), (1_000_000, Format::Json));
        assert_eq!(config(Command::Trace(opts())).unwrap().n, 1);
    }

    #[test]
    fn rejects_bad_settings() {
        let bad = |f: fn(&mut Options)| {
            let mut o = opts();
            f(&mut o);
            config(Command::Validate(o)).unwrap_err().exit_code()
        };
        assert_eq!(bad(|o| o.n = Some(100)), 2);
        assert_eq!(bad(|o| o.beta = 0.0), 2);
        assert_eq!(bad(|o| o.threads = Some(0)), 2);
        assert_eq!(bad(|o| o.format = Some(Format::Csv)), 2);
    }

    #[test]
    fn tampered_engine_exits_1() {
        // Coupler with the threshold comparison negated.
        let p = VervaatParams::new(1.0).unwrap();
        let tampered = |p: &VervaatParams, s: &mut UniformStream| {
            let mut r = vervaat::run_ciaftp(p, s)?;
            let pair = DrivingPair::new(p.sample_w(s), p.sample_w(s))?;
            r.value = if pair.w1 > 1.0 / (1.0 + r.value) {
                pair.w2
            } else {
                pair.w1 * (1.0 + r.value)
            };
            Ok(r)
        };
        let report = validate_with(&p, 20_000, 1, 60, tampered).unwrap();
        let mut sink = Vec::new();
        assert_eq!(emit_report(&report, &mut sink).unwrap(), Outcome::ValidationFailed);
        let v: serde_json::Value = serde_json::from_slice(&sink).unwrap();
        assert_eq!(v["pass"], false);
    }

    #[test]
    fn budget_maps_to_exit_3() {
        let e = CliError::from(vervaat::Error::Budget {
            beta: 30.0,
            lower_bound: 1e40,
            budget: 10,
        });
        assert_eq!(e.exit_code(), 3);
        assert_eq!(CliError::from(vervaat::Error::InvalidParameter("x".into())).exit_code(), 2);
    }
}
