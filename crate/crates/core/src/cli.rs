//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 degenerate data,
//! 4 numeric or internal failure.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::eprocess::{log_threshold, BatchSchedule, EProcessConfig, EProcessState};
use crate::error::Error;
use crate::estimators::{BandwidthRule, EstimatorSpec, Gmm2Config};
use crate::lcmle::{fit_lcmle, WeightedSortedSample, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::simlab::{fmt_g17, run_experiment, write_runs_csv, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "lcseq", version, about = "Sequential tests of log-concavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the log-concave MLE and print it as JSON.
    Fit {
        /// Input file, one number per line; `-` or absent reads stdin.
        input: Option<PathBuf>,
        /// Stopping tolerance on the certified likelihood gap.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Run the sequential test over a stream and stop at the first rejection.
    Test(TestArgs),
    /// Run a Monte-Carlo experiment from a JSON config.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct TestArgs {
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Uniform batch interval (default 20).
    #[arg(long, conflicts_with = "schedule")]
    interval: Option<usize>,
    /// Explicit recomputation times, e.g. "20,40,80".
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<ScheduleArg>,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Kde)]
    estimator: EstimatorArg,
    /// Separation of the true mixture, for `--estimator oracle`.
    #[arg(long)]
    oracle_mu: Option<f64>,
    /// `plugin`, `silverman` or a positive number.
    #[arg(long, value_parser = parse_bandwidth)]
    bandwidth: Option<BandwidthRule>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    mle_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Kde,
    Gmm2,
    Oracle,
}

#[derive(Debug, Clone)]
struct ScheduleArg(Vec<usize>);

fn parse_schedule(s: &str) -> Result<ScheduleArg, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("schedule entry {:?} is not a positive integer", p.trim()))
        })
        .collect::<Result<_, _>>()
        .map(ScheduleArg)
}

fn parse_bandwidth(s: &str) -> Result<BandwidthRule, String> {
    match s.to_ascii_lowercase().as_str() {
        "plugin" => Ok(BandwidthRule::PlugIn),
        "silverman" => Ok(BandwidthRule::Silverman),
        other => match other.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthRule::Fixed(h)),
            _ => Err(format!(
                "expected plugin, silverman or a positive number, got {s:?}"
            )),
        },
    }
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(what: &str, e: std::io::Error) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: format!("{what}: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) => EXIT_USAGE,
        Error::DegenerateSample(_) => EXIT_DEGENERATE,
        Error::Numeric(_) => EXIT_NUMERIC,
        Error::Run { source, .. } => exit_code(source),
    }
}

/// Parses one number per line; blank lines and `#` comments are skipped.
pub fn parse_stream(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => {
                return Err(format!(
                    "line {}: expected a finite number, got {line:?}",
                    i + 1
                ))
            }
        }
    }
    Ok(out)
}

fn read_input(path: Option<&Path>, stdin: &mut dyn Read) -> Result<Vec<f64>, Failure> {
    let mut text = String::new();
    match path {
        Some(p) if p != Path::new("-") => {
            text = std::fs::read_to_string(p)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display())))?;
        }
        _ => {
            stdin
                .read_to_string(&mut text)
                .map_err(|e| Failure::usage(format!("cannot read stdin: {e}")))?;
        }
    }
    parse_stream(&text).map_err(Failure::usage)
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Fit { input, tol } => cmd_fit(input.as_deref(), tol, stdin, stdout, stderr),
        Command::Test(args) => cmd_test(&args, stdin, stdout),
        Command::Simulate { config, out_dir } => cmd_simulate(&config, &out_dir, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

#[derive(Serialize)]
struct FitJson<'a> {
    knots: &'a [f64],
    phi: &'a [f64],
    loglik: f64,
    gap: f64,
}

fn cmd_fit(
    input: Option<&Path>,
    tol: f64,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::usage("--tol must be positive"));
    }
    let xs = read_input(input, stdin)?;
    let sample = WeightedSortedSample::from_values(&xs)?;
    let report = fit_lcmle(&sample, tol, DEFAULT_MAX_ITER)?;
    if !report.converged {
        let _ = writeln!(
            stderr,
            "warning: stopped after {} iterations with gap {:e}",
            report.iterations, report.gap
        );
    }
    let json = FitJson {
        knots: report.density.knots(),
        phi: report.density.phi(),
        loglik: report.loglik,
        gap: report.gap,
    };
    let text =
        serde_json::to_string(&json).map_err(|e| Failure::from(Error::Numeric(e.to_string())))?;
    writeln!(stdout, "{text}").map_err(|e| Failure::io("stdout", e))
}

fn estimator_from(args: &TestArgs) -> Result<EstimatorSpec, Failure> {
    let spec = match args.estimator {
        EstimatorArg::Kde => EstimatorSpec::Kde {
            bandwidth: args.bandwidth.unwrap_or_default(),
        },
        EstimatorArg::Gmm2 => EstimatorSpec::Gmm2(Gmm2Config::default()),
        EstimatorArg::Oracle => match args.oracle_mu {
            Some(mu) => EstimatorSpec::Oracle { mu },
            None => return Err(Failure::usage("--estimator oracle needs --oracle-mu")),
        },
    };
    if args.bandwidth.is_some() && args.estimator != EstimatorArg::Kde {
        return Err(Failure::usage(
            "--bandwidth only applies to --estimator kde",
        ));
    }
    if args.oracle_mu.is_some() && args.estimator != EstimatorArg::Oracle {
        return Err(Failure::usage(
            "--oracle-mu only applies to --estimator oracle",
        ));
    }
    spec.validate()?;
    Ok(spec)
}

fn cmd_test(args: &TestArgs, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), Failure> {
    let threshold = log_threshold(args.alpha)
        .map_err(|_| Failure::usage(format!("--alpha must lie in (0, 1], got {}", args.alpha)))?;
    let schedule = match (&args.schedule, args.interval) {
        (Some(times), _) => BatchSchedule::explicit(times.0.clone()),
        (None, Some(i)) => BatchSchedule::uniform(i),
        (None, None) => BatchSchedule::uniform(20),
    }?;
    let config = EProcessConfig {
        schedule,
        estimator: estimator_from(args)?,
        mle_tol: args.mle_tol,
        mle_max_iter: DEFAULT_MAX_ITER,
    };
    config.validate()?;
    let xs = read_input(args.input.as_deref(), stdin)?;

    let out_err = |e| Failure::io("stdout", e);
    writeln!(stdout, "t,log_R,rejected").map_err(out_err)?;
    let mut state = EProcessState::new(&config.schedule);
    let mut tau = None;
    for &x in &xs {
        let Some(rec) = state.step(x, &config)? else {
            continue;
        };
        let rejected = rec.log_r >= threshold;
        writeln!(stdout, "{},{},{}", rec.t, fmt_g17(rec.log_r), rejected).map_err(out_err)?;
        if rejected {
            tau = Some(rec.t);
            break;
        }
    }
    let verdict = serde_json::json!({ "rejected": tau.is_some(), "tau": tau });
    writeln!(stdout, "{verdict}").map_err(out_err)
}

fn cmd_simulate(config_path: &Path, out_dir: &Path, stdout: &mut dyn Write) -> Result<(), Failure> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", config_path.display())))?;
    let config = ExperimentConfig::from_json(&text)?;
    let result = run_experiment(&config)?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| Failure::io(&format!("cannot create {}", out_dir.display()), e))?;
    let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| {
        let mut buf = Vec::new();
        f(&mut buf)
            .and_then(|_| std::fs::write(out_dir.join(name), buf))
            .map_err(|e| Failure::io(&format!("cannot write {name}"), e))
    };
    write("summary.csv", &|b| result.summary.write_csv(b))?;
    write("runs.csv", &|b| write_runs_csv(&result.runs, b))?;

    for &mu in &config.mu_values {
        let last = result.summary.rows.iter().rfind(|r| r.mu == mu);
        if let Some(r) = last {
            let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"));
            writeln!(
                stdout,
                "mu={} estimator={} reps={} rejected@{}={:.3} mean_tau={} median_tau={}",
                fmt_g17(mu),
                config.estimator.label(),
                r.n_reps,
                r.checkpoint,
                r.rejection_fraction,
                opt(r.mean_tau),
                opt(r.median_tau),
            )
            .map_err(|e| Failure::io("stdout", e))?;
        }
    }
    Ok(())
}
