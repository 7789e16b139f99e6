//! Seeded Monte-Carlo experiments over the two-component Gaussian test bed.
//!
//! Every `(mu, rep)` pair gets its own stream derived from the base seed, so
//! results do not depend on scheduling, and different estimators or batch
//! intervals see the same data (common random numbers).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::density::{mix64, replication_seed, sample_mixture};
use crate::eprocess::{run_test, BatchSchedule, EProcessConfig};
use crate::error::{invalid, Error, Result};
use crate::estimators::EstimatorSpec;
use crate::lcmle::{DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Checkpoint fractions of the horizon used when none are given.
const DEFAULT_CHECKPOINT_COUNT: usize = 5;
const DEFAULT_INTERVAL: usize = 20;

/// One simulation protocol, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mu_values: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Uniform batch interval; mutually exclusive with `schedule`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<usize>>,
    pub reps: usize,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    /// Defaults to five evenly spaced times ending at the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_mle_tol")]
    pub mle_tol: f64,
}

fn default_alpha() -> f64 {
    0.1
}

fn default_horizon() -> usize {
    100
}

fn default_mle_tol() -> f64 {
    DEFAULT_TOL
}

impl ExperimentConfig {
    /// The usual protocol: alpha 0.1, horizon 100, I = 20, KDE.
    pub fn new(mu_values: Vec<f64>, reps: usize) -> Self {
        Self {
            mu_values,
            alpha: default_alpha(),
            horizon: default_horizon(),
            interval: Some(DEFAULT_INTERVAL),
            schedule: None,
            reps,
            estimator: EstimatorSpec::default(),
            checkpoints: None,
            base_seed: 0,
            mle_tol: DEFAULT_TOL,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                invalid(format!("config: {inner}"))
            } else {
                invalid(format!("{path}: {inner}"))
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every field; the message starts with the offending field name.
    pub fn validate(&self) -> Result<()> {
        if self.mu_values.is_empty() {
            return Err(invalid("mu_values: must not be empty"));
        }
        for (i, &mu) in self.mu_values.iter().enumerate() {
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(invalid(format!(
                    "mu_values[{i}]: must be finite and >= 0, got {mu}"
                )));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!(
                "alpha: must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.horizon < 2 {
            return Err(invalid(format!(
                "horizon: must be >= 2, got {}",
                self.horizon
            )));
        }
        if self.reps == 0 {
            return Err(invalid("reps: must be >= 1"));
        }
        if !(self.mle_tol > 0.0 && self.mle_tol.is_finite()) {
            return Err(invalid(format!(
                "mle_tol: must be positive, got {}",
                self.mle_tol
            )));
        }
        self.estimator
            .validate()
            .map_err(|e| invalid(format!("estimator: {}", strip_prefix(&e))))?;
        if self.interval.is_some() && self.schedule.is_some() {
            return Err(invalid(
                "interval: give either interval or schedule, not both",
            ));
        }
        let schedule = self.batch_schedule()?;
        match schedule.first() {
            Some(t1) if t1 <= self.horizon => {}
            _ => {
                return Err(invalid(
                    "schedule: no recomputation time within the horizon",
                ))
            }
        }
        if let Some(cps) = &self.checkpoints {
            if cps.is_empty() {
                return Err(invalid("checkpoints: must not be empty"));
            }
            if cps.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("checkpoints: must be strictly increasing"));
            }
            if cps[0] == 0 || *cps.last().unwrap() > self.horizon {
                return Err(invalid(format!(
                    "checkpoints: must lie in [1, horizon = {}]",
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    pub fn batch_schedule(&self) -> Result<BatchSchedule> {
        let schedule = match (&self.interval, &self.schedule) {
            (_, Some(times)) => BatchSchedule::explicit(times.clone()),
            (Some(i), None) => BatchSchedule::uniform(*i),
            (None, None) => BatchSchedule::uniform(DEFAULT_INTERVAL),
        };
        let field = if self.schedule.is_some() {
            "schedule"
        } else {
            "interval"
        };
        schedule.map_err(|e| invalid(format!("{field}: {}", strip_prefix(&e))))
    }

    pub fn checkpoint_times(&self) -> Vec<usize> {
        match &self.checkpoints {
            Some(c) => c.clone(),
            None => {
                let mut out: Vec<usize> = (1..=DEFAULT_CHECKPOINT_COUNT)
                    .map(|k| (k * self.horizon / DEFAULT_CHECKPOINT_COUNT).max(1))
                    .collect();
                out.dedup();
                out
            }
        }
    }

    fn eprocess_config(&self) -> Result<EProcessConfig> {
        Ok(EProcessConfig {
            schedule: self.batch_schedule()?,
            estimator: self.estimator,
            mle_tol: self.mle_tol,
            mle_max_iter: DEFAULT_MAX_ITER,
        })
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::InvalidInput(m) => m.clone(),
        other => other.to_string(),
    }
}

/// One replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub mu: f64,
    pub rep: usize,
    pub seed: u64,
    pub tau: Option<usize>,
    pub final_log_r: f64,
    pub trace: Vec<(usize, f64)>,
    /// Hash of the sampled stream, for common-random-number checks.
    pub stream_hash: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub mu: f64,
    pub checkpoint: usize,
    pub rejection_fraction: f64,
    pub n_reps: usize,
    /// Mean rejection time among runs rejected by this checkpoint.
    pub mean_tau: Option<f64>,
    pub median_tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub config: ExperimentConfig,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn row(&self, mu: f64, checkpoint: usize) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.mu == mu && r.checkpoint == checkpoint)
    }

    /// Rejection fraction at the last checkpoint.
    pub fn final_fraction(&self, mu: f64) -> Option<f64> {
        self.rows
            .iter()
            .rfind(|r| r.mu == mu)
            .map(|r| r.rejection_fraction)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "mu,checkpoint,rejection_fraction,n_reps,mean_tau,median_tau"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_g17(r.mu),
                r.checkpoint,
                fmt_g17(r.rejection_fraction),
                r.n_reps,
                r.mean_tau.map(fmt_g17).unwrap_or_default(),
                r.median_tau.map(fmt_g17).unwrap_or_default(),
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub summary: SummaryTable,
    pub runs: Vec<RunRecord>,
}

impl ExperimentResult {
    pub fn runs_for(&self, mu: f64) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.mu == mu)
    }
}

pub fn write_runs_csv(runs: &[RunRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "mu,rep,seed,tau,final_log_r")?;
    for r in runs {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_g17(r.mu),
            r.rep,
            r.seed,
            r.tau.map(|t| t.to_string()).unwrap_or_default(),
            fmt_g17(r.final_log_r),
        )?;
    }
    Ok(())
}

/// `printf("%.17g")`.
pub fn fmt_g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..P).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Order-sensitive hash of the bit patterns of a stream.
pub fn stream_hash(xs: &[f64]) -> u64 {
    xs.iter()
        .fold(mix64(xs.len() as u64), |h, x| mix64(h ^ x.to_bits()))
}

/// The stream a replication sees, with its seed.
pub fn replication_stream(
    config: &ExperimentConfig,
    mu: f64,
    rep: usize,
) -> Result<(u64, Vec<f64>)> {
    let seed = replication_seed(config.base_seed, mu, rep);
    Ok((seed, sample_mixture(mu, config.horizon, seed)?))
}

fn run_one(
    config: &ExperimentConfig,
    ep: &EProcessConfig,
    mu: f64,
    rep: usize,
) -> Result<RunRecord> {
    let seed = replication_seed(config.base_seed, mu, rep);
    let wrap = |e: Error| Error::Run {
        mu,
        rep,
        seed,
        source: Box::new(e),
    };
    let (_, stream) = replication_stream(config, mu, rep).map_err(wrap)?;
    let (outcome, _) = run_test(&stream, ep, config.alpha, false).map_err(wrap)?;
    Ok(RunRecord {
        mu,
        rep,
        seed,
        tau: outcome.rejection_time,
        final_log_r: outcome.final_log_r,
        trace: outcome.trace,
        stream_hash: stream_hash(&stream),
    })
}

fn tasks(config: &ExperimentConfig) -> Vec<(f64, usize)> {
    config
        .mu_values
        .iter()
        .flat_map(|&mu| (0..config.reps).map(move |rep| (mu, rep)))
        .collect()
}

/// Runs every replication on the current thread.
pub fn run_experiment_sequential(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let ep = config.eprocess_config()?;
    let runs = tasks(config)
        .into_iter()
        .map(|(mu, rep)| run_one(config, &ep, mu, rep))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(config, runs))
}

/// Runs replications on the rayon pool; output is identical to the sequential runner.
#[cfg(feature = "parallel")]
pub fn run_experiment_parallel(config: &ExperimentConfig) -> Result<ExperimentResult> {
    use rayon::prelude::*;
    config.validate()?;
    let ep = config.eprocess_config()?;
    let runs = tasks(config)
        .into_par_iter()
        .map(|(mu, rep)| run_one(config, &ep, mu, rep))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(config, runs))
}

/// Runs the experiment, in parallel when the `parallel` feature is enabled.
///
/// The first failing replication aborts the whole experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    #[cfg(feature = "parallel")]
    {
        run_experiment_parallel(config)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_experiment_sequential(config)
    }
}

fn finish(config: &ExperimentConfig, runs: Vec<RunRecord>) -> ExperimentResult {
    let checkpoints = config.checkpoint_times();
    let mut rows = Vec::with_capacity(config.mu_values.len() * checkpoints.len());
    for &mu in &config.mu_values {
        let taus: Vec<Option<usize>> = runs.iter().filter(|r| r.mu == mu).map(|r| r.tau).collect();
        let n = taus.len();
        for &cp in &checkpoints {
            let mut hit: Vec<usize> = taus
                .iter()
                .flatten()
                .copied()
                .filter(|&t| t <= cp)
                .collect();
            hit.sort_unstable();
            rows.push(SummaryRow {
                mu,
                checkpoint: cp,
                rejection_fraction: hit.len() as f64 / n as f64,
                n_reps: n,
                mean_tau: mean(&hit),
                median_tau: median_sorted(&hit),
            });
        }
    }
    ExperimentResult {
        summary: SummaryTable {
            config: config.clone(),
            rows,
        },
        runs,
    }
}

fn mean(xs: &[usize]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64)
}

fn median_sorted(xs: &[usize]) -> Option<f64> {
    let n = xs.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(xs[n / 2] as f64),
        _ => Some((xs[n / 2 - 1] + xs[n / 2]) as f64 / 2.0),
    }
}

/// One experiment per estimator, all on the same streams.
pub fn compare_estimators(
    config: &ExperimentConfig,
    estimators: &[EstimatorSpec],
) -> Result<Vec<(EstimatorSpec, ExperimentResult)>> {
    for e in estimators {
        e.validate()?;
    }
    estimators
        .iter()
        .map(|&estimator| {
            let arm = ExperimentConfig {
                estimator,
                ..config.clone()
            };
            run_experiment(&arm).map(|r| (estimator, r))
        })
        .collect()
}

/// One experiment per uniform batch interval, all on the same streams.
pub fn batching_study(
    config: &ExperimentConfig,
    intervals: &[usize],
) -> Result<Vec<(usize, ExperimentResult)>> {
    intervals
        .iter()
        .map(|&i| {
            let arm = ExperimentConfig {
                interval: Some(i),
                schedule: None,
                ..config.clone()
            };
            run_experiment(&arm).map(|r| (i, r))
        })
        .collect()
}
