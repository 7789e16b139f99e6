//! The batched universal likelihood ratio e-process.
//!
//! The first schedule time `t_1` closes a conditioning batch: its points only
//! train the estimator, and `R` stays at 1. At every later schedule time `t_k`
//! the estimator is refitted on the data up to `t_{k-1}` and scores the new
//! batch, the log-concave MLE is refitted on everything seen, and
//!
//! ```text
//! log R = sum_{s > t_1} [log q_hat(X_s) - log p_hat(X_s)] - sum of certified MLE gaps
//! ```
//!
//! Between schedule times `R` is held. Subtracting the certified gaps keeps
//! the process an e-process when the MLE is solved only approximately.
use serde::{Deserialize, Serialize};

use crate::density::EvaluableDensity;
use crate::error::{invalid, Error, Result};
use crate::estimators::EstimatorSpec;
use crate::lcmle::{fit_lcmle, MleFitReport, WeightedSortedSample, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Data dimension; only the real line is supported.
pub const DIMENSION: usize = 1;

/// Recomputation times `t_1 < t_2 < ...` with `t_1 >= d + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BatchSchedule {
    /// `t_k = k * interval`, skipping times below `d + 1`.
    Uniform { interval: usize },
    /// A finite, strictly increasing list.
    Explicit { times: Vec<usize> },
}

impl BatchSchedule {
    pub fn uniform(interval: usize) -> Result<Self> {
        if interval == 0 {
            return Err(invalid("batch interval must be >= 1"));
        }
        Ok(BatchSchedule::Uniform { interval })
    }

    pub fn explicit(times: Vec<usize>) -> Result<Self> {
        if times.is_empty() {
            return Err(invalid("schedule must contain at least one time"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("schedule times must be strictly increasing"));
        }
        if times[0] < DIMENSION + 1 {
            return Err(invalid(format!(
                "first schedule time must be >= {}, got {}",
                DIMENSION + 1,
                times[0]
            )));
        }
        Ok(BatchSchedule::Explicit { times })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BatchSchedule::Uniform { interval } => Self::uniform(*interval).map(|_| ()),
            BatchSchedule::Explicit { times } => Self::explicit(times.clone()).map(|_| ()),
        }
    }

    /// First schedule time strictly after `t`.
    pub fn next_after(&self, t: usize) -> Option<usize> {
        match self {
            BatchSchedule::Uniform { interval } => {
                let k = t / interval + 1;
                Some((k * interval).max(DIMENSION + 1).max(t + 1))
            }
            BatchSchedule::Explicit { times } => times.iter().copied().find(|&s| s > t),
        }
    }

    pub fn first(&self) -> Option<usize> {
        self.next_after(0)
    }

    /// All schedule times up to and including `horizon`.
    pub fn times_until(&self, horizon: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut t = 0;
        while let Some(next) = self.next_after(t) {
            if next > horizon {
                break;
            }
            out.push(next);
            t = next;
        }
        out
    }

    pub fn contains(&self, t: usize) -> bool {
        t > 0 && self.next_after(t - 1) == Some(t)
    }
}

/// Everything the e-process needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct EProcessConfig {
    pub schedule: BatchSchedule,
    pub estimator: EstimatorSpec,
    pub mle_tol: f64,
    pub mle_max_iter: usize,
}

impl EProcessConfig {
    pub fn new(schedule: BatchSchedule, estimator: EstimatorSpec) -> Self {
        Self {
            schedule,
            estimator,
            mle_tol: DEFAULT_TOL,
            mle_max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn with_mle_tol(mut self, tol: f64) -> Self {
        self.mle_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.estimator.validate()?;
        if !(self.mle_tol > 0.0 && self.mle_tol.is_finite()) {
            return Err(invalid("mle_tol must be positive"));
        }
        if self.mle_max_iter == 0 {
            return Err(invalid("mle_max_iter must be positive"));
        }
        Ok(())
    }
}
/// Role of a schedule time in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchKind {
    /// End of the first batch, which only trains the estimator.
    Conditioning,
    Scored,
    /// The MLE was degenerate; the batch rolls into the next one.
    Deferred,
}

/// What happened at one schedule time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRecord {
    pub t: usize,
    pub kind: BatchKind,
    pub log_r: f64,
    pub log_numerator: f64,
    /// MLE log-likelihood over the scored observations.
    pub mle_loglik: f64,
    pub gap: f64,
    pub cumulative_gap: f64,
    /// The estimator substituted a fallback fit on this batch.
    pub estimator_fallback: bool,
    pub mle_converged: bool,
}

/// Running state of the test.
#[derive(Debug, Clone, PartialEq)]
pub struct EProcessState {
    t: usize,
    origin: Option<usize>,
    completed_batches: usize,
    last_boundary: usize,
    next_time: Option<usize>,
    log_numerator: f64,
    log_r: f64,
    mle_loglik: f64,
    cumulative_gap: f64,
    buffer: Vec<f64>,
    trace: Vec<BatchRecord>,
}

impl EProcessState {
    pub fn new(schedule: &BatchSchedule) -> Self {
        Self {
            t: 0,
            origin: None,
            completed_batches: 0,
            last_boundary: 0,
            next_time: schedule.first(),
            log_numerator: 0.0,
            log_r: 0.0,
            mle_loglik: 0.0,
            cumulative_gap: 0.0,
            buffer: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `t_1` once reached; observations after it are scored.
    pub fn origin(&self) -> Option<usize> {
        self.origin
    }

    /// Number of scored batches so far.
    pub fn completed_batches(&self) -> usize {
        self.completed_batches
    }

    /// End of the last batch that was conditioned on or scored.
    pub fn last_boundary(&self) -> usize {
        self.last_boundary
    }

    pub fn log_numerator(&self) -> f64 {
        self.log_numerator
    }

    pub fn log_r(&self) -> f64 {
        self.log_r
    }

    /// `R` itself, clipped to the largest finite double.
    pub fn r(&self) -> f64 {
        self.log_r.exp().min(1e308)
    }

    /// MLE log-likelihood over the scored observations at the last recomputation.
    pub fn mle_loglik(&self) -> f64 {
        self.mle_loglik
    }

    pub fn cumulative_gap(&self) -> f64 {
        self.cumulative_gap
    }

    pub fn buffer(&self) -> &[f64] {
        &self.buffer
    }

    pub fn trace(&self) -> &[BatchRecord] {
        &self.trace
    }

    /// `(t, log R)` at every schedule time reached.
    pub fn log_r_trace(&self) -> Vec<(usize, f64)> {
        self.trace.iter().map(|b| (b.t, b.log_r)).collect()
    }

    /// `log R_t` for any past `t`, from the trace.
    pub fn log_r_at(&self, t: usize) -> f64 {
        self.trace
            .iter()
            .take_while(|b| b.t <= t)
            .last()
            .map_or(0.0, |b| b.log_r)
    }

    fn record(&mut self, t: usize, kind: BatchKind, gap: f64, fallback: bool, converged: bool) {
        self.trace.push(BatchRecord {
            t,
            kind,
            log_r: self.log_r,
            log_numerator: self.log_numerator,
            mle_loglik: self.mle_loglik,
            gap,
            cumulative_gap: self.cumulative_gap,
            estimator_fallback: fallback,
            mle_converged: converged,
        });
    }

    /// Appends one observation and recomputes `R` if a schedule time is reached.
    pub fn step(&mut self, x: f64, config: &EProcessConfig) -> Result<Option<&BatchRecord>> {
        if !x.is_finite() {
            return Err(invalid(format!("observation must be finite, got {x}")));
        }
        self.buffer.push(x);
        self.t += 1;
        if self.next_time != Some(self.t) {
            return Ok(None);
        }
        self.next_time = config.schedule.next_after(self.t);
        let t = self.t;

        let Some(origin) = self.origin else {
            self.origin = Some(t);
            self.last_boundary = t;
            self.record(t, BatchKind::Conditioning, 0.0, false, true);
            return Ok(self.trace.last());
        };

        let sample = match WeightedSortedSample::from_values(&self.buffer) {
            Ok(s) => s,
            Err(Error::DegenerateSample(_)) => {
                self.record(t, BatchKind::Deferred, 0.0, false, false);
                return Ok(self.trace.last());
            }
            Err(e) => return Err(e),
        };

        let start = self.last_boundary;
        let q_hat = config.estimator.fit(&self.buffer[..start])?;
        let contribution = batch_log_score(&q_hat, &self.buffer[start..t])?;

        let fit: MleFitReport = fit_lcmle(&sample, config.mle_tol, config.mle_max_iter)?;
        let mle_loglik = mle_log_score(&fit, &self.buffer[origin..t]);

        self.log_numerator += contribution;
        self.mle_loglik = mle_loglik;
        self.cumulative_gap += fit.gap;
        self.log_r = self.log_numerator - mle_loglik - self.cumulative_gap;
        self.last_boundary = t;
        self.completed_batches += 1;
        self.record(t, BatchKind::Scored, fit.gap, q_hat.fallback, fit.converged);
        Ok(self.trace.last())
    }
}

/// Functional form of [`EProcessState::step`].
pub fn eprocess_step(
    mut state: EProcessState,
    x: f64,
    schedule: &BatchSchedule,
    estimator: &EstimatorSpec,
    mle_tol: f64,
) -> Result<EProcessState> {
    let config = EProcessConfig::new(schedule.clone(), *estimator).with_mle_tol(mle_tol);
    state.step(x, &config)?;
    Ok(state)
}

fn batch_log_score(q_hat: &dyn EvaluableDensity, batch: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for &x in batch {
        let v = q_hat.logpdf(x);
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "estimator log-density at {x} is {v}"
            )));
        }
        total += v;
    }
    Ok(total)
}

fn mle_log_score(fit: &MleFitReport, scored: &[f64]) -> f64 {
    scored.iter().map(|&x| fit.density.evaluate_logpdf(x)).sum()
}

/// Outcome of running the test on a finite stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub rejected: bool,
    pub rejection_time: Option<usize>,
    pub final_log_r: f64,
    pub trace: Vec<(usize, f64)>,
}

/// First `t` with `log R_t >= log(1/alpha)`.
pub fn rejection_time(trace: &[(usize, f64)], alpha: f64) -> Result<Option<usize>> {
    let threshold = log_threshold(alpha)?;
    Ok(trace
        .iter()
        .find(|(_, lr)| *lr >= threshold)
        .map(|(t, _)| *t))
}

pub fn log_threshold(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(-alpha.ln())
}

/// Runs the test over `stream`, optionally stopping at the first crossing.
pub fn run_test(
    stream: &[f64],
    config: &EProcessConfig,
    alpha: f64,
    stop_at_rejection: bool,
) -> Result<(TestOutcome, EProcessState)> {
    config.validate()?;
    let threshold = log_threshold(alpha)?;
    let mut state = EProcessState::new(&config.schedule);
    let mut tau = None;
    for &x in stream {
        let crossed = match state.step(x, config)? {
            Some(rec) => rec.log_r >= threshold,
            None => false,
        };
        if crossed && tau.is_none() {
            tau = Some(state.t());
            if stop_at_rejection {
                break;
            }
        }
    }
    let outcome = TestOutcome {
        rejected: tau.is_some(),
        rejection_time: tau,
        final_log_r: state.log_r(),
        trace: state.log_r_trace(),
    };
    Ok((outcome, state))
}

/// `sum_s [log truth(X_s) - log p_hat(X_s)]` with `p_hat` the MLE on `buffer`.
pub fn sigma_diagnostic(truth: &dyn EvaluableDensity, buffer: &[f64], mle_tol: f64) -> Result<f64> {
    let sample = WeightedSortedSample::from_values(buffer)?;
    let fit = fit_lcmle(&sample, mle_tol, DEFAULT_MAX_ITER)?;
    let mut sigma = 0.0;
    for &x in buffer {
        let lt = truth.logpdf(x);
        if !lt.is_finite() {
            return Err(invalid(format!(
                "{x} lies outside the support of the reference density"
            )));
        }
        sigma += lt - fit.density.evaluate_logpdf(x);
    }
    Ok(sigma)
}

/// Prediction regret of the batched numerator against `truth`.
///
/// Replays the schedule over `stream` exactly as the e-process does and
/// returns `sum_s [log truth(X_s) - log q_hat(X_s)]` over the points of all
/// scored batches.
pub fn regret_diagnostic(
    truth: &dyn EvaluableDensity,
    stream: &[f64],
    schedule: &BatchSchedule,
    estimator: &EstimatorSpec,
) -> Result<f64> {
    schedule.validate()?;
    estimator.validate()?;
    let times = schedule.times_until(stream.len());
    let Some((&origin, rest)) = times.split_first() else {
        return Err(invalid("stream ends before the first schedule time"));
    };
    let mut regret = 0.0;
    let mut last = origin;
    for &t in rest {
        if stream[..t].windows(2).all(|w| w[0] == w[1]) {
            continue;
        }
        let q_hat = estimator.fit(&stream[..last])?;
        for &x in &stream[last..t] {
            let q = q_hat.logpdf(x);
            if !q.is_finite() {
                return Err(Error::Numeric(format!(
                    "estimator log-density at {x} is {q}"
                )));
            }
            regret += truth.logpdf(x) - q;
        }
        last = t;
    }
    Ok(regret)
}

/// The two halves of `log R + cumulative gap`, each recomputed from scratch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    /// `sum [log truth - log p_hat]` over the scored points at the last recomputation.
    pub sigma_part: f64,
    /// Batched regret of the estimator over the same points.
    pub rho_part: f64,
}

impl Decomposition {
    /// `|log R + cumulative gap - (sigma - rho)|`.
    pub fn residual(&self, state: &EProcessState) -> f64 {
        (state.log_r() + state.cumulative_gap() - (self.sigma_part - self.rho_part)).abs()
    }
}

/// Splits the current statistic into likelihood-gap and regret parts.
pub fn decompose(
    state: &EProcessState,
    truth: &dyn EvaluableDensity,
    config: &EProcessConfig,
) -> Result<Decomposition> {
    let (Some(origin), true) = (state.origin(), state.completed_batches() > 0) else {
        return Ok(Decomposition {
            sigma_part: 0.0,
            rho_part: 0.0,
        });
    };
    let data = &state.buffer()[..state.last_boundary()];
    let sample = WeightedSortedSample::from_values(data)?;
    let fit = fit_lcmle(&sample, config.mle_tol, config.mle_max_iter)?;
    let sigma_part = data[origin..]
        .iter()
        .map(|&x| truth.logpdf(x) - fit.density.evaluate_logpdf(x))
        .sum();
    let rho_part = regret_diagnostic(truth, data, &config.schedule, &config.estimator)?;
    Ok(Decomposition {
        sigma_part,
        rho_part,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{sample_mixture, GaussianMixture1D};
    use crate::estimators::BandwidthRule;
    use crate::lcmle::PiecewiseLogLinearDensity;

    fn kde() -> EstimatorSpec {
        EstimatorSpec::default()
    }

    #[test]
    fn schedules() {
        let s = BatchSchedule::uniform(20).unwrap();
        assert_eq!(s.times_until(100), vec![20, 40, 60, 80, 100]);
        assert!(s.contains(40) && !s.contains(41));
        let one = BatchSchedule::uniform(1).unwrap();
        assert_eq!(one.times_until(5), vec![2, 3, 4, 5]);
        assert!(BatchSchedule::uniform(0).is_err());
        assert!(BatchSchedule::explicit(vec![1, 5]).is_err());
        assert!(BatchSchedule::explicit(vec![5, 5]).is_err());
        assert!(BatchSchedule::explicit(vec![]).is_err());
        let e = BatchSchedule::explicit(vec![3, 7, 30]).unwrap();
        assert_eq!(e.times_until(10), vec![3, 7]);
        assert_eq!(e.next_after(30), None);
    }

    #[test]
    fn r_is_one_through_first_boundary_and_constant_between() {
        let cfg = EProcessConfig::new(BatchSchedule::uniform(10).unwrap(), kde());
        let xs = sample_mixture(5.0, 45, 3).unwrap();
        let mut state = EProcessState::new(&cfg.schedule);
        let mut seen = Vec::new();
        for &x in &xs {
            state.step(x, &cfg).unwrap();
            seen.push((state.t(), state.log_r()));
        }
        for &(t, lr) in &seen {
            if t <= 10 {
                assert_eq!(lr, 0.0);
            }
            let boundary = (t / 10) * 10;
            if boundary >= 10 {
                assert_eq!(lr, state.log_r_at(boundary));
            }
        }
        assert_eq!(state.origin(), Some(10));
        assert_eq!(state.completed_batches(), 3);
        assert_eq!(state.trace()[0].kind, BatchKind::Conditioning);
        assert_eq!(state.log_r_at(45), state.log_r());
    }

    #[test]
    fn bookkeeping_identity_after_every_batch() {
        let cfg = EProcessConfig::new(BatchSchedule::uniform(7).unwrap(), kde());
        let xs = sample_mixture(3.0, 60, 8).unwrap();
        let mut state = EProcessState::new(&cfg.schedule);
        for &x in &xs {
            if state.step(x, &cfg).unwrap().is_some() {
                let resid = state.log_r() + state.cumulative_gap() + state.mle_loglik()
                    - state.log_numerator();
                assert!(resid.abs() < 1e-9);
            }
        }
    }

    /// Estimator stand-in returning a fixed piecewise log-linear density.
    struct Fixed(PiecewiseLogLinearDensity);
    impl EvaluableDensity for Fixed {
        fn logpdf(&self, x: f64) -> f64 {
            self.0.evaluate_logpdf(x)
        }
        fn effective_support(&self) -> (f64, f64) {
            self.0.effective_support()
        }
    }

    #[test]
    fn estimator_equal_to_mle_gives_minus_gap() {
        // One scored batch; the numerator uses the very MLE of the denominator.
        let xs = sample_mixture(1.0, 30, 4).unwrap();
        let fit = fit_lcmle(&WeightedSortedSample::from_values(&xs).unwrap(), 1e-7, 500).unwrap();
        let q = Fixed(fit.density.clone());
        let numerator = batch_log_score(&q, &xs[10..]).unwrap();
        let log_r = numerator - mle_log_score(&fit, &xs[10..]) - fit.gap;
        assert!((log_r + fit.gap).abs() < 1e-12);
    }

    #[test]
    fn degenerate_prefix_defers_the_batch() {
        let cfg = EProcessConfig::new(BatchSchedule::uniform(3).unwrap(), kde());
        let mut state = EProcessState::new(&cfg.schedule);
        for _ in 0..6 {
            state.step(2.0, &cfg).unwrap();
        }
        let kinds: Vec<_> = state.trace().iter().map(|b| b.kind).collect();
        assert_eq!(kinds, vec![BatchKind::Conditioning, BatchKind::Deferred]);
        assert_eq!(state.log_r(), 0.0);
        for x in [1.0, 3.0, 2.5] {
            state.step(x, &cfg).unwrap();
        }
        assert_eq!(state.completed_batches(), 1);
        // the deferred batch rolls in: s = 4..=9 scored by the fit on X_1..X_3
        let q = kde().fit(&[2.0, 2.0, 2.0]).unwrap();
        assert!(
            q.fallback
                || matches!(q.model, crate::estimators::FittedModel::Kde(ref k) if k.bandwidth_fallback)
        );
        let expect: f64 = [2.0, 2.0, 2.0, 1.0, 3.0, 2.5]
            .iter()
            .map(|&x| q.logpdf(x))
            .sum();
        assert!((state.log_numerator() - expect).abs() < 1e-12);
    }

    #[test]
    fn non_finite_observation_is_rejected() {
        let cfg = EProcessConfig::new(BatchSchedule::uniform(3).unwrap(), kde());
        let mut state = EProcessState::new(&cfg.schedule);
        assert!(state.step(f64::NAN, &cfg).is_err());
    }

    #[test]
    fn rejection_time_examples() {
        let trace = [(20, -0.1), (40, 2.0), (60, 1.0)];
        assert_eq!(rejection_time(&trace, 0.1).unwrap(), None);
        assert_eq!(
            rejection_time(&[(20, -0.1), (40, 2.5)], 0.1).unwrap(),
            Some(40)
        );
        assert_eq!(
            rejection_time(&[(20, -0.1), (40, 0.0)], 1.0).unwrap(),
            Some(40)
        );
        assert!(rejection_time(&trace, 0.0).is_err());
        assert!(rejection_time(&trace, 1.5).is_err());
    }

    #[test]
    fn sigma_examples() {
        struct Unif;
        impl EvaluableDensity for Unif {
            fn logpdf(&self, x: f64) -> f64 {
                if (0.0..=1.0).contains(&x) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            fn effective_support(&self) -> (f64, f64) {
                (0.0, 1.0)
            }
        }
        let s = sigma_diagnostic(&Unif, &[0.0, 1.0], 1e-7).unwrap();
        assert!(s.abs() <= 2e-7);
        assert!(sigma_diagnostic(&Unif, &[0.0, 2.0], 1e-7).is_err());
        assert!(sigma_diagnostic(&Unif, &[0.5, 0.5], 1e-7).is_err());

        let normal = GaussianMixture1D::new(0.0).unwrap();
        for seed in 0..5 {
            let xs = sample_mixture(0.0, 100, seed).unwrap();
            assert!(sigma_diagnostic(&normal, &xs, 1e-7).unwrap() <= 1e-7);
        }
    }

    #[test]
    fn oracle_regret_is_zero() {
        let truth = GaussianMixture1D::new(4.0).unwrap();
        let xs = sample_mixture(4.0, 100, 2).unwrap();
        let oracle = EstimatorSpec::Oracle { mu: 4.0 };
        let every20 = BatchSchedule::uniform(20).unwrap();
        assert_eq!(
            regret_diagnostic(&truth, &xs, &every20, &oracle).unwrap(),
            0.0
        );
        assert!(regret_diagnostic(&truth, &xs[..10], &every20, &oracle).is_err());
    }

    #[test]
    fn decomposition_identity() {
        let truth = GaussianMixture1D::new(3.0).unwrap();
        for estimator in [
            kde(),
            EstimatorSpec::Kde {
                bandwidth: BandwidthRule::Silverman,
            },
        ] {
            let cfg = EProcessConfig::new(BatchSchedule::uniform(10).unwrap(), estimator);
            let xs = sample_mixture(3.0, 55, 12).unwrap();
            let mut state = EProcessState::new(&cfg.schedule);
            for &x in &xs {
                if state.step(x, &cfg).unwrap().is_some() {
                    let d = decompose(&state, &truth, &cfg).unwrap();
                    assert!(d.residual(&state) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn functional_step_matches_method() {
        let schedule = BatchSchedule::uniform(5).unwrap();
        let xs = sample_mixture(2.0, 17, 1).unwrap();
        let cfg = EProcessConfig::new(schedule.clone(), kde());
        let mut a = EProcessState::new(&schedule);
        let mut b = EProcessState::new(&schedule);
        for &x in &xs {
            a = eprocess_step(a, x, &schedule, &kde(), DEFAULT_TOL).unwrap();
            b.step(x, &cfg).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn rejection_is_monotone_in_alpha() {
        let cfg = EProcessConfig::new(BatchSchedule::uniform(10).unwrap(), kde());
        let xs = sample_mixture(9.0, 100, 6).unwrap();
        let (out, _) = run_test(&xs, &cfg, 1.0, false).unwrap();
        let mut prev = Some(0usize);
        for alpha in [1.0, 0.5, 0.2, 0.1, 0.05, 0.01, 1e-4] {
            let tau = rejection_time(&out.trace, alpha).unwrap();
            match (prev, tau) {
                (Some(p), Some(t)) => assert!(t >= p),
                (None, Some(_)) => panic!("rejection reappeared at smaller alpha"),
                _ => {}
            }
            prev = tau;
        }
    }
}
