//! Predictable density estimators for the numerator of the likelihood ratio.
//!
//! Each estimator is fitted on a prefix of the stream and then only
//! evaluated; a [`FittedDensity`] is immutable, so it cannot depend on the
//! points it is later scored on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::density::{mix64, normal_logpdf, EvaluableDensity, GaussianMixture1D, LN_SQRT_2PI};
use crate::error::{invalid, Error, Result};
use crate::numerics::log_add_exp;

pub const VARIANCE_FLOOR: f64 = 1e-4;

/// Kernel bandwidth selection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BandwidthRule {
    /// `1.06 min(sd, IQR / 1.34) n^(-1/5)`
    Silverman,
    /// Two-stage direct plug-in of Wand and Jones, Gaussian kernel.
    #[default]
    PlugIn,
    Fixed(f64),
}

impl Serialize for BandwidthRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BandwidthRule::Silverman => s.serialize_str("silverman"),
            BandwidthRule::PlugIn => s.serialize_str("plugin"),
            BandwidthRule::Fixed(h) => s.serialize_f64(*h),
        }
    }
}

impl<'de> Deserialize<'de> for BandwidthRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Width(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Name(n) if n.eq_ignore_ascii_case("silverman") => Ok(BandwidthRule::Silverman),
            Raw::Name(n) if n.eq_ignore_ascii_case("plugin") => Ok(BandwidthRule::PlugIn),
            Raw::Name(n) => Err(serde::de::Error::custom(format!(
                "unknown bandwidth rule {n:?}, expected \"silverman\", \"plugin\" or a positive number"
            ))),
            Raw::Width(h) if h > 0.0 && h.is_finite() => Ok(BandwidthRule::Fixed(h)),
            Raw::Width(h) => Err(serde::de::Error::custom(format!(
                "fixed bandwidth must be positive, got {h}"
            ))),
        }
    }
}

/// EM settings for the two-component Gaussian mixture estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gmm2Config {
    #[serde(default = "Gmm2Config::default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "Gmm2Config::default_tol")]
    pub tol: f64,
    #[serde(default = "Gmm2Config::default_restarts")]
    pub restarts: usize,
}

impl Gmm2Config {
    fn default_max_iter() -> usize {
        200
    }
    fn default_tol() -> f64 {
        1e-8
    }
    fn default_restarts() -> usize {
        3
    }
}

impl Default for Gmm2Config {
    fn default() -> Self {
        Self {
            max_iter: Self::default_max_iter(),
            tol: Self::default_tol(),
            restarts: Self::default_restarts(),
        }
    }
}

/// Which estimator feeds the numerator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum EstimatorSpec {
    #[serde(rename = "KDE")]
    Kde {
        #[serde(default)]
        bandwidth: BandwidthRule,
    },
    /// Partial oracle: the right parametric family, fitted by EM.
    #[serde(rename = "GMM2")]
    Gmm2(Gmm2Config),
    /// Full oracle: the true test-bed density.
    #[serde(rename = "ORACLE")]
    Oracle { mu: f64 },
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec::Kde {
            bandwidth: BandwidthRule::PlugIn,
        }
    }
}

impl EstimatorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimatorSpec::Kde {
                bandwidth: BandwidthRule::Fixed(h),
            } if !(h > 0.0 && h.is_finite()) => Err(invalid("fixed bandwidth must be positive")),
            EstimatorSpec::Gmm2(c) if c.max_iter == 0 || c.restarts == 0 || !(c.tol > 0.0) => Err(
                invalid("GMM2 needs max_iter >= 1, restarts >= 1 and tol > 0"),
            ),
            EstimatorSpec::Oracle { mu } if !(mu >= 0.0 && mu.is_finite()) => {
                Err(invalid("oracle mu must be finite and >= 0"))
            }
            _ => Ok(()),
        }
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::Kde {
                bandwidth: BandwidthRule::Silverman,
            } => "KDE(silverman)".into(),
            EstimatorSpec::Kde {
                bandwidth: BandwidthRule::PlugIn,
            } => "KDE".into(),
            EstimatorSpec::Kde {
                bandwidth: BandwidthRule::Fixed(h),
            } => format!("KDE(h={h})"),
            EstimatorSpec::Gmm2(_) => "GMM2".into(),
            EstimatorSpec::Oracle { mu } => format!("ORACLE(mu={mu})"),
        }
    }

    /// Fits the estimator on `prefix`.
    ///
    /// GMM2 on fewer than four points, or on a constant prefix, falls back to
    /// a default-bandwidth KDE and says so in [`FittedDensity::fallback`].
    pub fn fit(&self, prefix: &[f64]) -> Result<FittedDensity> {
        match *self {
            EstimatorSpec::Kde { bandwidth } => kde_fit(prefix, bandwidth).map(FittedDensity::from),
            EstimatorSpec::Gmm2(config) => {
                let constant = prefix.windows(2).all(|w| w[0] == w[1]);
                if prefix.len() < 4 || constant {
                    let mut fitted =
                        FittedDensity::from(kde_fit(prefix, BandwidthRule::default())?);
                    fitted.fallback = true;
                    return Ok(fitted);
                }
                Ok(FittedDensity::from(gmm2_fit(prefix, &config)?.params))
            }
            EstimatorSpec::Oracle { mu } => oracle_density(mu),
        }
    }
}

/// Gaussian kernel density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    centres: Vec<f64>,
    bandwidth: f64,
    /// The bandwidth rule could not be applied and `h = 1` was used instead.
    pub bandwidth_fallback: bool,
}

impl Kde {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn logpdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        // The nearest centre carries the largest kernel term.
        let i = self.centres.partition_point(|&c| c < x);
        let nearest = [i.checked_sub(1), (i < self.centres.len()).then_some(i)]
            .into_iter()
            .flatten()
            .map(|j| ((x - self.centres[j]) / h).abs())
            .fold(f64::INFINITY, f64::min);
        let top = -0.5 * nearest * nearest;
        let sum: f64 = self
            .centres
            .iter()
            .map(|c| {
                let z = (x - c) / h;
                (-0.5 * z * z - top).exp()
            })
            .sum();
        top + sum.ln() - (self.centres.len() as f64).ln() - h.ln() - LN_SQRT_2PI
    }
}

/// Sample standard deviation (`n - 1` denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule; `None` when the prefix has no spread.
pub fn silverman_bandwidth(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let sd = sample_sd(xs);
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let mut spread = sd.min(iqr / 1.34);
    if !(spread > 0.0) {
        spread = sd;
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return None;
    }
    Some(1.06 * spread * (xs.len() as f64).powf(-0.2))
}

/// Robust scale `min(sd, IQR / 1.349)`, or `sd` when the IQR vanishes.
fn robust_scale(xs: &[f64]) -> Option<f64> {
    let sd = sample_sd(xs);
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let scale = if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd };
    (scale > 0.0 && scale.is_finite()).then_some(scale)
}

/// `psi_r(g) = n^-2 g^-(r+1) sum_ij phi^(r)((x_i - x_j) / g)` for `r` in {4, 6}.
fn density_functional(xs: &[f64], r: u32, g: f64) -> f64 {
    let n = xs.len();
    let deriv = |u: f64| {
        let u2 = u * u;
        let poly = match r {
            4 => u2 * u2 - 6.0 * u2 + 3.0,
            _ => u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0,
        };
        poly * (-0.5 * u2 - LN_SQRT_2PI).exp()
    };
    let mut off = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            off += deriv((xs[i] - xs[j]) / g);
        }
    }
    let total = n as f64 * deriv(0.0) + 2.0 * off;
    total / ((n * n) as f64 * g.powi(r as i32 + 1))
}

/// Two-stage direct plug-in bandwidth; `None` when the prefix has no spread.
pub fn plugin_bandwidth(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let scale = robust_scale(xs)?;
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let z: Vec<f64> = xs.iter().map(|x| (x - mean) / scale).collect();
    // psi_8 from the normal reference, then psi_6 and psi_4 from kernel estimates
    let g1 = (2.0 * 2f64.sqrt().powi(9) / (7.0 * n)).powf(1.0 / 9.0);
    let psi6 = density_functional(&z, 6, g1);
    let g2 = (-3.0 * (2.0 / std::f64::consts::PI).sqrt() / (psi6 * n)).powf(1.0 / 7.0);
    let psi4 = density_functional(&z, 4, g2);
    let h = scale * (1.0 / (2.0 * std::f64::consts::PI.sqrt() * psi4 * n)).powf(0.2);
    if h > 0.0 && h.is_finite() {
        Some(h)
    } else {
        silverman_bandwidth(xs)
    }
}

/// Fits a Gaussian KDE to a non-empty prefix.
pub fn kde_fit(prefix: &[f64], rule: BandwidthRule) -> Result<Kde> {
    if prefix.is_empty() {
        return Err(invalid("KDE needs at least one point"));
    }
    if prefix.iter().any(|x| !x.is_finite()) {
        return Err(invalid("KDE input must be finite"));
    }
    let (bandwidth, bandwidth_fallback) = match rule {
        BandwidthRule::Fixed(h) if h > 0.0 && h.is_finite() => (h, false),
        BandwidthRule::Fixed(h) => {
            return Err(invalid(format!("bandwidth must be positive, got {h}")))
        }
        BandwidthRule::Silverman => match silverman_bandwidth(prefix) {
            Some(h) => (h, false),
            None => (1.0, true),
        },
        BandwidthRule::PlugIn => match plugin_bandwidth(prefix) {
            Some(h) => (h, false),
            None => (1.0, true),
        },
    };
    let mut centres = prefix.to_vec();
    centres.sort_by(f64::total_cmp);
    Ok(Kde {
        centres,
        bandwidth,
        bandwidth_fallback,
    })
}

/// Two-component Gaussian mixture parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gmm2Params {
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub variances: [f64; 2],
}

impl Gmm2Params {
    fn component_logpdf(&self, k: usize, x: f64) -> f64 {
        self.weights[k].ln() + normal_logpdf(x, self.means[k], self.variances[k])
    }

    pub fn logpdf(&self, x: f64) -> f64 {
        log_add_exp(self.component_logpdf(0, x), self.component_logpdf(1, x))
    }

    pub fn loglik(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| self.logpdf(x)).sum()
    }
}

/// Result of [`gmm2_fit`] with the EM trace of the winning start.
#[derive(Debug, Clone, PartialEq)]
pub struct Gmm2Fit {
    pub params: Gmm2Params,
    pub loglik: f64,
    /// Observed-data log-likelihood after initialization and each EM step.
    pub trace: Vec<f64>,
}

/// EM for a two-component mixture with a median-split start plus seeded restarts.
pub fn gmm2_fit(prefix: &[f64], config: &Gmm2Config) -> Result<Gmm2Fit> {
    if prefix.len() < 4 {
        return Err(invalid(format!(
            "GMM2 needs at least 4 points, got {}",
            prefix.len()
        )));
    }
    if prefix.iter().any(|x| !x.is_finite()) {
        return Err(invalid("GMM2 input must be finite"));
    }
    if prefix.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::DegenerateSample("all points identical".into()));
    }
    let mut sorted = prefix.to_vec();
    sorted.sort_by(f64::total_cmp);
    let half = sorted.len() / 2;
    let (lower, upper) = sorted.split_at(half);
    let moments = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        (m, v.max(VARIANCE_FLOOR))
    };
    let (m0, v0) = moments(lower);
    let (m1, v1) = moments(upper);
    let base = Gmm2Params {
        weights: [0.5, 0.5],
        means: [m0, m1],
        variances: [v0, v1],
    };

    // Restart seed is a function of the prefix only.
    let seed = prefix
        .iter()
        .fold(mix64(prefix.len() as u64), |h, x| mix64(h ^ x.to_bits()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = sample_sd(prefix);
    let mut best: Option<Gmm2Fit> = None;
    for r in 0..config.restarts.max(1) {
        let mut start = base;
        if r > 0 {
            for m in start.means.iter_mut() {
                *m += rng.random_range(-0.5..=0.5) * sd;
            }
        }
        let fit = run_em(prefix, start, config);
        if best.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one start"))
}

fn run_em(xs: &[f64], mut params: Gmm2Params, config: &Gmm2Config) -> Gmm2Fit {
    let n = xs.len() as f64;
    let mut ll = params.loglik(xs);
    let mut trace = vec![ll];
    let mut resp = vec![0.0; xs.len()];
    for _ in 0..config.max_iter {
        // E-step: responsibility of component 1
        for (r, &x) in resp.iter_mut().zip(xs) {
            let a = params.component_logpdf(0, x);
            let b = params.component_logpdf(1, x);
            *r = (b - log_add_exp(a, b)).exp();
        }
        // M-step
        let mut next = params;
        let n1: f64 = resp.iter().sum();
        let counts = [n - n1, n1];
        for (k, &count) in counts.iter().enumerate() {
            let w = |r: f64| if k == 1 { r } else { 1.0 - r };
            if count <= 1e-12 {
                continue;
            }
            let mean = xs.iter().zip(&resp).map(|(x, &r)| w(r) * x).sum::<f64>() / count;
            let var = xs
                .iter()
                .zip(&resp)
                .map(|(x, &r)| w(r) * (x - mean).powi(2))
                .sum::<f64>()
                / count;
            next.means[k] = mean;
            next.variances[k] = var.max(VARIANCE_FLOOR);
            next.weights[k] = count / n;
        }
        let total = next.weights[0] + next.weights[1];
        next.weights = [next.weights[0] / total, next.weights[1] / total];
        if next.weights.iter().any(|w| !(*w > 0.0)) {
            break;
        }
        let next_ll = next.loglik(xs);
        if !next_ll.is_finite() {
            break;
        }
        params = next;
        let improvement = next_ll - ll;
        ll = next_ll;
        trace.push(ll);
        if improvement < config.tol * ll.abs().max(1.0) {
            break;
        }
    }
    Gmm2Fit {
        params,
        loglik: ll,
        trace,
    }
}

/// The true mixture, ignoring the data.
pub fn oracle_density(mu: f64) -> Result<FittedDensity> {
    Ok(FittedDensity::from(GaussianMixture1D::new(mu)?))
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Kde(Kde),
    Gmm2(Gmm2Params),
    Oracle(GaussianMixture1D),
}

/// A fitted estimator, strictly positive on the whole line.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedDensity {
    pub model: FittedModel,
    /// Set when the requested estimator could not be fitted on this prefix
    /// and a simpler one was substituted.
    pub fallback: bool,
}

impl From<Kde> for FittedDensity {
    fn from(k: Kde) -> Self {
        let fallback = k.bandwidth_fallback;
        Self {
            model: FittedModel::Kde(k),
            fallback,
        }
    }
}

impl From<Gmm2Params> for FittedDensity {
    fn from(p: Gmm2Params) -> Self {
        Self {
            model: FittedModel::Gmm2(p),
            fallback: false,
        }
    }
}

impl From<GaussianMixture1D> for FittedDensity {
    fn from(g: GaussianMixture1D) -> Self {
        Self {
            model: FittedModel::Oracle(g),
            fallback: false,
        }
    }
}

impl EvaluableDensity for FittedDensity {
    fn logpdf(&self, x: f64) -> f64 {
        match &self.model {
            FittedModel::Kde(k) => k.logpdf(x),
            FittedModel::Gmm2(p) => p.logpdf(x),
            FittedModel::Oracle(g) => g.logpdf(x),
        }
    }

    fn effective_support(&self) -> (f64, f64) {
        match &self.model {
            FittedModel::Kde(k) => (
                k.centres[0] - 10.0 * k.bandwidth,
                k.centres[k.centres.len() - 1] + 10.0 * k.bandwidth,
            ),
            FittedModel::Gmm2(p) => {
                let lo = (0..2).map(|i| p.means[i] - 10.0 * p.variances[i].sqrt());
                let hi = (0..2).map(|i| p.means[i] + 10.0 * p.variances[i].sqrt());
                (
                    lo.fold(f64::INFINITY, f64::min),
                    hi.fold(f64::NEG_INFINITY, f64::max),
                )
            }
            FittedModel::Oracle(g) => g.effective_support(),
        }
    }
}
