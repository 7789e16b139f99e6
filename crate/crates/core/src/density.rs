//! Densities on the real line, the symmetric Gaussian-mixture test bed,
//! seeded sampling, quadrature and the Hellinger distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::numerics::log_add_exp;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Anything with a log-density that can be evaluated pointwise.
///
/// `support` returns the closed interval outside which `logpdf` is `-inf`;
/// unbounded densities report infinite endpoints.
pub trait EvaluableDensity: Send + Sync {
    fn logpdf(&self, x: f64) -> f64;

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// An interval holding all but a negligible amount of mass.
    fn effective_support(&self) -> (f64, f64);
}

impl<D: EvaluableDensity + ?Sized> EvaluableDensity for &D {
    fn logpdf(&self, x: f64) -> f64 {
        (**self).logpdf(x)
    }
    fn support(&self) -> (f64, f64) {
        (**self).support()
    }
    fn effective_support(&self) -> (f64, f64) {
        (**self).effective_support()
    }
}

/// Standard normal log-density.
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    -0.5 * z * z / var - 0.5 * var.ln() - LN_SQRT_2PI
}

/// Balanced two-component mixture `N(-mu/2, 1)/2 + N(mu/2, 1)/2`.
///
/// Log-concave exactly when `mu <= 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMixture1D {
    mu: f64,
}

impl GaussianMixture1D {
    pub fn new(mu: f64) -> Result<Self> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(invalid(format!(
                "mean separation must be finite and >= 0, got {mu}"
            )));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_log_concave(&self) -> bool {
        self.mu <= 2.0
    }

    /// Default quadrature grid, `[-mu/2 - 10, mu/2 + 10]` with 4097 nodes.
    pub fn default_grid(&self) -> QuadratureGrid {
        let half = self.mu / 2.0 + 10.0;
        QuadratureGrid::new(-half, half, QuadratureGrid::DEFAULT_NODES)
            .expect("mixture grid bounds are ordered")
    }

    fn logpdf_unchecked(&self, x: f64) -> f64 {
        // Symmetrize on |x| so logpdf(x) == logpdf(-x) bit for bit.
        let ax = x.abs();
        let h = self.mu / 2.0;
        let a = -0.5 * (ax - h) * (ax - h);
        let b = -0.5 * (ax + h) * (ax + h);
        log_add_exp(a, b) - std::f64::consts::LN_2 - LN_SQRT_2PI
    }

    /// Draws `n` i.i.d. points: fair coin for the component, then a unit normal.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = self.mu / 2.0;
        (0..n)
            .map(|_| {
                let centre = if rng.random::<bool>() { h } else { -h };
                let z: f64 = rng.sample(StandardNormal);
                centre + z
            })
            .collect()
    }
}

impl EvaluableDensity for GaussianMixture1D {
    fn logpdf(&self, x: f64) -> f64 {
        self.logpdf_unchecked(x)
    }

    fn effective_support(&self) -> (f64, f64) {
        let half = self.mu / 2.0 + 10.0;
        (-half, half)
    }
}

/// `log[(phi(x - mu/2) + phi(x + mu/2)) / 2]`.
pub fn mixture_logpdf(mu: f64, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(invalid(format!("x must be finite, got {x}")));
    }
    Ok(GaussianMixture1D::new(mu)?.logpdf_unchecked(x))
}

/// Seeded i.i.d. sample from the mixture with separation `mu`.
pub fn sample_mixture(mu: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("sample size must be >= 1"));
    }
    Ok(GaussianMixture1D::new(mu)?.sample(n, seed))
}

/// SplitMix64 finalizer; a stable 64-bit mixing function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replication seed: `base ^ hash(mu, rep)`.
pub fn replication_seed(base_seed: u64, mu: f64, rep: usize) -> u64 {
    base_seed ^ mix64(mix64(mu.to_bits()) ^ rep as u64)
}

/// Uniform node set for composite quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl QuadratureGrid {
    pub const DEFAULT_NODES: usize = 4097;

    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!(
                "quadrature bounds must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 2 {
            return Err(invalid("quadrature grid needs at least 2 nodes"));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    /// Composite Simpson; a 3/8 panel closes an odd interval count and two
    /// nodes fall back to the trapezoid rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let values: Vec<f64> = self.nodes().map(f).collect();
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        simpson_uniform(&values, h)
    }
}

pub(crate) fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let intervals = values.len() - 1;
    if intervals == 1 {
        return 0.5 * h * (values[0] + values[1]);
    }
    let simpson_end = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals - 3
    };
    let mut s = 0.0;
    if simpson_end > 0 {
        let mut acc = values[0] + values[simpson_end];
        for (i, v) in values.iter().enumerate().take(simpson_end).skip(1) {
            acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        s += acc * h / 3.0;
    }
    if simpson_end < intervals {
        let v = &values[simpson_end..];
        s += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
    }
    s
}

/// Hellinger distance together with the grid self-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hellinger {
    pub distance: f64,
    /// Set when either density leaves more than `1e-6` of its mass off the grid.
    pub tail_warning: bool,
}

const TAIL_MASS_LIMIT: f64 = 1e-6;

/// `sqrt(1 - int sqrt(p q))` by composite quadrature on `grid`, clamped to `[0, 1]`.
pub fn hellinger(
    p: &dyn EvaluableDensity,
    q: &dyn EvaluableDensity,
    grid: &QuadratureGrid,
) -> Hellinger {
    let mut lp = Vec::with_capacity(grid.len());
    let mut lq = Vec::with_capacity(grid.len());
    for x in grid.nodes() {
        lp.push(p.logpdf(x));
        lq.push(q.logpdf(x));
    }
    let h = (grid.hi() - grid.lo()) / (grid.len() - 1) as f64;
    let exp_all = |v: &[f64]| v.iter().map(|l| l.exp()).collect::<Vec<_>>();
    let mass_p = simpson_uniform(&exp_all(&lp), h);
    let mass_q = simpson_uniform(&exp_all(&lq), h);
    // 1 - int sqrt(pq) == int (sqrt p - sqrt q)^2 / 2 for normalized p, q; the
    // squared form is exactly zero at p == q and a weighted L2 norm on the grid.
    let sq: Vec<f64> = lp
        .iter()
        .zip(&lq)
        .map(|(a, b)| {
            let d = (0.5 * a).exp() - (0.5 * b).exp();
            d * d
        })
        .collect();
    let distance = (0.5 * simpson_uniform(&sq, h)).clamp(0.0, 1.0).sqrt();
    Hellinger {
        distance,
        tail_warning: (1.0 - mass_p) > TAIL_MASS_LIMIT || (1.0 - mass_q) > TAIL_MASS_LIMIT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Normal {
        mean: f64,
    }

    impl EvaluableDensity for Normal {
        fn logpdf(&self, x: f64) -> f64 {
            normal_logpdf(x, self.mean, 1.0)
        }
        fn effective_support(&self) -> (f64, f64) {
            (self.mean - 10.0, self.mean + 10.0)
        }
    }

    #[test]
    fn mixture_logpdf_examples() {
        let v = mixture_logpdf(0.0, 0.0).unwrap();
        assert!((v + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert!((v + 0.918939).abs() < 1e-6);
        let v = mixture_logpdf(2.0, 0.0).unwrap();
        assert!((v - (-0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5)).abs() < 1e-15);
        assert!(mixture_logpdf(1.0, f64::NAN).is_err());
        assert!(mixture_logpdf(-1.0, 0.0).is_err());
        assert!(mixture_logpdf(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn mixture_logpdf_matches_direct_sum() {
        // phi(0) + phi(6), summed directly
        let pi2 = 2.0 * std::f64::consts::PI;
        let direct = ((1.0 + (-18.0f64).exp()) / (2.0 * pi2.sqrt())).ln();
        let got = mixture_logpdf(6.0, 3.0).unwrap();
        assert!((got - direct).abs() < 1e-12, "{got} vs {direct}");
    }

    #[test]
    fn mixture_normalizes() {
        for &mu in &[0.0, 1.0, 2.0, 4.5, 8.0, 12.0] {
            let d = GaussianMixture1D::new(mu).unwrap();
            let mass = d.default_grid().integrate(|x| d.logpdf(x).exp());
            assert!((mass - 1.0).abs() < 1e-8, "mu={mu} mass={mass}");
        }
    }

    #[test]
    fn mixture_far_tail_is_finite() {
        let v = mixture_logpdf(4.0, 1e3).unwrap();
        assert!(v.is_finite() && v < -4e5);
    }

    #[test]
    fn sampler_is_deterministic_and_validates() {
        let a = sample_mixture(3.0, 50, 17).unwrap();
        let b = sample_mixture(3.0, 50, 17).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_ne!(a, sample_mixture(3.0, 50, 18).unwrap());
        assert!(sample_mixture(3.0, 0, 1).is_err());
    }

    #[test]
    fn sampler_moments() {
        let xs = sample_mixture(4.0, 100_000, 2024).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");

        let xs = sample_mixture(0.0, 100_000, 99).unwrap();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn disjoint_seeds_pass_two_sample_ks() {
        let n = 10_000;
        let mut a = sample_mixture(3.0, n, replication_seed(5, 3.0, 0)).unwrap();
        let mut b = sample_mixture(3.0, n, replication_seed(5, 3.0, 1)).unwrap();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < n && j < n {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / n as f64 - j as f64 / n as f64).abs());
        }
        // c(1e-3) = sqrt(-ln(5e-4) / 2)
        let crit = (-(0.5e-3f64).ln() / 2.0).sqrt() * (2.0 / n as f64).sqrt();
        assert!(d < crit, "KS D={d} crit={crit}");
    }

    #[test]
    fn hellinger_examples() {
        let grid = QuadratureGrid::new(-12.0, 14.0, 4097).unwrap();
        let p = Normal { mean: 0.0 };
        let q = Normal { mean: 2.0 };
        let same = hellinger(&p, &p, &grid);
        assert!(same.distance < 1e-8);
        assert!(!same.tail_warning);
        let d = hellinger(&p, &q, &grid);
        let closed = (1.0 - (-4.0f64 / 8.0).exp()).sqrt();
        assert!((d.distance - closed).abs() < 1e-8);
        assert!((d.distance - 0.627271).abs() < 1e-6);
        let r = hellinger(&q, &p, &grid);
        assert!((d.distance - r.distance).abs() < 1e-12);
    }

    #[test]
    fn hellinger_flags_narrow_grid() {
        let grid = QuadratureGrid::new(-2.0, 2.0, 401).unwrap();
        let p = Normal { mean: 0.0 };
        assert!(hellinger(&p, &p, &grid).tail_warning);
    }

    #[test]
    fn quadrature_rules() {
        assert!(QuadratureGrid::new(1.0, 1.0, 5).is_err());
        assert!(QuadratureGrid::new(0.0, 1.0, 1).is_err());
        // cubic is exact under Simpson and 3/8
        for n in [2usize, 3, 4, 5, 6, 7, 10] {
            let g = QuadratureGrid::new(0.0, 2.0, n).unwrap();
            let got = g.integrate(|x| x * x * x - x);
            let want = 4.0 - 2.0;
            if n == 2 {
                assert!((g.integrate(|x| 3.0 * x + 1.0) - 8.0).abs() < 1e-12);
            } else {
                assert!((got - want).abs() < 1e-12, "n={n}: {got}");
            }
        }
        let g = QuadratureGrid::new(-1.0, 1.0, 9).unwrap();
        let nodes: Vec<f64> = g.nodes().collect();
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(nodes[8], 1.0);
    }

    proptest! {
        #[test]
        fn mixture_is_symmetric(mu in 0.0f64..20.0, x in -50.0f64..50.0) {
            prop_assert_eq!(mixture_logpdf(mu, x).unwrap(), mixture_logpdf(mu, -x).unwrap());
        }

        #[test]
        fn hellinger_triangle(a in 0.0f64..8.0, b in 0.0f64..8.0, c in 0.0f64..8.0) {
            let grid = QuadratureGrid::new(-16.0, 16.0, 4097).unwrap();
            let (p, q, r) = (
                GaussianMixture1D::new(a).unwrap(),
                GaussianMixture1D::new(b).unwrap(),
                GaussianMixture1D::new(c).unwrap(),
            );
            let pq = hellinger(&p, &q, &grid).distance;
            let qr = hellinger(&q, &r, &grid).distance;
            let pr = hellinger(&p, &r, &grid).distance;
            for d in [pq, qr, pr] {
                prop_assert!((0.0..=1.0).contains(&d));
            }
            prop_assert!(pr <= pq + qr + 1e-9);
        }
    }
}
