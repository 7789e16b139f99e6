//! One-dimensional log-concave maximum likelihood estimation.
//!
//! The estimator maximizes `sum_i w_i phi(x_i) - int exp(phi)` over concave
//! `phi`; the maximizer is piecewise linear with knots at data points and is
//! automatically normalized. The solver is an active-set method over knot
//! values:
//!
//! * on a fixed knot set the objective is smooth and strictly concave in the
//!   knot values, so a damped Newton iteration with a tridiagonal Hessian
//!   finds the restricted optimum;
//! * if that optimum bends the wrong way at a knot, step back along the
//!   segment from the previous concave iterate until the first kink closes
//!   and drop that knot;
//! * once concave, add the data point whose directional derivative for a new
//!   concave kink is largest, and repeat until no kink helps.
//!
//! Every fit carries a certified gap: the fitted density, contracted about
//! its mean just enough to be dual feasible, gives a lower bound on the
//! negated objective. The work happens on positions rescaled to `[0, 1]`,
//! which makes fits exactly equivariant under affine maps of the data.

use serde::Serialize;

use crate::density::EvaluableDensity;
use crate::error::{invalid, Error, Result};
use crate::numerics::SegmentIntegrals;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 500;

/// Largest tolerated increase in slope at a knot (log-density units).
pub const CONCAVITY_TOL: f64 = 1e-9;

/// Distinct sorted sample positions with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSortedSample {
    positions: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSortedSample {
    pub fn new(positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(invalid("positions and weights differ in length"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(invalid("sample positions must be finite"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("sample weights must be finite and positive"));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sample positions must be strictly increasing"));
        }
        if positions.len() < 2 {
            return Err(Error::DegenerateSample(format!(
                "need at least 2 distinct positions, got {}",
                positions.len()
            )));
        }
        Ok(Self { positions, weights })
    }

    /// Sorts raw observations and collapses ties into weights.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(invalid("sample values must be finite"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut positions: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for x in sorted {
            // -0.0 and 0.0 are one position
            match positions.last() {
                Some(&last) if last == x => *weights.last_mut().unwrap() += 1.0,
                _ => {
                    positions.push(x);
                    weights.push(1.0);
                }
            }
        }
        Self::new(positions, weights)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        let w = self.total_weight();
        self.positions
            .iter()
            .zip(&self.weights)
            .map(|(x, v)| x * v)
            .sum::<f64>()
            / w
    }
}

/// Concave piecewise-linear log-density supported on `[knots[0], knots[last]]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLogLinearDensity {
    knots: Vec<f64>,
    phi: Vec<f64>,
}

impl PiecewiseLogLinearDensity {
    /// Builds a density from knot values; does not renormalize.
    pub fn new(knots: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if knots.len() != phi.len() || knots.len() < 2 {
            return Err(invalid("need at least two knots with one value each"));
        }
        if knots.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(invalid("knots and log-density values must be finite"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("knots must be strictly increasing"));
        }
        Ok(Self { knots, phi })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn lower(&self) -> f64 {
        self.knots[0]
    }

    pub fn upper(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.knots
            .windows(2)
            .zip(self.phi.windows(2))
            .map(|(k, p)| (k[0], k[1] - k[0], p[0], p[1]))
    }

    /// Slope differences `slope_left - slope_right` at interior knots.
    pub fn kinks(&self) -> Vec<f64> {
        let slopes: Vec<f64> = self
            .segments()
            .map(|(_, len, a, b)| (b - a) / len)
            .collect();
        slopes.windows(2).map(|s| s[0] - s[1]).collect()
    }

    pub fn is_concave(&self, tol: f64) -> bool {
        self.kinks().iter().all(|&c| c >= -tol)
    }

    /// Closed-form `int exp(phi)`.
    pub fn mass(&self) -> f64 {
        self.segments()
            .map(|(_, len, a, b)| SegmentIntegrals::new(a, b, len).mass)
            .sum()
    }

    /// Closed-form `int x exp(phi)`.
    pub fn first_moment(&self) -> f64 {
        self.segments()
            .map(|(left, len, a, b)| {
                let s = SegmentIntegrals::new(a, b, len);
                left * s.mass + len * s.right
            })
            .sum()
    }

    /// Log-density at `x`: exact at knots, linear between, `-inf` outside.
    pub fn evaluate_logpdf(&self, x: f64) -> f64 {
        if !(x >= self.lower() && x <= self.upper()) {
            return f64::NEG_INFINITY;
        }
        let i = self.knots.partition_point(|&k| k < x);
        if self.knots[i] == x {
            return self.phi[i];
        }
        let (k0, k1) = (self.knots[i - 1], self.knots[i]);
        let (p0, p1) = (self.phi[i - 1], self.phi[i]);
        let lam = (x - k0) / (k1 - k0);
        p0 + (p1 - p0) * lam
    }

    /// Weighted log-likelihood; `-inf` if any position lies outside the support.
    pub fn loglik(&self, sample: &WeightedSortedSample) -> f64 {
        sample
            .positions()
            .iter()
            .zip(sample.weights())
            .map(|(&x, &w)| w * self.evaluate_logpdf(x))
            .sum()
    }
}

impl EvaluableDensity for PiecewiseLogLinearDensity {
    fn logpdf(&self, x: f64) -> f64 {
        self.evaluate_logpdf(x)
    }

    fn support(&self) -> (f64, f64) {
        (self.lower(), self.upper())
    }

    fn effective_support(&self) -> (f64, f64) {
        (self.lower(), self.upper())
    }
}

/// Free function form of [`PiecewiseLogLinearDensity::evaluate_logpdf`].
pub fn evaluate_logpdf(density: &PiecewiseLogLinearDensity, x: f64) -> f64 {
    density.evaluate_logpdf(x)
}

/// Free function form of [`PiecewiseLogLinearDensity::loglik`].
pub fn loglik(density: &PiecewiseLogLinearDensity, sample: &WeightedSortedSample) -> f64 {
    density.loglik(sample)
}

/// Output of [`fit_lcmle`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleFitReport {
    pub density: PiecewiseLogLinearDensity,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Certified upper bound on `max loglik - loglik` over all log-concave densities.
    pub gap: f64,
}

/// Fits the log-concave MLE to a weighted sample.
///
/// `tol` bounds the certified log-likelihood gap; `max_iter` bounds the number
/// of knot insertions. Running out of iterations is reported through
/// `converged = false`, not as an error.
pub fn fit_lcmle(sample: &WeightedSortedSample, tol: f64, max_iter: usize) -> Result<MleFitReport> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(invalid("max_iter must be positive"));
    }
    let xs = sample.positions();
    let lo = xs[0];
    let span = xs[xs.len() - 1] - lo;
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::DegenerateSample("sample has no spread".into()));
    }
    let total = sample.total_weight();
    let mut u: Vec<f64> = xs.iter().map(|x| (x - lo) / span).collect();
    *u.last_mut().unwrap() = 1.0;
    let p: Vec<f64> = sample.weights().iter().map(|w| w / total).collect();
    let problem = Problem::new(u, p);

    let mut solver = ActiveSet::new(&problem);
    let mut iterations = 0;
    let gap_u = loop {
        let candidate = solver.best_insertion().filter(|&(_, v)| v > 0.0);
        let insert = match candidate {
            Some((j, v)) if v > INSERT_TOL => Some(j),
            // Tiny violations: insert only while the certificate still fails.
            Some((j, _)) => {
                let gap = solver.certified_gap();
                if gap * total <= tol {
                    break gap;
                }
                Some(j)
            }
            None => break solver.certified_gap(),
        };
        if iterations == max_iter {
            break solver.certified_gap();
        }
        iterations += 1;
        solver.insert(insert.unwrap());
        solver.solve_feasible();
    };

    let (knot_idx, phi_u) = solver.normalized();
    let knots: Vec<f64> = knot_idx.iter().map(|&i| xs[i]).collect();
    let shift = span.ln();
    let phi: Vec<f64> = phi_u.iter().map(|v| v - shift).collect();
    let density = PiecewiseLogLinearDensity::new(knots, phi)
        .map_err(|e| Error::Numeric(format!("solver produced an invalid density: {e}")))?;
    let ll = density.loglik(sample);
    if !ll.is_finite() {
        return Err(Error::Numeric("fitted log-likelihood is not finite".into()));
    }
    let gap = (gap_u * total).max(0.0);
    Ok(MleFitReport {
        density,
        loglik: ll,
        iterations,
        converged: gap <= tol,
        gap,
    })
}

/// Fits with default tolerance and iteration cap.
pub fn fit_values(values: &[f64]) -> Result<MleFitReport> {
    fit_lcmle(
        &WeightedSortedSample::from_values(values)?,
        DEFAULT_TOL,
        DEFAULT_MAX_ITER,
    )
}

// Violation (in rescaled coordinates) above which a knot is inserted even if
// the gap certificate would already pass.
const INSERT_TOL: f64 = 1e-13;
// Kink below which a Newton iterate counts as non-concave.
const STEP_BACK_TOL: f64 = -1e-14;

/// Positions in `[0, 1]` with probability weights.
struct Problem {
    u: Vec<f64>,
    p: Vec<f64>,
    mean: f64,
    // Empirical `sum_i p_i (u_i - u_j)_+` at each data point.
    data_tail: Vec<f64>,
}

impl Problem {
    fn new(u: Vec<f64>, p: Vec<f64>) -> Self {
        let m = u.len();
        let mut data_tail = vec![0.0; m];
        let (mut sp, mut spu) = (0.0, 0.0);
        for j in (0..m).rev() {
            data_tail[j] = (spu - u[j] * sp).max(0.0);
            sp += p[j];
            spu += p[j] * u[j];
        }
        let mean = u.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() / p.iter().sum::<f64>();
        Self {
            u,
            p,
            mean,
            data_tail,
        }
    }
}

struct ActiveSet<'a> {
    problem: &'a Problem,
    knots: Vec<usize>,
    phi: Vec<f64>,
}

impl<'a> ActiveSet<'a> {
    fn new(problem: &'a Problem) -> Self {
        let m = problem.u.len();
        let mut s = Self {
            problem,
            knots: vec![0, m - 1],
            phi: vec![0.0, 0.0],
        };
        s.phi = s.newton(&s.knots, s.phi.clone());
        s
    }

    fn knot_u(&self, knots: &[usize]) -> Vec<f64> {
        knots.iter().map(|&i| self.problem.u[i]).collect()
    }

    /// Interpolation weights collapsing `sum_i p_i phi(u_i)` onto knot values.
    fn linear_coeffs(&self, knots: &[usize]) -> Vec<f64> {
        let (u, p) = (&self.problem.u, &self.problem.p);
        let mut omega = vec![0.0; knots.len()];
        for s in 0..knots.len() - 1 {
            let (i0, i1) = (knots[s], knots[s + 1]);
            let (u0, u1) = (u[i0], u[i1]);
            omega[s] += p[i0];
            for i in i0 + 1..i1 {
                let lam = (u[i] - u0) / (u1 - u0);
                omega[s] += p[i] * (1.0 - lam);
                omega[s + 1] += p[i] * lam;
            }
        }
        *omega.last_mut().unwrap() += p[*knots.last().unwrap()];
        omega
    }

    fn objective(&self, ku: &[f64], omega: &[f64], phi: &[f64]) -> f64 {
        let lin: f64 = omega.iter().zip(phi).map(|(a, b)| a * b).sum();
        let mass: f64 = (0..phi.len() - 1)
            .map(|s| SegmentIntegrals::new(phi[s], phi[s + 1], ku[s + 1] - ku[s]).mass)
            .sum();
        lin - mass
    }

    /// Unconstrained maximizer over values at `knots`, started from `phi`.
    fn newton(&self, knots: &[usize], mut phi: Vec<f64>) -> Vec<f64> {
        let k = knots.len();
        let ku = self.knot_u(knots);
        let omega = self.linear_coeffs(knots);
        let mut value = self.objective(&ku, &omega, &phi);
        for _ in 0..200 {
            let mut grad = omega.clone();
            let mut diag = vec![0.0; k];
            let mut off = vec![0.0; k - 1];
            for s in 0..k - 1 {
                let seg = SegmentIntegrals::new(phi[s], phi[s + 1], ku[s + 1] - ku[s]);
                grad[s] -= seg.left;
                grad[s + 1] -= seg.right;
                diag[s] += seg.left_sq;
                diag[s + 1] += seg.right_sq;
                off[s] = seg.cross;
            }
            let step = solve_tridiagonal(&diag, &off, &grad);
            let decrement: f64 = grad.iter().zip(&step).map(|(g, d)| g * d).sum();
            if !(decrement > 1e-30) {
                break;
            }
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = phi.iter().zip(&step).map(|(a, d)| a + t * d).collect();
                let v = self.objective(&ku, &omega, &trial);
                let enough = v >= value + 1e-4 * t * decrement
                    || (decrement < 1e-20 && v >= value - 1e-15 * value.abs().max(1.0));
                if v.is_finite() && enough {
                    phi = trial;
                    value = v;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted || decrement < 1e-26 {
                break;
            }
        }
        phi
    }

    fn kinks(ku: &[f64], phi: &[f64]) -> Vec<f64> {
        (1..phi.len() - 1)
            .map(|j| {
                (phi[j] - phi[j - 1]) / (ku[j] - ku[j - 1])
                    - (phi[j + 1] - phi[j]) / (ku[j + 1] - ku[j])
            })
            .collect()
    }

    /// Newton on the current knot set, stepping back and dropping knots until
    /// the restricted optimum is concave.
    fn solve_feasible(&mut self) {
        loop {
            let target = self.newton(&self.knots, self.phi.clone());
            let ku = self.knot_u(&self.knots);
            let new_kinks = Self::kinks(&ku, &target);
            if new_kinks.iter().all(|&c| c >= STEP_BACK_TOL) {
                self.phi = target;
                return;
            }
            let old_kinks = Self::kinks(&ku, &self.phi);
            let mut t_star = 1.0f64;
            for (c_old, c_new) in old_kinks.iter().zip(&new_kinks) {
                if *c_new < STEP_BACK_TOL {
                    let c0 = c_old.max(0.0);
                    t_star = t_star.min(c0 / (c0 - c_new));
                }
            }
            let phi: Vec<f64> = self
                .phi
                .iter()
                .zip(&target)
                .map(|(a, b)| a + t_star * (b - a))
                .collect();
            let kinks = Self::kinks(&ku, &phi);
            let closing = kinks.iter().copied().fold(f64::INFINITY, f64::min);
            let limit = closing.max(0.0) + 1e-12 * (1.0 + closing.abs());
            let mut keep_knots = vec![self.knots[0]];
            let mut keep_phi = vec![phi[0]];
            for (j, c) in kinks.iter().enumerate() {
                if *c > limit {
                    keep_knots.push(self.knots[j + 1]);
                    keep_phi.push(phi[j + 1]);
                }
            }
            keep_knots.push(*self.knots.last().unwrap());
            keep_phi.push(*phi.last().unwrap());
            self.knots = keep_knots;
            self.phi = keep_phi;
        }
    }

    /// Mass and first moment of `exp(phi)` per segment, for tail integrals.
    fn tail_table(&self) -> TailTable {
        TailTable::new(self.knot_u(&self.knots), self.phi.clone())
    }

    /// Data point (not a knot) with the largest directional derivative for
    /// inserting a concave kink, with that derivative.
    fn best_insertion(&self) -> Option<(usize, f64)> {
        let table = self.tail_table();
        let mut best: Option<(usize, f64)> = None;
        let mut next_knot = 1;
        for j in 1..self.problem.u.len() - 1 {
            while self.knots[next_knot] < j {
                next_knot += 1;
            }
            if self.knots[next_knot] == j {
                continue;
            }
            let v = table.tail(self.problem.u[j]) - self.problem.data_tail[j];
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((j, v));
            }
        }
        best
    }

    fn insert(&mut self, j: usize) {
        let pos = self.knots.partition_point(|&k| k < j);
        let ku = self.knot_u(&self.knots);
        let u = self.problem.u[j];
        let lam = (u - ku[pos - 1]) / (ku[pos] - ku[pos - 1]);
        let value = self.phi[pos - 1] + lam * (self.phi[pos] - self.phi[pos - 1]);
        self.knots.insert(pos, j);
        self.phi.insert(pos, value);
    }

    fn normalized(&self) -> (Vec<usize>, Vec<f64>) {
        let ku = self.knot_u(&self.knots);
        let mass: f64 = (0..self.phi.len() - 1)
            .map(|s| SegmentIntegrals::new(self.phi[s], self.phi[s + 1], ku[s + 1] - ku[s]).mass)
            .sum();
        let shift = mass.ln();
        (
            self.knots.clone(),
            self.phi.iter().map(|v| v - shift).collect(),
        )
    }

    /// Upper bound on the optimality gap of the normalized iterate, per unit weight.
    ///
    /// For any density `g` on `[0, 1]` that is dominated in convex order by
    /// the empirical measure, `1 - int g log g` lower-bounds the negated
    /// objective. `g` is the fitted density contracted about its mean by the
    /// smallest factor that makes it so.
    fn certified_gap(&self) -> f64 {
        let (_, phi) = self.normalized();
        let ku = self.knot_u(&self.knots);
        let table = TailTable::new(ku.clone(), phi.clone());
        let neg_entropy: f64 = (0..phi.len() - 1)
            .map(|s| {
                SegmentIntegrals::new(phi[s], phi[s + 1], ku[s + 1] - ku[s])
                    .phi_weighted(phi[s], phi[s + 1])
            })
            .sum();
        let omega = self.linear_coeffs(&self.knots);
        let fitted_ll: f64 = omega.iter().zip(&phi).map(|(a, b)| a * b).sum();
        let primal_dual = neg_entropy - fitted_ll;

        let prob = self.problem;
        let fmean = table.mean();
        let xbar = prob.mean;
        let mut s_max = 1.0f64;
        if fmean > xbar {
            s_max = s_max.min(xbar / fmean);
        }
        if fmean < xbar {
            s_max = s_max.min((1.0 - xbar) / (1.0 - fmean));
        }
        let feasible = |s: f64| {
            (1..prob.u.len() - 1).all(|j| {
                let y = fmean + (prob.u[j] - xbar) / s;
                s * table.tail(y) <= prob.data_tail[j]
            })
        };
        let scale = if s_max >= 1.0 && feasible(1.0) {
            1.0
        } else {
            // smallest contraction 1 - s that is feasible
            let mut hi_eta = 1e-15f64.max(1.0 - s_max);
            while !feasible(1.0 - hi_eta) {
                hi_eta *= 4.0;
                if hi_eta >= 1.0 {
                    return f64::INFINITY;
                }
            }
            let mut lo_eta = (hi_eta / 4.0).max(1.0 - s_max);
            if lo_eta >= hi_eta {
                lo_eta = 0.0;
            }
            for _ in 0..40 {
                let mid = 0.5 * (lo_eta + hi_eta);
                if feasible(1.0 - mid) {
                    hi_eta = mid;
                } else {
                    lo_eta = mid;
                }
            }
            1.0 - hi_eta
        };
        (primal_dual - scale.ln()).max(0.0)
    }
}

/// Suffix sums for `T(y) = int (u - y)_+ exp(phi(u)) du` on a piecewise-linear `phi`.
struct TailTable {
    ku: Vec<f64>,
    phi: Vec<f64>,
    // suffix sums over segments s.. of mass and of int u exp(phi)
    mass_from: Vec<f64>,
    moment_from: Vec<f64>,
}

impl TailTable {
    fn new(ku: Vec<f64>, phi: Vec<f64>) -> Self {
        let segs = ku.len() - 1;
        let mut mass_from = vec![0.0; segs + 1];
        let mut moment_from = vec![0.0; segs + 1];
        for s in (0..segs).rev() {
            let len = ku[s + 1] - ku[s];
            let seg = SegmentIntegrals::new(phi[s], phi[s + 1], len);
            mass_from[s] = mass_from[s + 1] + seg.mass;
            moment_from[s] = moment_from[s + 1] + ku[s] * seg.mass + len * seg.right;
        }
        Self {
            ku,
            phi,
            mass_from,
            moment_from,
        }
    }

    fn mean(&self) -> f64 {
        self.moment_from[0] / self.mass_from[0]
    }

    fn tail(&self, y: f64) -> f64 {
        let last = *self.ku.last().unwrap();
        if y >= last {
            return 0.0;
        }
        if y <= self.ku[0] {
            return self.moment_from[0] - y * self.mass_from[0];
        }
        // segment s contains y: ku[s] <= y < ku[s+1]
        let s = self.ku.partition_point(|&k| k <= y) - 1;
        let (k0, k1) = (self.ku[s], self.ku[s + 1]);
        let lam = (y - k0) / (k1 - k0);
        let phi_y = self.phi[s] + lam * (self.phi[s + 1] - self.phi[s]);
        let len = k1 - y;
        let partial = len * SegmentIntegrals::new(phi_y, self.phi[s + 1], len).right;
        let rest = self.moment_from[s + 1] - y * self.mass_from[s + 1];
        partial + rest.max(0.0)
    }
}

/// Solves `A x = b` for symmetric tridiagonal `A` (Thomas algorithm).
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { off[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - off[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(values: &[f64]) -> WeightedSortedSample {
        WeightedSortedSample::from_values(values).unwrap()
    }

    #[test]
    fn duplicates_collapse_into_weights() {
        let s = sample(&[2.0, 1.0, 2.0, -0.0, 0.0]);
        assert_eq!(s.positions(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.weights(), &[2.0, 1.0, 2.0]);
        assert_eq!(s.total_weight(), 5.0);
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        assert!(matches!(
            WeightedSortedSample::from_values(&[5.0, 5.0, 5.0]),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            WeightedSortedSample::from_values(&[]),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            WeightedSortedSample::from_values(&[1.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
        assert!(WeightedSortedSample::new(vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(WeightedSortedSample::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn fit_rejects_bad_arguments() {
        let s = sample(&[0.0, 1.0]);
        assert!(fit_lcmle(&s, 0.0, 10).is_err());
        assert!(fit_lcmle(&s, 1e-7, 0).is_err());
    }

    #[test]
    fn two_points_give_uniform() {
        let r = fit_values(&[0.0, 1.0]).unwrap();
        assert!(r.converged);
        assert_eq!(r.density.knots(), &[0.0, 1.0]);
        for v in r.density.phi() {
            assert!(v.abs() < 1e-12, "{v}");
        }
        assert!(r.loglik.abs() < 1e-12);
    }

    #[test]
    fn symmetric_sample_gives_symmetric_fit() {
        let r = fit_values(&[-1.0, 0.0, 1.0]).unwrap();
        let d = &r.density;
        assert!((d.evaluate_logpdf(-1.0) - d.evaluate_logpdf(1.0)).abs() < 1e-8);
        assert!(r.gap <= DEFAULT_TOL);
    }

    #[test]
    fn first_moment_of_four_point_fit() {
        let r = fit_values(&[0.0, 1.0, 2.0, 5.0]).unwrap();
        assert!(r.converged);
        assert!((r.density.first_moment() - 2.0).abs() < 1e-9);
        assert!((r.density.mass() - 1.0).abs() < 1e-12);
        assert!(r.density.is_concave(CONCAVITY_TOL));
    }

    #[test]
    fn evaluate_logpdf_examples() {
        let d = PiecewiseLogLinearDensity::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, -1.0]).unwrap();
        assert_eq!(d.evaluate_logpdf(1.0), 2.0);
        assert_eq!(d.evaluate_logpdf(3.0), -1.0);
        assert_eq!(d.evaluate_logpdf(0.5), 1.0);
        assert_eq!(d.evaluate_logpdf(4.0), f64::NEG_INFINITY);
        assert_eq!(d.evaluate_logpdf(-1e-12), f64::NEG_INFINITY);
        assert_eq!(d.evaluate_logpdf(f64::NAN), f64::NEG_INFINITY);
    }

    #[test]
    fn loglik_examples() {
        let unif = PiecewiseLogLinearDensity::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(loglik(&unif, &sample(&[0.0, 1.0])), 0.0);
        assert_eq!(loglik(&unif, &sample(&[0.0, 1.5])), f64::NEG_INFINITY);
        let s = sample(&[0.3, 1.7, 2.2, 2.9, 4.0, 4.1, 7.5]);
        let r = fit_lcmle(&s, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((loglik(&r.density, &s) - r.loglik).abs() < 1e-12);
    }

    #[test]
    fn gap_certificate_detects_suboptimal_iterate() {
        // The starting log-linear iterate on a peaked sample is far from optimal.
        let vals = [0.0, 0.45, 0.5, 0.5, 0.55, 0.5, 0.52, 0.48, 1.0];
        let s = sample(&vals);
        let total = s.total_weight();
        let lo = s.positions()[0];
        let span = s.positions().last().unwrap() - lo;
        let u: Vec<f64> = s.positions().iter().map(|x| (x - lo) / span).collect();
        let p: Vec<f64> = s.weights().iter().map(|w| w / total).collect();
        let problem = Problem::new(u, p);
        let start = ActiveSet::new(&problem);
        let coarse = start.certified_gap() * total;
        let fit = fit_lcmle(&s, 1e-9, 500).unwrap();
        let start_ll = {
            let (knots, phi) = start.normalized();
            let d = PiecewiseLogLinearDensity::new(
                knots.iter().map(|&i| s.positions()[i]).collect(),
                phi.iter().map(|v| v - span.ln()).collect(),
            )
            .unwrap();
            d.loglik(&s)
        };
        let true_gap = fit.loglik - start_ll;
        assert!(true_gap > 1.0);
        assert!(
            coarse >= true_gap - 1e-9,
            "bound {coarse} < actual {true_gap}"
        );
        assert!(fit.gap <= 1e-9);
    }

    #[test]
    fn tridiagonal_solver() {
        let diag = [4.0, 5.0, 6.0];
        let off = [1.0, 2.0];
        let x = solve_tridiagonal(&diag, &off, &[1.0, 2.0, 3.0]);
        let back = [
            4.0 * x[0] + x[1],
            x[0] + 5.0 * x[1] + 2.0 * x[2],
            2.0 * x[1] + 6.0 * x[2],
        ];
        for (a, b) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
