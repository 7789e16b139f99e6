//! Test-only oracles, independent of the solver's closed-form integrals.
#![allow(dead_code)]

use lcseq::lcmle::PiecewiseLogLinearDensity;

/// Composite Simpson with `n` (even) intervals on `[a, b]`.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `int g(x) p(x) dx` by Simpson on every linear piece of the log-density.
pub fn piecewise_quadrature(d: &PiecewiseLogLinearDensity, g: impl Fn(f64) -> f64) -> f64 {
    d.knots()
        .windows(2)
        .map(|k| simpson(k[0], k[1], 2000, |x| g(x) * d.evaluate_logpdf(x).exp()))
        .sum()
}

/// Maximum weighted log-likelihood over concave piecewise-linear log-densities
/// with knots at every distinct position, by projected gradient ascent.
///
/// The log-density is parametrized as `b (x - x0) - sum_j c_j (x - x_j)_+`
/// with `c >= 0`; normalization and gradients come from Simpson quadrature.
pub fn brute_force_loglik(values: &[f64]) -> f64 {
    let mut pos: Vec<f64> = values.to_vec();
    pos.sort_by(f64::total_cmp);
    let mut xs: Vec<f64> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    for x in pos {
        if xs.last() == Some(&x) {
            *ws.last_mut().unwrap() += 1.0;
        } else {
            xs.push(x);
            ws.push(1.0);
        }
    }
    let lo = xs[0];
    let span = xs[xs.len() - 1] - lo;
    let u: Vec<f64> = xs.iter().map(|x| (x - lo) / span).collect();
    let total: f64 = ws.iter().sum();
    let m = u.len();
    let interior: Vec<f64> = u[1..m - 1].to_vec();

    let phi = |theta: &[f64], x: f64| {
        let mut v = theta[0] * x;
        for (j, t) in interior.iter().enumerate() {
            v -= theta[j + 1] * (x - t).max(0.0);
        }
        v
    };
    // (objective, gradient), objective = sum w phi(u_i) - W log int exp(phi)
    let eval = |theta: &[f64]| -> (f64, Vec<f64>) {
        let mut breaks = vec![0.0];
        breaks.extend(interior.iter().copied());
        breaks.push(1.0);
        let mut z = 0.0;
        let mut ez = vec![0.0; theta.len()];
        for b in breaks.windows(2) {
            if b[1] <= b[0] {
                continue;
            }
            z += simpson(b[0], b[1], 400, |x| phi(theta, x).exp());
            ez[0] += simpson(b[0], b[1], 400, |x| x * phi(theta, x).exp());
            for (j, t) in interior.iter().enumerate() {
                ez[j + 1] -= simpson(b[0], b[1], 400, |x| (x - t).max(0.0) * phi(theta, x).exp());
            }
        }
        let lin: f64 = u.iter().zip(&ws).map(|(x, w)| w * phi(theta, *x)).sum();
        let value = lin - total * z.ln();
        let mut grad = vec![0.0; theta.len()];
        grad[0] = u.iter().zip(&ws).map(|(x, w)| w * x).sum::<f64>() - total * ez[0] / z;
        for (j, t) in interior.iter().enumerate() {
            grad[j + 1] = -u
                .iter()
                .zip(&ws)
                .map(|(x, w)| w * (x - t).max(0.0))
                .sum::<f64>()
                - total * ez[j + 1] / z;
        }
        (value, grad)
    };
    let project = |theta: &mut Vec<f64>| {
        for c in theta.iter_mut().skip(1) {
            *c = c.max(0.0);
        }
    };

    let mut theta = vec![0.0; m - 1];
    let (mut value, mut grad) = eval(&theta);
    let mut step = 1.0 / total;
    for _ in 0..4000 {
        let mut moved = false;
        for _ in 0..50 {
            let mut trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + step * g).collect();
            project(&mut trial);
            let (v, g) = eval(&trial);
            let dist2: f64 = trial.iter().zip(&theta).map(|(a, b)| (a - b).powi(2)).sum();
            if v >= value {
                moved = dist2 > 1e-28 && v - value > 1e-13;
                theta = trial;
                value = v;
                grad = g;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    // back to the original scale
    value - total * span.ln()
}
