//! Gauss–Legendre rules and a small adaptive driver built on them.

use super::NumericsError;
use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl GaussRule {
    /// n-point Gauss–Legendre rule (Newton on P_n, symmetric fill).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = p_and_dp(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = p_and_dp(n, z);
            if d.is_finite() {
                dp = d;
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            let wi = 2.0 / ((1.0 - z * z) * dp * dp);
            w[i] = wi;
            w[n - 1 - i] = wi;
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        Self { x, w }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        (self.x.iter().map(|t| c + h * t).collect(), self.w.iter().map(|w| h * w).collect())
    }

    /// Integral of `f` over `[a, b]`; errors on a non-finite sample.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64, NumericsError> {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (t, w) in self.x.iter().zip(&self.w) {
            let x = c + h * t;
            let v = f(x);
            if !v.is_finite() {
                return Err(NumericsError::NonFinite { what: "quadrature integrand", x });
            }
            s += w * v;
        }
        Ok(h * s)
    }
}

fn p_and_dp(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// n-point Gauss–Legendre integral of `f` over `[a, b]`.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Result<f64, NumericsError> {
    if !(a < b) || n == 0 {
        return Err(NumericsError::Invalid(format!("need a < b and n >= 1 (a={a}, b={b}, n={n})")));
    }
    GaussRule::new(n).integrate(f, a, b)
}

/// Globally adaptive bisection with a 10/20-point Gauss pair per panel.
pub fn adaptive_gauss<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64, NumericsError> {
    if a == b {
        return Ok(0.0);
    }
    if !(a < b) {
        return Err(NumericsError::Invalid(format!("need a < b (a={a}, b={b})")));
    }
    let lo = GaussRule::new(10);
    let hi = GaussRule::new(20);
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut evals = 0usize;
    while let Some((l, r, depth)) = stack.pop() {
        let c = lo.integrate(&mut f, l, r)?;
        let fine = hi.integrate(&mut f, l, r)?;
        evals += 30;
        let err = (fine - c).abs();
        let local_tol = tol * ((r - l) / (b - a)).max(1e-3);
        if err <= local_tol.max(1e-15 * fine.abs()) || depth >= 50 || evals > 2_000_000 {
            if (depth >= 50 || evals > 2_000_000) && err > 1e3 * tol.max(1e-15 * fine.abs()) {
                return Err(NumericsError::Invalid(format!(
                    "adaptive quadrature failed to converge on [{l:.3e}, {r:.3e}]"
                )));
            }
            total += fine;
        } else {
            let m = 0.5 * (l + r);
            stack.push((m, r, depth + 1));
            stack.push((l, m, depth + 1));
        }
    }
    Ok(total)
}
