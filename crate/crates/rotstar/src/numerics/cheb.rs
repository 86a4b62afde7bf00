//! Chebyshev interpolation on first-kind (interior) nodes of `[-1, 1]`.

use std::f64::consts::PI;

/// First-kind Chebyshev nodes x_j = cos(π(j + 1/2)/n), descending.
pub fn cheb_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| (PI * (j as f64 + 0.5) / n as f64).cos()).collect()
}

/// Values at `cheb_nodes(n)` to coefficient conversion and Clenshaw evaluation.
#[derive(Debug, Clone)]
pub struct ChebBasis {
    n: usize,
    /// `n × n` row-major map from nodal values to coefficients
    to_coef: Vec<f64>,
}

impl ChebBasis {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut to_coef = vec![0.0; n * n];
        for k in 0..n {
            let s = if k == 0 { 1.0 } else { 2.0 } / n as f64;
            for j in 0..n {
                to_coef[k * n + j] = s * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
            }
        }
        Self { n, to_coef }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|k| (0..n).map(|j| self.to_coef[k * n + j] * values[j]).sum()).collect()
    }

    /// Row `k` of the value-to-coefficient map (for linearity in nodal values).
    pub fn coef_row(&self, k: usize) -> &[f64] {
        &self.to_coef[k * self.n..(k + 1) * self.n]
    }
}

/// Σ c_k T_k(x) and its derivative.
pub fn clenshaw(c: &[f64], x: f64) -> (f64, f64) {
    // T_k and T_k' by forward recurrence; n is small so this is cheap and stable on [-1,1]
    let n = c.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let (mut t0, mut t1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    let mut f = c[0];
    let mut df = 0.0;
    if n > 1 {
        f += c[1] * x;
        df += c[1];
    }
    for k in 2..n {
        let t2 = 2.0 * x * t1 - t0;
        let d2 = 2.0 * t1 + 2.0 * x * d1 - d0;
        f += c[k] * t2;
        df += c[k] * d2;
        t0 = t1;
        t1 = t2;
        d0 = d1;
        d1 = d2;
    }
    (f, df)
}

/// T_0(x) ..= T_{n-1}(x) and derivatives.
pub fn cheb_t_all(n: usize, x: f64, t: &mut [f64], dt: &mut [f64]) {
    if n == 0 {
        return;
    }
    t[0] = 1.0;
    dt[0] = 0.0;
    if n > 1 {
        t[1] = x;
        dt[1] = 1.0;
    }
    for k in 2..n {
        t[k] = 2.0 * x * t[k - 1] - t[k - 2];
        dt[k] = 2.0 * t[k - 1] + 2.0 * x * dt[k - 1] - dt[k - 2];
    }
}
