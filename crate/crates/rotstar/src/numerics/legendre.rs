//! Legendre polynomials and axisymmetric spherical harmonics.

use std::f64::consts::PI;

/// P_l(x) by the three-term recurrence.
pub fn legendre_p(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=l {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// P_0(x) ..= P_lmax(x) written into `out` (length lmax + 1).
pub fn legendre_all(lmax: usize, x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if lmax >= 1 {
        out[1] = x;
    }
    for k in 2..=lmax {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

/// Y_l0(θ) = sqrt((2l+1)/4π) P_l(cos θ).
pub fn y_l0(l: usize, theta: f64) -> f64 {
    ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * legendre_p(l, theta.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GaussRule;

    #[test]
    fn low_order_values() {
        assert_eq!(legendre_p(1, 0.5), 0.5);
        let y00 = 0.5 * (1.0 / PI).sqrt();
        for th in [0.0, 0.4, 1.3, 3.0] {
            assert!((y_l0(0, th) - y00).abs() < 1e-15);
            let c = th.cos();
            let y20 = 0.25 * (5.0 / PI).sqrt() * (3.0 * c * c - 1.0);
            assert!((y_l0(2, th) - y20).abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormal_on_sphere() {
        let g = GaussRule::new(40);
        for l in 0..8 {
            for m in 0..8 {
                // ∫ Y_l Y_m 2π sinθ dθ = 2π ∫_{-1}^{1} ... dμ
                let v: f64 = g
                    .x
                    .iter()
                    .zip(&g.w)
                    .map(|(mu, w)| w * 2.0 * PI * y_l0(l, mu.acos()) * y_l0(m, mu.acos()))
                    .sum();
                let want = if l == m { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "l={l} m={m} v={v}");
            }
        }
    }

    #[test]
    fn table_matches_single() {
        let mut t = [0.0; 9];
        legendre_all(8, 0.3, &mut t);
        for (l, v) in t.iter().enumerate() {
            assert!((v - legendre_p(l, 0.3)).abs() < 1e-15);
        }
    }
}
