//! Barotropic pressure laws, enthalpy and its inverse, assumption checks,
//! and rotation profiles.
//!
//! The enthalpy is `h(ρ) = ∫₀^ρ p′(α)/α dα`. Power laws and positive sums of
//! power laws have closed forms; any other law goes through quadrature in
//! `ln α` with a power-law tail below a small cutoff.

use crate::numerics::{adaptive_gauss, NumericsError};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EosError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-integrable enthalpy: local exponent of p' near 0 is {exponent:.4} (needs > 0)")]
    NonIntegrable { exponent: f64 },
    #[error("inverse enthalpy failed for u = {u:.6e}")]
    Inverse { u: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// User-supplied pressure law with two derivatives.
pub trait PressureLaw: Send + Sync + fmt::Debug {
    fn p(&self, s: f64) -> f64;
    fn dp(&self, s: f64) -> f64;
    fn d2p(&self, s: f64) -> f64;
}

#[derive(Clone, Debug)]
pub enum Law {
    /// p = s^γ
    Power { gamma: f64 },
    /// p = Σ c_i s^{γ_i}
    PowerSum { terms: Vec<(f64, f64)> },
    Custom(Arc<dyn PressureLaw>),
}

#[derive(Clone, Debug)]
pub struct EquationOfState {
    law: Law,
    /// small-density exponent
    pub gamma: f64,
    /// large-density exponent
    pub gamma_star: f64,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub warnings: Vec<String>,
}

const TAIL_CUTOFF: f64 = 1e-20;

/// p(s) = s^γ with closed-form enthalpy and inverse.
pub fn power_law(gamma: f64) -> Result<EquationOfState, EosError> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(EosError::Domain(format!("power law needs gamma > 1 (got {gamma})")));
    }
    let mut warnings = Vec::new();
    if gamma >= 2.0 {
        warnings.push(format!("gamma = {gamma} lies outside the open range (1, 2)"));
    }
    Ok(EquationOfState {
        law: Law::Power { gamma },
        gamma,
        gamma_star: gamma,
        c0: Some(gamma * (gamma - 1.0) * (2.0 - gamma)),
        c1: Some(gamma),
        warnings,
    })
}

/// p(s) = Σ c_i s^{γ_i} with positive coefficients.
pub fn power_sum(terms: &[(f64, f64)]) -> Result<EquationOfState, EosError> {
    if terms.is_empty() {
        return Err(EosError::Domain("power sum needs at least one term".into()));
    }
    for &(c, g) in terms {
        if !(c > 0.0) || !(g > 1.0) || !c.is_finite() || !g.is_finite() {
            return Err(EosError::Domain(format!("power-sum term ({c}, {g}) needs coefficient > 0 and gamma > 1")));
        }
    }
    let lo = terms.iter().cloned().fold((f64::NAN, f64::INFINITY), |b, t| if t.1 < b.1 { t } else { b });
    let hi = terms.iter().cloned().fold((f64::NAN, f64::NEG_INFINITY), |b, t| if t.1 > b.1 { t } else { b });
    let (gamma, gamma_star) = (lo.1, hi.1);
    let c0: f64 = terms
        .iter()
        .filter(|t| t.1 == gamma)
        .map(|&(c, g)| c * g * (g - 1.0) * (2.0 - g))
        .sum();
    let c1: f64 = terms.iter().filter(|t| t.1 == gamma_star).map(|&(c, g)| c * g).sum();
    let mut warnings = Vec::new();
    if gamma >= 2.0 || gamma_star >= 2.0 {
        warnings.push(format!("exponents ({gamma}, {gamma_star}) leave the open range (1, 2)"));
    }
    Ok(EquationOfState {
        law: Law::PowerSum { terms: terms.to_vec() },
        gamma,
        gamma_star,
        c0: Some(c0),
        c1: Some(c1),
        warnings,
    })
}

/// Arbitrary law; exponents and limit constants are measured numerically.
pub fn custom(law: Arc<dyn PressureLaw>) -> Result<EquationOfState, EosError> {
    let e_small = local_exponent(law.as_ref(), 1e-8);
    let e_large = local_exponent(law.as_ref(), 1e8);
    if !(e_small > 0.0) {
        return Err(EosError::NonIntegrable { exponent: e_small });
    }
    let gamma = 1.0 + e_small;
    let gamma_star = 1.0 + e_large;
    let s: f64 = 1e-8;
    let c0 = (gamma - 1.0) * (2.0 - gamma) * s.powf(1.0 - gamma) * law.dp(s);
    let c1 = 1e8f64.powf(1.0 - gamma_star) * law.dp(1e8);
    Ok(EquationOfState {
        law: Law::Custom(law),
        gamma,
        gamma_star,
        c0: Some(c0),
        c1: Some(c1),
        warnings: vec!["exponents and limit constants are estimated, regularity is not certified".into()],
    })
}

fn local_exponent(law: &dyn PressureLaw, s: f64) -> f64 {
    s * law.d2p(s) / law.dp(s)
}

impl EquationOfState {
    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn is_power_law(&self) -> Option<f64> {
        match self.law {
            Law::Power { gamma } => Some(gamma),
            _ => None,
        }
    }

    pub fn p(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match &self.law {
            Law::Power { gamma } => s.powf(*gamma),
            Law::PowerSum { terms } => terms.iter().map(|(c, g)| c * s.powf(*g)).sum(),
            Law::Custom(l) => l.p(s),
        }
    }

    pub fn dp(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match &self.law {
            Law::Power { gamma } => gamma * s.powf(gamma - 1.0),
            Law::PowerSum { terms } => terms.iter().map(|(c, g)| c * g * s.powf(g - 1.0)).sum(),
            Law::Custom(l) => l.dp(s),
        }
    }

    pub fn d2p(&self, s: f64) -> f64 {
        match &self.law {
            Law::Power { gamma } => gamma * (gamma - 1.0) * s.powf(gamma - 2.0),
            Law::PowerSum { terms } => terms.iter().map(|(c, g)| c * g * (g - 1.0) * s.powf(g - 2.0)).sum(),
            Law::Custom(l) => l.d2p(s),
        }
    }

    /// h(ρ); zero for ρ ≤ 0.
    pub fn enthalpy(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        match &self.law {
            Law::Power { gamma } => gamma / (gamma - 1.0) * rho.powf(gamma - 1.0),
            Law::PowerSum { terms } => terms.iter().map(|(c, g)| c * g / (g - 1.0) * rho.powf(g - 1.0)).sum(),
            Law::Custom(_) => self.enthalpy_by_quadrature(rho).unwrap_or(f64::NAN),
        }
    }

    /// h(ρ) by quadrature of p′(α)/α, regardless of closed forms.
    pub fn enthalpy_by_quadrature(&self, rho: f64) -> Result<f64, EosError> {
        if rho <= 0.0 {
            return Ok(0.0);
        }
        let eps = TAIL_CUTOFF.min(rho);
        let e = eps * self.d2p(eps) / self.dp(eps);
        if !(e > 0.0) || !e.is_finite() {
            return Err(EosError::NonIntegrable { exponent: e });
        }
        // below eps: p′(α) ≈ p′(eps)(α/eps)^e integrates to p′(eps)/e
        let tail = self.dp(eps) / e;
        if rho <= eps {
            return Ok(tail);
        }
        let body = adaptive_gauss(|t: f64| self.dp(t.exp()), eps.ln(), rho.ln(), 1e-14 * tail.max(self.dp(rho)))?;
        Ok(tail + body)
    }

    /// h′(ρ) = p′(ρ)/ρ.
    pub fn enthalpy_d1(&self, rho: f64) -> f64 {
        self.dp(rho) / rho
    }

    /// h″(ρ) = (ρp″ − p′)/ρ².
    pub fn enthalpy_d2(&self, rho: f64) -> f64 {
        (rho * self.d2p(rho) - self.dp(rho)) / (rho * rho)
    }

    /// k(s) = h(s) − s h′(s) = h(s) − p′(s).
    pub fn k(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        self.enthalpy(s) - self.dp(s)
    }

    /// h⁻¹(u); zero for u ≤ 0.
    pub fn inverse_enthalpy(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if let Law::Power { gamma } = self.law {
            return ((gamma - 1.0) * u / gamma).powf(1.0 / (gamma - 1.0));
        }
        self.invert(u).unwrap_or(f64::NAN)
    }

    /// (h⁻¹)′(u) = ρ/p′(ρ) at ρ = h⁻¹(u); zero for u ≤ 0 when γ < 2.
    pub fn inverse_enthalpy_d1(&self, u: f64) -> f64 {
        if let Law::Power { gamma } = self.law {
            let n = 1.0 / (gamma - 1.0);
            let c = (gamma - 1.0) / gamma;
            if u <= 0.0 {
                return if n > 1.0 { 0.0 } else { c };
            }
            return n * c * (c * u).powf(n - 1.0);
        }
        if u <= 0.0 {
            return 0.0;
        }
        let rho = self.inverse_enthalpy(u);
        rho / self.dp(rho)
    }

    /// Safeguarded Newton on ln h(e^t) = ln u.
    fn invert(&self, u: f64) -> Result<f64, EosError> {
        let f = |t: f64| -> (f64, f64) {
            let rho = t.exp();
            let h = self.enthalpy(rho);
            (h.ln() - u.ln(), self.dp(rho) / h)
        };
        // start from the dominant power-law inverse
        let g = if u < self.enthalpy(1.0) { self.gamma } else { self.gamma_star };
        let mut t = ((g - 1.0) * u / g).ln() / (g - 1.0);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..200 {
            let (fv, dv) = f(t);
            if !fv.is_finite() || !dv.is_finite() || dv <= 0.0 {
                return Err(EosError::Inverse { u });
            }
            if fv.abs() < 1e-15 {
                return Ok(t.exp());
            }
            if fv > 0.0 {
                hi = hi.min(t);
            } else {
                lo = lo.max(t);
            }
            let mut tn = t - fv / dv;
            let step_cap = 5.0;
            tn = tn.clamp(t - step_cap, t + step_cap);
            if tn <= lo || tn >= hi {
                if lo.is_finite() && hi.is_finite() {
                    tn = 0.5 * (lo + hi);
                } else if tn <= lo {
                    tn = lo + 1.0;
                } else {
                    tn = hi - 1.0;
                }
            }
            if (tn - t).abs() < 1e-15 * t.abs().max(1.0) {
                return Ok(tn.exp());
            }
            t = tn;
        }
        Err(EosError::Inverse { u })
    }
}

/// Log-spaced sampling of `[s_min, s_max]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SampleSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub n: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { s_min: 1e-8, s_max: 1e8, n: 161 }
    }
}

impl SampleSpec {
    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (self.s_min.ln(), self.s_max.ln());
        (0..self.n).map(|i| (a + (b - a) * i as f64 / (self.n - 1).max(1) as f64).exp()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub expected: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub monotone: bool,
    pub small_exponent: f64,
    pub large_exponent: f64,
    pub checks: Vec<AssumptionCheck>,
    pub warnings: Vec<String>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Sampled checks of positivity of p′ and of the small/large-density exponents.
pub fn validate_assumptions(eos: &EquationOfState, spec: &SampleSpec) -> AssumptionReport {
    let pts = spec.points();
    let positive = pts.iter().all(|&s| eos.dp(s) > 0.0 && eos.dp(s).is_finite());
    let monotone = positive && pts.windows(2).all(|w| eos.p(w[1]) > eos.p(w[0]));
    let e_small = spec.s_min * eos.d2p(spec.s_min) / eos.dp(spec.s_min);
    let e_large = spec.s_max * eos.d2p(spec.s_max) / eos.dp(spec.s_max);
    let small_ok = e_small > 0.0 && e_small < 1.0;
    let large_ok = e_large > 0.2 && e_large < 1.0;
    let checks = vec![
        AssumptionCheck {
            name: "positive_sound_speed",
            passed: monotone,
            measured: pts.iter().map(|&s| eos.dp(s)).fold(f64::INFINITY, f64::min),
            expected: 0.0,
            drift: 0.0,
        },
        AssumptionCheck {
            name: "small_density_exponent",
            passed: small_ok,
            measured: e_small,
            expected: eos.gamma - 1.0,
            drift: (e_small - (eos.gamma - 1.0)).abs(),
        },
        AssumptionCheck {
            name: "large_density_exponent",
            passed: large_ok,
            measured: e_large,
            expected: eos.gamma_star - 1.0,
            drift: (e_large - (eos.gamma_star - 1.0)).abs(),
        },
    ];
    let mut warnings = eos.warnings.clone();
    for c in &checks {
        if !c.passed {
            warnings.push(format!("{} fails (measured {:.6})", c.name, c.measured));
        }
    }
    AssumptionReport { monotone, small_exponent: e_small, large_exponent: e_large, checks, warnings }
}

#[derive(Debug, Clone, Serialize)]
pub struct MassConditionReport {
    /// min over samples of (h − p′)/h; must be > 0
    pub lower_margin: f64,
    /// min over samples of (2p′ − h)/h; must be ≥ 0
    pub upper_margin: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    /// min of −(g − w g_w)/g over the (w, r) grid; must be > 0
    pub g_concavity_margin: f64,
    /// min of −g_r/g; must be ≥ 0
    pub g_radial_margin: f64,
    /// min of (r g_r + 3g − w g_w)/g; must be ≥ 0
    pub g_balance_margin: f64,
    pub holds: bool,
}

const EQUALITY_SLACK: f64 = 1e-10;

/// Pointwise check of p′ < h ≤ 2p′ and of the three sign conditions on
/// g(w, r) = 4πr h⁻¹(w/r).
pub fn check_mass_condition_b(eos: &EquationOfState, s_grid: &[f64]) -> MassConditionReport {
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for &s in s_grid.iter().filter(|s| **s > 0.0) {
        let h = eos.enthalpy(s);
        let dp = eos.dp(s);
        lower = lower.min((h - dp) / h);
        upper = upper.min((2.0 * dp - h) / h);
    }
    // g conditions sampled on w/r ∈ h(s_grid) and a handful of radii
    let (mut m1, mut m2, mut m3) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let four_pi = 4.0 * std::f64::consts::PI;
    for &s in s_grid.iter().filter(|s| **s > 0.0) {
        let v = eos.enthalpy(s);
        let hi = s;
        let dhi = s / eos.dp(s);
        for k in 1..=8 {
            let r = k as f64 / 8.0;
            let w = v * r;
            let g = four_pi * r * hi;
            let g_w = four_pi * dhi;
            let g_r = four_pi * (hi - v * dhi);
            m1 = m1.min(-(g - w * g_w) / g);
            m2 = m2.min(-g_r / g);
            m3 = m3.min((r * g_r + 3.0 * g - w * g_w) / g);
        }
    }
    let lower_holds = lower > 0.0;
    let upper_holds = upper >= -EQUALITY_SLACK;
    let holds = lower_holds && upper_holds && m1 > 0.0 && m2 >= -EQUALITY_SLACK && m3 >= -EQUALITY_SLACK;
    MassConditionReport {
        lower_margin: lower,
        upper_margin: upper,
        lower_holds,
        upper_holds,
        g_concavity_margin: m1,
        g_radial_margin: m2,
        g_balance_margin: m3,
        holds,
    }
}

/// ω²(r) with the cumulative J(r) = ∫₀^r ω²(s) s ds.
#[derive(Clone)]
pub enum RotationProfile {
    Constant(f64),
    /// ω² = c r^k, k > −2
    Power { c: f64, k: f64 },
    Custom(Arc<CustomRotation>),
}

/// Tabulated J for an arbitrary ω², cubic Hermite with J′ = ω² r.
pub struct CustomRotation {
    omega_sq: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    r_max: f64,
    nodes: Vec<f64>,
    j: Vec<f64>,
}

impl fmt::Debug for RotationProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Power { c, k } => write!(f, "Power {{ c: {c}, k: {k} }}"),
            Self::Custom(t) => write!(f, "Custom(table on [0, {}])", t.r_max),
        }
    }
}

impl RotationProfile {
    pub fn rigid(omega: f64) -> Self {
        Self::Constant(omega * omega)
    }

    pub fn custom<F>(omega_sq: F, r_max: f64, n: usize) -> Result<Self, EosError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(r_max > 0.0) || n < 2 {
            return Err(EosError::Domain("rotation table needs r_max > 0 and n >= 2".into()));
        }
        let nodes: Vec<f64> = (0..=n).map(|i| r_max * i as f64 / n as f64).collect();
        let mut j = vec![0.0; n + 1];
        for i in 1..=n {
            let seg = crate::numerics::gauss_legendre(|s| omega_sq(s) * s, nodes[i - 1], nodes[i], 12)?;
            j[i] = j[i - 1] + seg;
        }
        Ok(Self::Custom(Arc::new(CustomRotation { omega_sq: Box::new(omega_sq), r_max, nodes, j })))
    }

    pub fn omega_sq(&self, r: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Power { c, k } => c * r.powf(*k),
            Self::Custom(t) => (t.omega_sq)(r),
        }
    }

    /// J(r) = ∫₀^r ω²(s) s ds.
    pub fn cumulative(&self, r: f64) -> f64 {
        let r = r.abs();
        match self {
            Self::Constant(c) => 0.5 * c * r * r,
            Self::Power { c, k } => c * r.powf(k + 2.0) / (k + 2.0),
            Self::Custom(t) => {
                if r >= t.r_max {
                    let extra = adaptive_gauss(|s| (t.omega_sq)(s) * s, t.r_max, r, 1e-13).unwrap_or(f64::NAN);
                    return t.j[t.j.len() - 1] + extra;
                }
                let n = t.nodes.len() - 1;
                let h = t.r_max / n as f64;
                let i = ((r / h) as usize).min(n - 1);
                let (x0, x1) = (t.nodes[i], t.nodes[i + 1]);
                let (d0, d1) = ((t.omega_sq)(x0) * x0, (t.omega_sq)(x1) * x1);
                let s = (r - x0) / h;
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                h00 * t.j[i] + h10 * h * d0 + h01 * t.j[i + 1] + h11 * h * d1
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant(c) => *c == 0.0,
            Self::Power { c, .. } => *c == 0.0,
            Self::Custom(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Isothermal;
    impl PressureLaw for Isothermal {
        fn p(&self, s: f64) -> f64 {
            s
        }
        fn dp(&self, _: f64) -> f64 {
            1.0
        }
        fn d2p(&self, _: f64) -> f64 {
            0.0
        }
    }

    #[derive(Debug)]
    struct SumLaw;
    impl PressureLaw for SumLaw {
        fn p(&self, s: f64) -> f64 {
            s.powf(1.5) + s.powf(1.8)
        }
        fn dp(&self, s: f64) -> f64 {
            1.5 * s.sqrt() + 1.8 * s.powf(0.8)
        }
        fn d2p(&self, s: f64) -> f64 {
            0.75 / s.sqrt() + 1.44 * s.powf(-0.2)
        }
    }

    #[test]
    fn power_law_closed_forms() {
        let e = power_law(1.5).unwrap();
        assert!((e.enthalpy(1.0) - 3.0).abs() < 1e-15);
        assert!((e.inverse_enthalpy(3.0) - 1.0).abs() < 1e-15);
        let w = power_law(4.0 / 3.0).unwrap();
        for s in [0.1, 1.0, 7.0] {
            assert!((w.enthalpy(s) - 4.0 * s.cbrt()).abs() < 1e-13);
            assert!((w.inverse_enthalpy(s) - (s / 4.0).powi(3)).abs() < 1e-13 * s.powi(3).max(1.0));
        }
        assert_eq!(e.enthalpy(0.0), 0.0);
        assert_eq!(e.inverse_enthalpy(0.0), 0.0);
        assert!(power_law(1.0).is_err());
        assert!(!power_law(2.0).unwrap().warnings.is_empty());
    }

    #[test]
    fn power_sum_enthalpy_and_quadrature_agree() {
        let e = power_sum(&[(1.0, 1.5), (1.0, 1.8)]).unwrap();
        assert!((e.enthalpy(1.0) - 5.25).abs() < 1e-14);
        let q = e.enthalpy_by_quadrature(1.0).unwrap();
        assert!((q - 5.25).abs() < 1e-10 * 5.25, "{q}");
        let c = custom(Arc::new(SumLaw)).unwrap();
        assert!((c.enthalpy(1.0) - 5.25).abs() < 1e-10 * 5.25);
        assert!((c.inverse_enthalpy(5.25) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quadrature_matches_power_closed_form() {
        for g in [1.3, 1.5, 1.7] {
            let e = power_law(g).unwrap();
            for s in [1e-6, 0.3, 1.0, 50.0] {
                let q = e.enthalpy_by_quadrature(s).unwrap();
                assert!((q / e.enthalpy(s) - 1.0).abs() < 1e-10, "g={g} s={s}");
            }
        }
    }

    #[test]
    fn inverse_round_trip_power_sum() {
        let e = power_sum(&[(1.0, 1.5), (2.0, 1.8)]).unwrap();
        for s in SampleSpec::default().points() {
            let u = e.enthalpy(s);
            let r = e.inverse_enthalpy(u);
            assert!((e.enthalpy(r) / u - 1.0).abs() < 1e-10);
            assert!((r / s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_derivative_vanishes_at_zero() {
        let e = power_law(1.5).unwrap();
        let s: f64 = 1e-8;
        let q = (e.inverse_enthalpy(s) - e.inverse_enthalpy(0.0)) / s;
        assert!(q < 1e-4);
        let e = power_sum(&[(1.0, 1.5), (1.0, 1.8)]).unwrap();
        assert!((e.inverse_enthalpy(s) / s) < 1e-4);
    }

    #[test]
    fn k_ratio_near_zero() {
        for g in [1.3, 1.5, 1.7] {
            let e = power_law(g).unwrap();
            let s = 1e-6;
            assert!((e.k(s) / e.enthalpy(s) - (2.0 - g)).abs() < 1e-3);
        }
    }

    #[test]
    fn assumption_report() {
        let r = validate_assumptions(&power_law(1.5).unwrap(), &SampleSpec::default());
        assert!(r.all_pass());
        assert!((r.small_exponent - 0.5).abs() < 1e-12 && (r.large_exponent - 0.5).abs() < 1e-12);
        let r = validate_assumptions(&power_sum(&[(1.0, 1.5), (1.0, 1.9)]).unwrap(), &SampleSpec::default());
        assert!((r.small_exponent - 0.5).abs() < 1e-2);
        assert!((r.large_exponent - 0.9).abs() < 1e-2);
        assert!(custom(Arc::new(Isothermal)).is_err());
    }

    #[test]
    fn isothermal_fails_small_exponent_check() {
        // build the report directly from a law whose measured exponent is 0
        let eos = EquationOfState {
            law: Law::Custom(Arc::new(Isothermal)),
            gamma: 1.0,
            gamma_star: 1.0,
            c0: None,
            c1: None,
            warnings: vec![],
        };
        let r = validate_assumptions(&eos, &SampleSpec::default());
        assert!(!r.checks[1].passed);
    }

    #[test]
    fn condition_b_cases() {
        let grid = SampleSpec::default().points();
        let r = check_mass_condition_b(&power_law(1.5).unwrap(), &grid);
        assert!(r.holds && r.upper_margin.abs() < 1e-12);
        let r = check_mass_condition_b(&power_law(1.25).unwrap(), &grid);
        assert!(!r.upper_holds && !r.holds);
        let r = check_mass_condition_b(&power_sum(&[(1.0, 1.5), (1.0, 1.8)]).unwrap(), &grid);
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn rotation_cumulative() {
        let p = RotationProfile::Constant(1.0);
        assert!((p.cumulative(2.0) - 2.0).abs() < 1e-15);
        let q = RotationProfile::Power { c: 1.0, k: 2.0 };
        assert!((q.cumulative(1.3) - 1.3f64.powi(4) / 4.0).abs() < 1e-14);
        let t = RotationProfile::custom(|s| s * s, 4.0, 400).unwrap();
        for r in [0.0, 0.37, 1.9, 4.0, 5.0] {
            assert!((t.cumulative(r) - r.powi(4) / 4.0).abs() < 1e-9, "r={r}");
        }
    }
}
