//! Non-rotating equilibria: shooting for `v″ + (2/r)v′ + 4π h⁻¹(v) = 0`,
//! `v(0) = a`, `v′(0) = 0`, with the variational solution `v_a = ∂v/∂a`
//! carried along in the same integration.

use crate::eos::{EosError, EquationOfState};
use crate::numerics::{integrate_ivp, NumericsError, OdeOptions, RadialGrid, Stop, Trajectory};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error("unbounded star: no zero of u before r = {r_max:.3e} (a = {a})")]
    Unbounded { a: f64, r_max: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("sample a = {a}: {source}")]
    Sample { a: f64, source: Box<RadialError> },
    #[error(transparent)]
    Eos(#[from] EosError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy)]
pub struct RadialOptions {
    pub rtol: f64,
    pub atol: f64,
    /// series start as a fraction of the central length scale
    pub start_fraction: f64,
    /// number of output intervals on `[0, R]`
    pub n_grid: usize,
    /// search limit as a multiple of the central length scale
    pub r_max_factor: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { rtol: 1e-13, atol: 1e-15, start_fraction: 1e-4, n_grid: 400, r_max_factor: 1e3 }
    }
}

/// Radial equilibrium with its variational solution.
#[derive(Debug, Clone, Serialize)]
pub struct RadialStar {
    pub a: f64,
    pub radius: f64,
    pub mass: f64,
    /// dM/da from the variational solution
    pub mass_prime: f64,
    pub grid: RadialGrid,
    pub u0: Vec<f64>,
    pub u0p: Vec<f64>,
    pub rho0: Vec<f64>,
    #[serde(skip)]
    eos: EquationOfState,
    #[serde(skip)]
    traj: Arc<Trajectory>,
    #[serde(skip)]
    r_start: f64,
    /// h⁻¹(a), (h⁻¹)′(a)
    #[serde(skip)]
    centre: (f64, f64),
}

/// Length scale at which the central Taylor expansion of u reaches zero.
fn central_scale(eos: &EquationOfState, a: f64) -> f64 {
    (3.0 * a / (2.0 * PI * eos.inverse_enthalpy(a))).sqrt()
}

/// Shoot from the centre with `v(0) = a` until `v` first vanishes.
pub fn solve_radial(eos: &EquationOfState, a: f64) -> Result<RadialStar, RadialError> {
    solve_radial_with(eos, a, &RadialOptions::default())
}

pub fn solve_radial_with(eos: &EquationOfState, a: f64, opts: &RadialOptions) -> Result<RadialStar, RadialError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(RadialError::Domain(format!("central value a must be positive (got {a})")));
    }
    if opts.n_grid < 2 {
        return Err(RadialError::Domain("output grid needs at least 2 intervals".into()));
    }
    let rho_c = eos.inverse_enthalpy(a);
    let drho_c = eos.inverse_enthalpy_d1(a);
    if !(rho_c > 0.0) || !rho_c.is_finite() {
        return Err(RadialError::Domain(format!("h^-1({a}) = {rho_c} is not a positive density")));
    }
    let scale = central_scale(eos, a);
    let r0 = opts.start_fraction * scale;
    let y0 = series_state(rho_c, drho_c, a, r0);
    let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
        let v = y[0].max(0.0);
        let hi = eos.inverse_enthalpy(v);
        let dhi = if y[0] > 0.0 { eos.inverse_enthalpy_d1(v) } else { 0.0 };
        dy[0] = y[1];
        dy[1] = -2.0 * y[1] / r - 4.0 * PI * hi;
        dy[2] = 4.0 * PI * r * r * hi;
        dy[3] = y[4];
        dy[4] = -2.0 * y[4] / r - 4.0 * PI * dhi * y[3];
    };
    let g = |_: f64, y: &[f64]| y[0];
    let r_max = opts.r_max_factor * scale;
    let ode = OdeOptions { rtol: opts.rtol, atol: opts.atol * a.max(1e-300), h0: Some(r0), ..Default::default() };
    let traj = match integrate_ivp(rhs, &y0, r0, Stop::Event { g: &g, r_max, tol: 1e-14 * scale }, &ode) {
        Ok(t) => t,
        Err(NumericsError::NoEvent { r_max }) => return Err(RadialError::Unbounded { a, r_max }),
        Err(e) => return Err(e.into()),
    };
    let radius = traj.event.expect("event integration reports the event");
    let end = traj.eval(radius);
    let mass = end[2];
    let mass_prime = -radius * radius * end[4];
    let grid = RadialGrid::uniform(radius, opts.n_grid)?;
    let mut star = RadialStar {
        a,
        radius,
        mass,
        mass_prime,
        grid,
        u0: Vec::new(),
        u0p: Vec::new(),
        rho0: Vec::new(),
        eos: eos.clone(),
        traj: Arc::new(traj),
        r_start: r0,
        centre: (rho_c, drho_c),
    };
    let nodes = star.grid.nodes().to_vec();
    star.u0 = nodes.iter().map(|&r| star.u0_at(r)).collect();
    star.u0p = nodes.iter().map(|&r| star.u0p_at(r)).collect();
    star.rho0 = nodes.iter().map(|&r| star.rho0_at(r)).collect();
    let n = star.u0.len() - 1;
    star.u0[n] = 0.0;
    star.rho0[n] = 0.0;
    Ok(star)
}

fn series_state(rho_c: f64, drho_c: f64, a: f64, r: f64) -> [f64; 5] {
    [
        a - 2.0 * PI / 3.0 * rho_c * r * r,
        -4.0 * PI / 3.0 * rho_c * r,
        4.0 * PI / 3.0 * rho_c * r * r * r,
        1.0 - 2.0 * PI / 3.0 * drho_c * r * r,
        -4.0 * PI / 3.0 * drho_c * r,
    ]
}

impl RadialStar {
    pub fn eos(&self) -> &EquationOfState {
        &self.eos
    }

    /// Full state [v, v′, m, v_a, v_a′] at `r ∈ [0, R]`.
    pub fn state_at(&self, r: f64) -> [f64; 5] {
        if r < self.r_start {
            return series_state(self.centre.0, self.centre.1, self.a, r);
        }
        let mut out = [0.0; 5];
        self.traj.eval_into(r.min(self.radius), &mut out);
        out
    }

    /// u₀(r), continued harmonically outside: M(1/r − 1/R).
    pub fn u0_at(&self, r: f64) -> f64 {
        if r >= self.radius {
            return self.mass * (1.0 / r - 1.0 / self.radius);
        }
        self.state_at(r)[0]
    }

    pub fn u0p_at(&self, r: f64) -> f64 {
        if r >= self.radius {
            return -self.mass / (r * r);
        }
        self.state_at(r)[1]
    }

    /// ρ₀(r) = h⁻¹(u₀), zero outside.
    pub fn rho0_at(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        self.eos.inverse_enthalpy(self.state_at(r)[0].max(0.0))
    }

    /// ρ₀′(r) = (h⁻¹)′(u₀) u₀′.
    pub fn drho0_at(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        let s = self.state_at(r);
        self.eos.inverse_enthalpy_d1(s[0].max(0.0)) * s[1]
    }

    /// lim_{r→0} ρ₀′(r)/r.
    pub fn drho0_over_r_at_zero(&self) -> f64 {
        -4.0 * PI / 3.0 * self.centre.0 * self.centre.1
    }

    /// u₀′(r)/r with its limit −(4π/3)ρ₀(0) at the centre.
    pub fn u0p_over_r(&self, r: f64) -> f64 {
        if r < self.r_start {
            return -4.0 * PI / 3.0 * self.centre.0;
        }
        self.u0p_at(r) / r
    }

    pub fn central_density(&self) -> f64 {
        self.centre.0
    }

    /// v_a and v_a′ at `r ∈ [0, R]`.
    pub fn va_at(&self, r: f64) -> (f64, f64) {
        let s = self.state_at(r);
        (s[3], s[4])
    }

    /// R²u₀′(R) + M, relative to M.
    pub fn flux_residual(&self) -> f64 {
        let s = self.state_at(self.radius);
        (self.radius * self.radius * s[1] + self.mass).abs() / self.mass
    }

    /// Trajectory mesh (accepted step ends), useful for diagnostics.
    pub fn step_count(&self) -> usize {
        self.traj.steps
    }
}

/// Variational result: M′(a) and v_a, v_a′ sampled on the star grid.
#[derive(Debug, Clone, Serialize)]
pub struct MassDerivative {
    pub mass_prime: f64,
    pub va: Vec<f64>,
    pub vap: Vec<f64>,
}

/// M′(a) = −R² v_a′(R) with v_a from the variational equation.
pub fn mass_derivative(star: &RadialStar) -> MassDerivative {
    let (va, vap) = star.grid.nodes().iter().map(|&r| star.va_at(r)).unzip();
    MassDerivative { mass_prime: star.mass_prime, va, vap }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    /// relative to |rhs|, or to |v′(R)| when the right side vanishes
    pub residual: f64,
    pub absolute: bool,
}

/// Checks a·c·v_a′(R) = (c − 1)·v′(R), c = 2(γ−1)/(2−γ), for a pure power law.
pub fn gamma_43_identity_check(star: &RadialStar) -> Result<IdentityResidual, RadialError> {
    let gamma = star
        .eos
        .is_power_law()
        .ok_or_else(|| RadialError::Unsupported("identity holds for pure power laws only".into()))?;
    if gamma >= 2.0 {
        // c → ∞; divide through by c
        let s = star.state_at(star.radius);
        let lhs = star.a * s[4];
        let rhs = s[1];
        return Ok(IdentityResidual { lhs, rhs, residual: (lhs - rhs).abs() / rhs.abs(), absolute: false });
    }
    let c = 2.0 * (gamma - 1.0) / (2.0 - gamma);
    let s = star.state_at(star.radius);
    let lhs = star.a * c * s[4];
    let rhs = (c - 1.0) * s[1];
    let scale = s[1].abs();
    if rhs.abs() < 1e-6 * scale {
        Ok(IdentityResidual { lhs, rhs, residual: (lhs - rhs).abs() / scale, absolute: true })
    } else {
        Ok(IdentityResidual { lhs, rhs, residual: (lhs - rhs).abs() / rhs.abs(), absolute: false })
    }
}

/// Power-law rescaling: s^c v(s r; a) against v(r; s^c a), c = 2(γ−1)/(2−γ).
/// Returns the sup-norm deviation over `n` radii in the common support.
pub fn scaling_law_deviation(eos: &EquationOfState, a: f64, s: f64, n: usize) -> Result<f64, RadialError> {
    let gamma = eos
        .is_power_law()
        .ok_or_else(|| RadialError::Unsupported("scaling law holds for pure power laws only".into()))?;
    let c = 2.0 * (gamma - 1.0) / (2.0 - gamma);
    let base = solve_radial(eos, a)?;
    let scaled = solve_radial(eos, s.powf(c) * a)?;
    let r_top = (base.radius / s).min(scaled.radius);
    let mut worst = 0.0_f64;
    for i in 0..=n {
        let r = r_top * i as f64 / n as f64;
        let lhs = s.powf(c) * base.u0_at(s * r);
        let rhs = scaled.u0_at(r);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassSample {
    pub a: f64,
    pub radius: f64,
    pub mass: f64,
    pub mass_prime: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassCurve {
    pub samples: Vec<MassSample>,
}

impl MassCurve {
    /// Fitted exponent of M ∝ a^e between the first and last samples.
    pub fn fitted_exponent(&self) -> f64 {
        let (f, l) = (self.samples[0], self.samples[self.samples.len() - 1]);
        (l.mass / f.mass).ln() / (l.a / f.a).ln()
    }
}

/// `n` log-spaced samples of (a, R, M, M′) on `[a_min, a_max]`.
pub fn mass_curve(eos: &EquationOfState, a_min: f64, a_max: f64, n: usize) -> Result<MassCurve, RadialError> {
    if !(a_min > 0.0) || !(a_max > a_min) || n < 2 {
        return Err(RadialError::Domain(format!("mass curve needs 0 < a_min < a_max and n >= 2 (got {a_min}, {a_max}, {n})")));
    }
    let (l0, l1) = (a_min.ln(), a_max.ln());
    let samples: Result<Vec<MassSample>, RadialError> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp();
            let star = solve_radial(eos, a).map_err(|e| RadialError::Sample { a, source: Box::new(e) })?;
            Ok(MassSample { a, radius: star.radius, mass: star.mass, mass_prime: star.mass_prime })
        })
        .collect();
    Ok(MassCurve { samples: samples? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::{power_law, power_sum};

    #[test]
    fn linear_case_closed_form() {
        let eos = power_law(2.0).unwrap();
        let s = solve_radial(&eos, 1.0).unwrap();
        let want = (PI / 2.0).sqrt();
        assert!((s.radius - want).abs() < 1e-9, "{}", s.radius);
        assert!((s.mass - want).abs() < 1e-9, "{}", s.mass);
        assert!((s.mass_prime - want).abs() < 1e-9);
        let k = (2.0 * PI).sqrt();
        for (r, u) in s.grid.nodes().iter().zip(&s.u0) {
            let exact = if *r == 0.0 { 1.0 } else { (k * r).sin() / (k * r) };
            assert!((u - exact).abs() < 1e-10);
        }
        assert!(gamma_43_identity_check(&s).unwrap().residual < 1e-9);
    }

    #[test]
    fn flux_identity_and_monotone_profile() {
        for g in [1.3, 1.5, 1.7] {
            let s = solve_radial(&power_law(g).unwrap(), 1.0).unwrap();
            assert!(s.flux_residual() < 1e-10);
            assert!(s.u0p.iter().skip(1).all(|d| *d < 0.0));
            assert!(s.u0.iter().take(s.u0.len() - 1).all(|u| *u > 0.0));
        }
    }

    #[test]
    fn mass_prime_matches_finite_difference() {
        let eos = power_sum(&[(1.0, 1.5), (1.0, 1.8)]).unwrap();
        let a = 1.0;
        let d = 1e-4 * a;
        let mp = solve_radial(&eos, a).unwrap().mass_prime;
        let fd = (solve_radial(&eos, a + d).unwrap().mass - solve_radial(&eos, a - d).unwrap().mass) / (2.0 * d);
        assert!((mp / fd - 1.0).abs() < 1e-5);
    }

    #[test]
    fn four_thirds_has_flat_mass() {
        let eos = power_law(4.0 / 3.0).unwrap();
        let s = solve_radial(&eos, 1.0).unwrap();
        assert!(s.mass_prime.abs() < 1e-6 * s.mass / s.a);
        let id = gamma_43_identity_check(&s).unwrap();
        assert!(id.absolute && id.residual < 1e-8);
    }

    #[test]
    fn scaling_law_holds() {
        for g in [1.3, 1.5, 1.7] {
            let d = scaling_law_deviation(&power_law(g).unwrap(), 1.0, 1.1, 200).unwrap();
            assert!(d < 1e-8, "g={g} d={d}");
        }
    }

    #[test]
    fn identity_rejects_power_sum() {
        let s = solve_radial(&power_sum(&[(1.0, 1.5), (1.0, 1.8)]).unwrap(), 1.0).unwrap();
        assert!(matches!(gamma_43_identity_check(&s), Err(RadialError::Unsupported(_))));
    }

    #[test]
    fn mass_curve_exponent() {
        let c = mass_curve(&power_law(1.5).unwrap(), 0.5, 2.0, 5).unwrap();
        // M ∝ a^{(3γ−4)/(2(γ−1))} = a^{1/2}
        assert!((c.fitted_exponent() - 0.5).abs() < 1e-8);
        assert!(c.samples.iter().all(|s| s.mass_prime > 0.0));
    }
}
