//! Kinetic (Vlasov–Poisson) model with distribution `f = C_κ φ(E, L)`,
//! `E = |v|²/2 + U`, `L = κ(x₁v₂ − x₂v₁)`.
//!
//! Only velocity moments are computed:
//!
//! ```text
//! w(κ, r, u) = 2π ∫_{−u}^0 ∫_{−√(2(E+u))}^{√(2(E+u))} φ(E, κ r s) ds dE,   G(u) = w(0, 0, u)
//! ```
//!
//! For `φ = (−E)₊^{−μ} Σ c_k L^{2k}` both are closed-form Beta integrals;
//! a general `φ` goes through nested Gauss quadrature after `E = −u t`.

use crate::dilation::{BallRule, DeformationField, FieldGrid};
use crate::engine::{project_mode, MassForm, Plan, PulledDensity};
use crate::linop::{assemble_modes, LinopError, LinopOptions, ModeOperator, RadialBase};
use crate::numerics::{integrate_ivp, GaussRule, NumericsError, OdeOptions, RadialGrid, Stop, Trajectory};
use crate::radial::{solve_radial, RadialError, RadialOptions};
use crate::rotating::{
    continue_problem, shape_from_modes, solve_modes, Continuation, Linearization, NewtonOptions, PotentialOptions,
    RotatingError, ShapeOptions, ShapeReport, SteadyProblem,
};
use crate::eos::power_law;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VlasovError {
    #[error("invalid ansatz: {0}")]
    Ansatz(String),
    #[error("unbounded system: no zero of U before r = {r_max:.3e} (a = {a})")]
    Unbounded { a: f64, r_max: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error(transparent)]
    Rotating(#[from] RotatingError),
}

/// A general phase-space profile `φ(E, L)`.
pub trait PhaseDensity: Send + Sync + fmt::Debug {
    /// φ(E, L); zero for E > 0
    fn phi(&self, e: f64, l: f64) -> f64;
    /// ∂²φ/∂L² (E, L)
    fn d2_l(&self, e: f64, l: f64) -> f64;
    /// exponent μ of the `(−E)^{−μ}` behaviour at `E → 0⁻`
    fn mu(&self) -> f64;
}

/// Angular-momentum factor of the polytropic family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Psi {
    /// ψ ≡ c
    Constant(f64),
    /// ψ(L) = 1 + c L²
    Quadratic(f64),
}

impl Psi {
    /// Coefficients of `ψ(L) = c₀ + c₁ L²`.
    pub fn coefficients(&self) -> [f64; 2] {
        match *self {
            Psi::Constant(c) => [c, 0.0],
            Psi::Quadratic(c) => [1.0, c],
        }
    }

    pub fn eval(&self, l: f64) -> f64 {
        let [c0, c1] = self.coefficients();
        c0 + c1 * l * l
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Polytropic(Psi),
    Custom(Arc<dyn PhaseDensity>),
}

/// Phase-space ansatz `φ(E, L)`.
#[derive(Debug, Clone)]
pub struct VlasovAnsatz {
    pub mu: f64,
    kind: Kind,
}

/// Quadrature settings of the generic moment path.
const N_INNER: usize = 24;
const N_OUTER: usize = 24;
const GRADED_LEVELS: usize = 12;

fn beta(a: f64, b: f64) -> f64 {
    (libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)).exp()
}

impl VlasovAnsatz {
    /// `φ(E, L) = (−E)₊^{−μ} ψ(L)`.
    pub fn polytropic(mu: f64, psi: Psi) -> Result<Self, VlasovError> {
        check_mu(mu)?;
        let ok = match psi {
            Psi::Constant(c) => c > 0.0 && c.is_finite(),
            Psi::Quadratic(c) => c >= 0.0 && c.is_finite(),
        };
        if !ok {
            return Err(VlasovError::Ansatz(format!("psi must be non-negative with psi(0) > 0 (got {psi:?})")));
        }
        Ok(Self { mu, kind: Kind::Polytropic(psi) })
    }

    /// A general profile. Checks `φ = 0` for `E > 0`, `φ ≥ 0` and
    /// `∂_Lφ(E, 0) = 0` on a few sample energies.
    pub fn custom(phi: Arc<dyn PhaseDensity>) -> Result<Self, VlasovError> {
        let mu = phi.mu();
        check_mu(mu)?;
        for e in [0.1, 1.0, 10.0] {
            if phi.phi(e, 0.3) != 0.0 {
                return Err(VlasovError::Ansatz(format!("phi({e}, L) must vanish for E > 0")));
            }
        }
        let ans = Self { mu, kind: Kind::Custom(phi) };
        let slope = ans.psi_slope_at_zero();
        if slope > 1e-6 {
            return Err(VlasovError::Ansatz(format!("d phi/dL (E, 0) must vanish; difference quotient {slope:.3e}")));
        }
        for e in [-0.01, -0.5, -2.0] {
            for l in [0.0, 0.5, -1.5] {
                if !(ans.phi(e, l) >= 0.0) {
                    return Err(VlasovError::Ansatz(format!("phi({e}, {l}) is negative")));
                }
            }
        }
        Ok(ans)
    }

    pub fn psi(&self) -> Option<Psi> {
        match &self.kind {
            Kind::Polytropic(p) => Some(*p),
            Kind::Custom(_) => None,
        }
    }

    /// `1 + 1/(3/2 − μ)`: the fluid exponent with the same density law.
    pub fn effective_gamma(&self) -> f64 {
        1.0 + 1.0 / (1.5 - self.mu)
    }

    pub fn phi(&self, e: f64, l: f64) -> f64 {
        if e >= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Polytropic(p) => (-e).powf(-self.mu) * p.eval(l),
            Kind::Custom(c) => c.phi(e, l),
        }
    }

    fn d2_l_phi(&self, e: f64) -> f64 {
        if e >= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Polytropic(p) => 2.0 * p.coefficients()[1] * (-e).powf(-self.mu),
            Kind::Custom(c) => c.d2_l(e, 0.0),
        }
    }

    /// Largest centred difference quotient of `φ(E, ·)` at `L = 0` over
    /// sample energies, relative to `φ(E, 0)`.
    pub fn psi_slope_at_zero(&self) -> f64 {
        let h = 1e-6;
        [-0.05, -0.5, -3.0]
            .iter()
            .map(|&e| {
                let f0 = self.phi(e, 0.0).abs().max(1e-300);
                ((self.phi(e, h) - self.phi(e, -h)) / (2.0 * h)).abs() / f0
            })
            .fold(0.0, f64::max)
    }

    /// `W_k(u) = 2π·2·2^{k+1/2}/(2k+1) · u^{k+3/2−μ} B(1−μ, k+3/2)`, the
    /// moment of `(−E)^{−μ}(κ r s)^{2k}` per unit `(κ r)^{2k}`.
    fn moment(&self, k: usize, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let kf = k as f64;
        4.0 * PI * 2f64.powf(kf + 0.5) / (2.0 * kf + 1.0) * u.powf(kf + 1.5 - self.mu) * beta(1.0 - self.mu, kf + 1.5)
    }

    fn moment_du(&self, k: usize, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        (k as f64 + 1.5 - self.mu) * self.moment(k, u) / u
    }

    /// G(u) = w(0, 0, u).
    pub fn g(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Polytropic(p) => p.coefficients()[0] * self.moment(0, u),
            Kind::Custom(_) => self.g_quadrature(u),
        }
    }

    pub fn g_prime(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Polytropic(p) => p.coefficients()[0] * self.moment_du(0, u),
            Kind::Custom(_) => self.w_u_quadrature(0.0, 0.0, u),
        }
    }

    /// `4π√2 ∫_{−u}^0 φ(E,0)√(u+E) dE` by quadrature.
    pub fn g_quadrature(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        4.0 * PI * 2f64.sqrt() * u * self.energy_integral(|t| self.phi(-u * t, 0.0) * (u * (1.0 - t)).sqrt())
    }

    /// `∫₀¹ f(t) dt` for `f ~ t^{−μ}` at 0 and `f ~ (1−t)^{±1/2}` at 1.
    /// On `(0, ½)`: `t = τ^{1/(1−μ)}` when μ > 0, then panels graded
    /// geometrically toward τ = 0; on `(½, 1)`: `1 − t = σ²`.
    fn energy_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        let g = GaussRule::new(N_OUTER);
        let p = if self.mu > 0.0 { 1.0 / (1.0 - self.mu) } else { 1.0 };
        let tau_max = 0.5f64.powf(1.0 / p);
        let mut lo = 0.0;
        let mut b = tau_max;
        for level in 0..=GRADED_LEVELS {
            let a = if level == GRADED_LEVELS { 0.0 } else { 0.5 * b };
            let mut acc = 0.0;
            for (x, w) in g.x.iter().zip(&g.w) {
                let tau = a + 0.5 * (b - a) * (1.0 + x);
                acc += w * f(tau.powf(p)) * p * tau.powf(p - 1.0);
            }
            lo += 0.5 * (b - a) * acc;
            b = a;
        }
        let s_max = 0.5f64.sqrt();
        let mut hi = 0.0;
        for (x, w) in g.x.iter().zip(&g.w) {
            let sigma = 0.5 * s_max * (1.0 + x);
            hi += w * f(1.0 - sigma * sigma) * 2.0 * sigma;
        }
        lo + 0.5 * s_max * hi
    }

    /// w(κ, r, u).
    pub fn w(&self, kappa: f64, r: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Polytropic(p) => {
                let [c0, c1] = p.coefficients();
                let kr = kappa * r;
                c0 * self.moment(0, u) + c1 * kr * kr * self.moment(1, u)
            }
            Kind::Custom(_) => self.w_quadrature(kappa, r, u),
        }
    }

    /// ∂w/∂u.
    pub fn w_u(&self, kappa: f64, r: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Polytropic(p) => {
                let [c0, c1] = p.coefficients();
                let kr = kappa * r;
                c0 * self.moment_du(0, u) + c1 * kr * kr * self.moment_du(1, u)
            }
            Kind::Custom(_) => self.w_u_quadrature(kappa, r, u),
        }
    }

    /// Nested quadrature of the defining double integral.
    pub fn w_quadrature(&self, kappa: f64, r: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let inner = GaussRule::new(N_INNER);
        2.0 * PI
            * u
            * self.energy_integral(|t| {
                let e = -u * t;
                let s_max = (2.0 * u * (1.0 - t)).max(0.0).sqrt();
                let mut acc = 0.0;
                for (x, w) in inner.x.iter().zip(&inner.w) {
                    acc += w * self.phi(e, kappa * r * s_max * x);
                }
                s_max * acc
            })
    }

    /// `∂_u w = 2π ∫ [φ(E, κrS) + φ(E, −κrS)]/S dE`, `S = √(2(E+u))`.
    fn w_u_quadrature(&self, kappa: f64, r: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        2.0 * PI
            * u
            * self.energy_integral(|t| {
                let s = (2.0 * u * (1.0 - t)).max(1e-300).sqrt();
                (self.phi(-u * t, kappa * r * s) + self.phi(-u * t, -kappa * r * s)) / s
            })
    }

    /// `∂_κ w(0, r, u) = 2π r ∫∫ ∂_Lφ(E,0) s ds dE` by quadrature; the
    /// L-derivative is a centred difference.
    pub fn d_kappa_w_at_zero(&self, r: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let inner = GaussRule::new(N_INNER);
        let h = 1e-4;
        2.0 * PI
            * r
            * u
            * self.energy_integral(|t| {
                let e = -u * t;
                let s_max = (2.0 * u * (1.0 - t)).max(0.0).sqrt();
                let mut acc = 0.0;
                for (x, w) in inner.x.iter().zip(&inner.w) {
                    let dphi = (self.phi(e, h) - self.phi(e, -h)) / (2.0 * h);
                    acc += w * dphi * s_max * x;
                }
                s_max * acc
            })
    }

    /// `S(u)` with `∂²_κ w(0, r, u) = r² S(u)`:
    /// `S = 2π ∫ ∂²_Lφ(E,0) (2/3)(2(E+u))^{3/2} dE`.
    pub fn second_moment(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Polytropic(p) => 2.0 * p.coefficients()[1] * self.moment(1, u),
            Kind::Custom(_) => {
                2.0 * PI
                    * u
                    * self.energy_integral(|t| {
                        let s = (2.0 * u * (1.0 - t)).max(0.0).sqrt();
                        self.d2_l_phi(-u * t) * 2.0 / 3.0 * s * s * s
                    })
            }
        }
    }
}

fn check_mu(mu: f64) -> Result<(), VlasovError> {
    if !mu.is_finite() || mu >= 1.0 {
        return Err(VlasovError::Ansatz(format!("mu must be below 1 for an integrable profile (got {mu})")));
    }
    Ok(())
}

/// G(u).
pub fn g_of_u(ansatz: &VlasovAnsatz, u: f64) -> f64 {
    ansatz.g(u)
}

/// w(κ, r, u).
pub fn w_eval(ansatz: &VlasovAnsatz, kappa: f64, r: f64, u: f64) -> Result<f64, VlasovError> {
    if !(r >= 0.0) {
        return Err(VlasovError::Domain(format!("cylindrical radius must be non-negative (got {r})")));
    }
    Ok(ansatz.w(kappa, r, u))
}

/// Radial kinetic equilibrium with `v_S = ∂v/∂S` and `v_a = ∂v/∂a` of the
/// family `v″ + (2/r)v′ + 4πS G(v) = 0`, `v(0) = a`.
#[derive(Debug, Clone, Serialize)]
pub struct VlasovStar {
    pub a: f64,
    pub radius: f64,
    pub mass: f64,
    pub mass_prime: f64,
    pub mu: f64,
    pub grid: RadialGrid,
    pub u0: Vec<f64>,
    pub u0p: Vec<f64>,
    pub rho0: Vec<f64>,
    #[serde(skip)]
    ansatz: VlasovAnsatz,
    #[serde(skip)]
    traj: Arc<Trajectory>,
    #[serde(skip)]
    r_start: f64,
    /// G(a), G′(a)
    #[serde(skip)]
    centre: (f64, f64),
}

fn vp_series(g: f64, dg: f64, a: f64, r: f64) -> [f64; 7] {
    let c = 2.0 * PI / 3.0;
    [
        a - c * g * r * r,
        -2.0 * c * g * r,
        2.0 * c * g * r * r * r,
        -c * g * r * r,
        -2.0 * c * g * r,
        1.0 - c * dg * r * r,
        -2.0 * c * dg * r,
    ]
}

pub fn solve_vp_radial(ansatz: &VlasovAnsatz, a: f64) -> Result<VlasovStar, VlasovError> {
    solve_vp_radial_with(ansatz, a, &RadialOptions::default())
}

pub fn solve_vp_radial_with(ansatz: &VlasovAnsatz, a: f64, opts: &RadialOptions) -> Result<VlasovStar, VlasovError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(VlasovError::Domain(format!("central value a must be positive (got {a})")));
    }
    if opts.n_grid < 2 {
        return Err(VlasovError::Domain("output grid needs at least 2 intervals".into()));
    }
    let g_c = ansatz.g(a);
    let dg_c = ansatz.g_prime(a);
    if !(g_c > 0.0) || !g_c.is_finite() {
        return Err(VlasovError::Domain(format!("G({a}) = {g_c} is not a positive density")));
    }
    let scale = (3.0 * a / (2.0 * PI * g_c)).sqrt();
    let r0 = opts.start_fraction * scale;
    let y0 = vp_series(g_c, dg_c, a, r0);
    let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
        let g = ansatz.g(y[0]);
        let dg = ansatz.g_prime(y[0]);
        dy[0] = y[1];
        dy[1] = -2.0 * y[1] / r - 4.0 * PI * g;
        dy[2] = 4.0 * PI * r * r * g;
        dy[3] = y[4];
        dy[4] = -2.0 * y[4] / r - 4.0 * PI * (dg * y[3] + g);
        dy[5] = y[6];
        dy[6] = -2.0 * y[6] / r - 4.0 * PI * dg * y[5];
    };
    let ev = |_: f64, y: &[f64]| y[0];
    let r_max = opts.r_max_factor * scale;
    let ode = OdeOptions { rtol: opts.rtol, atol: opts.atol * a, h0: Some(r0), ..Default::default() };
    let traj = match integrate_ivp(rhs, &y0, r0, Stop::Event { g: &ev, r_max, tol: 1e-14 * scale }, &ode) {
        Ok(t) => t,
        Err(NumericsError::NoEvent { r_max }) => return Err(VlasovError::Unbounded { a, r_max }),
        Err(e) => return Err(e.into()),
    };
    let radius = traj.event.expect("event integration reports the event");
    let end = traj.eval(radius);
    let mut star = VlasovStar {
        a,
        radius,
        mass: end[2],
        mass_prime: -radius * radius * end[6],
        mu: ansatz.mu,
        grid: RadialGrid::uniform(radius, opts.n_grid)?,
        u0: Vec::new(),
        u0p: Vec::new(),
        rho0: Vec::new(),
        ansatz: ansatz.clone(),
        traj: Arc::new(traj),
        r_start: r0,
        centre: (g_c, dg_c),
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

impl VlasovStar {
    pub fn ansatz(&self) -> &VlasovAnsatz {
        &self.ansatz
    }

    /// [v, v′, m, v_S, v_S′, v_a, v_a′] at `r ∈ [0, R]`.
    pub fn state_at(&self, r: f64) -> [f64; 7] {
        if r < self.r_start {
            return vp_series(self.centre.0, self.centre.1, self.a, r);
        }
        let mut out = [0.0; 7];
        self.traj.eval_into(r.min(self.radius), &mut out);
        out
    }

    /// U₀(r), continued harmonically outside: `U₀′(R)R(1 − R/r)`.
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

    pub fn rho0_at(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        self.ansatz.g(self.state_at(r)[0])
    }

    pub fn drho0_at(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        let s = self.state_at(r);
        self.ansatz.g_prime(s[0]) * s[1]
    }

    pub fn u0p_over_r(&self, r: f64) -> f64 {
        if r < self.r_start {
            return -4.0 * PI / 3.0 * self.centre.0;
        }
        self.u0p_at(r) / r
    }

    pub fn central_density(&self) -> f64 {
        self.centre.0
    }

    /// v_S and v_S′.
    pub fn vs_at(&self, r: f64) -> (f64, f64) {
        let s = self.state_at(r);
        (s[3], s[4])
    }

    /// R²U₀′(R) + M, relative to M.
    pub fn flux_residual(&self) -> f64 {
        let s = self.state_at(self.radius);
        (self.radius * self.radius * s[1] + self.mass).abs() / self.mass
    }
}

impl RadialBase for VlasovStar {
    fn radius(&self) -> f64 {
        self.radius
    }
    fn mass(&self) -> f64 {
        self.mass
    }
    fn du_over_r(&self, r: f64) -> f64 {
        self.u0p_over_r(r)
    }
    fn rho(&self, r: f64) -> f64 {
        self.rho0_at(r)
    }
    fn drho(&self, r: f64) -> f64 {
        self.drho0_at(r)
    }
    fn rank_one_profile(&self, r: f64) -> f64 {
        self.u0_at(r) - self.a
    }
    fn describe(&self) -> String {
        format!("kinetic model, mu = {:.4}, M = {:.6e}", self.mu, self.mass)
    }
}

/// Residuals of the scaling identities of the `S`-derivative.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VsIdentities {
    /// max |r v′ − 2 v_S| over the sample radii
    pub scaling: f64,
    /// |2 v_S′(R) + v′(R)|
    pub boundary: f64,
}

pub fn vs_identities(star: &VlasovStar, n: usize) -> VsIdentities {
    let n = n.max(2);
    let mut scaling = 0.0_f64;
    for i in 0..=n {
        let r = star.radius * i as f64 / n as f64;
        let s = star.state_at(r);
        scaling = scaling.max((r * s[1] - 2.0 * s[3]).abs());
    }
    let s = star.state_at(star.radius);
    VsIdentities { scaling, boundary: (2.0 * s[4] + s[1]).abs() }
}

/// Sup-difference of `ρ/ρ(0)` against `r/R` between the kinetic star and the
/// fluid star with `γ = 1 + (3/2 − μ)⁻¹`, both with central value `a`.
pub fn polytropic_equivalence(mu: f64, a: f64, n: usize) -> Result<f64, VlasovError> {
    let ans = VlasovAnsatz::polytropic(mu, Psi::Constant(1.0))?;
    let vp = solve_vp_radial(&ans, a)?;
    let ep = solve_radial(&power_law(ans.effective_gamma()).map_err(RadialError::from)?, a)?;
    let (c_vp, c_ep) = (vp.rho0_at(0.0), ep.rho0_at(0.0));
    let mut worst = 0.0_f64;
    for i in 0..=n {
        let x = i as f64 / n as f64;
        let d = vp.rho0_at(x * vp.radius) / c_vp - ep.rho0_at(x * ep.radius) / c_ep;
        worst = worst.max(d.abs());
    }
    Ok(worst)
}

/// Harmonic blocks `l = 0..=l_max` of the kinetic linearized operator.
pub fn assemble_l_vp(star: &VlasovStar, l_max: usize, opts: &LinopOptions) -> Result<Vec<ModeOperator>, VlasovError> {
    Ok(assemble_modes(star, l_max, opts)?)
}

struct KineticDensity<'a> {
    star: &'a VlasovStar,
    kappa: f64,
}

impl PulledDensity for KineticDensity<'_> {
    fn radius(&self) -> f64 {
        self.star.radius
    }
    fn value(&self, r: f64, rc: f64) -> f64 {
        self.star.ansatz.w(self.kappa, rc, self.star.u0_at(r))
    }
    fn material(&self, r: f64, rc: f64) -> f64 {
        self.star.ansatz.w_u(self.kappa, rc, self.star.u0_at(r)) * self.star.u0p_at(r)
    }
}

/// A fixed density `σ(r, r_c)` in undeformed coordinates.
struct FixedDensity<'a, F: Fn(f64, f64) -> f64 + Sync> {
    radius: f64,
    f: &'a F,
}

impl<F: Fn(f64, f64) -> f64 + Sync> PulledDensity for FixedDensity<'_, F> {
    fn radius(&self) -> f64 {
        self.radius
    }
    fn value(&self, r: f64, rc: f64) -> f64 {
        (self.f)(r, rc)
    }
    fn material(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// `∂σ F(0,0)` for a density variation `σ`:
/// `∫σ(1/|x−y| − 1/|y|)dy − (∫σ/M)(U₀(x) − U₀(0))`.
fn density_response(
    star: &VlasovStar,
    grid: FieldGrid,
    sigma: &(dyn Fn(f64, f64) -> f64 + Sync),
    opts: &PotentialOptions,
) -> Result<DeformationField, VlasovError> {
    let zero = DeformationField::zeros(grid);
    let plan = Plan::build(&zero, &FixedDensity { radius: star.radius, f: &sigma }, opts, MassForm::Ray, false)
        .map_err(RotatingError::from)?;
    let ratio = plan.mass_integral / star.mass;
    let vals = plan.nodes.iter().map(|nd| nd.pot - ratio * (star.u0_at(nd.r) - star.a)).collect();
    Ok(DeformationField::from_values(grid, vals).map_err(RotatingError::from)?)
}

/// `∂F/∂κ(0,0)` at the nodes of `grid`, from a quadrature of `∂_κ w`.
pub fn vp_first_order_forcing(
    star: &VlasovStar,
    grid: FieldGrid,
    opts: &PotentialOptions,
) -> Result<DeformationField, VlasovError> {
    let ans = &star.ansatz;
    density_response(star, grid, &|r, rc| ans.d_kappa_w_at_zero(rc, star.u0_at(r)), opts)
}

/// `∂²F/∂κ²(0,0)` at the nodes of `grid`.
pub fn vp_second_order_forcing(
    star: &VlasovStar,
    grid: FieldGrid,
    opts: &PotentialOptions,
) -> Result<DeformationField, VlasovError> {
    let ans = &star.ansatz;
    density_response(star, grid, &|r, rc| rc * rc * ans.second_moment(star.u0_at(r)), opts)
}

/// `Y_l0` coefficient of `∂²F/∂κ²(0,0)` at radius `r`, with the density
/// variation `r_c² S(U₀)` split into harmonics of `sin²θ`.
fn second_order_mode(star: &VlasovStar, l: usize, r: f64, n_angle: usize, rule: &GaussRule) -> f64 {
    let ang = project_mode(l, n_angle, |mu| 1.0 - mu * mu);
    if ang.abs() < 1e-14 {
        return 0.0;
    }
    let big_r = star.radius;
    let s_of = |s: f64| s * s * star.ansatz.second_moment(star.u0_at(s)) * ang;
    let kern = |s: f64| {
        let (lo, hi) = if s < r { (s, r) } else { (r, s) };
        lo.powi(l as i32) / hi.powi(l as i32 + 1)
    };
    let mut pot = 0.0;
    let r_in = r.min(big_r);
    for (a, b) in [(0.0, r_in), (r_in, big_r)] {
        if b <= a {
            continue;
        }
        // clustered toward b, where either the kink or the surface sits
        for (x, w) in rule.x.iter().zip(&rule.w) {
            let sigma = 0.5 * (1.0 + x);
            let s = b - (b - a) * (1.0 - sigma).powi(3);
            let ws = 0.5 * w * (b - a) * 3.0 * (1.0 - sigma).powi(2);
            pot += ws * kern(s) * s_of(s) * s * s;
        }
    }
    let mut val = 4.0 * PI / (2 * l + 1) as f64 * pot;
    if l == 0 {
        let mut inv = 0.0;
        let mut mass = 0.0;
        for (x, w) in rule.x.iter().zip(&rule.w) {
            let sigma = 0.5 * (1.0 + x);
            let s = big_r - big_r * (1.0 - sigma).powi(3);
            let ws = 0.5 * w * big_r * 3.0 * (1.0 - sigma).powi(2);
            inv += ws * s_of(s) * s;
            mass += ws * s_of(s) * s * s;
        }
        // ∫σ dy = √(4π) ∫σ₀ s² ds; radial U₀ − U₀(0) has coefficient √(4π)(U₀ − a)
        let total = (4.0 * PI).sqrt() * mass;
        val -= 4.0 * PI * inv + total / star.mass * (4.0 * PI).sqrt() * (star.u0_at(r) - star.a);
    }
    val
}

/// Leading rotational response. `∂F/∂κ(0,0)` vanishes because `∂_Lφ(E,0) = 0`,
/// so the shape is `ζ ≈ −(κ²/2) L⁻¹ ∂²F/∂κ²(0,0)` (reported with
/// `scale = κ²/2`).
pub fn vp_rotation_response(star: &VlasovStar, kappa: f64, opts: &ShapeOptions) -> Result<ShapeReport, VlasovError> {
    let rule = GaussRule::new(64);
    let n = opts.n_angle;
    let forcing = |l: usize, r: f64| second_order_mode(star, l, r, n, &rule);
    let (grid, solved) = solve_modes(star, &forcing, opts)?;
    Ok(shape_from_modes(star.radius, kappa, 0.5 * kappa * kappa, grid, solved))
}

struct KineticProblem<'a> {
    star: &'a VlasovStar,
    opts: PotentialOptions,
}

impl KineticProblem<'_> {
    fn lin(&self, zeta: &DeformationField, kappa: f64, jac: bool) -> Result<Linearization, RotatingError> {
        let star = self.star;
        let plan = Plan::build(zeta, &KineticDensity { star, kappa }, &self.opts, MassForm::Ray, jac)?;
        let m = star.mass;
        let big_m = plan.mass_integral;
        let n = plan.nodes.len();
        let residual: Vec<f64> = plan.nodes.iter().map(|nd| -star.u0_at(nd.r) + star.a + m / big_m * nd.pot).collect();
        let jacobian = if jac {
            let mass_row = plan.mass_row.as_ref().expect("rows requested");
            let mut a = vec![0.0; n * n];
            for (i, nd) in plan.nodes.iter().enumerate() {
                let row = nd.row.as_ref().expect("rows requested");
                let out = &mut a[i * n..(i + 1) * n];
                let c = m * nd.pot / (big_m * big_m);
                for k in 0..n {
                    out[k] = m / big_m * row[k] - c * mass_row[k];
                }
                out[i] += m / big_m * nd.dpot_dt / nd.r;
            }
            Some(crate::numerics::DenseMatrix::from_row_major(n, n, a)?)
        } else {
            None
        };
        Ok(Linearization { kappa, residual, jacobian, d_kappa: vec![0.0; n], mass_factor: big_m, plan })
    }
}

impl SteadyProblem for KineticProblem<'_> {
    fn radius(&self) -> f64 {
        self.star.radius
    }
    fn linearize(&self, zeta: &DeformationField, kappa: f64, jac: bool) -> Result<Linearization, RotatingError> {
        self.lin(zeta, kappa, jac)
    }
    fn tangent_available(&self) -> bool {
        false
    }
}

/// `F(ζ, κ)` of the kinetic model at the nodes of ζ's grid.
pub fn vp_evaluate_f(
    star: &VlasovStar,
    zeta: &DeformationField,
    kappa: f64,
    opts: &PotentialOptions,
) -> Result<DeformationField, VlasovError> {
    let lin = KineticProblem { star, opts: *opts }.lin(zeta, kappa, false)?;
    Ok(DeformationField::from_values(*zeta.grid(), lin.residual).map_err(RotatingError::from)?)
}

/// `∂F/∂ζ(ζ, κ) ξ` of the kinetic model.
pub fn vp_frechet_apply(
    star: &VlasovStar,
    zeta: &DeformationField,
    kappa: f64,
    xi: &DeformationField,
    opts: &PotentialOptions,
) -> Result<DeformationField, VlasovError> {
    if xi.grid() != zeta.grid() {
        return Err(RotatingError::from(crate::dilation::DilationError::GridMismatch).into());
    }
    let lin = KineticProblem { star, opts: *opts }.lin(zeta, kappa, true)?;
    let v = lin.jacobian.expect("requested").matvec(xi.values()).map_err(RotatingError::from)?;
    Ok(DeformationField::from_values(*zeta.grid(), v).map_err(RotatingError::from)?)
}

/// Newton continuation of the kinetic model through `kappa_targets`.
pub fn vp_newton(star: &VlasovStar, kappa_targets: &[f64], opts: &NewtonOptions) -> Result<Continuation, VlasovError> {
    let problem = KineticProblem { star, opts: opts.potential };
    let fine = BallRule { n_r: 2 * opts.potential.n_ball, n_mu: 2 * opts.potential.n_mu, power: opts.potential.power };
    let mass = |lin: &Linearization| -> Result<f64, RotatingError> { kinetic_mass(star, lin, &fine) };
    Ok(continue_problem(&problem, kappa_targets, opts, &mass)?)
}

/// `(M/𝓜) ∫ w(κ, r(y), U₀(g⁻¹y)) dy` over the deformed body with a finer rule.
fn kinetic_mass(star: &VlasovStar, lin: &Linearization, rule: &BallRule) -> Result<f64, RotatingError> {
    let map = &lin.plan.map;
    let kappa = lin.kappa;
    let mut err = None;
    let total = rule.integrate(
        |t| map.image_radius(star.radius, t),
        |y, t| match map.invert_radius(y, t) {
            Ok(r) => star.ansatz.w(kappa, y * t.sin(), star.u0_at(r.min(star.radius))),
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
    );
    match err {
        Some(e) => Err(e.into()),
        None => Ok(star.mass / lin.mass_factor * total),
    }
}
