//! Slowly rotating fluid equilibria.
//!
//! The steady problem is written as `F(ζ, κ) = 0` for the deformation ζ of
//! the radial star:
//!
//! ```text
//! F(ζ,κ)(x) = 𝓜(ζ) ∫ ρ₀(g⁻¹y) (1/|g(x)−y| − 1/|y|) dy
//!           + κ J(r_c(g(x))) − h(𝓜(ζ)ρ₀(x)) + h(𝓜(ζ)ρ₀(0))
//! ```
//!
//! with `J(r) = ∫₀^r ω²(s) s ds` and `r_c` the distance to the rotation axis.
//! The first-order shape comes from the harmonic blocks of the linearized
//! operator; the nonlinear problem is collocated at the nodes of a coarse
//! deformation field and continued in κ by Newton's method.

use crate::dilation::{DeformationField, DilationError, FieldGrid, EPS0};
use crate::engine::{project_mode, MassForm, Plan, PulledDensity};
use crate::eos::RotationProfile;
use crate::linop::{assemble_mode, LinopError, LinopOptions, ModeOperator, PanelGrid, RadialBase};
use crate::numerics::{legendre_p, sup_norm, y_l0, DenseMatrix, Lu, NumericsError};
use crate::radial::RadialStar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

pub use crate::engine::PotentialOptions;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotatingError {
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error(transparent)]
    Dilation(#[from] DilationError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("deformation cap reached at kappa = {kappa:.4e} (||zeta||_X = {norm:.4e}, cap {cap})")]
    DeformationCap { kappa: f64, norm: f64, cap: f64 },
    #[error("Newton iteration failed at kappa = {kappa:.4e}; residual history {residuals:?}")]
    Divergence { kappa: f64, residuals: Vec<f64> },
}

/// `J(r sin θ)` at the nodes of `grid`.
pub fn centrifugal_rhs(profile: &RotationProfile, grid: &FieldGrid) -> DeformationField {
    DeformationField::from_fn(*grid, |r, t| profile.cumulative(r * t.sin()))
        .expect("rotation profile is finite on the grid")
}

/// Coefficient of `Y_l0` in `J(r sin θ)` at radius `r`, by `n`-point Gauss
/// quadrature in `cos θ`.
pub fn centrifugal_mode(profile: &RotationProfile, l: usize, r: f64, n: usize) -> f64 {
    project_mode(l, n, |mu| profile.cumulative(r * (1.0 - mu * mu).max(0.0).sqrt()))
}

/// Settings of the first-order shape computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeOptions {
    pub linop: LinopOptions,
    /// highest harmonic solved for
    pub l_max: usize,
    /// Gauss nodes of the angular projection
    pub n_angle: usize,
}

impl Default for ShapeOptions {
    fn default() -> Self {
        // high-order panels: the low default order only serves degeneracy detection
        Self { linop: LinopOptions { panel_order: 6, ..LinopOptions::default() }, l_max: 8, n_angle: 48 }
    }
}

/// Boundary trace of one harmonic of the first-order deformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeTrace {
    pub l: usize,
    /// ξ_l(R)
    pub value: f64,
}

/// First-order deformation `ζ ≈ scale·Σ ξ_l(r) Y_l0(θ)` and the boundary it
/// predicts. For the fluid `scale = κ`; for the kinetic model `scale = κ²`.
#[derive(Debug, Clone, Serialize)]
pub struct ShapeReport {
    pub radius: f64,
    pub kappa: f64,
    /// multiplier of ξ at this κ
    pub scale: f64,
    pub xi_l: Vec<ModeTrace>,
    pub equatorial_radius: f64,
    pub polar_radius: f64,
    #[serde(skip)]
    pub grid: Arc<PanelGrid>,
    /// nodal profiles ξ_l on `grid`, index-aligned with `xi_l`
    #[serde(skip)]
    pub modes: Vec<Vec<f64>>,
}

impl ShapeReport {
    /// Boundary displacement per unit `scale` at polar angle θ: `ξ(R, θ)/R`.
    pub fn displacement(&self, theta: f64) -> f64 {
        self.xi_l.iter().map(|m| m.value * y_l0(m.l, theta)).sum::<f64>() / self.radius
    }

    /// `(R_eq − R_pole)/scale`.
    pub fn oblateness_slope(&self) -> f64 {
        self.displacement(PI / 2.0) - self.displacement(0.0)
    }

    pub fn trace(&self, l: usize) -> f64 {
        self.xi_l.iter().find(|m| m.l == l).map_or(0.0, |m| m.value)
    }

    /// ξ(r, θ) per unit scale, from the panel interpolants.
    pub fn value(&self, r: f64, theta: f64) -> f64 {
        self.xi_l
            .iter()
            .zip(&self.modes)
            .map(|(m, v)| self.grid.interpolate(v, r.min(self.radius)) * y_l0(m.l, theta))
            .sum()
    }

    /// The first-order deformation per unit scale sampled on a field grid.
    pub fn field(&self, grid: FieldGrid) -> Result<DeformationField, DilationError> {
        DeformationField::from_fn(grid, |r, t| self.value(r, t))
    }
}

/// Solves `L_l ξ_l = −f_l` for every even `l ≤ l_max` with a non-zero forcing.
pub(crate) fn solve_modes(
    base: &dyn RadialBase,
    forcing: &(dyn Fn(usize, f64) -> f64 + Sync),
    opts: &ShapeOptions,
) -> Result<(Arc<PanelGrid>, Vec<(usize, Vec<f64>)>), LinopError> {
    let ls: Vec<usize> = (0..=opts.l_max).step_by(2).collect();
    let solved: Result<Vec<Option<(usize, Vec<f64>, Arc<PanelGrid>)>>, LinopError> = ls
        .par_iter()
        .map(|&l| {
            let op: ModeOperator = assemble_mode(base, l, &opts.linop)?;
            let rhs: Vec<f64> = op.nodes().iter().map(|&r| -forcing(l, r)).collect();
            let scale = sup_norm(&rhs);
            // a block without forcing (up to roundoff of the projection) stays exactly zero
            if scale <= 1e-13 * forcing_scale(base, forcing, opts) {
                return Ok(None);
            }
            let xi = op.solve(&rhs)?;
            Ok(Some((l, xi, op.grid.clone())))
        })
        .collect();
    let solved = solved?;
    let grid = match solved.iter().flatten().next() {
        Some((_, _, g)) => g.clone(),
        None => assemble_mode(base, 0, &opts.linop)?.grid.clone(),
    };
    Ok((grid, solved.into_iter().flatten().map(|(l, x, _)| (l, x)).collect()))
}

fn forcing_scale(base: &dyn RadialBase, forcing: &(dyn Fn(usize, f64) -> f64 + Sync), opts: &ShapeOptions) -> f64 {
    let r = base.radius();
    (0..=opts.l_max)
        .step_by(2)
        .map(|l| forcing(l, r).abs().max(forcing(l, 0.5 * r).abs()))
        .fold(f64::MIN_POSITIVE, f64::max)
}

pub(crate) fn shape_from_modes(
    radius: f64,
    kappa: f64,
    scale: f64,
    grid: Arc<PanelGrid>,
    solved: Vec<(usize, Vec<f64>)>,
) -> ShapeReport {
    let xi_l = solved.iter().map(|(l, v)| ModeTrace { l: *l, value: grid.interpolate(v, radius) }).collect();
    let modes = solved.into_iter().map(|(_, v)| v).collect();
    let mut rep = ShapeReport { radius, kappa, scale, xi_l, equatorial_radius: radius, polar_radius: radius, grid, modes };
    rep.equatorial_radius = radius + scale * rep.displacement(PI / 2.0);
    rep.polar_radius = radius + scale * rep.displacement(0.0);
    rep
}

/// First-order shape `ζ ≈ −κ L⁻¹ ∂F/∂κ(0,0)`, solved harmonic by harmonic.
pub fn first_order_shape(
    star: &RadialStar,
    profile: &RotationProfile,
    kappa: f64,
    opts: &ShapeOptions,
) -> Result<ShapeReport, RotatingError> {
    let n = opts.n_angle;
    let forcing = |l: usize, r: f64| centrifugal_mode(profile, l, r, n);
    let (grid, solved) = solve_modes(star, &forcing, opts)?;
    Ok(shape_from_modes(star.radius, kappa, kappa, grid, solved))
}

/// For constant ω the l = 2 trace obeys `ξ₂(R) ≤ R·f/u₀′(R)` with
/// `f = (2/3)√(π/5)·ω²R²`, because the potential part of the block is
/// non-negative.
pub fn l2_trace_bound(star: &RadialStar, omega_sq: f64) -> f64 {
    let r = star.radius;
    r * (2.0 / 3.0) * (PI / 5.0).sqrt() * omega_sq * r * r / star.u0p_at(r)
}

struct FluidDensity<'a>(&'a RadialStar);

impl PulledDensity for FluidDensity<'_> {
    fn radius(&self) -> f64 {
        self.0.radius
    }
    fn value(&self, r: f64, _: f64) -> f64 {
        self.0.rho0_at(r)
    }
    fn material(&self, r: f64, _: f64) -> f64 {
        self.0.drho0_at(r)
    }
}

/// Residual and (optionally) Jacobian at one (ζ, κ).
pub(crate) struct Linearization {
    pub kappa: f64,
    pub residual: Vec<f64>,
    pub jacobian: Option<DenseMatrix>,
    /// ∂F/∂κ at the nodes
    pub d_kappa: Vec<f64>,
    pub mass_factor: f64,
    pub plan: Plan,
}

fn linearize(
    star: &RadialStar,
    profile: &RotationProfile,
    zeta: &DeformationField,
    kappa: f64,
    opts: &PotentialOptions,
    with_jacobian: bool,
) -> Result<Linearization, RotatingError> {
    let plan = Plan::build(zeta, &FluidDensity(star), opts, MassForm::Trace, with_jacobian)?;
    let eos = star.eos();
    let m = star.mass;
    let mf = m / plan.mass_integral;
    let rho_c = star.central_density();
    let h_c = eos.enthalpy(mf * rho_c);
    let n = plan.nodes.len();
    let mut residual = Vec::with_capacity(n);
    let mut d_kappa = Vec::with_capacity(n);
    for nd in &plan.nodes {
        let rc = nd.t * nd.theta.sin();
        let j = profile.cumulative(rc);
        residual.push(mf * nd.pot + kappa * j - eos.enthalpy(mf * star.rho0_at(nd.r)) + h_c);
        d_kappa.push(j);
    }
    let jacobian = if with_jacobian {
        let mass_row = plan.mass_row.as_ref().expect("rows requested");
        // δ𝓜 = −M/I² δI
        let dm: Vec<f64> = mass_row.iter().map(|v| -m / plan.mass_integral.powi(2) * v).collect();
        let dp_c = eos.dp(mf * rho_c);
        let mut a = vec![0.0; n * n];
        for (i, nd) in plan.nodes.iter().enumerate() {
            let row = nd.row.as_ref().expect("rows requested");
            let f3 = (-eos.dp(mf * star.rho0_at(nd.r)) + dp_c) / mf;
            let coef = nd.pot + f3;
            let out = &mut a[i * n..(i + 1) * n];
            for k in 0..n {
                out[k] = coef * dm[k] + mf * row[k];
            }
            // moving evaluation point: δt = ξ(x)/|x|
            let sin = nd.theta.sin();
            let rc = nd.t * sin;
            out[i] += (mf * nd.dpot_dt + kappa * profile.omega_sq(rc) * rc * sin) / nd.r;
        }
        Some(DenseMatrix::from_row_major(n, n, a)?)
    } else {
        None
    };
    Ok(Linearization { kappa, residual, jacobian, d_kappa, mass_factor: mf, plan })
}

/// `F(ζ, κ)` at the nodes of ζ's grid (whose domain must be the star's ball).
pub fn evaluate_f(
    star: &RadialStar,
    profile: &RotationProfile,
    zeta: &DeformationField,
    kappa: f64,
    opts: &PotentialOptions,
) -> Result<DeformationField, RotatingError> {
    let lin = linearize(star, profile, zeta, kappa, opts, false)?;
    Ok(DeformationField::from_values(*zeta.grid(), lin.residual)?)
}

/// The derivative `∂F/∂ζ(ζ, κ)` as a matrix on nodal values.
pub fn jacobian(
    star: &RadialStar,
    profile: &RotationProfile,
    zeta: &DeformationField,
    kappa: f64,
    opts: &PotentialOptions,
) -> Result<DenseMatrix, RotatingError> {
    Ok(linearize(star, profile, zeta, kappa, opts, true)?.jacobian.expect("requested"))
}

/// `∂F/∂ζ(ζ, κ) ξ` at the nodes.
pub fn frechet_apply(
    star: &RadialStar,
    profile: &RotationProfile,
    zeta: &DeformationField,
    kappa: f64,
    xi: &DeformationField,
    opts: &PotentialOptions,
) -> Result<DeformationField, RotatingError> {
    if xi.grid() != zeta.grid() {
        return Err(DilationError::GridMismatch.into());
    }
    let jac = jacobian(star, profile, zeta, kappa, opts)?;
    Ok(DeformationField::from_values(*zeta.grid(), jac.matvec(xi.values())?)?)
}

/// Newton continuation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// sup-norm residual tolerance
    pub tol: f64,
    /// iterations before the κ-step is halved
    pub max_iter: usize,
    /// largest κ increment
    pub max_step: f64,
    /// smallest κ increment before giving up
    pub min_step: f64,
    pub n_r: usize,
    pub n_theta: usize,
    /// cap on ‖ζ‖_X
    pub cap: f64,
    pub potential: PotentialOptions,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 8,
            max_step: 0.05,
            min_step: 1e-7,
            n_r: 16,
            n_theta: 6,
            cap: EPS0,
            potential: PotentialOptions::default(),
        }
    }
}

/// One accepted point of a continuation curve.
#[derive(Debug, Clone, Serialize)]
pub struct RotatingSolution {
    pub kappa: f64,
    #[serde(skip)]
    pub zeta: DeformationField,
    pub x_norm: f64,
    pub mass_factor: f64,
    /// ∫ρ_κ computed in the deformed domain
    pub mass_check: f64,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub newton_iters: usize,
    pub equatorial_radius: f64,
    pub polar_radius: f64,
}

/// Why a continuation stopped before its last target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StopReason {
    DeformationCap { kappa: f64, norm: f64 },
    Divergence { kappa: f64, residuals: Vec<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct Continuation {
    pub solutions: Vec<RotatingSolution>,
    pub stop: Option<StopReason>,
}

/// Problem-specific hooks used by the shared continuation driver.
pub(crate) trait SteadyProblem: Sync {
    fn radius(&self) -> f64;
    fn linearize(&self, zeta: &DeformationField, kappa: f64, jac: bool) -> Result<Linearization, RotatingError>;
    /// `∂F/∂κ` is only used as a predictor; problems where it vanishes use
    /// a secant instead.
    fn tangent_available(&self) -> bool {
        true
    }
}

struct FluidProblem<'a> {
    star: &'a RadialStar,
    profile: &'a RotationProfile,
    opts: PotentialOptions,
}

impl SteadyProblem for FluidProblem<'_> {
    fn radius(&self) -> f64 {
        self.star.radius
    }
    fn linearize(&self, zeta: &DeformationField, kappa: f64, jac: bool) -> Result<Linearization, RotatingError> {
        linearize(self.star, self.profile, zeta, kappa, &self.opts, jac)
    }
}

enum Attempt {
    Converged { zeta: DeformationField, lin: Box<Linearization>, history: Vec<f64>, iters: usize },
    Failed(Vec<f64>),
}

fn newton_at(
    problem: &dyn SteadyProblem,
    start: DeformationField,
    kappa: f64,
    opts: &NewtonOptions,
) -> Result<Attempt, RotatingError> {
    let mut zeta = start;
    let mut history = Vec::new();
    for it in 0..=opts.max_iter {
        let lin = problem.linearize(&zeta, kappa, true)?;
        let res = sup_norm(&lin.residual);
        history.push(res);
        if !res.is_finite() {
            return Ok(Attempt::Failed(history));
        }
        if res < opts.tol {
            return Ok(Attempt::Converged { zeta, lin: Box::new(lin), history, iters: it });
        }
        if it == opts.max_iter {
            break;
        }
        let jac = lin.jacobian.as_ref().expect("requested");
        let lu = match Lu::new(jac) {
            Ok(lu) => lu,
            Err(_) => return Ok(Attempt::Failed(history)),
        };
        let rhs: Vec<f64> = lin.residual.iter().map(|v| -v).collect();
        let step = lu.solve(&rhs)?;
        let next = DeformationField::from_values(*zeta.grid(), zeta.values().iter().zip(&step).map(|(a, b)| a + b).collect())?;
        let norm = next.x_norm();
        if !(norm < opts.cap) {
            return Err(RotatingError::DeformationCap { kappa, norm, cap: opts.cap });
        }
        zeta = next;
    }
    Ok(Attempt::Failed(history))
}

fn solution_from(
    problem: &dyn SteadyProblem,
    kappa: f64,
    zeta: DeformationField,
    lin: &Linearization,
    history: Vec<f64>,
    iters: usize,
    physical_mass: &dyn Fn(&Linearization) -> Result<f64, RotatingError>,
) -> Result<RotatingSolution, RotatingError> {
    let map = &lin.plan.map;
    let r = problem.radius();
    Ok(RotatingSolution {
        kappa,
        x_norm: map.x_norm(),
        mass_factor: lin.mass_factor,
        mass_check: physical_mass(lin)?,
        residual: *history.last().unwrap_or(&0.0),
        residual_history: history,
        newton_iters: iters,
        equatorial_radius: map.image_radius(r, PI / 2.0),
        polar_radius: map.image_radius(r, 0.0),
        zeta,
    })
}

/// Shared continuation driver: walks through `targets` in order, halving the
/// κ-step whenever Newton needs more than `max_iter` iterations.
pub(crate) fn continue_problem(
    problem: &dyn SteadyProblem,
    targets: &[f64],
    opts: &NewtonOptions,
    physical_mass: &dyn Fn(&Linearization) -> Result<f64, RotatingError>,
) -> Result<Continuation, RotatingError> {
    if !(opts.tol > 0.0) || !(opts.max_step > 0.0) || !(opts.min_step > 0.0) || opts.max_iter == 0 {
        return Err(RotatingError::Domain("Newton options need positive tol, steps and iteration budget".into()));
    }
    let grid = FieldGrid::new(opts.n_r, opts.n_theta, problem.radius())?;
    let mut zeta = DeformationField::zeros(grid);
    let mut kappa = 0.0;
    // previous accepted (κ, ζ) for the secant predictor
    let mut prev: Option<(f64, DeformationField)> = None;
    let mut tangent: Option<Vec<f64>> = None;
    let mut solutions = Vec::new();
    let mut step = opts.max_step;
    for &target in targets {
        loop {
            let gap = target - kappa;
            let done_here = gap == 0.0 && (!solutions.is_empty() || target == 0.0);
            let h = gap.abs().min(step).copysign(gap);
            let next_kappa = if gap.abs() <= step { target } else { kappa + h };
            let predictor = match (&tangent, &prev) {
                (Some(t), _) => {
                    let v = zeta.values().iter().zip(t).map(|(z, d)| z + (next_kappa - kappa) * d).collect();
                    DeformationField::from_values(grid, v)?
                }
                (None, Some((k0, z0))) if *k0 != kappa => {
                    let s = (next_kappa - kappa) / (kappa - k0);
                    zeta.axpy(s, &zeta.axpy(-1.0, z0)?)?
                }
                _ => zeta.clone(),
            };
            let predictor = if predictor.x_norm() < opts.cap { predictor } else { zeta.clone() };
            let attempt = match newton_at(problem, predictor, next_kappa, opts) {
                Ok(a) => a,
                Err(RotatingError::DeformationCap { kappa, norm, .. }) => {
                    return Ok(Continuation { solutions, stop: Some(StopReason::DeformationCap { kappa, norm }) });
                }
                Err(e) => return Err(e),
            };
            match attempt {
                Attempt::Converged { zeta: z, lin, history, iters } => {
                    if problem.tangent_available() {
                        let jac = lin.jacobian.as_ref().expect("requested");
                        tangent = Lu::new(jac)
                            .and_then(|lu| lu.solve(&lin.d_kappa.iter().map(|v| -v).collect::<Vec<_>>()))
                            .ok();
                    }
                    prev = Some((kappa, zeta.clone()));
                    kappa = next_kappa;
                    zeta = z.clone();
                    if kappa == target {
                        solutions.push(solution_from(problem, kappa, z, &lin, history, iters, physical_mass)?);
                        step = (2.0 * step).min(opts.max_step);
                        break;
                    }
                    step = (2.0 * step).min(opts.max_step);
                }
                Attempt::Failed(residuals) => {
                    step *= 0.5;
                    if step < opts.min_step {
                        return Ok(Continuation {
                            solutions,
                            stop: Some(StopReason::Divergence { kappa: next_kappa, residuals }),
                        });
                    }
                }
            }
            if done_here {
                break;
            }
        }
    }
    Ok(Continuation { solutions, stop: None })
}

/// Newton continuation of the rotating fluid body through `kappa_targets`.
pub fn newton_continue(
    star: &RadialStar,
    profile: &RotationProfile,
    kappa_targets: &[f64],
    opts: &NewtonOptions,
) -> Result<Continuation, RotatingError> {
    let problem = FluidProblem { star, profile, opts: opts.potential };
    let ball = opts.potential.ball();
    let mass = |lin: &Linearization| -> Result<f64, RotatingError> {
        Ok(lin.plan.map.physical_mass(star, lin.mass_factor, &ball)?)
    };
    continue_problem(&problem, kappa_targets, opts, &mass)
}

/// Coefficient of `Y_l0` of a nodal field at radius `r`, using the field's
/// interpolant on `n` Gauss nodes in `cos θ`.
pub fn field_mode(field: &DeformationField, l: usize, r: f64, n: usize) -> f64 {
    project_mode(l, n, |mu| field.value(r, mu.clamp(-1.0, 1.0).acos()))
}

/// `P_l(cos θ)` helper re-exported for shape tables.
pub fn legendre(l: usize, theta: f64) -> f64 {
    legendre_p(l, theta.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::power_law;
    use crate::linop::assemble_mode;
    use crate::radial::solve_radial;

    fn star(gamma: f64) -> RadialStar {
        solve_radial(&power_law(gamma).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn rigid_forcing_modes() {
        let prof = RotationProfile::rigid(1.0);
        let grid = FieldGrid::new(8, 5, 2.0).unwrap();
        let f = centrifugal_rhs(&prof, &grid);
        for ((r, t), v) in grid.nodes().into_iter().zip(f.values()) {
            assert!((v - 0.5 * (r * t.sin()).powi(2)).abs() < 1e-14);
        }
        for r in [0.3, 1.0, 2.5] {
            let c0 = (2.0 / 3.0) * PI.sqrt() * r * r;
            let c2 = -(2.0 / 3.0) * (PI / 5.0).sqrt() * r * r;
            assert!((centrifugal_mode(&prof, 0, r, 32) - c0).abs() < 1e-12);
            assert!((centrifugal_mode(&prof, 2, r, 32) - c2).abs() < 1e-12);
            assert!(centrifugal_mode(&prof, 4, r, 32).abs() < 1e-13);
        }
        let zero = RotationProfile::rigid(0.0);
        assert!(centrifugal_rhs(&zero, &grid).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn power_profile_projection_converges() {
        let prof = RotationProfile::Power { c: 1.0, k: 2.0 };
        assert!((prof.cumulative(1.3) - 1.3f64.powi(4) / 4.0).abs() < 1e-12);
        for l in [0, 2, 4] {
            let a = centrifugal_mode(&prof, l, 1.1, 24);
            let b = centrifugal_mode(&prof, l, 1.1, 96);
            assert!((a - b).abs() < 1e-10, "l={l}: {a} vs {b}");
        }
    }

    #[test]
    fn residual_vanishes_on_radial_star() {
        let s = star(1.5);
        let prof = RotationProfile::rigid(1.0);
        let grid = FieldGrid::standard(s.radius).unwrap();
        let f = evaluate_f(&s, &prof, &DeformationField::zeros(grid), 0.0, &PotentialOptions::default()).unwrap();
        assert!(sup_norm(f.values()) < 1e-7, "{:e}", sup_norm(f.values()));
    }

    #[test]
    fn undeformed_rotation_term() {
        let s = star(1.5);
        let prof = RotationProfile::rigid(1.0);
        let grid = FieldGrid::new(10, 6, s.radius).unwrap();
        let opts = PotentialOptions::default();
        let f = evaluate_f(&s, &prof, &DeformationField::zeros(grid), 0.2, &opts).unwrap();
        for ((r, t), v) in grid.nodes().into_iter().zip(f.values()) {
            assert!((v - 0.1 * (r * t.sin()).powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_dilation_closed_form() {
        let s = star(1.5);
        let eos = s.eos().clone();
        let prof = RotationProfile::rigid(1.0);
        let grid = FieldGrid::new(10, 6, s.radius).unwrap();
        let c = 0.02;
        let z = DeformationField::uniform_dilation(grid, c);
        let f = evaluate_f(&s, &prof, &z, 0.0, &PotentialOptions::default()).unwrap();
        let m = (1.0 + c).powi(-3);
        let rc = s.central_density();
        for ((r, _), v) in grid.nodes().into_iter().zip(f.values()) {
            let want = (s.u0_at(r) - s.u0_at(0.0)) / (1.0 + c) - eos.enthalpy(m * s.rho0_at(r)) + eos.enthalpy(m * rc);
            assert!((v - want).abs() < 1e-8, "r={r}: {v} vs {want}");
        }
    }

    #[test]
    fn derivative_at_rest_matches_mode_blocks() {
        let s = star(1.5);
        let prof = RotationProfile::rigid(1.0);
        let grid = FieldGrid::new(14, 6, s.radius).unwrap();
        let opts = PotentialOptions::default();
        let profile = |r: f64| r * r * (1.0 + 0.3 * r * r);
        for l in [0usize, 2] {
            let xi = DeformationField::from_fn(grid, |r, t| profile(r) * y_l0(l, t)).unwrap();
            let d = frechet_apply(&s, &prof, &DeformationField::zeros(grid), 0.0, &xi, &opts).unwrap();
            let op = assemble_mode(&s, l, &ShapeOptions::default().linop).unwrap();
            let nodal: Vec<f64> = op.nodes().iter().map(|r| profile(*r)).collect();
            let scale = sup_norm(d.values());
            for ((r, t), v) in grid.nodes().into_iter().zip(d.values()) {
                let want = op.apply_at(&s, &nodal, r).unwrap() * y_l0(l, t);
                assert!((v - want).abs() < 1e-6 * scale, "l={l} r={r}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let s = star(1.5);
        let prof = RotationProfile::rigid(1.0);
        let grid = FieldGrid::new(12, 6, s.radius).unwrap();
        let opts = PotentialOptions::default();
        let xi = DeformationField::from_fn(grid, |r, t| r * r * (1.0 + 0.3 * r * r) * (0.2 + (2.0 * t).cos())).unwrap();
        let z = DeformationField::from_fn(grid, |r, t| 0.01 * r * r * (2.0 * t).cos()).unwrap();
        let j = frechet_apply(&s, &prof, &z, 0.3, &xi, &opts).unwrap();
        let h = 1e-5;
        let fp = evaluate_f(&s, &prof, &z.axpy(h, &xi).unwrap(), 0.3, &opts).unwrap();
        let fm = evaluate_f(&s, &prof, &z.axpy(-h, &xi).unwrap(), 0.3, &opts).unwrap();
        let fd: Vec<f64> = fp.values().iter().zip(fm.values()).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let err: Vec<f64> = fd.iter().zip(j.values()).map(|(a, b)| a - b).collect();
        assert!(sup_norm(&err) < 1e-4 * sup_norm(&fd));
        let zero = frechet_apply(&s, &prof, &z, 0.3, &DeformationField::zeros(grid), &opts).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn first_order_shape_is_oblate() {
        for g in [1.4, 1.5, 1.7] {
            let s = star(g);
            let sh = first_order_shape(&s, &RotationProfile::rigid(1.0), 1e-3, &ShapeOptions::default()).unwrap();
            let ls: Vec<usize> = sh.xi_l.iter().map(|m| m.l).collect();
            assert_eq!(ls, vec![0, 2], "gamma {g}");
            assert!(sh.trace(2) < 0.0);
            assert!(sh.trace(2) <= l2_trace_bound(&s, 1.0) * (1.0 - 1e-9));
            assert!(sh.equatorial_radius > sh.polar_radius);
        }
    }

    #[test]
    fn continuation_conserves_mass_and_tracks_first_order() {
        let s = star(1.5);
        let prof = RotationProfile::rigid(1.0);
        let opts = NewtonOptions::default();
        let c = newton_continue(&s, &prof, &[0.0, 2.5e-4, 5e-4], &opts).unwrap();
        assert!(c.stop.is_none());
        assert_eq!(c.solutions.len(), 3);
        assert!(c.solutions[0].newton_iters == 0 && c.solutions[0].x_norm == 0.0);
        for so in &c.solutions {
            assert!(((so.mass_check - s.mass) / s.mass).abs() < 1e-6);
            assert!(so.residual < opts.tol);
        }
        let sh = first_order_shape(&s, &prof, 1.0, &ShapeOptions::default()).unwrap();
        let grid = *c.solutions[1].zeta.grid();
        let lin = sh.field(grid).unwrap();
        let rem: Vec<f64> = c.solutions[1..]
            .iter()
            .map(|so| so.zeta.axpy(-so.kappa, &lin).unwrap().x_norm())
            .collect();
        let ratio = rem[1] / rem[0];
        assert!((ratio - 4.0).abs() < 0.4, "remainder ratio {ratio}");
    }

    #[test]
    fn cap_stops_the_curve() {
        let s = star(1.5);
        let c = newton_continue(&s, &RotationProfile::rigid(1.0), &[1e-3, 0.05], &NewtonOptions::default()).unwrap();
        assert_eq!(c.solutions.len(), 1);
        assert!(matches!(c.stop, Some(StopReason::DeformationCap { .. })));
    }
}
