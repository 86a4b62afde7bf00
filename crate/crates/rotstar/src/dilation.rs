//! Axisymmetric, `x₃`-even deformation fields ζ and the dilating map
//! `g_ζ(x) = (1 + ζ(x)/|x|²) x`.
//!
//! A field is stored by its values at a tensor grid of first-kind Chebyshev
//! nodes in `s = (r/R_dom)²` and `c = cos 2θ`, and evaluated through the
//! Chebyshev interpolant of `q = ζ/r²`. Because the interpolant is a function
//! of `r²` and `cos 2θ`, every field vanishes to second order at the origin,
//! is independent of the azimuth and is even in `x₃`; the grid stores the
//! quarter plane `0 < θ < π/2` only.

use crate::linop::RadialBase;
use crate::numerics::{cheb_nodes, cheb_t_all, ChebBasis, GaussRule};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

/// Hard cap on `‖ζ‖_X` for every map operation.
pub const EPS0: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DilationError {
    #[error("deformation cap: ||zeta||_X = {norm:.4e} is not below {cap}")]
    DeformationCap { norm: f64, cap: f64 },
    #[error("fold: det Dg = {det:.3e} at r = {r:.4e}, theta = {theta:.4}")]
    Fold { det: f64, r: f64, theta: f64 },
    #[error("deformation too large: inverse map did not converge in {iterations} iterations")]
    TooLarge { iterations: usize },
    #[error("grid mismatch between fields")]
    GridMismatch,
    #[error("domain error: {0}")]
    Domain(String),
}

/// Tensor grid of a field: `n_r` radial by `n_theta` angular nodes on the
/// ball of radius `r_dom`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_dom: f64,
}

impl FieldGrid {
    pub fn new(n_r: usize, n_theta: usize, r_dom: f64) -> Result<Self, DilationError> {
        if n_r < 2 || n_theta < 1 || !(r_dom > 0.0) || !r_dom.is_finite() {
            return Err(DilationError::Domain(format!(
                "field grid needs n_r >= 2, n_theta >= 1, r_dom > 0 (got {n_r}, {n_theta}, {r_dom})"
            )));
        }
        Ok(Self { n_r, n_theta, r_dom })
    }

    /// The default 128 × 64 resolution.
    pub fn standard(r_dom: f64) -> Result<Self, DilationError> {
        Self::new(128, 64, r_dom)
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node radii, ascending.
    pub fn radii(&self) -> Vec<f64> {
        let x = cheb_nodes(self.n_r);
        (0..self.n_r).map(|i| self.r_dom * (0.5 * (1.0 + x[self.n_r - 1 - i])).sqrt()).collect()
    }

    /// Node polar angles in `(0, π/2)`, ascending.
    pub fn angles(&self) -> Vec<f64> {
        cheb_nodes(self.n_theta).iter().map(|c| 0.5 * c.acos()).collect()
    }

    /// All nodes as `(r, θ)`, index `i·n_theta + j`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let (r, t) = (self.radii(), self.angles());
        r.iter().flat_map(|ri| t.iter().map(move |tj| (*ri, *tj))).collect()
    }
}

#[derive(Debug)]
struct Bases {
    r: ChebBasis,
    t: ChebBasis,
}

/// `q`, `∂q/∂r` and `∂q/∂θ` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub q: f64,
    pub q_r: f64,
    pub q_theta: f64,
}

impl FieldPoint {
    /// `det Dg = (1+q)²(1 + q + r q_r)`
    pub fn det(&self, r: f64) -> f64 {
        (1.0 + self.q).powi(2) * (1.0 + self.q + r * self.q_r)
    }

    /// `|∇ζ|/|x|`
    pub fn grad_ratio(&self, r: f64) -> f64 {
        (2.0 * self.q + r * self.q_r).hypot(self.q_theta)
    }
}

/// A field restricted to one ray: radial Chebyshev coefficients of `q` and
/// of `∂q/∂θ` at a fixed angle.
#[derive(Debug, Clone)]
pub struct Ray {
    pub theta: f64,
    r_dom: f64,
    c: Vec<f64>,
    dc: Vec<f64>,
}

impl Ray {
    pub fn eval(&self, r: f64) -> FieldPoint {
        let x = 2.0 * (r / self.r_dom).powi(2) - 1.0;
        let (q, qx) = crate::numerics::clenshaw(&self.c, x);
        let (qt, _) = crate::numerics::clenshaw(&self.dc, x);
        FieldPoint { q, q_r: qx * 4.0 * r / (self.r_dom * self.r_dom), q_theta: qt }
    }
}

/// An axisymmetric, `x₃`-even scalar field on the ball.
#[derive(Debug, Clone)]
pub struct DeformationField {
    grid: FieldGrid,
    values: Vec<f64>,
    /// Chebyshev coefficients of q, index k·n_theta + l
    coef: Vec<f64>,
    bases: Arc<Bases>,
}

impl DeformationField {
    pub fn from_values(grid: FieldGrid, values: Vec<f64>) -> Result<Self, DilationError> {
        if values.len() != grid.len() {
            return Err(DilationError::Domain(format!(
                "expected {} nodal values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(DilationError::Domain(format!("non-finite nodal value {v}")));
        }
        let bases = Arc::new(Bases { r: ChebBasis::new(grid.n_r), t: ChebBasis::new(grid.n_theta) });
        let mut f = Self { grid, values, coef: Vec::new(), bases };
        f.coef = f.coefficients();
        Ok(f)
    }

    pub fn zeros(grid: FieldGrid) -> Self {
        Self::from_values(grid, vec![0.0; grid.len()]).expect("zero field is valid")
    }

    /// Samples `f(r, θ)` at the nodes.
    pub fn from_fn(grid: FieldGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self, DilationError> {
        Self::from_values(grid, grid.nodes().iter().map(|&(r, t)| f(r, t)).collect())
    }

    /// ζ = c|x|², the uniform dilation by 1 + c.
    pub fn uniform_dilation(grid: FieldGrid, c: f64) -> Self {
        Self::from_fn(grid, |r, _| c * r * r).expect("finite dilation")
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        let mut f = Self { grid: self.grid, values, coef: Vec::new(), bases: self.bases.clone() };
        f.coef = f.coefficients();
        f
    }

    fn coefficients(&self) -> Vec<f64> {
        let (nr, nt) = (self.grid.n_r, self.grid.n_theta);
        let radii = self.grid.radii();
        // radial transform first (nodes are stored ascending, the basis expects descending)
        let mut half = vec![0.0; nr * nt];
        for k in 0..nr {
            let row = self.bases.r.coef_row(k);
            for i in 0..nr {
                let w = row[nr - 1 - i] / (radii[i] * radii[i]);
                for j in 0..nt {
                    half[k * nt + j] += w * self.values[i * nt + j];
                }
            }
        }
        let mut coef = vec![0.0; nr * nt];
        for l in 0..nt {
            let row = self.bases.t.coef_row(l);
            for k in 0..nr {
                coef[k * nt + l] = (0..nt).map(|j| row[j] * half[k * nt + j]).sum();
            }
        }
        coef
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `self + a·other`
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self, DilationError> {
        if self.grid != other.grid {
            return Err(DilationError::GridMismatch);
        }
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.with_values(self.values.iter().map(|v| a * v).collect())
    }

    /// Restriction to the ray at polar angle `theta`.
    pub fn ray(&self, theta: f64) -> Ray {
        let (nr, nt) = (self.grid.n_r, self.grid.n_theta);
        let c = (2.0 * theta).cos();
        let dcdt = -2.0 * (2.0 * theta).sin();
        let mut t = vec![0.0; nt];
        let mut dt = vec![0.0; nt];
        cheb_t_all(nt, c, &mut t, &mut dt);
        let mut rc = vec![0.0; nr];
        let mut rdc = vec![0.0; nr];
        for k in 0..nr {
            let a = &self.coef[k * nt..(k + 1) * nt];
            rc[k] = a.iter().zip(&t).map(|(a, t)| a * t).sum();
            rdc[k] = a.iter().zip(&dt).map(|(a, t)| a * t).sum::<f64>() * dcdt;
        }
        Ray { theta, r_dom: self.grid.r_dom, c: rc, dc: rdc }
    }

    /// `q = ζ/r²` and its polar derivatives.
    pub fn eval(&self, r: f64, theta: f64) -> FieldPoint {
        self.ray(theta).eval(r)
    }

    pub fn value(&self, r: f64, theta: f64) -> f64 {
        r * r * self.eval(r, theta).q
    }

    pub fn value_at(&self, x: [f64; 3]) -> f64 {
        let (r, t) = polar(x);
        self.value(r, t)
    }

    /// `‖ζ‖_X = sup |∇ζ|/|x|` over a lattice twice as fine as the grid,
    /// endpoints included.
    pub fn x_norm(&self) -> f64 {
        let mut m = 0.0_f64;
        for (r, t) in self.sample_lattice() {
            m = m.max(self.eval(r, t).grad_ratio(r));
        }
        m
    }

    /// Lattice used for sup-norm style diagnostics.
    pub fn sample_lattice(&self) -> Vec<(f64, f64)> {
        let nr = 2 * self.grid.n_r;
        let nt = (2 * self.grid.n_theta).max(4);
        let mut out = Vec::with_capacity((nr + 1) * (nt + 1));
        for i in 0..=nr {
            let x = -(PI * i as f64 / nr as f64).cos();
            let r = self.grid.r_dom * (0.5 * (1.0 + x)).max(0.0).sqrt();
            for j in 0..=nt {
                let c = (PI * j as f64 / nt as f64).cos();
                out.push((r, 0.5 * c.clamp(-1.0, 1.0).acos()));
            }
        }
        out
    }

    /// Converts a linear functional given on the Chebyshev coefficients of
    /// `q` (index `k·n_theta + l`) into one acting on the nodal values.
    pub fn nodal_functional(&self, coef_weights: &[f64]) -> Vec<f64> {
        let (nr, nt) = (self.grid.n_r, self.grid.n_theta);
        let radii = self.grid.radii();
        // λ_kl → Σ_l λ_kl Ct[l][j]
        let mut half = vec![0.0; nr * nt];
        for l in 0..nt {
            let row = self.bases.t.coef_row(l);
            for k in 0..nr {
                let lam = coef_weights[k * nt + l];
                if lam != 0.0 {
                    for j in 0..nt {
                        half[k * nt + j] += lam * row[j];
                    }
                }
            }
        }
        let mut out = vec![0.0; nr * nt];
        for k in 0..nr {
            let row = self.bases.r.coef_row(k);
            for i in 0..nr {
                let w = row[nr - 1 - i] / (radii[i] * radii[i]);
                for j in 0..nt {
                    out[i * nt + j] += w * half[k * nt + j];
                }
            }
        }
        out
    }
}

/// `(|x|, polar angle from the x₃ axis)`.
pub fn polar(x: [f64; 3]) -> (f64, f64) {
    let rho = x[0].hypot(x[1]);
    (rho.hypot(x[2]), rho.atan2(x[2]))
}

/// Tensor Gauss rule for axisymmetric integrals over a ball, with the radial
/// nodes clustered at the surface by `r = R(1 − (1−σ)^p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallRule {
    pub n_r: usize,
    pub n_mu: usize,
    pub power: f64,
}

impl Default for BallRule {
    fn default() -> Self {
        Self { n_r: 64, n_mu: 24, power: 3.0 }
    }
}

impl BallRule {
    /// Radial nodes and weights on `[0, r_max]` (weights include `dr` only).
    pub fn radial(&self, r_max: f64) -> Vec<(f64, f64)> {
        let g = GaussRule::new(self.n_r);
        let p = self.power;
        g.x.iter()
            .zip(&g.w)
            .map(|(x, w)| {
                let sigma = 0.5 * (1.0 + x);
                let r = r_max * (1.0 - (1.0 - sigma).powf(p));
                (r, 0.5 * w * r_max * p * (1.0 - sigma).powf(p - 1.0))
            })
            .collect()
    }

    /// `μ = cos θ` nodes in `(0, 1)` with weights.
    pub fn angular(&self) -> Vec<(f64, f64)> {
        let g = GaussRule::new(self.n_mu);
        g.x.iter().zip(&g.w).map(|(x, w)| (0.5 * (1.0 + x), 0.5 * w)).collect()
    }

    /// `∫ f dx` over `{r < r_max(θ)}` for an integrand even in `x₃`;
    /// `f(r, θ)` is called with `θ ∈ (0, π/2)`.
    pub fn integrate(&self, r_max: impl Fn(f64) -> f64, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (mu, wm) in self.angular() {
            let theta = mu.acos();
            let mut ray = 0.0;
            for (r, wr) in self.radial(r_max(theta)) {
                ray += wr * r * r * f(r, theta);
            }
            total += wm * ray;
        }
        4.0 * PI * total
    }
}

/// The dilating map of a field with `‖ζ‖_X < ε₀`.
#[derive(Debug, Clone)]
pub struct DilationMap {
    field: DeformationField,
    norm: f64,
}

impl DilationMap {
    pub fn new(field: DeformationField) -> Result<Self, DilationError> {
        Self::with_cap(field, EPS0)
    }

    pub fn with_cap(field: DeformationField, cap: f64) -> Result<Self, DilationError> {
        let norm = field.x_norm();
        if !(norm < cap) {
            return Err(DilationError::DeformationCap { norm, cap });
        }
        Ok(Self { field, norm })
    }

    pub fn field(&self) -> &DeformationField {
        &self.field
    }

    pub fn x_norm(&self) -> f64 {
        self.norm
    }

    /// Image radius of the point `(r, θ)`.
    pub fn image_radius(&self, r: f64, theta: f64) -> f64 {
        r * (1.0 + self.field.eval(r, theta).q)
    }

    pub fn apply(&self, x: [f64; 3]) -> [f64; 3] {
        let (r, t) = polar(x);
        let f = 1.0 + self.field.eval(r, t).q;
        [x[0] * f, x[1] * f, x[2] * f]
    }

    /// Preimage radius along the ray at `theta`: solves `r(1 + q(r, θ)) = t`.
    pub fn invert_radius(&self, t: f64, theta: f64) -> Result<f64, DilationError> {
        invert_on_ray(&self.field.ray(theta), t)
    }

    pub fn invert(&self, y: [f64; 3]) -> Result<[f64; 3], DilationError> {
        let (t, th) = polar(y);
        if t == 0.0 {
            return Ok([0.0; 3]);
        }
        let r = self.invert_radius(t, th)?;
        let s = r / t;
        Ok([y[0] * s, y[1] * s, y[2] * s])
    }

    pub fn det_polar(&self, r: f64, theta: f64) -> Result<f64, DilationError> {
        let det = self.field.eval(r, theta).det(r);
        if !(det > 0.0) {
            return Err(DilationError::Fold { det, r, theta });
        }
        Ok(det)
    }

    pub fn jacobian_det(&self, x: [f64; 3]) -> Result<f64, DilationError> {
        let (r, t) = polar(x);
        self.det_polar(r, t)
    }

    /// `𝓜(ζ) = M / ∫ρ₀ det Dg_ζ`.
    pub fn mass_factor(&self, base: &dyn RadialBase, rule: &BallRule) -> Result<f64, DilationError> {
        let mut fold = None;
        let i = rule.integrate(
            |_| base.radius(),
            |r, t| match self.det_polar(r, t) {
                Ok(d) => base.rho(r) * d,
                Err(e) => {
                    fold.get_or_insert(e);
                    0.0
                }
            },
        );
        if let Some(e) = fold {
            return Err(e);
        }
        Ok(base.mass() / i)
    }

    /// `∫ 𝓜 ρ₀(g⁻¹(y)) dy` computed in the deformed domain, inverting the map
    /// at every quadrature node.
    pub fn physical_mass(&self, base: &dyn RadialBase, factor: f64, rule: &BallRule) -> Result<f64, DilationError> {
        let radius = base.radius();
        let mut err = None;
        let m = rule.integrate(
            |t| self.image_radius(radius, t),
            |y, t| match self.invert_radius(y, t) {
                Ok(r) => factor * base.rho(r.min(radius)),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
        );
        match err {
            Some(e) => Err(e),
            None => Ok(m),
        }
    }

    /// `sup |det Dg − 1| / ‖ζ‖_X` on the sample lattice.
    pub fn det_constant(&self) -> f64 {
        if self.norm == 0.0 {
            return 0.0;
        }
        let worst = self
            .field
            .sample_lattice()
            .iter()
            .map(|&(r, t)| (self.field.eval(r, t).det(r) - 1.0).abs())
            .fold(0.0, f64::max);
        worst / self.norm
    }

    /// `|(g(x) − g(x′)) − (x − x′)| / (‖ζ‖_X |x − x′|)`.
    pub fn deviation_ratio(&self, x: [f64; 3], xp: [f64; 3]) -> f64 {
        let (gx, gp) = (self.apply(x), self.apply(xp));
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..3 {
            num += ((gx[k] - gp[k]) - (x[k] - xp[k])).powi(2);
            den += (x[k] - xp[k]).powi(2);
        }
        if den == 0.0 || self.norm == 0.0 {
            return 0.0;
        }
        num.sqrt() / (self.norm * den.sqrt())
    }
}

/// Newton with a fixed-point fallback for `r(1 + q(r)) = t` on one ray.
pub(crate) fn invert_on_ray(ray: &Ray, t: f64) -> Result<f64, DilationError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    const MAX_IT: usize = 200;
    let mut r = t / (1.0 + ray.eval(t).q);
    for _ in 0..MAX_IT {
        let p = ray.eval(r);
        let f = r * (1.0 + p.q) - t;
        let d1 = 1.0 + p.q + r * p.q_r;
        let next = if d1 > 0.5 { r - f / d1 } else { t / (1.0 + p.q) };
        if !next.is_finite() || next < 0.0 {
            break;
        }
        let done = (next - r).abs() <= 1e-15 * t;
        r = next;
        if done {
            return Ok(r);
        }
    }
    Err(DilationError::TooLarge { iterations: MAX_IT })
}

/// Extension of an interior field to `B_{2R}` by the two-point reflection
/// `ζ(R + d) = −3ζ(R − d) + 4ζ(R − d/2)`, cut off smoothly at `2R`. The result
/// agrees with ζ on `B_R`, is C¹ across `|x| = R` and vanishes for
/// `|x| ≥ 2R`. Fields here are already axisymmetric and even in `x₃`, so the
/// symmetrizing average over rotations and the reflection is the identity.
#[derive(Debug, Clone)]
pub struct ExtendedField {
    inner: DeformationField,
}

pub fn extend(field: &DeformationField) -> ExtendedField {
    ExtendedField { inner: field.clone() }
}

impl ExtendedField {
    pub fn inner(&self) -> &DeformationField {
        &self.inner
    }

    pub fn support_radius(&self) -> f64 {
        2.0 * self.inner.grid.r_dom
    }

    pub fn value(&self, r: f64, theta: f64) -> f64 {
        let big_r = self.inner.grid.r_dom;
        if r <= big_r {
            return self.inner.value(r, theta);
        }
        if r >= 2.0 * big_r {
            return 0.0;
        }
        let d = r - big_r;
        let t = d / big_r;
        let chi = (1.0 - t).powi(2) * (1.0 + 2.0 * t);
        (-3.0 * self.inner.value(big_r - d, theta) + 4.0 * self.inner.value(big_r - 0.5 * d, theta)) * chi
    }

    pub fn value_at(&self, x: [f64; 3]) -> f64 {
        let (r, t) = polar(x);
        self.value(r, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FieldGrid {
        FieldGrid::new(16, 6, 1.0).unwrap()
    }

    fn smooth(grid: FieldGrid, amp: f64) -> DeformationField {
        DeformationField::from_fn(grid, |r, t| amp * r * r * (0.3 + r * r * (2.0 * t).cos() - 0.2 * r.powi(4))).unwrap()
    }

    #[test]
    fn node_layout() {
        let g = grid();
        let r = g.radii();
        assert!(r.windows(2).all(|w| w[1] > w[0]) && r[0] > 0.0 && r[15] < 1.0);
        let t = g.angles();
        assert!(t.windows(2).all(|w| w[1] > w[0]) && t[0] > 0.0 && t[5] < PI / 2.0);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_polynomials() {
        let f = smooth(grid(), 1.0);
        for (k, &(r, t)) in grid().nodes().iter().enumerate() {
            assert!((f.value(r, t) - f.values()[k]).abs() < 1e-13);
        }
        let want = |r: f64, t: f64| r * r * (0.3 + r * r * (2.0 * t).cos() - 0.2 * r.powi(4));
        assert!((f.value(0.77, 1.1) - want(0.77, 1.1)).abs() < 1e-13);
        // x₃-evenness: θ and π − θ agree
        assert!((f.value(0.5, 0.4) - f.value(0.5, PI - 0.4)).abs() < 1e-14);
    }

    #[test]
    fn uniform_dilation_closed_forms() {
        let c = 0.03;
        let f = DeformationField::uniform_dilation(grid(), c);
        assert!((f.x_norm() - 2.0 * c).abs() < 1e-14);
        let m = DilationMap::new(f).unwrap();
        let x = [0.1, -0.2, 0.3];
        let y = m.apply(x);
        for k in 0..3 {
            assert!((y[k] - 1.03 * x[k]).abs() < 1e-15);
        }
        let back = m.invert(y).unwrap();
        for k in 0..3 {
            assert!((back[k] - x[k]).abs() < 1e-15);
        }
        assert!((m.jacobian_det(x).unwrap() - 1.03f64.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn round_trip_and_linearity() {
        let f = smooth(grid(), 0.02);
        let g = DeformationField::from_fn(grid(), |r, t| 0.01 * r.powi(4) * (2.0 * t).sin().powi(2)).unwrap();
        let sum = f.axpy(1.0, &g).unwrap();
        let (mf, mg, ms) =
            (DilationMap::new(f).unwrap(), DilationMap::new(g).unwrap(), DilationMap::new(sum).unwrap());
        for x in [[0.3, 0.1, 0.5], [0.0, 0.0, 0.9], [0.7, 0.0, 0.0], [1e-3, 2e-3, -1e-3]] {
            let back = mf.invert(mf.apply(x)).unwrap();
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            for k in 0..3 {
                assert!((back[k] - x[k]).abs() < 1e-12 * n);
                let lin = (mf.apply(x)[k] - x[k]) + (mg.apply(x)[k] - x[k]);
                assert!((ms.apply(x)[k] - x[k] - lin).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let f = DeformationField::uniform_dilation(grid(), 0.06);
        assert!(matches!(DilationMap::new(f), Err(DilationError::DeformationCap { .. })));
    }

    #[test]
    fn extension_properties() {
        let f = smooth(grid(), 0.02);
        let e = extend(&f);
        for &(r, t) in &f.sample_lattice() {
            assert!((e.value(r, t) - f.value(r, t)).abs() < 1e-12);
        }
        assert_eq!(e.value(2.0, 0.3), 0.0);
        assert_eq!(e.value(2.5, 1.0), 0.0);
        // continuity and a matching slope at the surface
        let h = 1e-6;
        let (vin, vout) = (e.value(1.0 - h, 0.7), e.value(1.0 + h, 0.7));
        assert!((vin - vout).abs() < 1e-7);
        let sin = (e.value(1.0 - h, 0.7) - e.value(1.0 - 2.0 * h, 0.7)) / h;
        let sout = (e.value(1.0 + 2.0 * h, 0.7) - e.value(1.0 + h, 0.7)) / h;
        assert!((sin - sout).abs() < 1e-4);
        let z = extend(&DeformationField::zeros(grid()));
        assert_eq!(z.value(1.5, 0.2), 0.0);
    }

    #[test]
    fn ball_rule_volume() {
        let v = BallRule::default().integrate(|_| 2.0, |_, _| 1.0);
        assert!((v - 4.0 / 3.0 * PI * 8.0).abs() < 1e-12);
    }

    #[test]
    fn mass_factor_and_conservation() {
        let star = crate::radial::solve_radial(&crate::eos::power_law(1.5).unwrap(), 1.0).unwrap();
        let g = FieldGrid::new(16, 6, star.radius).unwrap();
        let rule = BallRule::default();
        let zero = DilationMap::new(DeformationField::zeros(g)).unwrap();
        assert!((zero.mass_factor(&star, &rule).unwrap() - 1.0).abs() < 1e-10);
        let uni = DilationMap::new(DeformationField::uniform_dilation(g, 0.03)).unwrap();
        assert!((uni.mass_factor(&star, &rule).unwrap() - 1.03f64.powi(-3)).abs() < 1e-10);
        let r = star.radius;
        let f = DeformationField::from_fn(g, |x, t| 0.02 * x * x * (0.5 + (x / r).powi(2) * (2.0 * t).cos())).unwrap();
        let m = DilationMap::new(f).unwrap();
        let factor = m.mass_factor(&star, &rule).unwrap();
        let phys = m.physical_mass(&star, factor, &rule).unwrap();
        assert!((phys / star.mass - 1.0).abs() < 1e-8, "{}", phys / star.mass - 1.0);
    }
}
