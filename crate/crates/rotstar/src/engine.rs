//! Newtonian potential of a deformed axisymmetric body, evaluated at the
//! images of the collocation nodes of a deformation field, together with the
//! linear functionals needed by the Fréchet derivatives of both models.
//!
//! Integrals over the deformed body are pulled back to the round ball with
//! the Jacobian of `g_ζ`. On each quadrature ray the radial integral is split
//! where the image radius `T(r, μ)` crosses the image radius `t` of the
//! evaluation point, so the Legendre kernels `min^l/max^(l+1)` are smooth on
//! every piece.

use crate::dilation::{invert_on_ray, BallRule, DeformationField, DilationError, DilationMap, Ray};
use crate::numerics::{cheb_t_all, legendre_all, GaussRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Quadrature and truncation settings of the potential solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialOptions {
    /// highest (even) Legendre degree kept
    pub l_max: usize,
    /// Gauss nodes in μ on (0, 1)
    pub n_mu: usize,
    /// Gauss nodes per radial piece
    pub n_piece: usize,
    /// radial nodes of the mass integral
    pub n_ball: usize,
    /// surface clustering exponent
    pub power: f64,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        Self { l_max: 8, n_mu: 24, n_piece: 24, n_ball: 64, power: 3.0 }
    }
}

impl PotentialOptions {
    pub fn ball(&self) -> BallRule {
        BallRule { n_r: self.n_ball, n_mu: self.n_mu, power: self.power }
    }
}

/// Density carried by the pulled-back point at radius `r` whose image has
/// cylindrical radius `rc`.
pub(crate) trait PulledDensity: Sync {
    fn radius(&self) -> f64;
    fn value(&self, r: f64, rc: f64) -> f64;
    /// ∂/∂r at fixed `rc`
    fn material(&self, r: f64, rc: f64) -> f64;
}

/// How the variation of the mass integral is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum MassForm {
    /// `∫ D det tr(Dg⁻¹ D(ξ x/|x|²))`
    Trace,
    /// `−∫ ∂_r D · ξ/(r D₁) dy′`, pulled back
    Ray,
}

#[derive(Debug, Clone)]
pub(crate) struct NodeData {
    pub r: f64,
    pub theta: f64,
    /// image radius of the node
    pub t: f64,
    pub pot: f64,
    pub dpot_dt: f64,
    /// δPot from moving the density, as a functional on nodal values
    pub row: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Plan {
    pub map: DilationMap,
    pub nodes: Vec<NodeData>,
    /// ∫ D det over the ball
    pub mass_integral: f64,
    pub mass_row: Option<Vec<f64>>,
}

struct Angular {
    w: f64,
    sin: f64,
    ray: Ray,
    pl: Vec<f64>,
    tt: Vec<f64>,
}

fn kernels(l_max: usize, pl_x: &[f64], pl_y: &[f64], t: f64, big_t: f64, inner: bool) -> (f64, f64) {
    let mut k = 0.0;
    let mut dk = 0.0;
    if inner {
        k += 1.0 / t - 1.0 / big_t;
        dk -= 1.0 / (t * t);
        let ratio = big_t / t;
        let mut p = ratio * ratio / t;
        for l in (2..=l_max).step_by(2) {
            let a = pl_x[l] * pl_y[l];
            k += a * p;
            dk -= a * (l + 1) as f64 * p / t;
            p *= ratio * ratio;
        }
    } else {
        let ratio = t / big_t;
        let mut p = ratio * ratio / big_t;
        for l in (2..=l_max).step_by(2) {
            let a = pl_x[l] * pl_y[l];
            k += a * p;
            dk += a * l as f64 * p / t;
            p *= ratio * ratio;
        }
    }
    (k, dk)
}

impl Plan {
    pub fn build(
        field: &DeformationField,
        density: &dyn PulledDensity,
        opts: &PotentialOptions,
        mass_form: MassForm,
        with_rows: bool,
    ) -> Result<Self, DilationError> {
        let radius = density.radius();
        if (field.grid().r_dom - radius).abs() > 1e-12 * radius {
            return Err(DilationError::Domain(format!(
                "field domain {} does not match the star radius {radius}",
                field.grid().r_dom
            )));
        }
        if opts.l_max % 2 == 1 || opts.n_mu < 2 || opts.n_piece < 2 || opts.n_ball < 2 {
            return Err(DilationError::Domain("potential options need even l_max and at least two nodes per rule".into()));
        }
        let map = DilationMap::new(field.clone())?;
        let grid = *field.grid();
        let (nr, nt) = (grid.n_r, grid.n_theta);
        let r_dom2 = grid.r_dom * grid.r_dom;
        let lm = opts.l_max;
        let angular: Vec<Angular> = opts
            .ball()
            .angular()
            .into_iter()
            .map(|(mu, w)| {
                let mut pl = vec![0.0; lm + 1];
                legendre_all(lm, mu, &mut pl);
                let theta = mu.acos();
                let mut tt = vec![0.0; nt];
                let mut dtt = vec![0.0; nt];
                cheb_t_all(nt, (2.0 * theta).cos(), &mut tt, &mut dtt);
                Angular { w, sin: (1.0 - mu * mu).sqrt(), ray: field.ray(theta), pl, tt }
            })
            .collect();
        let surface: Vec<f64> = angular.iter().map(|a| radius * (1.0 + a.ray.eval(radius).q)).collect();
        let gauss = GaussRule::new(opts.n_piece);

        // mass integral and its variation
        let radial = opts.ball().radial(radius);
        let mut mass_integral = 0.0;
        let mut lam = vec![0.0; nr * nt];
        let mut tr = vec![0.0; nr];
        let mut dtr = vec![0.0; nr];
        for a in &angular {
            let mut v = vec![0.0; nr];
            for &(r, wr) in &radial {
                let p = a.ray.eval(r);
                let det = p.det(r);
                if !(det > 0.0) {
                    return Err(DilationError::Fold { det, r, theta: a.ray.theta });
                }
                let wgt = 4.0 * PI * a.w * wr * r * r;
                let rc = r * (1.0 + p.q) * a.sin;
                let d = density.value(r, rc);
                mass_integral += wgt * d * det;
                if with_rows {
                    let d1 = 1.0 + p.q + r * p.q_r;
                    let (ca, cb) = match mass_form {
                        MassForm::Trace => {
                            let base = wgt * d * det;
                            (base * (2.0 / (1.0 + p.q) + 1.0 / d1), base * r / d1)
                        }
                        MassForm::Ray => (-wgt * density.material(r, rc) * r * (1.0 + p.q).powi(2), 0.0),
                    };
                    cheb_t_all(nr, 2.0 * r * r / r_dom2 - 1.0, &mut tr, &mut dtr);
                    let dx = 4.0 * r / r_dom2;
                    for k in 0..nr {
                        v[k] += ca * tr[k] + cb * dx * dtr[k];
                    }
                }
            }
            if with_rows {
                for k in 0..nr {
                    for l in 0..nt {
                        lam[k * nt + l] += v[k] * a.tt[l];
                    }
                }
            }
        }
        let mass_row = with_rows.then(|| field.nodal_functional(&lam));

        let node_list = grid.nodes();
        let nodes: Result<Vec<NodeData>, DilationError> = node_list
            .par_iter()
            .map(|&(r, theta)| {
                let q = field.eval(r, theta);
                let t = r * (1.0 + q.q);
                let mut plx = vec![0.0; lm + 1];
                legendre_all(lm, theta.cos(), &mut plx);
                let mut pot = 0.0;
                let mut dpot = 0.0;
                let mut lam = if with_rows { vec![0.0; nr * nt] } else { Vec::new() };
                let mut tr = vec![0.0; nr];
                let mut dtr = vec![0.0; nr];
                let mut v = vec![0.0; nr];
                for (a, &t_surf) in angular.iter().zip(&surface) {
                    let pieces: [(f64, f64, bool); 2];
                    let n_pieces;
                    if t < t_surf {
                        let rs = invert_on_ray(&a.ray, t)?.min(radius);
                        pieces = [(0.0, rs, true), (rs, radius, false)];
                        n_pieces = 2;
                    } else {
                        pieces = [(0.0, radius, true), (0.0, 0.0, false)];
                        n_pieces = 1;
                    }
                    if with_rows {
                        v.iter_mut().for_each(|x| *x = 0.0);
                    }
                    for &(lo, hi, inner) in &pieces[..n_pieces] {
                        // clustered at the upper end, where either the surface or
                        // the kernel kink sits
                        for (x, w) in gauss.x.iter().zip(&gauss.w) {
                            let sigma = 0.5 * (1.0 + x);
                            let s = (1.0 - sigma).powf(opts.power);
                            let rr = hi - (hi - lo) * s;
                            let wr = 0.5 * w * (hi - lo) * opts.power * (1.0 - sigma).powf(opts.power - 1.0);
                            let p = a.ray.eval(rr);
                            let big_t = rr * (1.0 + p.q);
                            let det = p.det(rr);
                            let rc = big_t * a.sin;
                            let wgt = 4.0 * PI * a.w * wr * rr * rr;
                            let (k, dk) = kernels(lm, &plx, &a.pl, t, big_t, inner);
                            let d = density.value(rr, rc);
                            pot += wgt * d * det * k;
                            dpot += wgt * d * det * dk;
                            if with_rows {
                                let c = -wgt * density.material(rr, rc) * rr * (1.0 + p.q).powi(2) * k;
                                cheb_t_all(nr, 2.0 * rr * rr / r_dom2 - 1.0, &mut tr, &mut dtr);
                                for kk in 0..nr {
                                    v[kk] += c * tr[kk];
                                }
                            }
                        }
                    }
                    if with_rows {
                        for kk in 0..nr {
                            for l in 0..nt {
                                lam[kk * nt + l] += v[kk] * a.tt[l];
                            }
                        }
                    }
                }
                let row = with_rows.then(|| field.nodal_functional(&lam));
                Ok(NodeData { r, theta, t, pot, dpot_dt: dpot, row })
            })
            .collect();
        Ok(Self { map, nodes: nodes?, mass_integral, mass_row })
    }
}

/// Projection of `f(r, θ)` onto `Y_l0` at fixed `r`: `2π ∫ f Y_l0 sinθ dθ`.
pub fn project_mode(l: usize, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let g = GaussRule::new(n);
    let norm = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
    let mut s = 0.0;
    for (x, w) in g.x.iter().zip(&g.w) {
        s += w * f(*x) * crate::numerics::legendre_p(l, *x);
    }
    2.0 * PI * norm * s
}
