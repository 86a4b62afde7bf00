//! The linearization of the steady-state operator at the radial solution,
//! restricted to one axisymmetric harmonic `ξ(x) = ξ_l(r) Y_l0(θ)`:
//!
//! ```text
//! (L_l ξ)(r) = (u₀′(r)/r) ξ(r)
//!            − ∫₀^R ρ₀′(s) s ξ(s) [4π/(2l+1) K_l(r,s) − δ_l0 4π/s] ds
//!            + δ_l0 b(r)/M · 4π ∫₀^R ρ₀′(s) s ξ(s) ds
//! ```
//!
//! with `K_l(r,s) = min^l/max^(l+1)` and `b(r)` the rank-one profile of the
//! model (`k(ρ₀(r)) − k(ρ₀(0))` for the fluid, `U₀(r) − U₀(0)` for the kinetic
//! model). Discretized by Nyström collocation on Gauss panels; the panel that
//! contains the collocation point is integrated against the Lagrange basis
//! with the kernel kink resolved.

use crate::eos::EosError;
use crate::numerics::{smallest_singular_value, DenseMatrix, GaussRule, Lu, NumericsError};
use crate::radial::RadialStar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinopError {
    #[error("degenerate operator (mass condition violated?): l = {l}, sigma_min = {sigma_min:.3e} below floor {floor:.1e}; {diagnostics}")]
    Degenerate { l: usize, sigma_min: f64, floor: f64, diagnostics: String },
    #[error("grid mismatch: expected {expected} values, got {got}")]
    GridMismatch { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solve residual {residual:.3e} exceeds tolerance")]
    Residual { residual: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Eos(#[from] EosError),
}

/// Radial data the operator is built from.
pub trait RadialBase: Sync {
    fn radius(&self) -> f64;
    fn mass(&self) -> f64;
    /// u₀′(r)/r with its finite limit at 0
    fn du_over_r(&self, r: f64) -> f64;
    /// ρ₀(r), zero outside the star
    fn rho(&self, r: f64) -> f64;
    /// ρ₀′(r)
    fn drho(&self, r: f64) -> f64;
    /// profile multiplying the l = 0 rank-one term
    fn rank_one_profile(&self, r: f64) -> f64;
    /// short description for degeneracy diagnostics
    fn describe(&self) -> String;
}

impl RadialBase for RadialStar {
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
        let e = self.eos();
        e.k(self.rho0_at(r)) - e.k(self.central_density())
    }
    fn describe(&self) -> String {
        let g = self.eos().gamma;
        let mut s = format!("gamma = {g:.6}, M'(a) = {:.3e}, M/a = {:.3e}", self.mass_prime, self.mass / self.a);
        if (g - 4.0 / 3.0).abs() < 1e-9 {
            s.push_str(" (gamma = 4/3: mass is scale invariant)");
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinopOptions {
    /// total collocation nodes; rounded up to a multiple of `panel_order`
    pub n: usize,
    pub panel_order: usize,
    /// Gauss points per sub-interval in product integration
    pub sub_order: usize,
    /// degeneracy floor on the weighted σ_min
    pub floor: f64,
}

impl Default for LinopOptions {
    fn default() -> Self {
        Self { n: 256, panel_order: 2, sub_order: 16, floor: 1e-8 }
    }
}

impl LinopOptions {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }
}

/// Composite Gauss panels on `[0, R]`, clustered at both ends.
#[derive(Debug, Clone, Serialize)]
pub struct PanelGrid {
    pub radius: f64,
    pub breaks: Vec<f64>,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelGrid {
    pub fn new(radius: f64, n_panels: usize, order: usize) -> Self {
        let breaks: Vec<f64> = (0..=n_panels)
            .map(|k| 0.5 * radius * (1.0 - (PI * k as f64 / n_panels as f64).cos()))
            .collect();
        let g = GaussRule::new(order);
        let mut nodes = Vec::with_capacity(n_panels * order);
        let mut weights = Vec::with_capacity(n_panels * order);
        for w in breaks.windows(2) {
            let (x, wt) = g.mapped(w[0], w[1]);
            nodes.extend(x);
            weights.extend(wt);
        }
        Self { radius, breaks, order, nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_panels(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Panel containing `r` (clamped to the grid).
    pub fn panel_of(&self, r: f64) -> usize {
        let np = self.n_panels();
        match self.breaks.binary_search_by(|b| b.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(np - 1),
            Err(0) => 0,
            Err(i) => (i - 1).min(np - 1),
        }
    }

    fn panel_nodes(&self, q: usize) -> &[f64] {
        &self.nodes[q * self.order..(q + 1) * self.order]
    }

    /// Lagrange basis of panel `q` at `t`.
    pub fn lagrange(&self, q: usize, t: f64, out: &mut [f64]) {
        let xs = self.panel_nodes(q);
        for j in 0..xs.len() {
            let mut v = 1.0;
            for k in 0..xs.len() {
                if k != j {
                    v *= (t - xs[k]) / (xs[j] - xs[k]);
                }
            }
            out[j] = v;
        }
    }

    /// Piecewise-polynomial interpolant of nodal values at `r`.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let q = self.panel_of(r);
        let mut l = vec![0.0; self.order];
        self.lagrange(q, r, &mut l);
        l.iter().zip(&values[q * self.order..(q + 1) * self.order]).map(|(a, b)| a * b).sum()
    }

    /// Volume weights 4π w_j s_j².
    pub fn volume_weights(&self) -> Vec<f64> {
        self.nodes.iter().zip(&self.weights).map(|(s, w)| 4.0 * PI * w * s * s).collect()
    }
}

/// Kernel of mode `l` including the monopole correction.
#[inline]
pub fn mode_kernel(l: usize, r: f64, s: f64) -> f64 {
    let (lo, hi) = if r < s { (r, s) } else { (s, r) };
    let base = 4.0 * PI / (2 * l + 1) as f64 * (lo / hi).powi(l as i32) / hi;
    if l == 0 {
        base - 4.0 * PI / s
    } else {
        base
    }
}

/// Sub-quadrature of one panel: points, weights·ρ₀′(t)·t, Lagrange values.
#[derive(Debug, Clone)]
struct PanelQuad {
    t: Vec<f64>,
    wf: Vec<f64>,
    lag: Vec<f64>,
}

fn panel_quad(base: &dyn RadialBase, grid: &PanelGrid, q: usize, a: f64, b: f64, rule: &GaussRule) -> PanelQuad {
    let p = grid.order;
    let (t, w) = rule.mapped(a, b);
    let wf: Vec<f64> = t.iter().zip(&w).map(|(t, w)| w * base.drho(*t) * t).collect();
    let mut lag = vec![0.0; t.len() * p];
    for (i, ti) in t.iter().enumerate() {
        grid.lagrange(q, *ti, &mut lag[i * p..(i + 1) * p]);
    }
    PanelQuad { t, wf, lag }
}

/// Dense discretization of one harmonic block.
#[derive(Debug)]
pub struct ModeOperator {
    pub l: usize,
    pub grid: Arc<PanelGrid>,
    pub matrix: DenseMatrix,
    opts: LinopOptions,
    mass: f64,
    /// u₀′/r at the nodes
    diag: Vec<f64>,
    /// rank-one profile at the nodes
    b: Vec<f64>,
    /// 4π ∫ρ₀′ s L_j ds
    c: Vec<f64>,
    diagnostics: String,
    sigma: OnceLock<(f64, Vec<f64>)>,
    lu: OnceLock<Result<Lu, NumericsError>>,
    far: Vec<PanelQuad>,
}

impl Clone for ModeOperator {
    fn clone(&self) -> Self {
        Self {
            l: self.l,
            grid: self.grid.clone(),
            matrix: self.matrix.clone(),
            opts: self.opts,
            mass: self.mass,
            diag: self.diag.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            diagnostics: self.diagnostics.clone(),
            sigma: self.sigma.clone(),
            lu: OnceLock::new(),
            far: self.far.clone(),
        }
    }
}

/// Assemble the block for harmonic index `l`.
pub fn assemble_mode(base: &dyn RadialBase, l: usize, opts: &LinopOptions) -> Result<ModeOperator, LinopError> {
    if opts.panel_order < 1 || opts.sub_order < 2 {
        return Err(LinopError::Domain("panel and sub-quadrature orders must be positive".into()));
    }
    if opts.n < 2 * opts.panel_order {
        return Err(LinopError::Domain(format!("n = {} too small for panel order {}", opts.n, opts.panel_order)));
    }
    let radius = base.radius();
    let np = opts.n.div_ceil(opts.panel_order);
    let grid = Arc::new(PanelGrid::new(radius, np, opts.panel_order));
    let p = grid.order;
    let n = grid.len();
    let rule = GaussRule::new(opts.sub_order);
    let far: Vec<PanelQuad> = (0..np).map(|q| panel_quad(base, &grid, q, grid.breaks[q], grid.breaks[q + 1], &rule)).collect();
    let mut c = vec![0.0; n];
    for (q, pq) in far.iter().enumerate() {
        for (k, wf) in pq.wf.iter().enumerate() {
            for j in 0..p {
                c[q * p + j] += 4.0 * PI * wf * pq.lag[k * p + j];
            }
        }
    }
    let diag: Vec<f64> = grid.nodes.iter().map(|&r| base.du_over_r(r)).collect();
    let b: Vec<f64> = grid.nodes.iter().map(|&r| if l == 0 { base.rank_one_profile(r) } else { 0.0 }).collect();
    let mass = base.mass();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let r = grid.nodes[i];
            let mut row = integral_row(base, &grid, &far, &rule, l, r);
            for v in row.iter_mut() {
                *v = -*v;
            }
            row[i] += diag[i];
            if l == 0 {
                let f = b[i] / mass;
                for (v, cj) in row.iter_mut().zip(&c) {
                    *v += f * cj;
                }
            }
            row
        })
        .collect();
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    let matrix = DenseMatrix::from_row_major(n, n, data)?;
    if !matrix.is_finite() {
        return Err(NumericsError::NonFinite { what: "mode operator entry", x: f64::NAN }.into());
    }
    Ok(ModeOperator {
        l,
        grid,
        matrix,
        opts: *opts,
        mass,
        diag,
        b,
        c,
        diagnostics: base.describe(),
        sigma: OnceLock::new(),
        lu: OnceLock::new(),
        far,
    })
}

/// Weights W_j with ∫ρ₀′(s) s G_l(r, s) ξ(s) ds ≈ Σ_j W_j ξ_j.
fn integral_row(base: &dyn RadialBase, grid: &PanelGrid, far: &[PanelQuad], rule: &GaussRule, l: usize, r: f64) -> Vec<f64> {
    let p = grid.order;
    let n = grid.len();
    let own = grid.panel_of(r);
    let mut row = vec![0.0; n];
    for (q, pq) in far.iter().enumerate() {
        if q == own {
            continue;
        }
        let seg = &mut row[q * p..(q + 1) * p];
        for (k, (t, wf)) in pq.t.iter().zip(&pq.wf).enumerate() {
            let g = wf * mode_kernel(l, r, *t);
            for j in 0..p {
                seg[j] += g * pq.lag[k * p + j];
            }
        }
    }
    let (a, b) = (grid.breaks[own], grid.breaks[own + 1]);
    for (lo, hi) in [(a, r.clamp(a, b)), (r.clamp(a, b), b)] {
        if hi - lo <= 0.0 {
            continue;
        }
        let pq = panel_quad(base, grid, own, lo, hi, rule);
        let seg = &mut row[own * p..(own + 1) * p];
        for (k, (t, wf)) in pq.t.iter().zip(&pq.wf).enumerate() {
            let g = wf * mode_kernel(l, r, *t);
            for j in 0..p {
                seg[j] += g * pq.lag[k * p + j];
            }
        }
    }
    row
}

impl ModeOperator {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }

    pub fn options(&self) -> &LinopOptions {
        &self.opts
    }

    pub fn diagnostics(&self) -> &str {
        &self.diagnostics
    }

    /// Matrix–vector product on nodal values.
    pub fn apply(&self, xi: &[f64]) -> Result<Vec<f64>, LinopError> {
        self.check(xi)?;
        Ok(self.matrix.matvec(xi)?)
    }

    /// Only the local multiplier part u₀′(r)/r · ξ.
    pub fn apply_local(&self, xi: &[f64]) -> Result<Vec<f64>, LinopError> {
        self.check(xi)?;
        Ok(self.diag.iter().zip(xi).map(|(d, x)| d * x).collect())
    }

    /// ∫ρ₀′(s) s ξ(s) G_l(r, s) ds at any r ≥ 0, using the interpolant of ξ.
    pub fn potential_at(&self, base: &dyn RadialBase, xi: &[f64], r: f64) -> Result<f64, LinopError> {
        self.check(xi)?;
        let rule = GaussRule::new(self.opts.sub_order);
        let row = if r >= self.grid.radius {
            // outside the star every panel is regular
            let p = self.grid.order;
            let mut row = vec![0.0; self.len()];
            for (q, pq) in self.far.iter().enumerate() {
                for (k, (t, wf)) in pq.t.iter().zip(&pq.wf).enumerate() {
                    let g = wf * mode_kernel(self.l, r, *t);
                    for j in 0..p {
                        row[q * p + j] += g * pq.lag[k * p + j];
                    }
                }
            }
            row
        } else {
            integral_row(base, &self.grid, &self.far, &rule, self.l, r)
        };
        Ok(row.iter().zip(xi).map(|(a, b)| a * b).sum())
    }

    /// (L ξ)(r) at an arbitrary radius inside the star.
    pub fn apply_at(&self, base: &dyn RadialBase, xi: &[f64], r: f64) -> Result<f64, LinopError> {
        let pot = self.potential_at(base, xi, r)?;
        let mut v = base.du_over_r(r) * self.grid.interpolate(xi, r) - pot;
        if self.l == 0 {
            let s: f64 = self.c.iter().zip(xi).map(|(a, b)| a * b).sum();
            v += base.rank_one_profile(r) / self.mass * s;
        }
        Ok(v)
    }

    /// ξ(R) from the panel interpolant.
    pub fn boundary_value(&self, xi: &[f64]) -> f64 {
        self.grid.interpolate(xi, self.grid.radius)
    }

    fn check(&self, xi: &[f64]) -> Result<(), LinopError> {
        if xi.len() != self.len() {
            return Err(LinopError::GridMismatch { expected: self.len(), got: xi.len() });
        }
        Ok(())
    }

    /// The operator in the volume-weighted inner product, W^{1/2} A W^{-1/2}.
    pub fn weighted_matrix(&self) -> DenseMatrix {
        let w: Vec<f64> = self.grid.volume_weights().iter().map(|v| v.sqrt()).collect();
        let wi: Vec<f64> = w.iter().map(|v| 1.0 / v).collect();
        self.matrix.scaled(&w, &wi)
    }

    /// Smallest singular value of the weighted operator and the matching
    /// nodal vector (unit in the volume-weighted norm).
    pub fn sigma_min(&self) -> Result<(f64, Vec<f64>), LinopError> {
        if let Some(s) = self.sigma.get() {
            return Ok(s.clone());
        }
        let (s, v) = smallest_singular_value(&self.weighted_matrix())?;
        let w = self.grid.volume_weights();
        let xi: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a / b.sqrt()).collect();
        let _ = self.sigma.set((s, xi));
        Ok(self.sigma.get().unwrap().clone())
    }

    /// Volume-weighted L² norm of nodal values.
    pub fn norm(&self, xi: &[f64]) -> f64 {
        self.grid.volume_weights().iter().zip(xi).map(|(w, x)| w * x * x).sum::<f64>().sqrt()
    }

    /// Solve L ξ = rhs after the degeneracy check.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinopError> {
        self.check(rhs)?;
        let (s, _) = self.sigma_min()?;
        if s < self.opts.floor {
            return Err(LinopError::Degenerate {
                l: self.l,
                sigma_min: s,
                floor: self.opts.floor,
                diagnostics: self.diagnostics.clone(),
            });
        }
        let lu = self.lu.get_or_init(|| Lu::new(&self.matrix));
        let lu = lu.as_ref().map_err(|e| LinopError::Numerics(e.clone()))?;
        let mut x = lu.solve(rhs)?;
        // one step of iterative refinement
        let r = self.matrix.matvec(&x)?;
        let res: Vec<f64> = rhs.iter().zip(&r).map(|(a, b)| a - b).collect();
        let dx = lu.solve(&res)?;
        for (a, b) in x.iter_mut().zip(&dx) {
            *a += b;
        }
        let r = self.matrix.matvec(&x)?;
        let nr = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let res = rhs.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if res > 1e-10 * nr.max(f64::MIN_POSITIVE) {
            return Err(LinopError::Residual { residual: res / nr });
        }
        Ok(x)
    }
}

/// Blocks l = 0..=l_max, assembled in parallel.
pub fn assemble_modes(base: &dyn RadialBase, l_max: usize, opts: &LinopOptions) -> Result<Vec<ModeOperator>, LinopError> {
    (0..=l_max).into_par_iter().map(|l| assemble_mode(base, l, opts)).collect()
}

/// The radial kernel candidate built from the variational solution:
/// α = v_a − p′(ρ₀)/p′(ρ₀(0)), ξ = r α / u₀′, sampled on `nodes`.
pub fn kernel_witness(star: &RadialStar, nodes: &[f64]) -> Vec<f64> {
    let eos = star.eos();
    let c = -1.0 / eos.dp(star.central_density());
    nodes
        .iter()
        .map(|&r| {
            let (va, _) = star.va_at(r);
            let alpha = va + c * eos.dp(star.rho0_at(r));
            alpha / star.u0p_over_r(r)
        })
        .collect()
}

/// One row of a refinement study.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MarginSample {
    pub l: usize,
    pub n: usize,
    pub sigma_min: f64,
}

/// σ_min for each l and each grid size in `ladder`.
pub fn kernel_margins(base: &dyn RadialBase, ls: &[usize], ladder: &[usize], opts: &LinopOptions) -> Result<Vec<MarginSample>, LinopError> {
    let mut out = Vec::new();
    for &l in ls {
        for &n in ladder {
            let op = assemble_mode(base, l, &LinopOptions { n, ..*opts })?;
            let (s, _) = op.sigma_min()?;
            out.push(MarginSample { l, n: op.len(), sigma_min: s });
        }
    }
    Ok(out)
}
