//! Shared numerical kernels: adaptive ODE integration with dense output,
//! Gauss–Legendre quadrature, Legendre polynomials and axisymmetric harmonics,
//! Chebyshev interpolation and small dense linear algebra.

mod cheb;
mod legendre;
mod linalg;
mod ode;
mod quad;

pub use cheb::{cheb_nodes, cheb_t_all, clenshaw, ChebBasis};
pub use legendre::{legendre_all, legendre_p, y_l0};
pub use linalg::{smallest_singular_value, svd, DenseMatrix, Lu, Svd};
pub use ode::{integrate_ivp, OdeOptions, Stop, Trajectory};
pub use quad::{adaptive_gauss, gauss_legendre, GaussRule};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("stiffness/singularity: step size underflow at r = {r:.6e} (h = {h:.3e})")]
    StepUnderflow { r: f64, h: f64 },
    #[error("no event before r_max = {r_max:.6e}")]
    NoEvent { r_max: f64 },
    #[error("step budget of {steps} exhausted at r = {r:.6e}")]
    TooManySteps { steps: usize, r: f64 },
    #[error("non-finite value in {what} at x = {x:.6e}")]
    NonFinite { what: &'static str, x: f64 },
    #[error("matrix is singular to working precision (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// Strictly increasing nodes on `[0, R]` with both endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    /// Uniform grid of `n` intervals (n + 1 nodes) on `[0, r_max]`.
    pub fn uniform(r_max: f64, n: usize) -> Result<Self, NumericsError> {
        if !(r_max > 0.0) || n == 0 {
            return Err(NumericsError::Invalid(format!(
                "uniform grid needs r_max > 0 and n >= 1 (got {r_max}, {n})"
            )));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| r_max * i as f64 / n as f64).collect();
        nodes[n] = r_max;
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, NumericsError> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(NumericsError::Invalid("grid must start at 0 with >= 2 nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(NumericsError::Invalid("grid nodes must be finite and strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
}

/// Relative sup-norm difference helper used by diagnostics.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
