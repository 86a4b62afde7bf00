//! Steady states of rotating self-gravitating bodies.
//!
//! Two models share one pipeline. For a compressible fluid with a barotropic
//! pressure law ([`eos`]) the radial star comes from [`radial`]; for a
//! collisionless system the phase-space ansatz and its radial star live in
//! [`vlasov`]. Rotating states are the radial star composed with a near
//! identity dilation ([`dilation`]), found by solving the linearized problem
//! harmonic by harmonic ([`linop`]) and then by Newton continuation in the
//! rotation intensity with the total mass held fixed ([`rotating`]).
//!
//! ```
//! use rotstar::eos::power_law;
//! use rotstar::radial::solve_radial;
//!
//! let star = solve_radial(&power_law(2.0).unwrap(), 1.0).unwrap();
//! assert!((star.radius - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-7);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod numerics;
pub mod eos;
pub mod radial;
pub mod dilation;
pub mod linop;
mod engine;
pub mod rotating;
pub mod vlasov;
pub mod config;
pub mod output;
pub mod error;
pub mod cli;
