//! Top-level error of a CLI run and its exit code.

use crate::config::ConfigError;
use crate::eos::EosError;
use crate::linop::LinopError;
use crate::radial::RadialError;
use crate::rotating::RotatingError;
use crate::vlasov::VlasovError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 config, 3 solver (and I/O), 4 degenerate operator.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) | RunError::Io(_) => 3,
            RunError::Degenerate(_) => 4,
        }
    }
}

fn linop(e: &LinopError) -> RunError {
    match e {
        LinopError::Degenerate { .. } => RunError::Degenerate(e.to_string()),
        _ => RunError::Solver(e.to_string()),
    }
}

impl From<LinopError> for RunError {
    fn from(e: LinopError) -> Self {
        linop(&e)
    }
}

impl From<RotatingError> for RunError {
    fn from(e: RotatingError) -> Self {
        match &e {
            RotatingError::Linop(l) => linop(l),
            _ => RunError::Solver(e.to_string()),
        }
    }
}

impl From<VlasovError> for RunError {
    fn from(e: VlasovError) -> Self {
        match e {
            VlasovError::Linop(l) => linop(&l),
            VlasovError::Rotating(r) => r.into(),
            VlasovError::Ansatz(m) => RunError::Config(ConfigError::Invalid(m)),
            other => RunError::Solver(other.to_string()),
        }
    }
}

impl From<RadialError> for RunError {
    fn from(e: RadialError) -> Self {
        RunError::Solver(e.to_string())
    }
}

impl From<EosError> for RunError {
    fn from(e: EosError) -> Self {
        RunError::Config(ConfigError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_is_found_through_wrappers() {
        let d = LinopError::Degenerate { l: 0, sigma_min: 1e-14, floor: 1e-10, diagnostics: String::new() };
        assert_eq!(RunError::from(d.clone()).exit_code(), 4);
        assert_eq!(RunError::from(RotatingError::Linop(d.clone())).exit_code(), 4);
        assert_eq!(RunError::from(VlasovError::Rotating(RotatingError::Linop(d.clone()))).exit_code(), 4);
        assert_eq!(RunError::from(VlasovError::Linop(d)).exit_code(), 4);
        assert_eq!(RunError::from(RotatingError::Domain("x".into())).exit_code(), 3);
        assert_eq!(RunError::from(ConfigError::Invalid("x".into())).exit_code(), 2);
    }
}
