//! Run configuration: a flat TOML file, every key optional.
//!
//! ```toml
//! model = "ep"              # "ep" | "vp"
//! eos = "power"             # "power" | "power-sum"
//! gamma = 1.5
//! terms = [[1.0, 1.5], [1.0, 1.8]]
//! mu = 0.0
//! psi = "quadratic(1)"      # "const" | "const(c)" | "quadratic(c)"
//! a = 1.0
//! rotation = "constant"     # "constant" (omega) | "power" (omega^2 = rotation_c r^rotation_k)
//! omega = 1.0
//! kappa = [0.0, 5e-4, 1e-3]
//! ```

use crate::dilation::EPS0;
use crate::eos::{power_law, power_sum, EquationOfState, RotationProfile, SampleSpec};
use crate::linop::LinopOptions;
use crate::rotating::{NewtonOptions, PotentialOptions, ShapeOptions};
use crate::vlasov::{Psi, VlasovAnsatz};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ep,
    Vp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: Model,
    pub eos: String,
    pub gamma: f64,
    /// (coefficient, exponent) pairs of a power sum
    pub terms: Vec<[f64; 2]>,
    pub mu: f64,
    pub psi: String,
    pub a: f64,
    pub rotation: String,
    pub omega: f64,
    pub rotation_c: f64,
    pub rotation_k: f64,
    /// continuation schedule
    pub kappa: Vec<f64>,
    /// κ at which `perturb` reports radii
    pub kappa_perturb: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub n_samples: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub n_s: usize,
    /// operator nodes for perturbation solves
    pub n: usize,
    pub panel_order: usize,
    pub shape_panel_order: usize,
    pub ladder: Vec<usize>,
    pub l_max: usize,
    pub floor: f64,
    pub dump_operator: bool,
    pub grid_r: usize,
    pub grid_theta: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub max_step: f64,
    pub min_step: f64,
    pub cap: f64,
    pub potential_l_max: usize,
    pub n_mu: usize,
    pub n_piece: usize,
    pub n_ball: usize,
    /// angular samples of boundary tables
    pub n_theta_out: usize,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pot = PotentialOptions::default();
        let newton = NewtonOptions::default();
        let lin = LinopOptions::default();
        Self {
            model: Model::Ep,
            eos: "power".into(),
            gamma: 1.5,
            terms: Vec::new(),
            mu: 0.0,
            psi: "quadratic(1)".into(),
            a: 1.0,
            rotation: "constant".into(),
            omega: 1.0,
            rotation_c: 1.0,
            rotation_k: 0.0,
            kappa: vec![0.0, 5e-4, 1e-3],
            kappa_perturb: 1e-3,
            a_min: 0.5,
            a_max: 2.0,
            n_samples: 16,
            s_min: 1e-8,
            s_max: 1e8,
            n_s: 161,
            n: lin.n,
            panel_order: lin.panel_order,
            shape_panel_order: ShapeOptions::default().linop.panel_order,
            ladder: vec![128, 256, 512],
            l_max: 4,
            floor: lin.floor,
            dump_operator: false,
            grid_r: newton.n_r,
            grid_theta: newton.n_theta,
            tol: newton.tol,
            max_iter: newton.max_iter,
            max_step: newton.max_step,
            min_step: newton.min_step,
            cap: EPS0,
            potential_l_max: pot.l_max,
            n_mu: pot.n_mu,
            n_piece: pot.n_piece,
            n_ball: pot.n_ball,
            n_theta_out: 91,
            out: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn parse_call(s: &str, name: &str) -> Option<Result<f64, ConfigError>> {
    let rest = s.strip_prefix(name)?.trim();
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.trim().parse::<f64>().map_err(|_| invalid(format!("cannot parse number in psi = \"{s}\""))))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("a", self.a),
            ("tol", self.tol),
            ("max_step", self.max_step),
            ("min_step", self.min_step),
            ("cap", self.cap),
            ("floor", self.floor),
            ("s_min", self.s_min),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{k} must be positive and finite (got {v})")));
            }
        }
        if self.kappa.first().copied() != Some(0.0) {
            return Err(invalid("kappa schedule must start at 0"));
        }
        if self.kappa.iter().any(|k| !k.is_finite()) {
            return Err(invalid("kappa schedule must be finite"));
        }
        if !(self.a_max > self.a_min && self.a_min > 0.0) || self.n_samples < 2 {
            return Err(invalid("mass curve needs 0 < a_min < a_max and n_samples >= 2"));
        }
        if !(self.s_max > self.s_min) || self.n_s < 2 {
            return Err(invalid("eos sampling needs s_min < s_max and n_s >= 2"));
        }
        if self.ladder.is_empty() || self.max_iter == 0 || self.grid_r < 2 || self.grid_theta < 1 || self.n_theta_out < 2 {
            return Err(invalid("ladder, max_iter, grid sizes and n_theta_out must be non-trivial"));
        }
        if self.potential_l_max % 2 == 1 {
            return Err(invalid("potential_l_max must be even"));
        }
        if self.cap > EPS0 {
            return Err(invalid(format!("cap must not exceed {EPS0}")));
        }
        match self.model {
            Model::Ep => {
                self.equation_of_state()?;
            }
            Model::Vp => {
                self.ansatz()?;
            }
        }
        self.rotation_profile()?;
        Ok(())
    }

    pub fn equation_of_state(&self) -> Result<EquationOfState, ConfigError> {
        let r = match self.eos.as_str() {
            "power" => power_law(self.gamma),
            "power-sum" => {
                let t: Vec<(f64, f64)> = self.terms.iter().map(|p| (p[0], p[1])).collect();
                power_sum(&t)
            }
            other => return Err(invalid(format!("unknown eos \"{other}\" (power | power-sum)"))),
        };
        r.map_err(|e| invalid(e.to_string()))
    }

    pub fn psi(&self) -> Result<Psi, ConfigError> {
        let s = self.psi.trim();
        if s == "const" {
            return Ok(Psi::Constant(1.0));
        }
        if let Some(c) = parse_call(s, "const") {
            return Ok(Psi::Constant(c?));
        }
        if let Some(c) = parse_call(s, "quadratic") {
            return Ok(Psi::Quadratic(c?));
        }
        Err(invalid(format!("unknown psi \"{s}\" (const | const(c) | quadratic(c))")))
    }

    pub fn ansatz(&self) -> Result<VlasovAnsatz, ConfigError> {
        VlasovAnsatz::polytropic(self.mu, self.psi()?).map_err(|e| invalid(e.to_string()))
    }

    pub fn rotation_profile(&self) -> Result<RotationProfile, ConfigError> {
        match self.rotation.as_str() {
            "constant" if self.omega.is_finite() => Ok(RotationProfile::rigid(self.omega)),
            "power" if self.rotation_c >= 0.0 && self.rotation_k >= 0.0 => {
                Ok(RotationProfile::Power { c: self.rotation_c, k: self.rotation_k })
            }
            "constant" | "power" => Err(invalid("rotation parameters out of range (omega finite; rotation_c, rotation_k >= 0)")),
            other => Err(invalid(format!("unknown rotation \"{other}\" (constant | power)"))),
        }
    }

    pub fn linop(&self) -> LinopOptions {
        LinopOptions { n: self.n, panel_order: self.panel_order, floor: self.floor, ..LinopOptions::default() }
    }

    pub fn shape(&self) -> ShapeOptions {
        let d = ShapeOptions::default();
        ShapeOptions { linop: LinopOptions { panel_order: self.shape_panel_order, ..self.linop() }, ..d }
    }

    pub fn potential(&self) -> PotentialOptions {
        PotentialOptions {
            l_max: self.potential_l_max,
            n_mu: self.n_mu,
            n_piece: self.n_piece,
            n_ball: self.n_ball,
            ..PotentialOptions::default()
        }
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            max_step: self.max_step,
            min_step: self.min_step,
            n_r: self.grid_r,
            n_theta: self.grid_theta,
            cap: self.cap,
            potential: self.potential(),
        }
    }

    pub fn samples(&self) -> SampleSpec {
        SampleSpec { s_min: self.s_min, s_max: self.s_max, n: self.n_s }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn parses_models_and_rejects_garbage() {
        let c = RunConfig::from_toml("model = \"vp\"\nmu = 0.25\npsi = \"quadratic(2.5)\"\n").unwrap();
        assert_eq!(c.psi().unwrap(), Psi::Quadratic(2.5));
        let c = RunConfig::from_toml("eos = \"power-sum\"\nterms = [[1.0, 1.5], [1.0, 1.8]]\n").unwrap();
        assert!(c.equation_of_state().is_ok());
        for bad in [
            "gama = 1.5",
            "gamma = 0.5",
            "kappa = [1e-3]",
            "tol = -1.0",
            "model = \"mhd\"",
            "psi = \"cubic(1)\"\nmodel = \"vp\"",
            "rotation = \"spiral\"",
            "gamma = ",
        ] {
            assert!(RunConfig::from_toml(bad).is_err(), "{bad}");
        }
    }
}
