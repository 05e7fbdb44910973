//! TOML run configuration.
//!
//! ```toml
//! grid = [8, 8, 8, 8]
//! G = [1.0, 1.0, 0.0, 0.0]            # a11, a22, Re a12, Im a12 (+ 2 reserved)
//! H = [2.0, 2.0, 0.0, 0.0]
//! sigma = 0.2
//! tol_stop = 1e-10
//! t_max = 200.0
//! sample_interval = 50
//! snapshot_interval = 0
//! # A_override = 0.0
//! seed = 0
//! output_dir = "out"
//!
//! [[psi0_spec]]
//! k = [1, 0, 0, 0]
//! amplitude = 0.05
//! phase = 0.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use jflow_core::{FourierMode, GridShape, HermitianMatrix2, NewtonOptions, ScalarField, SurfaceModel};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: [i32; 4],
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: Vec<i64>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    #[serde(default = "defaults::sigma")]
    pub sigma: f64,
    #[serde(default = "defaults::tol_stop")]
    pub tol_stop: f64,
    #[serde(default = "defaults::t_max")]
    pub t_max: f64,
    #[serde(default = "defaults::sample_interval")]
    pub sample_interval: u64,
    #[serde(default)]
    pub snapshot_interval: u64,
    #[serde(rename = "A_override", default, skip_serializing_if = "Option::is_none")]
    pub a_override: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "defaults::newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "defaults::newton_max_iter")]
    pub newton_max_iter: u64,
    #[serde(default)]
    pub psi0_spec: Vec<ModeSpec>,
}

mod defaults {
    use std::path::PathBuf;

    pub fn sigma() -> f64 {
        0.2
    }
    pub fn tol_stop() -> f64 {
        1e-10
    }
    pub fn t_max() -> f64 {
        200.0
    }
    pub fn sample_interval() -> u64 {
        50
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn newton_tol() -> f64 {
        1e-11
    }
    pub fn newton_max_iter() -> u64 {
        20
    }
}

/// One failed check, with the dotted key path it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

pub fn to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config values are representable in TOML")
}

fn matrix(v: &[f64]) -> HermitianMatrix2 {
    HermitianMatrix2::new(v[0], v[1], Complex64::new(v[2], v[3]))
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut out = Vec::new();
        let mut bad = |key: &str, reason: &str| out.push(Violation { key: key.into(), reason: reason.into() });

        if self.grid.len() != 4 {
            bad("grid", "grid must have exactly four dims");
        } else if self.grid.iter().any(|&n| n < 4) {
            bad("grid", "grid dims must be at least 4");
        } else if self.grid.iter().any(|&n| n % 2 != 0) {
            bad("grid", "grid dims must be even");
        }
        for (key, m) in [("G", &self.g), ("H", &self.h)] {
            if m.len() != 4 && m.len() != 6 {
                bad(key, "expected 4 reals (a11, a22, Re a12, Im a12) or 6 with two reserved slots");
            } else if m.iter().any(|v| !v.is_finite()) {
                bad(key, "entries must be finite");
            } else if key == "G" && !matrix(m).is_positive_definite() {
                // positivity of χ₀ is a hypothesis checked on the model, not here
                bad(key, "background metric must be positive definite");
            }
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            bad("sigma", "sigma must lie in (0, 1]");
        }
        if !(self.tol_stop > 0.0 && self.tol_stop.is_finite()) {
            bad("tol_stop", "tol_stop must be positive");
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            bad("t_max", "t_max must be finite and non-negative");
        }
        if self.sample_interval == 0 {
            bad("sample_interval", "sample_interval must be at least 1");
        }
        if let Some(a) = self.a_override {
            if !a.is_finite() {
                bad("A_override", "A_override must be finite");
            }
        }
        if !(self.newton_tol > 0.0 && self.newton_tol.is_finite()) {
            bad("newton_tol", "newton_tol must be positive");
        }
        if self.newton_max_iter == 0 {
            bad("newton_max_iter", "newton_max_iter must be at least 1");
        }
        let shape = self.shape().ok();
        for (i, m) in self.psi0_spec.iter().enumerate() {
            if !m.amplitude.is_finite() {
                bad(&format!("psi0_spec[{i}].amplitude"), "amplitude must be finite");
            }
            if !m.phase.is_finite() {
                bad(&format!("psi0_spec[{i}].phase"), "phase must be finite");
            }
            if let Some(shape) = shape {
                if !FourierMode::new(m.k, m.amplitude, m.phase).resolved_by(shape) {
                    bad(&format!("psi0_spec[{i}].k"), "each |k| must be below half the grid dim on its axis");
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(out))
        }
    }

    pub fn shape(&self) -> Result<GridShape, jflow_core::GridError> {
        let mut dims = [0usize; 4];
        for (d, &n) in dims.iter_mut().zip(&self.grid) {
            *d = usize::try_from(n).unwrap_or(0);
        }
        if self.grid.len() != 4 {
            return Err(jflow_core::GridError::InvalidShape(dims));
        }
        GridShape::new(dims)
    }

    pub fn g_matrix(&self) -> HermitianMatrix2 {
        matrix(&self.g)
    }

    pub fn h_matrix(&self) -> HermitianMatrix2 {
        matrix(&self.h)
    }

    pub fn modes(&self) -> Vec<FourierMode> {
        self.psi0_spec.iter().map(|m| FourierMode::new(m.k, m.amplitude, m.phase)).collect()
    }

    /// The normalized model; assumes [`validate`](Self::validate) passed.
    pub fn model(&self) -> Result<SurfaceModel, jflow_core::ModelError> {
        let shape = self.shape()?;
        let psi0 = ScalarField::from_modes(shape, &self.modes());
        Ok(SurfaceModel::new(self.g_matrix(), self.h_matrix(), psi0)?.normalized())
    }

    pub fn flow_config(&self, exponent_a: f64) -> jflow_core::FlowConfig {
        jflow_core::FlowConfig {
            sigma: self.sigma,
            tol_stop: self.tol_stop,
            t_max: self.t_max,
            sample_interval: self.sample_interval as usize,
            exponent_a,
            ..jflow_core::FlowConfig::default()
        }
    }

    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions { tol: self.newton_tol, max_iter: self.newton_max_iter as usize, ..NewtonOptions::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "grid = [8, 8, 8, 8]\nG = [1.0, 1.0, 0.0, 0.0]\nH = [2.0, 2.0, 0.0, 0.0]\n";

    fn keys(text: &str) -> Vec<String> {
        parse_config(text).unwrap_err().violations().iter().map(|v| v.key.clone()).collect()
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.sigma, 0.2);
        assert_eq!(cfg.tol_stop, 1e-10);
        assert_eq!(cfg.t_max, 200.0);
        assert_eq!(cfg.snapshot_interval, 0);
        assert_eq!(cfg.a_override, None);
        assert!(cfg.psi0_spec.is_empty());
    }

    #[test]
    fn odd_grid_is_rejected_with_reason() {
        let err = parse_config(&MINIMAL.replace("[8, 8, 8, 8]", "[7, 8, 8, 8]")).unwrap_err();
        assert_eq!(err.violations()[0].reason, "grid dims must be even");
        assert_eq!(err.violations()[0].key, "grid");
    }

    #[test]
    fn sigma_out_of_range() {
        assert_eq!(keys(&format!("{MINIMAL}sigma = 1.5\n")), vec!["sigma"]);
        assert_eq!(keys(&format!("{MINIMAL}sigma = 0.0\n")), vec!["sigma"]);
        assert!(parse_config(&format!("{MINIMAL}sigma = 1.0\n")).is_ok());
    }

    #[test]
    fn every_violation_is_reported() {
        let text = "grid = [8, 8, 6, 8]\nG = [1.0, 1.0, 2.0, 0.0]\nH = [2.0, 2.0, 0.0]\nt_max = -1.0\n\
                    [[psi0_spec]]\nk = [0, 0, 3, 0]\namplitude = 0.1\n";
        assert_eq!(keys(text), vec!["G", "H", "t_max", "psi0_spec[0].k"]);
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let err = parse_config(&format!("{MINIMAL}sigmaa = 0.3\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(err.to_string().contains("sigmaa"));
        assert!(err.to_string().contains("line 4"), "{err}");
    }

    #[test]
    fn six_slot_matrices_consume_four() {
        let cfg = parse_config(&MINIMAL.replace("[2.0, 2.0, 0.0, 0.0]", "[2.0, 2.0, 0.5, 0.1, 9.0, 9.0]")).unwrap();
        assert_eq!(cfg.h_matrix(), HermitianMatrix2::new(2.0, 2.0, Complex64::new(0.5, 0.1)));
    }
}
