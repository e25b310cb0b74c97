use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Settings read from `--config`. Every key is optional; flags given on the
/// command line win over the file, and the file wins over built-in defaults.
///
/// The file is TOML, so plain `key = value` lines work:
///
/// ```text
/// n_r = 512
/// n_theta = 1024
/// eps = [1e-3, 5e-4, 2.5e-4]
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_r: Option<usize>,
    pub n_theta: Option<usize>,
    pub refine: Option<bool>,
    pub eps_ratio: Option<f64>,
    pub radius_factor: Option<f64>,
    pub max_radius_doublings: Option<u32>,
    pub eps: Option<Vec<f64>>,
    pub chunk: Option<usize>,
    pub tracking_tol: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_odd: Option<u32>,
    pub m_max: Option<usize>,
    pub initial_scale: Option<f64>,
    pub max_halvings: Option<u32>,
    pub samples: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("eps_ratio", self.eps_ratio),
            ("radius_factor", self.radius_factor),
            ("tracking_tol", self.tracking_tol),
            ("tol", self.tol),
            ("initial_scale", self.initial_scale),
        ];
        for (key, v) in positive {
            if let Some(v) = v {
                check_positive(key, v)?;
            }
        }
        if let Some(eps) = &self.eps {
            for &e in eps {
                check_positive("eps", e)?;
            }
        }
        Ok(())
    }
}

pub fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} must be positive and finite, got {v}")))
    }
}
