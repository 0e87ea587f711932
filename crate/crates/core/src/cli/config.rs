use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Run configuration read from a TOML file. Unknown keys are rejected;
/// command-line flags override file values.
///
/// ```toml
/// [sampling]
/// directions = 1024
/// battery_samples = 200
///
/// [tolerances]
/// newton = 1e-8
///
/// [steps]
/// rk4 = 1e-3
///
/// [output]
/// dir = "out"
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub sampling: SamplingConfig,
    pub tolerances: ToleranceConfig,
    pub steps: StepConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    /// Directions on the unit circle or sphere; the dimension default when unset.
    pub directions: Option<usize>,
    pub battery_samples: usize,
    pub fan_points: usize,
    pub fan_angles: usize,
    pub receivers: usize,
    /// Radii of the lowest-point expansion sweep.
    pub expansion_radii: Vec<f64>,
    /// Points of the Herglotz radius grid.
    pub herglotz_radii: usize,
    pub herglotz_angles: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            directions: None,
            battery_samples: 200,
            fan_points: 64,
            fan_angles: 16,
            receivers: 32,
            expansion_radii: vec![0.4, 0.5, 0.6, 0.7, 0.8],
            herglotz_radii: 57,
            herglotz_angles: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// Relative eigenvalue gap for the degeneracy detector.
    pub gap: f64,
    /// Normalized `‖∇P‖` for the degeneracy detector.
    pub gradient: f64,
    /// Relative qP gap below which Finsler evaluations are refused.
    pub qp_gap: f64,
    pub newton: f64,
    pub exit: f64,
    /// Shooting miss relative to the domain diameter.
    pub shooting: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            gap: 1e-8,
            gradient: 1e-6,
            qp_gap: 1e-6,
            newton: 1e-8,
            exit: 1e-10,
            shooting: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepConfig {
    pub rk4: f64,
    pub fiber: f64,
    pub base: f64,
    pub expansion: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            rk4: 1e-3,
            fiber: 1e-4,
            base: 1e-3,
            expansion: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Format(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        let s = &self.steps;
        let positive = [
            ("tolerances.gap", t.gap),
            ("tolerances.gradient", t.gradient),
            ("tolerances.qp_gap", t.qp_gap),
            ("tolerances.newton", t.newton),
            ("tolerances.exit", t.exit),
            ("tolerances.shooting", t.shooting),
            ("steps.rk4", s.rk4),
            ("steps.fiber", s.fiber),
            ("steps.base", s.base),
            ("steps.expansion", s.expansion),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        let c = &self.sampling;
        let minima = [
            ("sampling.directions", c.directions.unwrap_or(8), 8),
            ("sampling.battery_samples", c.battery_samples, 1),
            ("sampling.fan_points", c.fan_points, 1),
            ("sampling.fan_angles", c.fan_angles, 1),
            ("sampling.receivers", c.receivers, 1),
            ("sampling.herglotz_radii", c.herglotz_radii, 2),
            ("sampling.herglotz_angles", c.herglotz_angles, 1),
        ];
        for (name, v, min) in minima {
            if v < min {
                return Err(Error::InvalidInput(format!("{name} must be at least {min}, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn strict_keys_and_ranges() {
        assert!(RunConfig::parse("[sampling]\ndirection = 4\n").is_err());
        assert!(RunConfig::parse("[tolerances]\nnewton = 0.0\n").is_err());
        assert!(RunConfig::parse("[sampling]\ndirections = 4\n").is_err());
        let cfg = RunConfig::parse("[steps]\nrk4 = 5e-4\n[output]\ndir = \"runs\"\n").unwrap();
        assert_eq!(cfg.steps.rk4, 5e-4);
        assert_eq!(cfg.output.dir, Some(PathBuf::from("runs")));
    }
}
