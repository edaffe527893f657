//! Experiment configuration: TOML file, `key=value` overrides, defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub simulate: SimulateConfig,
    pub crossings: CrossingsConfig,
    pub spectral: SpectralConfig,
    pub scalespace: ScalespaceConfig,
    pub verify: VerifyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            out: PathBuf::from("shotnoise-out"),
            threads: 0,
            simulate: SimulateConfig::default(),
            crossings: CrossingsConfig::default(),
            spectral: SpectralConfig::default(),
            scalespace: ScalespaceConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub kernel: String,
    pub impulses: String,
    pub intensity: f64,
    pub a: f64,
    pub b: f64,
    pub step: f64,
    pub replications: usize,
    pub max_order: usize,
    pub truncation: f64,
    pub normalized: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            kernel: "gaussian:sigma=1".into(),
            impulses: "one".into(),
            intensity: 1.0,
            a: 0.0,
            b: 20.0,
            step: 0.05,
            replications: 1,
            max_order: 2,
            truncation: 1e-8,
            normalized: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingsConfig {
    pub kernel: String,
    pub impulses: String,
    pub intensity: f64,
    pub a: f64,
    pub b: f64,
    pub step: f64,
    pub replications: usize,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub alpha_n: usize,
    pub normalized: bool,
    /// Condition on at least this many points in `[−T, T]` (0 disables).
    pub condition_min_count: usize,
    pub condition_half_width: f64,
}

impl Default for CrossingsConfig {
    fn default() -> Self {
        Self {
            kernel: "gaussian:sigma=1".into(),
            impulses: "one".into(),
            intensity: 2.0,
            a: 0.0,
            b: 20.0,
            step: 0.05,
            replications: 200,
            alpha_lo: -0.5,
            alpha_hi: 8.0,
            alpha_n: 171,
            normalized: false,
            condition_min_count: 0,
            condition_half_width: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub kernel: String,
    pub impulses: String,
    pub intensity: f64,
    pub length: f64,
    pub u_points: usize,
    /// Half-width of the u-grid; 0 picks `8/sd`.
    pub u_max: f64,
    pub tol: f64,
    pub alpha_n: usize,
    /// Monte Carlo replications for the comparison (0 skips it).
    pub mc_replications: usize,
    pub mc_length: f64,
    pub mc_step: f64,
    pub convergence_intensities: Vec<f64>,
    pub convergence_points: usize,
    pub phase_a: f64,
    pub phase_b: f64,
    pub phase_u: Vec<f64>,
    pub ring_radii: Vec<f64>,
    pub ring_points: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            kernel: "gaussian:sigma=1".into(),
            impulses: "one".into(),
            intensity: 2.0,
            length: 1.0,
            u_points: shotnoise_core::spectral::DEFAULT_U_POINTS,
            u_max: 0.0,
            tol: 5e-4,
            alpha_n: 33,
            mc_replications: 200,
            mc_length: 20.0,
            mc_step: 0.05,
            convergence_intensities: vec![10.0, 100.0],
            convergence_points: 9,
            phase_a: -1.0,
            phase_b: 2.0,
            phase_u: vec![10.0, 1e2, 1e3, 1e4],
            ring_radii: vec![100.0, 1000.0],
            ring_points: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalespaceConfig {
    /// Width for the intensity sweep.
    pub sigma: f64,
    pub lambdas: Vec<f64>,
    pub lambda_length: f64,
    /// Intensity for the width sweep.
    pub lambda: f64,
    pub sigmas: Vec<f64>,
    pub sigma_length: f64,
    pub replications: usize,
    /// Configurations of the width sweep that are also tracked.
    pub tracked: usize,
    pub track_window: f64,
    /// `(λ, σ, c)` triples for the scaling law.
    pub scaling: Vec<[f64; 3]>,
    pub scaling_replications: usize,
    pub semigroup_sigma1: f64,
    pub semigroup_sigma2: f64,
    pub semigroup_step: f64,
}

impl Default for ScalespaceConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            lambdas: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
            lambda_length: 100.0,
            lambda: 1.0,
            sigmas: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            sigma_length: 200.0,
            replications: 200,
            tracked: 5,
            track_window: 40.0,
            scaling: vec![[1.0, 1.0, 2.0], [2.0, 0.5, 0.5]],
            scaling_replications: 500,
            semigroup_sigma1: 0.5,
            semigroup_sigma2: 0.5,
            semigroup_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// `quick` or `full`.
    pub profile: String,
    /// Suite numbers to run; empty runs all.
    pub suites: Vec<u32>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            profile: "quick".into(),
            suites: Vec::new(),
        }
    }
}

/// Parses a `--set` value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies `section.key=value` to a TOML table.
pub fn apply_set(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("`--set {assignment}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("malformed key `{key}`")));
    }
    let mut node = table;
    for p in &parts[..parts.len() - 1] {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("`{p}` in `{key}` is not a section")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Reads an optional TOML file and applies the overrides in order.
    pub fn load(file: Option<&Path>, sets: &[String]) -> Result<Self, CliError> {
        let mut table = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for s in sets {
            apply_set(&mut table, s)?;
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("configuration: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back: ExperimentConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_apply_in_order() {
        let sets = vec![
            "simulate.intensity=0".to_string(),
            "master_seed=9".to_string(),
            "simulate.kernel=sech:w=0.5".to_string(),
            "scalespace.sigmas=[0.5, 1.0]".to_string(),
            "simulate.intensity=3.5".to_string(),
        ];
        let c = ExperimentConfig::load(None, &sets).unwrap();
        assert_eq!(c.simulate.intensity, 3.5);
        assert_eq!(c.master_seed, 9);
        assert_eq!(c.simulate.kernel, "sech:w=0.5");
        assert_eq!(c.scalespace.sigmas, vec![0.5, 1.0]);
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let err = ExperimentConfig::load(None, &["simulate.intensty=1".to_string()]).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        assert!(ExperimentConfig::load(None, &["nokey".to_string()]).is_err());
    }
}
