//! JSON run configuration.

use std::path::Path;

use ambc_core::model::{IdaskRatio, Modulation, SystemConfig};
use ambc_core::montecarlo::{AxisValue, DetectorKind, SweepAxis, SweepSpec, ThresholdMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_PFA: f64 = 0.01;
pub const DEFAULT_PFA_GRID: [f64; 7] = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1];

/// The on-disk configuration. Every key is optional; missing keys take the
/// library defaults. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<IdaskRatio>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_gamma_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_var_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulation: Option<Modulation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<SweepAxis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<AxisValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detectors: Option<Vec<DetectorKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_mode: Option<ThresholdMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pfa_target: Option<f64>,
    /// Keeps `N = n_per_m * M` on an antenna sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_per_m: Option<usize>,
    /// False-alarm targets of the `roc` command.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pfa_grid: Option<Vec<f64>>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub pfa: Option<f64>,
}

/// A configuration with every default filled in and every constraint checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub system: SystemConfig,
    pub sweep: SweepSpec,
    pub pfa_grid: Vec<f64>,
}

impl ResolvedConfig {
    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("configuration serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn seed(&self) -> u64 {
        self.system.seed
    }
}

impl RunConfigFile {
    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn resolve(&self, overrides: &Overrides) -> CliResult<ResolvedConfig> {
        let d = SystemConfig::default();
        let system = SystemConfig {
            antennas: self.m.unwrap_or(d.antennas),
            half_len: self.n.unwrap_or(d.half_len),
            idask: self.k.unwrap_or(d.idask),
            gamma_db: self.gamma_db.unwrap_or(d.gamma_db),
            delta_gamma_db: self.delta_gamma_db.unwrap_or(d.delta_gamma_db),
            noise_var_dbm: self.noise_var_dbm.unwrap_or(d.noise_var_dbm),
            modulation: self.modulation.unwrap_or(d.modulation),
            prior_c1: self.prior_c1.unwrap_or(d.prior_c1),
            m_index: self.m_index.unwrap_or(d.m_index),
            seed: overrides.seed.or(self.seed).unwrap_or(d.seed),
        };
        system.validate()?;
        let axis = self.axis.unwrap_or(SweepAxis::GammaDb);
        let values = match &self.values {
            Some(v) => v.clone(),
            None if self.axis.is_none() => vec![AxisValue::Number(system.gamma_db)],
            None => {
                return Err(CliError::Usage(format!(
                    "axis '{}' is set but 'values' is missing",
                    axis.as_str()
                )))
            }
        };
        let sweep = SweepSpec {
            base: system.clone(),
            axis,
            values,
            trials: overrides.trials.or(self.trials).unwrap_or(DEFAULT_TRIALS),
            detectors: self.detectors.clone().unwrap_or_else(|| vec![DetectorKind::Se]),
            threshold_mode: self.threshold_mode.unwrap_or_default(),
            pfa_target: overrides.pfa.or(self.pfa_target).unwrap_or(DEFAULT_PFA),
            n_per_m: self.n_per_m,
        };
        sweep.validate()?;
        let pfa_grid = self.pfa_grid.clone().unwrap_or_else(|| DEFAULT_PFA_GRID.to_vec());
        if pfa_grid.is_empty() || pfa_grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(ambc_core::Error::Config("pfa_grid must be a non-empty list of values in (0, 1)".into()).into());
        }
        Ok(ResolvedConfig {
            system,
            sweep,
            pfa_grid,
        })
    }
}
