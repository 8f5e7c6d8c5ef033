//! Flat TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    OpenIsing,
    Gibbs,
    Dnls,
    MatrixInverse,
    OverlapsOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    IsingLadder,
    Tfim,
    Dnls,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionKind {
    Ordered,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Exact,
    Sampled,
}

fn one() -> f64 {
    1.0
}
fn six() -> usize {
    6
}
fn two() -> usize {
    2
}
fn sixty_four() -> usize {
    64
}
fn yes() -> bool {
    true
}
fn default_shots() -> u64 {
    1000
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t_final() -> f64 {
    6.0
}
fn default_cutoff() -> f64 {
    1e-8
}
fn default_output_every() -> usize {
    100
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("gqas-out")
}
fn ordered() -> SelectionKind {
    SelectionKind::Ordered
}
fn exact() -> BackendKind {
    BackendKind::Exact
}

/// Every knob of a run. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Defaults to the natural model of the experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    pub n_qubits: usize,
    #[serde(default = "six")]
    pub layers: usize,
    #[serde(default)]
    pub circuit_seed: u64,
    /// Seed of the random operator in `matrix_inverse`.
    #[serde(default)]
    pub matrix_seed: u64,

    #[serde(rename = "J", default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub h: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub g: f64,
    /// On-site potentials; all zero when absent.
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub periodic: bool,

    #[serde(rename = "K", default = "two")]
    pub k: usize,
    #[serde(rename = "M", default = "sixty_four")]
    pub m: usize,
    #[serde(default = "ordered")]
    pub selection: SelectionKind,
    #[serde(default)]
    pub selection_seed: u64,

    #[serde(default = "exact")]
    pub backend: BackendKind,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub shot_seed: u64,

    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_cutoff")]
    pub pinv_cutoff: f64,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub with_oracle: bool,
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))?;
        cfg.resolved()
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn potentials(&self) -> Vec<f64> {
        self.v.clone().unwrap_or_else(|| vec![0.0; self.n_qubits])
    }

    /// Fills experiment-dependent defaults and validates.
    pub fn resolved(mut self) -> Result<Self, CliError> {
        if self.model.is_none() {
            self.model = match self.experiment {
                ExperimentKind::OpenIsing | ExperimentKind::OverlapsOnly => Some(ModelKind::IsingLadder),
                ExperimentKind::Gibbs => Some(ModelKind::Tfim),
                ExperimentKind::Dnls => Some(ModelKind::Dnls),
                ExperimentKind::MatrixInverse => None,
            };
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let model = self.model;
        match (self.experiment, model) {
            (ExperimentKind::OpenIsing | ExperimentKind::Gibbs, Some(ModelKind::Dnls)) => {
                return Err(invalid("model", "dnls has no open or imaginary-time variant"));
            }
            (ExperimentKind::Dnls, Some(m)) if m != ModelKind::Dnls => {
                return Err(invalid("model", "the dnls experiment needs model = \"dnls\""));
            }
            (ExperimentKind::MatrixInverse, Some(_)) => {
                return Err(invalid("model", "matrix_inverse builds its own random operator"));
            }
            _ => {}
        }
        let max = if self.with_oracle { gqas::oracle::ORACLE_MAX_QUBITS } else { 10 };
        if self.n_qubits == 0 || self.n_qubits > max {
            return Err(invalid("n_qubits", format!("must lie in 1..={max}")));
        }
        if model == Some(ModelKind::IsingLadder) && (self.n_qubits < 4 || self.n_qubits % 2 != 0) {
            return Err(invalid("n_qubits", "the ladder needs an even count >= 4"));
        }
        if model == Some(ModelKind::Tfim) && self.n_qubits < 2 {
            return Err(invalid("n_qubits", "the chain needs at least 2 sites"));
        }
        if let Some(v) = &self.v {
            if v.len() != self.n_qubits {
                return Err(invalid("V", format!("needs {} entries, got {}", self.n_qubits, v.len())));
            }
        }
        for (key, value) in [("J", self.j), ("h", self.h), ("g", self.g)] {
            if !value.is_finite() {
                return Err(invalid(key, "must be finite"));
            }
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma", "must be finite and non-negative"));
        }
        if self.k == 0 && self.experiment != ExperimentKind::Dnls {
            return Err(invalid("K", "must be at least 1"));
        }
        if self.m == 0 {
            return Err(invalid("M", "must be at least 1"));
        }
        if self.backend == BackendKind::Sampled && self.shots == 0 {
            return Err(invalid("shots", "must be positive"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(invalid("t_final", "must be at least dt"));
        }
        if !(self.pinv_cutoff > 0.0 && self.pinv_cutoff < 1.0) {
            return Err(invalid("pinv_cutoff", "must lie in (0, 1)"));
        }
        if self.output_every == 0 {
            return Err(invalid("output_every", "must be at least 1"));
        }
        Ok(())
    }

    /// Copy with one numeric key replaced, as used by sweeps.
    pub fn with_numeric_override(&self, key: &str, value: f64) -> Result<Self, CliError> {
        let mut table = toml::Value::try_from(self).expect("config serializes");
        let slot = table
            .as_table_mut()
            .and_then(|t| t.get_mut(key))
            .ok_or_else(|| invalid(key, "not a key of this configuration"))?;
        *slot = match slot {
            toml::Value::Integer(_) => {
                if value.fract() != 0.0 || value < 0.0 || value > i64::MAX as f64 {
                    return Err(invalid(key, format!("expects a non-negative integer, got {value}")));
                }
                toml::Value::Integer(value as i64)
            }
            toml::Value::Float(_) => toml::Value::Float(value),
            _ => return Err(invalid(key, "is not numeric")),
        };
        let cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Parse(e.message().to_string()))?;
        cfg.resolved()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml_str("experiment = \"open_ising\"\nn_qubits = 6\n").unwrap();
        assert_eq!(cfg.model, Some(ModelKind::IsingLadder));
        assert_eq!(cfg.m, 64);
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.layers, 6);
        assert_eq!(cfg.dt, 1e-3);
        assert!(cfg.periodic);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_toml_str("experiment = \"gibbs\"\nn_qubits = 6\ngama = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("gama"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let err = ExperimentConfig::from_toml_str("experiment = \"open_ising\"\nn_qubits = 5\n").unwrap_err();
        assert!(err.to_string().contains("n_qubits"));
        let err = ExperimentConfig::from_toml_str("experiment = \"gibbs\"\nn_qubits = 4\ndt = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("dt"));
        let err = ExperimentConfig::from_toml_str("experiment = \"dnls\"\nn_qubits = 4\nV = [1.0]\n").unwrap_err();
        assert!(err.to_string().contains("V"));
    }

    #[test]
    fn round_trip_through_toml() {
        let cfg = ExperimentConfig::from_toml_str("experiment = \"dnls\"\nn_qubits = 8\ng = 2.0\nt_final = 10.0\n").unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn numeric_override() {
        let cfg = ExperimentConfig::from_toml_str("experiment = \"open_ising\"\nn_qubits = 6\n").unwrap();
        assert_eq!(cfg.with_numeric_override("M", 16.0).unwrap().m, 16);
        assert_eq!(cfg.with_numeric_override("gamma", 0.5).unwrap().gamma, 0.5);
        assert!(cfg.with_numeric_override("M", 1.5).is_err());
        assert!(cfg.with_numeric_override("periodic", 1.0).is_err());
        assert!(cfg.with_numeric_override("nope", 1.0).is_err());
    }
}
