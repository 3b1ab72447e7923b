//! Flat JSON experiment configuration.
//!
//! Every key is optional; the defaults describe the ideal lossless scenario
//! with no eavesdropper. Unknown keys are rejected.
//!
//! ```json
//! { "mode": "michelson", "source": "single_photon", "rounds": 10000,
//!   "t_a": 1.0, "t_b": 1.0, "eta": 1.0, "dark": 0.0,
//!   "phase_noise_sigma": 0.0, "static_phase": 0.0,
//!   "eve": "none", "tap_transmittance": 1.0,
//!   "sample_fraction": 0.1, "qber_threshold": 0.11, "seed": 0 }
//! ```
//!
//! `mu` is the mean photon number of the `coherent` source.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::adversary::EveStrategy;
use crate::devices::{ChannelModel, DetectorModel, RngSeed};
use crate::error::{check_range, check_unit};
use crate::protocol::InterferometerMode;
use crate::Error;

pub const DEFAULT_ROUNDS: u64 = 10_000;
pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.1;
pub const DEFAULT_QBER_THRESHOLD: f64 = 0.11;
pub const DEFAULT_MU: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {0} does not exist")]
    MissingFile(String),
    #[error("could not read {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error("malformed config {origin}: {message}")]
    Malformed { origin: String, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config value {key} = {value} is outside {expected}")]
    Range {
        key: String,
        value: f64,
        expected: String,
    },
    #[error("incompatible configuration: {0}")]
    Incompatible(String),
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        match e {
            Error::OutOfRange {
                name,
                value,
                expected,
            } => ConfigError::Range {
                key: name.to_string(),
                value,
                expected: expected.to_string(),
            },
            other => ConfigError::Incompatible(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    SinglePhoton,
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveKind {
    #[default]
    None,
    InterceptResend,
    PnsTap,
}

/// Photon source as used by the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    SinglePhoton,
    Coherent { mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: InterferometerMode,
    pub source: SourceKind,
    pub mu: f64,
    pub rounds: u64,
    pub t_a: f64,
    pub t_b: f64,
    pub eta: f64,
    pub dark: f64,
    pub phase_noise_sigma: f64,
    pub static_phase: f64,
    pub eve: EveKind,
    pub tap_transmittance: f64,
    pub sample_fraction: f64,
    pub qber_threshold: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: InterferometerMode::Michelson,
            source: SourceKind::SinglePhoton,
            mu: DEFAULT_MU,
            rounds: DEFAULT_ROUNDS,
            t_a: 1.0,
            t_b: 1.0,
            eta: 1.0,
            dark: 0.0,
            phase_noise_sigma: 0.0,
            static_phase: 0.0,
            eve: EveKind::None,
            tap_transmittance: 1.0,
            sample_fraction: DEFAULT_SAMPLE_FRACTION,
            qber_threshold: DEFAULT_QBER_THRESHOLD,
            seed: 0,
        }
    }
}

pub const KNOWN_KEYS: [&str; 15] = [
    "mode",
    "source",
    "mu",
    "rounds",
    "t_a",
    "t_b",
    "eta",
    "dark",
    "phase_noise_sigma",
    "static_phase",
    "eve",
    "tap_transmittance",
    "sample_fraction",
    "qber_threshold",
    "seed",
];

impl ExperimentConfig {
    /// Parses and validates a JSON document. `origin` names the source in
    /// error messages.
    pub fn from_json_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Malformed {
                origin: origin.to_string(),
                message: e.to_string(),
            })?;
        Self::from_json_value(value, origin)
    }

    /// Like [`ExperimentConfig::from_json_str`] for an already parsed
    /// document.
    pub fn from_json_value(value: serde_json::Value, origin: &str) -> Result<Self, ConfigError> {
        let obj = value.as_object().ok_or_else(|| ConfigError::Malformed {
            origin: origin.to_string(),
            message: "top level must be a JSON object".to_string(),
        })?;
        if let Some(k) = obj.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| ConfigError::Malformed {
                origin: origin.to_string(),
                message: e.to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json_value(load_document(path)?, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rounds < 1 {
            return Err(ConfigError::Range {
                key: "rounds".into(),
                value: self.rounds as f64,
                expected: ">= 1".into(),
            });
        }
        check_range("mu", self.mu, 0.0, f64::INFINITY, false, "[0, inf)")?;
        self.channel()?;
        self.detector()?;
        check_unit("tap_transmittance", self.tap_transmittance)?;
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(ConfigError::Range {
                key: "sample_fraction".into(),
                value: self.sample_fraction,
                expected: "(0, 1]".into(),
            });
        }
        check_unit("qber_threshold", self.qber_threshold)?;
        match (self.eve, self.source) {
            (EveKind::PnsTap, SourceKind::SinglePhoton) => Err(ConfigError::Incompatible(
                "eve = pns_tap requires source = coherent".into(),
            )),
            (EveKind::InterceptResend, SourceKind::Coherent) => Err(ConfigError::Incompatible(
                "eve = intercept_resend requires source = single_photon".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn channel(&self) -> crate::Result<ChannelModel> {
        ChannelModel::new(
            self.t_a,
            self.t_b,
            self.phase_noise_sigma,
            self.static_phase,
        )
    }

    pub fn detector(&self) -> crate::Result<DetectorModel> {
        DetectorModel::new(self.eta, self.dark)
    }

    pub fn eve_strategy(&self) -> EveStrategy {
        match self.eve {
            EveKind::None => EveStrategy::None,
            EveKind::InterceptResend => EveStrategy::InterceptResend,
            EveKind::PnsTap => EveStrategy::PnsTap {
                transmittance: self.tap_transmittance,
            },
        }
    }

    pub fn source_model(&self) -> Source {
        match self.source {
            SourceKind::SinglePhoton => Source::SinglePhoton,
            SourceKind::Coherent => Source::Coherent { mu: self.mu },
        }
    }

    pub fn rng_seed(&self) -> RngSeed {
        RngSeed(self.seed)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads a config file as raw JSON without validating it.
pub fn load_document(path: &Path) -> Result<serde_json::Value, ConfigError> {
    let shown = path.display().to_string();
    if !path.exists() {
        return Err(ConfigError::MissingFile(shown));
    }
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
        path: shown.clone(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Malformed {
        origin: shown,
        message: e.to_string(),
    })
}
