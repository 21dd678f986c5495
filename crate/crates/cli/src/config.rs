//! Flat key = value configuration files with flag overrides.
//!
//! Files hold one `key = value` pair per line; `#` starts a comment. Keys
//! not understood by the active command are rejected by name. Values given
//! on the command line take precedence over the file; documented defaults
//! fill whatever remains.

use nhberry::dynamics::Compensation;
use nhberry::geometry::ConnectionKind;
use nhberry::gpe::EnergyConvention;
use nhberry::model::Band;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Parsed key/value file (insertion into a sorted map keeps the manifest
/// echo deterministic).
#[derive(Debug, Default, Clone)]
pub struct KvFile {
    pub entries: BTreeMap<String, String>,
}

impl KvFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(ConfigError(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    /// Reject keys outside the allowed set for the active command.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for key in self.entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(ConfigError(format!(
                    "unknown key `{key}` (allowed: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not a number"))),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not an integer"))),
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }
}

pub fn parse_band(s: &str) -> Result<Band, ConfigError> {
    match s {
        "+" | "plus" => Ok(Band::Plus),
        "-" | "minus" => Ok(Band::Minus),
        other => Err(ConfigError(format!("band must be + or -, got `{other}`"))),
    }
}

pub fn parse_kind(s: &str) -> Result<ConnectionKind, ConfigError> {
    match s.to_ascii_lowercase().as_str() {
        "lr" => Ok(ConnectionKind::LR),
        "tilderr" | "tilde" => Ok(ConnectionKind::TildeRR),
        "rr" => Ok(ConnectionKind::RR),
        other => Err(ConfigError(format!(
            "kind must be LR, TildeRR, or RR, got `{other}`"
        ))),
    }
}

pub fn parse_compensation(s: &str) -> Result<Compensation, ConfigError> {
    match s.to_ascii_lowercase().as_str() {
        "expectation" | "expectation-energy" => Ok(Compensation::ExpectationEnergy),
        "instantaneous" | "instantaneous-eigenvalue" => Ok(Compensation::InstantaneousEigenvalue),
        "none" => Ok(Compensation::None),
        other => Err(ConfigError(format!(
            "compensation must be expectation, instantaneous, or none, got `{other}`"
        ))),
    }
}

pub fn parse_convention(s: &str) -> Result<EnergyConvention, ConfigError> {
    match s.to_ascii_lowercase().as_str() {
        "full" | "full-functional" => Ok(EnergyConvention::FullFunctional),
        "peak" | "peak-spinor" => Ok(EnergyConvention::PeakSpinor),
        other => Err(ConfigError(format!(
            "energy convention must be full or peak, got `{other}`"
        ))),
    }
}

/// Comma-separated value list.
pub fn parse_values(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("`{t}` is not a number")))
        })
        .collect()
}
