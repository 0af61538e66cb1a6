//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # link budget
//! snr_db = 5
//! eps = 1e-12, 1e-6
//! hops = 4
//! ```
//!
//! List-valued keys take comma-separated values. `#` starts a comment
//! anywhere on a line.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{ConfigError, Error, Result};

pub const DEFAULT_N_GRID: [u64; 16] = [
    60, 70, 80, 100, 120, 200, 500, 700, 1000, 1500, 2000, 5000, 7000, 10000, 20000, 30000,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub snr_db_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub n_grid: Vec<u64>,
    pub hops: u64,
    pub mean_phase: f64,
    pub trials: u64,
    pub steps: usize,
    pub seed: u64,
    /// `-` writes to standard output.
    pub output_path: String,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            snr_db_list: vec![5.0],
            eps_list: vec![1e-12],
            n_grid: DEFAULT_N_GRID.to_vec(),
            hops: 10,
            mean_phase: 0.5,
            trials: 100_000,
            steps: 200,
            seed: 42,
            output_path: "-".into(),
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    /// Checks cross-field invariants, for configs assembled outside
    /// [`load_config`] (e.g. after command-line overrides).
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Configuration(msg));
        if self.snr_db_list.is_empty() || self.eps_list.is_empty() || self.n_grid.is_empty() {
            return bad("snr_db, eps and n_grid must be non-empty".into());
        }
        if let Some(s) = self.snr_db_list.iter().find(|s| !s.is_finite()) {
            return bad(format!("snr_db {s} is not finite"));
        }
        if let Some(e) = self.eps_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("eps {e} outside (0, 1)"));
        }
        if self.n_grid[0] < 2 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("n_grid must be strictly ascending with entries >= 2".into());
        }
        if self.hops == 0 {
            return bad("hops must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.mean_phase) {
            return bad(format!("mean_phi {} outside [0, 1]", self.mean_phase));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.steps < crate::detect::MIN_STEPS {
            return bad(format!("steps must be >= {}", crate::detect::MIN_STEPS));
        }
        Ok(())
    }
}

fn parse_list<T: FromStr>(value: &str) -> Option<Vec<T>> {
    value.split(',').map(|v| v.trim().parse().ok()).collect()
}

/// Parses configuration text. Every key is optional.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        }
        let bad_value = || ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        };
        let out_of_range = |reason: &str| ConfigError::OutOfRange {
            line,
            key: key.to_string(),
            reason: reason.to_string(),
        };
        // Integers go through i64 so a negative value is a range error, not
        // a parse error.
        let int = |min: i64| -> Result<i64, ConfigError> {
            let v: i64 = value.parse().map_err(|_| bad_value())?;
            if v < min {
                return Err(out_of_range(&format!("must be >= {min}")));
            }
            Ok(v)
        };

        match key {
            "snr_db" => {
                let v: Vec<f64> = parse_list(value).ok_or_else(bad_value)?;
                if v.iter().any(|s| !s.is_finite()) {
                    return Err(out_of_range("must be finite"));
                }
                cfg.snr_db_list = v;
            }
            "eps" => {
                let v: Vec<f64> = parse_list(value).ok_or_else(bad_value)?;
                if v.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                    return Err(out_of_range("every eps must lie in (0, 1)"));
                }
                cfg.eps_list = v;
            }
            "n_grid" => {
                let v: Vec<i64> = parse_list(value).ok_or_else(bad_value)?;
                if v.iter().any(|&n| n < 2) {
                    return Err(out_of_range("blocklengths must be >= 2"));
                }
                if v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(out_of_range("must be strictly ascending"));
                }
                cfg.n_grid = v.into_iter().map(|n| n as u64).collect();
            }
            "hops" => cfg.hops = int(1)? as u64,
            "mean_phi" | "mean_phase" => {
                let v: f64 = value.parse().map_err(|_| bad_value())?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(out_of_range("must lie in [0, 1]"));
                }
                cfg.mean_phase = v;
            }
            "trials" => cfg.trials = int(1)? as u64,
            "steps" => cfg.steps = int(crate::detect::MIN_STEPS as i64)? as usize,
            "seed" => cfg.seed = value.parse().map_err(|_| bad_value())?,
            "out" | "output_path" => cfg.output_path = value.to_string(),
            "format" => cfg.format = value.parse().map_err(|_| bad_value())?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Missing {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
