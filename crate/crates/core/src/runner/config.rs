use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exponents::{check_decay_q, rational_serde, Exponent, ProblemParams, Rational, Sign};
use crate::grid::GaussianSpec;
use crate::solver::{Guards, SolverOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {error}")]
    Read { path: PathBuf, error: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config: {invariant}")]
    Validation { invariant: String },
}

fn invalid(invariant: impl Into<String>) -> ConfigError {
    ConfigError::Validation { invariant: invariant.into() }
}

fn default_sample_every() -> u64 {
    10
}

fn one() -> f64 {
    1.0
}

fn default_q_list() -> Vec<Exponent> {
    vec![Exponent::from_int(2), Exponent::from_int(4), Exponent::Infinite]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// One simulation, as a flat JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: u32,
    #[serde(with = "rational_serde")]
    pub b: Rational,
    #[serde(with = "rational_serde")]
    pub alpha: Rational,
    pub mu: Sign,
    #[serde(rename = "L")]
    pub extent: f64,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: u64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<Vec<f64>>,
    #[serde(default = "default_q_list")]
    pub q_list: Vec<Exponent>,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Integrate the free equation (no nonlinear term).
    #[serde(default)]
    pub free: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_tail: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_growth: Option<f64>,
}

impl RunConfig {
    pub fn params(&self) -> ProblemParams {
        ProblemParams { d: self.d, b: self.b.clone(), alpha: self.alpha.clone(), mu: self.mu }
    }

    pub fn gaussian(&self) -> GaussianSpec {
        let d = self.d as usize;
        GaussianSpec {
            amplitude: self.amplitude,
            sigma: self.sigma,
            center: self.center.clone().unwrap_or_else(|| vec![0.0; d]),
            momentum: self.momentum.clone().unwrap_or_else(|| vec![0.0; d]),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        let defaults = Guards::default();
        SolverOptions {
            free: self.free,
            guards: Guards {
                boundary_fraction: self.boundary_fraction.unwrap_or(defaults.boundary_fraction),
                spectral_tail: self.spectral_tail.unwrap_or(defaults.spectral_tail),
                sup_growth: self.sup_growth.unwrap_or(defaults.sup_growth),
            },
        }
    }

    /// Coefficient of the integrated nonlinearity.
    pub fn coupling(&self) -> f64 {
        if self.free {
            0.0
        } else {
            self.mu.value()
        }
    }

    /// Total number of steps.
    pub fn total_steps(&self) -> u64 {
        (self.t_final / self.dt).round() as u64
    }

    /// Time between recorded samples.
    pub fn sample_interval(&self) -> f64 {
        self.dt * self.sample_every as f64
    }

    /// Step index at which checkpoint `t` is taken.
    pub fn checkpoint_step(&self, t: f64) -> u64 {
        (t / self.dt).round() as u64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params().validate().map_err(|e| invalid(e.to_string()))?;
        if !(1..=3).contains(&self.d) {
            return Err(invalid(format!("simulation grids need 1 <= d <= 3, got d = {}", self.d)));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(invalid(format!("n = {} must be a power of two and at least 8", self.n)));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} = {v} must be positive and finite")))
            }
        };
        positive("L", self.extent)?;
        positive("dt", self.dt)?;
        positive("sigma", self.sigma)?;
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(invalid(format!("t_final = {} must be nonnegative", self.t_final)));
        }
        if !whole_steps(self.t_final, self.dt) {
            return Err(invalid(format!("t_final = {} is not a whole number of steps dt = {}", self.t_final, self.dt)));
        }
        if self.sample_every == 0 {
            return Err(invalid("sample_every must be at least 1"));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude must be finite"));
        }
        for (name, v) in [("center", &self.center), ("momentum", &self.momentum)] {
            if let Some(v) = v {
                if v.len() != self.d as usize || v.iter().any(|c| !c.is_finite()) {
                    return Err(invalid(format!("{name} must hold d = {} finite numbers", self.d)));
                }
            }
        }
        if self.q_list.is_empty() {
            return Err(invalid("q_list must not be empty"));
        }
        for q in &self.q_list {
            check_decay_q(self.d, q).map_err(|e| invalid(e.to_string()))?;
        }
        let total = self.total_steps();
        let mut last = f64::NEG_INFINITY;
        for &t in &self.checkpoints {
            if !(t.is_finite() && t > last) {
                return Err(invalid("checkpoints must be finite and strictly increasing"));
            }
            last = t;
            if t < 0.0 || t > self.t_final * (1.0 + 1e-12) || !whole_steps(t, self.dt) {
                return Err(invalid(format!("checkpoint {t} must be a step time in [0, t_final]")));
            }
            let step = self.checkpoint_step(t);
            if !step.is_multiple_of(self.sample_every) && step != total {
                return Err(invalid(format!(
                    "checkpoint {t} must fall on a sample time (multiple of {})",
                    self.sample_interval()
                )));
            }
        }
        for (name, v) in [
            ("boundary_fraction", self.boundary_fraction),
            ("spectral_tail", self.spectral_tail),
            ("sup_growth", self.sup_growth),
        ] {
            if let Some(v) = v {
                // NaN must fail too.
                if v.is_nan() || v <= 0.0 {
                    return Err(invalid(format!("{name} = {v} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Sorted-key, whitespace-free JSON of the config with defaults applied.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

fn whole_steps(t: f64, dt: f64) -> bool {
    let k = t / dt;
    (k - k.round()).abs() <= 1e-6
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|error| ConfigError::Read { path: path.to_path_buf(), error })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{int, ratio};

    const MINIMAL: &str = r#"{"d": 1, "b": "1/2", "alpha": 3, "mu": -1, "L": 64, "n": 512, "dt": 0.01, "t_final": 1}"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.sample_every, 10);
        assert_eq!(c.q_list, default_q_list());
        assert_eq!(c.alpha, int(3));
        assert_eq!(c.b, ratio(1, 2));
        assert_eq!(c.gaussian().center, vec![0.0]);
    }

    #[test]
    fn round_trip_and_hash() {
        let c = parse_config(MINIMAL).unwrap();
        let back = parse_config(&serde_json::to_string_pretty(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.content_hash(), c.content_hash());
        let canon = c.canonical_json();
        assert!(!canon.contains(' '));
        assert!(canon.starts_with(r#"{"L":64.0,"alpha":"3/1""#), "{canon}");
        let mut other = c.clone();
        other.dt = 0.005;
        assert_ne!(other.content_hash(), c.content_hash());
    }

    #[test]
    fn validation_names_invariant() {
        let bad_b = MINIMAL.replace(r#""b": "1/2""#, r#""b": "3/2""#);
        match parse_config(&bad_b) {
            Err(ConfigError::Validation { invariant }) => assert!(invariant.contains("min(2, d)"), "{invariant}"),
            other => panic!("{other:?}"),
        }
        let three_d = r#"{"d": 3, "b": "1/2", "alpha": 1, "mu": -1, "L": 16, "n": 16, "dt": 0.01, "t_final": 1, "q_list": [2, "inf"]}"#;
        match parse_config(three_d) {
            Err(ConfigError::Validation { invariant }) => assert!(invariant.contains("q = inf"), "{invariant}"),
            other => panic!("{other:?}"),
        }
        let bad_checkpoint = MINIMAL.replace("}", r#", "checkpoints": [0.05, 0.5]}"#);
        assert!(matches!(parse_config(&bad_checkpoint), Err(ConfigError::Validation { .. })));
        let bad_n = MINIMAL.replace("512", "500");
        assert!(matches!(parse_config(&bad_n), Err(ConfigError::Validation { .. })));
    }

    #[test]
    fn parse_error_has_position() {
        match parse_config("{\n  \"d\": 1,\n  \"b\": oops\n}") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let unknown = MINIMAL.replace("}", r#", "bogus": 1}"#);
        assert!(matches!(parse_config(&unknown), Err(ConfigError::Parse { .. })));
    }
}
