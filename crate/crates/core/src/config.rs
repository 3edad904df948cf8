//! Tunables for every detector, addressable as flat `key=value` pairs.

use std::fmt::Write as _;

use thiserror::Error;

use crate::control::DEFAULT_EXPECTED_THROUGHPUT;
use crate::event::{secs_to_micros, Micros};
use crate::scoring::{HarrisParams, DEFAULT_LC_THRESHOLD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("line {line}: expected key=value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Three-layer filter settings. Durations are in seconds.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Threshold adjustment per controller update.
    pub k_step: f64,
    pub ts_threshold_init: f64,
    pub ts_threshold_min: f64,
    pub ts_threshold_max: f64,
    /// Threshold used for events in fast-moving cells.
    pub fast_motion_ts: f64,
    /// Flow magnitude (px/s) above which the fast-motion threshold applies.
    pub theta_flow: f64,
    /// Age limit for SAE pixels supporting a flow fit.
    pub flow_window: f64,
    pub expected_throughput: f64,
    /// Manhattan radius of the corner-candidate neighbourhood.
    pub lifetime_radius: u32,
    /// Upper bound on a stored lifetime.
    pub max_lifetime: f64,
    /// Most recent neighbours marked in the binary patch.
    pub n_recent: usize,
    /// LC-Harris decision threshold.
    pub lc_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_step: 0.005,
            ts_threshold_init: 0.05,
            ts_threshold_min: 0.001,
            ts_threshold_max: 5.0,
            fast_motion_ts: 0.01,
            theta_flow: 300.0,
            flow_window: 0.2,
            expected_throughput: DEFAULT_EXPECTED_THROUGHPUT,
            lifetime_radius: 8,
            max_lifetime: 0.5,
            n_recent: 25,
            lc_threshold: DEFAULT_LC_THRESHOLD,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("k_step", self.k_step),
            ("ts_threshold_init", self.ts_threshold_init),
            ("ts_threshold_min", self.ts_threshold_min),
            ("ts_threshold_max", self.ts_threshold_max),
            ("fast_motion_ts", self.fast_motion_ts),
            ("theta_flow", self.theta_flow),
            ("flow_window", self.flow_window),
            ("expected_throughput", self.expected_throughput),
            ("max_lifetime", self.max_lifetime),
            ("lc_threshold", self.lc_threshold),
        ];
        for (name, x) in positive {
            if !x.is_finite() || x <= 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be positive, got {x}"
                )));
            }
        }
        if self.lifetime_radius == 0 || self.n_recent == 0 {
            return Err(ConfigError::Invalid(
                "lifetime_radius and n_recent must be positive".into(),
            ));
        }
        if self.ts_threshold_min > self.ts_threshold_max {
            return Err(ConfigError::Invalid(
                "ts threshold bounds out of order".into(),
            ));
        }
        if self.ts_threshold_init < self.ts_threshold_min
            || self.ts_threshold_init > self.ts_threshold_max
        {
            return Err(ConfigError::Invalid(
                "ts_threshold_init outside its bounds".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn micros(secs: f64) -> Micros {
        secs_to_micros(secs)
    }
}

/// Everything a detector run can be tuned with.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub harris: HarrisParams,
    /// Fixed timestamp pre-filter of the Arc* baseline.
    pub arc_filter_ts: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            pipeline: PipelineConfig::default(),
            harris: HarrisParams::default(),
            arc_filter_ts: 0.05,
        }
    }
}

pub const KEYS: &[&str] = &[
    "k_step",
    "ts_threshold_init",
    "ts_threshold_min",
    "ts_threshold_max",
    "fast_motion_ts",
    "theta_flow",
    "flow_window",
    "expected_throughput",
    "lifetime_radius",
    "max_lifetime",
    "n_recent",
    "lc_threshold",
    "harris_k",
    "harris_sigma",
    "harris_threshold",
    "arc_filter_ts",
];

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        let f = || value.trim().parse::<f64>().map_err(|_| bad());
        let u = || value.trim().parse::<usize>().map_err(|_| bad());
        let p = &mut self.pipeline;
        match key.trim() {
            "k_step" => p.k_step = f()?,
            "ts_threshold_init" => p.ts_threshold_init = f()?,
            "ts_threshold_min" => p.ts_threshold_min = f()?,
            "ts_threshold_max" => p.ts_threshold_max = f()?,
            "fast_motion_ts" => p.fast_motion_ts = f()?,
            "theta_flow" => p.theta_flow = f()?,
            "flow_window" => p.flow_window = f()?,
            "expected_throughput" => p.expected_throughput = f()?,
            "lifetime_radius" => p.lifetime_radius = u()? as u32,
            "max_lifetime" => p.max_lifetime = f()?,
            "n_recent" => p.n_recent = u()?,
            "lc_threshold" => p.lc_threshold = f()?,
            "harris_k" => self.harris.k = f()?,
            "harris_sigma" => self.harris.gaussian_sigma = f()?,
            "harris_threshold" => self.harris.score_threshold = f()?,
            "arc_filter_ts" => self.arc_filter_ts = f()?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: kv.to_string(),
        })?;
        self.set(k, v)
    }

    /// Applies a config file: one `key=value` per line, `#` comments.
    pub fn apply_file_contents(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.pipeline.validate()?;
        let sigma = self.harris.gaussian_sigma;
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(ConfigError::Invalid("harris_sigma must be positive".into()));
        }
        if self.arc_filter_ts.is_nan() || self.arc_filter_ts < 0.0 {
            return Err(ConfigError::Invalid(
                "arc_filter_ts must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn to_kv_string(&self) -> String {
        let p = &self.pipeline;
        let mut s = String::new();
        let rows: [(&str, String); 16] = [
            ("k_step", p.k_step.to_string()),
            ("ts_threshold_init", p.ts_threshold_init.to_string()),
            ("ts_threshold_min", p.ts_threshold_min.to_string()),
            ("ts_threshold_max", p.ts_threshold_max.to_string()),
            ("fast_motion_ts", p.fast_motion_ts.to_string()),
            ("theta_flow", p.theta_flow.to_string()),
            ("flow_window", p.flow_window.to_string()),
            ("expected_throughput", p.expected_throughput.to_string()),
            ("lifetime_radius", p.lifetime_radius.to_string()),
            ("max_lifetime", p.max_lifetime.to_string()),
            ("n_recent", p.n_recent.to_string()),
            ("lc_threshold", p.lc_threshold.to_string()),
            ("harris_k", self.harris.k.to_string()),
            ("harris_sigma", self.harris.gaussian_sigma.to_string()),
            ("harris_threshold", self.harris.score_threshold.to_string()),
            ("arc_filter_ts", self.arc_filter_ts.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}
