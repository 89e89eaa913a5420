//! Run configuration and its flat `key = value` file format.
//!
//! Keys mirror the CLI flag names without the leading dashes; blank lines
//! and `#` comments are ignored.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::Probe;
use crate::protocol::Protocol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("{0}")]
    OutOfRange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    None,
    #[serde(rename = "ir")]
    InterceptResend,
    Qmm,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [AttackKind::None, AttackKind::InterceptResend, AttackKind::Qmm];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::InterceptResend => "ir",
            AttackKind::Qmm => "qmm",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(AttackKind::None),
            "ir" | "intercept-resend" => Ok(AttackKind::InterceptResend),
            "qmm" => Ok(AttackKind::Qmm),
            other => Err(format!("unknown attack `{other}` (expected none, ir or qmm)")),
        }
    }
}

impl Probe {
    pub fn as_str(self) -> &'static str {
        match self {
            Probe::Zero => "zero",
            Probe::Plus => "plus",
        }
    }
}

impl FromStr for Probe {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(Probe::Zero),
            "plus" => Ok(Probe::Plus),
            other => Err(format!("unknown probe `{other}` (expected zero or plus)")),
        }
    }
}

pub const DEFAULT_CONTROL_PROB: f64 = 0.25;
pub const DEFAULT_RECORD_LIMIT: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub attack: AttackKind,
    /// Probability `f` that a round is attacked.
    pub attack_fraction: f64,
    /// Probability `c` of a control round; unused by BB84.
    pub control_prob: f64,
    pub rounds: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub pingpong_probe: Probe,
    pub ir_both_paths: bool,
    /// LM05: include the backward leg in the control check.
    pub backward_check: bool,
    /// Keep full round records only for runs of at most this many rounds.
    pub record_limit: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            protocol: Protocol::Lm05,
            attack: AttackKind::None,
            attack_fraction: 0.0,
            control_prob: DEFAULT_CONTROL_PROB,
            rounds: 100_000,
            master_seed: 1,
            workers: 1,
            pingpong_probe: Probe::Zero,
            ir_both_paths: false,
            backward_check: false,
            record_limit: DEFAULT_RECORD_LIMIT,
        }
    }
}

const KEYS: [&str; 11] = [
    "protocol",
    "attack",
    "fraction",
    "control-prob",
    "rounds",
    "seed",
    "workers",
    "pingpong-probe",
    "ir-both-paths",
    "backward-check",
    "record-limit",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.attack_fraction) {
            return Err(ConfigError::OutOfRange(format!(
                "attack fraction {} outside [0, 1]",
                self.attack_fraction
            )));
        }
        if !(self.control_prob > 0.0 && self.control_prob < 1.0) {
            return Err(ConfigError::OutOfRange(format!(
                "control probability {} outside (0, 1)",
                self.control_prob
            )));
        }
        if self.rounds == 0 {
            return Err(ConfigError::OutOfRange("rounds must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError::OutOfRange("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "protocol" => self.protocol = parse(key, value)?,
            "attack" => self.attack = parse(key, value)?,
            "fraction" => self.attack_fraction = parse(key, value)?,
            "control-prob" => self.control_prob = parse(key, value)?,
            "rounds" => self.rounds = parse(key, value)?,
            "seed" => self.master_seed = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "pingpong-probe" => self.pingpong_probe = parse(key, value)?,
            "ir-both-paths" => self.ir_both_paths = parse(key, value)?,
            "backward-check" => self.backward_check = parse(key, value)?,
            "record-limit" => self.record_limit = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_file_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_file_str(text: &str) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        config.apply_file_str(text)?;
        Ok(config)
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "protocol" => self.protocol.to_string(),
            "attack" => self.attack.to_string(),
            "fraction" => self.attack_fraction.to_string(),
            "control-prob" => self.control_prob.to_string(),
            "rounds" => self.rounds.to_string(),
            "seed" => self.master_seed.to_string(),
            "workers" => self.workers.to_string(),
            "pingpong-probe" => self.pingpong_probe.as_str().to_string(),
            "ir-both-paths" => self.ir_both_paths.to_string(),
            "backward-check" => self.backward_check.to_string(),
            "record-limit" => self.record_limit.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Serializes every key; `from_file_str` of the result reproduces `self`.
    pub fn to_file_string(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.value_of(k))).collect()
    }
}
