use std::fs;
use std::path::Path;

use hma_ee::channel::{dbm_to_watt, noise_power, Placement};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Reads and deserializes a JSON document; errors carry line and column.
pub fn load<T: DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    let path = path.ok_or_else(|| CliError::Parse("this command needs --config <path.json>".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

/// Inclusive dBm range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbmRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl DbmRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.stop >= self.start) || !self.start.is_finite() {
            return Err(invalid(format!(
                "pmax_dbm_range needs step > 0 and stop >= start, got {self:?}"
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

fn default_min_rate() -> f64 {
    1.5
}

fn default_circuit_power() -> f64 {
    dbm_to_watt(0.0)
}

fn default_noise_psd() -> f64 {
    -174.0
}

fn default_rb_bandwidth() -> f64 {
    180e3
}

fn default_trials() -> usize {
    1000
}

/// Link constants shared by every config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    #[serde(default = "default_min_rate")]
    pub min_rate: f64,
    #[serde(default = "default_circuit_power")]
    pub circuit_power_per_user: f64,
    #[serde(default = "default_noise_psd")]
    pub noise_psd: f64,
    #[serde(default = "default_rb_bandwidth")]
    pub rb_bandwidth: f64,
}

impl Link {
    pub fn noise_power(&self) -> Result<f64> {
        Ok(noise_power(self.noise_psd, self.rb_bandwidth)?)
    }

    fn validate(&self) -> Result<()> {
        if !(self.min_rate >= 0.0) || !(self.circuit_power_per_user >= 0.0) {
            return Err(invalid("need min_rate >= 0 and circuit_power_per_user >= 0"));
        }
        if !(self.rb_bandwidth > 0.0) {
            return Err(invalid("rb_bandwidth must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepScheme {
    #[serde(rename = "MaxEE-NOMA")]
    MaxEeNoma,
    #[serde(rename = "MaxSE-NOMA")]
    MaxSeNoma,
    #[serde(rename = "MaxEE-OMA")]
    MaxEeOma,
    CaseI,
    CaseII,
}

impl SweepScheme {
    pub fn label(&self) -> &'static str {
        match self {
            SweepScheme::MaxEeNoma => "MaxEE-NOMA",
            SweepScheme::MaxSeNoma => "MaxSE-NOMA",
            SweepScheme::MaxEeOma => "MaxEE-OMA",
            SweepScheme::CaseI => "CaseI",
            SweepScheme::CaseII => "CaseII",
        }
    }
}

/// Users of one cluster dropped at random instead of given gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawnCluster {
    pub num_users: usize,
    pub placement: Placement,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub pmax_dbm_range: DbmRange,
    /// Linear gains of the cluster; sorted internally.
    #[serde(default)]
    pub gains: Option<Vec<f64>>,
    #[serde(default)]
    pub scenario: Option<DrawnCluster>,
    pub schemes: Vec<SweepScheme>,
    #[serde(flatten)]
    pub link: Link,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.pmax_dbm_range.values()?;
        self.link.validate()?;
        if self.schemes.is_empty() {
            return Err(invalid("scheme list must not be empty"));
        }
        match (&self.gains, &self.scenario) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(invalid("give exactly one of `gains` and `scenario`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    /// Two linear gains; sorted internally.
    pub gains: Vec<f64>,
    pub pmax_dbm_range: DbmRange,
    #[serde(flatten)]
    pub link: Link,
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<()> {
        self.pmax_dbm_range.values()?;
        self.link.validate()?;
        if self.gains.len() != 2 {
            return Err(invalid(format!(
                "phase analysis needs exactly 2 gains, got {}",
                self.gains.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleScheme {
    #[serde(rename = "HMA-prop")]
    HmaProp,
    #[serde(rename = "HMA-MWM")]
    HmaMwm,
    #[serde(rename = "HMA-DC")]
    HmaDc,
    #[serde(rename = "HMA-rand")]
    HmaRand,
    #[serde(rename = "OMA-swap")]
    OmaSwap,
    #[serde(rename = "OMA-MWM")]
    OmaMwm,
}

impl EnsembleScheme {
    pub fn label(&self) -> &'static str {
        match self {
            EnsembleScheme::HmaProp => "HMA-prop",
            EnsembleScheme::HmaMwm => "HMA-MWM",
            EnsembleScheme::HmaDc => "HMA-DC",
            EnsembleScheme::HmaRand => "HMA-rand",
            EnsembleScheme::OmaSwap => "OMA-swap",
            EnsembleScheme::OmaMwm => "OMA-MWM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub num_users: usize,
    pub num_rbs: usize,
    pub placement: Placement,
    pub schemes: Vec<EnsembleScheme>,
    pub pmax_dbm_range: DbmRange,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(flatten)]
    pub link: Link,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.pmax_dbm_range.values()?;
        self.link.validate()?;
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(invalid("scheme list must not be empty"));
        }
        if self.num_rbs == 0 || self.num_users < self.num_rbs {
            return Err(invalid(format!(
                "need num_users >= num_rbs >= 1, got {} and {}",
                self.num_users, self.num_rbs
            )));
        }
        Ok(())
    }
}
