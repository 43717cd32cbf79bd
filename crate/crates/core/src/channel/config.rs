use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// How the best-channel affiliation rule scores a (user, BS) pair across bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelScore {
    /// Σ_k |h_{u,b,k}|²
    #[default]
    BandSum,
    /// max_k |h_{u,b,k}|²
    MaxBand,
}

/// Parameters of one Monte Carlo experiment.
///
/// Powers are given in dBm / dBm/Hz here and converted to linear milliwatts
/// once, at generation time. Every field has a default, so a JSON document only
/// needs the keys it wants to change; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub num_bs: usize,
    pub num_users: usize,
    /// Side of the square deployment area, meters.
    pub side_length: f64,
    pub num_bands: usize,
    /// Bandwidth of every band, Hz.
    pub band_width: f64,
    pub noise_psd_dbm_hz: f64,
    /// Per-user total transmit power budget, dBm.
    pub power_budget_dbm: f64,
    /// Path-loss slope, dB per decade of distance.
    pub pathloss_a: f64,
    /// Path-loss offset, dB.
    pub pathloss_b: f64,
    pub shadowing_sigma_db: f64,
    pub num_realizations: usize,
    pub master_seed: u64,
    /// Carrier frequency in MHz. Informational only: the path-loss constants already account for it.
    pub carrier_frequency_mhz: f64,
    /// Draw shadowing independently per band instead of once per (user, BS) pair.
    pub shadowing_per_band: bool,
    pub best_channel_score: ChannelScore,
    /// Largest BS count for which exhaustive partition search is allowed.
    pub enumeration_cap: usize,
    /// Relative objective change per round below which coordinate ascent stops.
    pub solver_tol: f64,
    pub solver_max_rounds: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            num_bs: 6,
            num_users: 50,
            side_length: 2000.0,
            num_bands: 10,
            band_width: 20e3,
            noise_psd_dbm_hz: -174.0,
            power_budget_dbm: 23.0,
            pathloss_a: 35.0,
            pathloss_b: 34.0,
            shadowing_sigma_db: 8.0,
            num_realizations: 500,
            master_seed: 0x5eed,
            carrier_frequency_mhz: 1800.0,
            shadowing_per_band: false,
            best_channel_score: ChannelScore::BandSum,
            enumeration_cap: crate::clustering::DEFAULT_ENUMERATION_CAP,
            solver_tol: 1e-8,
            solver_max_rounds: 200,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be finite"))
    }
}

impl SimulationConfig {
    /// Parses a JSON document; errors carry the offending key path.
    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value = serde_json::from_str(s).map_err(|e| ConfigError::Parse {
            field: ".".to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_value(value)
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self, ConfigError> {
        let cfg: Self = serde_path_to_error::deserialize(v).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Parse {
                field: if path == "." { unknown_field(&inner) } else { path },
                message: inner.to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("num_bs", self.num_bs),
            ("num_users", self.num_users),
            ("num_bands", self.num_bands),
            ("num_realizations", self.num_realizations),
            ("solver_max_rounds", self.solver_max_rounds),
            ("enumeration_cap", self.enumeration_cap),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        for (field, v) in [
            ("side_length", self.side_length),
            ("band_width", self.band_width),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("power_budget_dbm", self.power_budget_dbm),
            ("pathloss_a", self.pathloss_a),
            ("pathloss_b", self.pathloss_b),
            ("shadowing_sigma_db", self.shadowing_sigma_db),
            ("carrier_frequency_mhz", self.carrier_frequency_mhz),
            ("solver_tol", self.solver_tol),
        ] {
            finite(field, v)?;
        }
        if self.side_length <= 0.0 {
            return Err(invalid("side_length", "must be positive"));
        }
        if self.band_width <= 0.0 {
            return Err(invalid("band_width", "must be positive"));
        }
        if self.shadowing_sigma_db < 0.0 {
            return Err(invalid("shadowing_sigma_db", "must be non-negative"));
        }
        if self.solver_tol <= 0.0 {
            return Err(invalid("solver_tol", "must be positive"));
        }
        Ok(())
    }

    /// Linear per-user budget, mW.
    pub fn power_budget_mw(&self) -> f64 {
        super::dbm_to_mw(self.power_budget_dbm)
    }

    /// Thermal noise power of one band, mW.
    pub fn noise_power_mw(&self) -> f64 {
        super::dbm_to_mw(self.noise_psd_dbm_hz) * self.band_width
    }

    pub fn pathloss(&self) -> super::PathLoss {
        super::PathLoss {
            slope_db: self.pathloss_a,
            offset_db: self.pathloss_b,
        }
    }

    pub fn solver_options(&self) -> crate::allocator::SolverOptions {
        crate::allocator::SolverOptions {
            tol: self.solver_tol,
            max_rounds: self.solver_max_rounds,
        }
    }
}

// serde reports unknown keys at the root path; pull the key name out of the message.
fn unknown_field(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    msg.strip_prefix("unknown field `")
        .and_then(|rest| rest.split('`').next())
        .map(str::to_string)
        .unwrap_or_else(|| ".".to_string())
}
