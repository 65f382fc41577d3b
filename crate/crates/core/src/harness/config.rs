use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attitude::AttitudeConfig;
use crate::error::{Error, Result};
use crate::riccati::{Covariance5, CovarianceUpdate, Matrix5, RiccatiConfig, Vector5};
use crate::sim::{NoiseConfig, GRAVITY};

/// Full description of a Monte Carlo campaign. Maps 1:1 onto the TOML config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignConfig {
    /// Simulated time per run (s).
    pub duration: f64,
    pub n_runs: usize,
    /// Master seed; per-run seeds are derived from it by run index.
    pub seed: u64,
    /// Truth integration step (s). Must divide every sensor period.
    pub truth_dt: f64,
    pub noise: NoiseConfig,
    pub riccati: RiccatiSection,
    pub attitude: AttitudeConfig,
    pub init: InitSpec,
    pub convergence: ConvergenceThresholds,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            duration: 30.0,
            n_runs: 50,
            seed: 2025,
            truth_dt: 1e-3,
            noise: NoiseConfig::default(),
            riccati: RiccatiSection::default(),
            attitude: AttitudeConfig::default(),
            init: InitSpec::default(),
            convergence: ConvergenceThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiccatiSection {
    /// Diagonal of the process noise `Q`.
    pub q_diag: [f64; 5],
    /// Barometer noise variance `M` assumed by the observer (m²).
    pub measurement_variance: f64,
    /// Diagonal of `P(0)`.
    pub p0_diag: [f64; 5],
    pub gravity: f64,
    pub covariance_update: CovarianceUpdate,
}

impl Default for RiccatiSection {
    fn default() -> Self {
        Self {
            q_diag: [10.0; 5],
            measurement_variance: 0.001,
            p0_diag: [64.0, 64.0, 0.25, 0.25, 0.25],
            gravity: GRAVITY,
            covariance_update: CovarianceUpdate::Simple,
        }
    }
}

/// How the initial estimates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSpec {
    /// Mean of `ĥ(0)` (m).
    pub mean_altitude: f64,
    /// Mean of the vertical velocity estimate (m/s).
    pub mean_vertical_velocity: f64,
    /// Standard deviations of `x̂(0)` around its mean.
    pub sigma_x: [f64; 5],
    /// Mean attitude as `[roll, pitch, yaw]` (deg), ZYX convention.
    pub mean_euler_deg: [f64; 3],
    /// Per-axis std of the rotation-vector perturbation (deg).
    pub attitude_std_deg: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            mean_altitude: 5.0,
            mean_vertical_velocity: 5.0,
            sigma_x: [8.0, 8.0, 0.5, 0.5, 0.5],
            mean_euler_deg: [60.0, -30.0, 45.0],
            attitude_std_deg: 104.0,
        }
    }
}

/// Final-time error levels under which a run counts as converged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceThresholds {
    pub tilt_error: f64,
    pub attitude_error: f64,
}

impl Default for ConvergenceThresholds {
    fn default() -> Self {
        Self {
            tilt_error: 0.05,
            attitude_error: 0.05,
        }
    }
}

impl CampaignConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("campaign config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs < 1 {
            return Err(Error::InvalidConfig("n_runs must be >= 1".into()));
        }
        if !(self.truth_dt > 0.0) || !(self.duration >= self.truth_dt) {
            return Err(Error::InvalidConfig(format!(
                "need truth_dt > 0 and duration >= truth_dt (truth_dt = {}, duration = {})",
                self.truth_dt, self.duration
            )));
        }
        if self.noise.rate_imu * self.truth_dt > 1.0 + 1e-9 {
            return Err(Error::InvalidConfig(
                "truth must be sampled at least as fast as the IMU".into(),
            ));
        }
        if self.init.sigma_x.iter().any(|s| !(*s >= 0.0)) || !(self.init.attitude_std_deg >= 0.0) {
            return Err(Error::InvalidConfig(
                "initial-condition stds must be >= 0".into(),
            ));
        }
        self.noise.validate()?;
        self.attitude.validate()?;
        self.riccati_config()?.validate()
    }

    pub fn imu_period(&self) -> f64 {
        self.noise.imu_period()
    }

    pub fn riccati_config(&self) -> Result<RiccatiConfig> {
        let r = &self.riccati;
        Ok(RiccatiConfig {
            process_noise: Matrix5::from_diagonal(&Vector5::from_row_slice(&r.q_diag)),
            measurement_variance: r.measurement_variance,
            initial_covariance: Covariance5::from_diagonal(&r.p0_diag)
                .map_err(|e| Error::InvalidConfig(format!("p0_diag: {e}")))?,
            period: self.imu_period(),
            gravity: r.gravity,
            covariance_update: r.covariance_update,
        })
    }

    /// Same configuration with all sensor noise removed.
    pub fn noise_free(&self) -> Self {
        Self {
            noise: self.noise.noise_free(),
            ..self.clone()
        }
    }
}
