//! Complementary attitude observer on SO(3).
//!
//! Consumes the tilt estimate `ẑ` of the Riccati observer together with gyro
//! and magnetometer readings:
//!
//! ```text
//! R̂̇ = R̂ ω^× − σ^× R̂
//! σ = k_z (e₃ × R̂ ẑ) + k_m (m̄_I × R̂ m̄_B),   m̄_I = π̄_{e₃} m_I,   m̄_B = π̄_ẑ m_B
//! ```
//!
//! and is discretized with an exponential-Euler step at the IMU period.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom3::{e3, exp_so3, proj_reg, RotationMatrix, Vec3};
use crate::sim::{Aligner, ImuSample, MagSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttitudeConfig {
    /// Tilt gain (1/s).
    pub k_z: f64,
    /// Magnetometer gain (1/s).
    pub k_m: f64,
    /// Unit inertial magnetic field direction.
    pub m_inertial: [f64; 3],
}

impl Default for AttitudeConfig {
    fn default() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            k_z: 80.0,
            k_m: 25.0,
            m_inertial: [s, 0.0, s],
        }
    }
}

impl AttitudeConfig {
    pub fn m_inertial(&self) -> Vec3 {
        Vec3::from(self.m_inertial)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_z > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "k_z must be > 0, got {}",
                self.k_z
            )));
        }
        if !(self.k_m >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "k_m must be >= 0, got {}",
                self.k_m
            )));
        }
        let m = self.m_inertial();
        if !((m.norm() - 1.0).abs() <= 1e-9) {
            return Err(Error::InvalidConfig(format!(
                "m_inertial must be unit norm, got |m| = {}",
                m.norm()
            )));
        }
        if m.cross(&e3()).norm() <= 1e-9 {
            return Err(Error::InvalidConfig(
                "m_inertial parallel to e3 leaves yaw unobservable".into(),
            ));
        }
        Ok(())
    }

    /// Horizontal projection `π̄_{e₃} m_I`.
    pub fn projected_m_inertial(&self) -> Vec3 {
        proj_reg(&e3(), &self.m_inertial())
    }
}

/// Innovation `σ_R`. Without a magnetometer sample the `k_m` term is dropped.
pub fn correction(
    r_hat: &RotationMatrix,
    z_hat: &Vec3,
    m_body: Option<&Vec3>,
    cfg: &AttitudeConfig,
) -> Vec3 {
    let mut sigma = e3().cross(&(r_hat * z_hat)) * cfg.k_z;
    if let Some(m_body) = m_body {
        let m_bar_b = proj_reg(z_hat, m_body);
        sigma += cfg.projected_m_inertial().cross(&(r_hat * &m_bar_b)) * cfg.k_m;
    }
    sigma
}

/// `R̂⁺ = R̂ exp((ω − R̂ᵀσ)^× T)`.
pub fn step(
    r_hat: &RotationMatrix,
    omega: &Vec3,
    z_hat: &Vec3,
    m_body: Option<&Vec3>,
    cfg: &AttitudeConfig,
    period: f64,
) -> RotationMatrix {
    let sigma = correction(r_hat, z_hat, m_body, cfg);
    let body_rate = omega - r_hat.matrix().transpose() * sigma;
    *r_hat * exp_so3(&(body_rate * period))
}

/// Runs the observer over time-aligned IMU and tilt streams.
///
/// `z_hat[k]` must be the tilt estimate at `imu[k].t`. Magnetometer samples
/// are matched to IMU ticks within half a period. Returns `R̂` at every IMU
/// timestamp, starting with `r0`.
pub fn run(
    imu: &[ImuSample],
    mag: &[MagSample],
    z_hat: &[Vec3],
    r0: RotationMatrix,
    cfg: &AttitudeConfig,
    period: f64,
) -> Result<Vec<RotationMatrix>> {
    if z_hat.len() != imu.len() {
        return Err(Error::LengthMismatch {
            what: "tilt estimates",
            got: z_hat.len(),
            expected: imu.len(),
        });
    }
    if mag.len() > imu.len() {
        return Err(Error::LengthMismatch {
            what: "magnetometer samples",
            got: mag.len(),
            expected: imu.len(),
        });
    }
    let mut aligner = Aligner::new(mag, 0.5 * period);
    let mut out = Vec::with_capacity(imu.len());
    let mut r_hat = r0;
    out.push(r_hat);
    for (sample, z) in imu.iter().zip(z_hat).take(imu.len().saturating_sub(1)) {
        let m = aligner.take_at(sample.t).map(|m| &m.field);
        r_hat = step(&r_hat, &sample.omega, z, m, cfg, period);
        out.push(r_hat);
    }
    Ok(out)
}
