//! Ground-truth trajectory generation and sensor synthesis.
//!
//! The truth attitude obeys `Ṙ = R ω^×` and is integrated with a midpoint
//! exponential step. Only the vertical channel of the position is tracked,
//! since the barometer observes nothing else.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom3::{e3, exp_so3, reorthonormalize, RotationMatrix, Vec3};

/// Gravity constant (m/s²).
pub const GRAVITY: f64 = 9.81;

/// Truth integration steps between two SO(3) re-projections.
const REORTHONORMALIZE_EVERY: usize = 1000;

/// A rigid-body motion prescribed by its angular velocity and inertial acceleration.
pub trait Motion {
    /// Body-frame angular velocity (rad/s).
    fn omega(&self, t: f64) -> Vec3;

    /// Inertial-frame acceleration `v̇` (m/s²). The accelerometer then reads
    /// `a = Rᵀ(v̇ − g e₃)`.
    fn inertial_accel(&self, t: f64) -> Vec3;

    /// Altitude `h = e₃ᵀp` and its rate. Must be consistent with the third
    /// component of [`Motion::inertial_accel`].
    fn altitude(&self, t: f64) -> (f64, f64);
}

/// The closed-form excitation used for the reference simulation study.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceScenario;

const ALTITUDE_AMPLITUDE: f64 = 5.0 * 1.732_050_807_568_877_2 / 4.0;

impl Motion for ReferenceScenario {
    fn omega(&self, t: f64) -> Vec3 {
        truth_omega(t)
    }

    fn inertial_accel(&self, t: f64) -> Vec3 {
        Vec3::new(
            -t.cos(),
            -(2.0 * t).sin(),
            4.0 * ALTITUDE_AMPLITUDE * (2.0 * t).sin(),
        )
    }

    fn altitude(&self, t: f64) -> (f64, f64) {
        truth_altitude(t)
    }
}

pub fn truth_omega(t: f64) -> Vec3 {
    Vec3::new(
        0.4 * (0.5 * t).sin(),
        0.5 * (0.3 * t + FRAC_PI_4).sin(),
        0.3 * (0.7 * t + FRAC_PI_3).sin(),
    )
}

/// `(h, ḣ)` of the reference scenario.
pub fn truth_altitude(t: f64) -> (f64, f64) {
    let (s, c) = (2.0 * t).sin_cos();
    (-ALTITUDE_AMPLITUDE * s, -2.0 * ALTITUDE_AMPLITUDE * c)
}

/// Body-frame specific acceleration of the reference scenario for attitude `r`.
pub fn truth_body_accel(t: f64, r: &RotationMatrix) -> Vec3 {
    specific_force(&ReferenceScenario.inertial_accel(t), r)
}

/// `Rᵀ(v̇ − g e₃)`.
pub fn specific_force(inertial_accel: &Vec3, r: &RotationMatrix) -> Vec3 {
    r.matrix().transpose() * (inertial_accel - e3() * GRAVITY)
}

/// Constant angular velocity and constant inertial acceleration.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMotion {
    pub omega: Vec3,
    pub accel: Vec3,
    pub h0: f64,
    pub hdot0: f64,
}

impl ConstantMotion {
    /// Zero specific force: the accelerometer reads nothing.
    pub fn free_fall(omega: Vec3) -> Self {
        Self {
            omega,
            accel: e3() * GRAVITY,
            h0: 0.0,
            hdot0: 0.0,
        }
    }
}

impl Motion for ConstantMotion {
    fn omega(&self, _t: f64) -> Vec3 {
        self.omega
    }

    fn inertial_accel(&self, _t: f64) -> Vec3 {
        self.accel
    }

    fn altitude(&self, t: f64) -> (f64, f64) {
        let az = self.accel.z;
        (
            self.h0 + self.hdot0 * t + 0.5 * az * t * t,
            self.hdot0 + az * t,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    pub rotation: RotationMatrix,
    pub h: f64,
    pub hdot: f64,
    pub omega: Vec3,
    /// Body-frame specific acceleration.
    pub accel: Vec3,
    pub accel_inertial: Vec3,
}

impl TruthSample {
    fn new<M: Motion + ?Sized>(motion: &M, t: f64, rotation: RotationMatrix) -> Self {
        let (h, hdot) = motion.altitude(t);
        let accel_inertial = motion.inertial_accel(t);
        Self {
            t,
            rotation,
            h,
            hdot,
            omega: motion.omega(t),
            accel: specific_force(&accel_inertial, &rotation),
            accel_inertial,
        }
    }

    /// `z = Rᵀe₃`.
    pub fn tilt(&self) -> Vec3 {
        self.rotation.tilt()
    }
}

/// A densely sampled truth trajectory, interpolable on the SO(3) integrator's own step law.
#[derive(Debug, Clone)]
pub struct Trajectory<M> {
    motion: M,
    dt: f64,
    samples: Vec<TruthSample>,
}

impl<M: Motion> Trajectory<M> {
    pub fn motion(&self) -> &M {
        &self.motion
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[TruthSample] {
        &self.samples
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Truth at an arbitrary time inside the integrated span.
    pub fn sample_at(&self, t: f64) -> TruthSample {
        let t = t.clamp(0.0, self.duration());
        let k = ((t / self.dt).floor() as usize).min(self.samples.len() - 1);
        let base = &self.samples[k];
        let tau = t - base.t;
        if tau == 0.0 {
            return *base;
        }
        let step = exp_so3(&(self.motion.omega(base.t + 0.5 * tau) * tau));
        TruthSample::new(&self.motion, t, base.rotation * step)
    }
}

impl<M> std::ops::Deref for Trajectory<M> {
    type Target = [TruthSample];

    fn deref(&self) -> &[TruthSample] {
        &self.samples
    }
}

/// Integrates `Ṙ = R ω^×` from `r0` with the midpoint exponential rule.
///
/// The step is adjusted to `duration / round(duration / dt)` so that the grid
/// ends exactly at `duration`.
pub fn integrate_truth<M: Motion>(
    motion: M,
    duration: f64,
    dt: f64,
    r0: RotationMatrix,
) -> Result<Trajectory<M>> {
    if !(dt > 0.0) || !(duration >= dt) {
        return Err(Error::InvalidConfig(format!(
            "truth integration needs dt > 0 and duration >= dt (dt = {dt}, duration = {duration})"
        )));
    }
    let steps = (duration / dt).round() as usize;
    let dt = duration / steps as f64;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut rotation = r0;
    samples.push(TruthSample::new(&motion, 0.0, rotation));
    for k in 0..steps {
        let t = k as f64 * dt;
        rotation = rotation * exp_so3(&(motion.omega(t + 0.5 * dt) * dt));
        if (k + 1) % REORTHONORMALIZE_EVERY == 0 {
            rotation = reorthonormalize(rotation.matrix())?;
        }
        samples.push(TruthSample::new(&motion, (k + 1) as f64 * dt, rotation));
    }
    Ok(Trajectory {
        motion,
        dt,
        samples,
    })
}

/// Sensor noise levels, sampling rates and the generator seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Accelerometer noise std per axis (m/s²).
    pub std_accel: f64,
    /// Gyroscope noise std per axis (rad/s).
    pub std_gyro: f64,
    /// Magnetometer noise std per axis, before renormalization.
    pub std_mag: f64,
    /// Barometer noise variance (m²).
    pub var_baro: f64,
    pub rate_imu: f64,
    pub rate_baro: f64,
    pub rate_mag: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            std_accel: 0.05,
            std_gyro: 0.05,
            std_mag: 0.02,
            var_baro: 0.001,
            rate_imu: 200.0,
            rate_baro: 5.0,
            rate_mag: 200.0,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    /// Same rates, every noise level set to zero.
    pub fn noise_free(&self) -> Self {
        Self {
            std_accel: 0.0,
            std_gyro: 0.0,
            std_mag: 0.0,
            var_baro: 0.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let stds = [self.std_accel, self.std_gyro, self.std_mag, self.var_baro];
        if stds.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig(
                "noise levels must be finite and >= 0".into(),
            ));
        }
        let rates = [self.rate_imu, self.rate_baro, self.rate_mag];
        if rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidConfig(
                "sensor rates must be finite and > 0".into(),
            ));
        }
        if self.rate_mag > self.rate_imu {
            return Err(Error::InvalidConfig(format!(
                "magnetometer rate {} exceeds IMU rate {}",
                self.rate_mag, self.rate_imu
            )));
        }
        Ok(())
    }

    pub fn imu_period(&self) -> f64 {
        1.0 / self.rate_imu
    }
}

/// Anything carrying a sample timestamp (s).
pub trait Timestamped {
    fn timestamp(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    pub accel: Vec3,
    pub omega: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaroSample {
    pub t: f64,
    pub altitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagSample {
    pub t: f64,
    /// Unit-norm body-frame field direction.
    pub field: Vec3,
}

macro_rules! timestamped {
    ($($ty:ty),*) => {
        $(impl Timestamped for $ty {
            fn timestamp(&self) -> f64 {
                self.t
            }
        })*
    };
}

timestamped!(ImuSample, BaroSample, MagSample, TruthSample);

#[derive(Debug, Clone, PartialEq)]
pub struct SensorStreams {
    pub imu: Vec<ImuSample>,
    pub baro: Vec<BaroSample>,
    pub mag: Vec<MagSample>,
}

/// Hands out sparse samples (barometer, magnetometer) at the IMU tick they belong to.
///
/// A sample is matched to time `t` when its timestamp lies within `tolerance`
/// of `t`; at most one sample is returned per query and older samples are
/// skipped.
#[derive(Debug, Clone)]
pub struct Aligner<'a, S> {
    samples: &'a [S],
    next: usize,
    tolerance: f64,
}

impl<'a, S: Timestamped> Aligner<'a, S> {
    pub fn new(samples: &'a [S], tolerance: f64) -> Self {
        Self {
            samples,
            next: 0,
            tolerance,
        }
    }

    pub fn take_at(&mut self, t: f64) -> Option<&'a S> {
        while let Some(s) = self.samples.get(self.next) {
            let dt = s.timestamp() - t;
            if dt < -self.tolerance {
                self.next += 1;
            } else if dt <= self.tolerance {
                self.next += 1;
                return Some(s);
            } else {
                return None;
            }
        }
        None
    }
}

fn stride_for(rate: f64, dt: f64, what: &str) -> Result<usize> {
    let ratio = 1.0 / (rate * dt);
    let stride = ratio.round();
    if stride < 1.0 || (ratio - stride).abs() > 1e-6 * ratio.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "{what} period must be an integer multiple of the truth step {dt} s (ratio {ratio})"
        )));
    }
    Ok(stride as usize)
}

fn gaussian3<R: Rng>(rng: &mut R, std: f64) -> Vec3 {
    Vec3::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    ) * std
}

/// Samples noisy IMU, barometer and magnetometer streams from a truth trajectory.
///
/// Each stream runs at its own rate, which must divide the truth rate. The
/// output is a pure function of `truth`, `noise` and `m_inertial`.
pub fn synthesize_measurements(
    truth: &[TruthSample],
    noise: &NoiseConfig,
    m_inertial: &Vec3,
) -> Result<SensorStreams> {
    noise.validate()?;
    let m_norm = m_inertial.norm();
    if !(m_norm > 0.0) {
        return Err(Error::ZeroMagneticField);
    }
    let m_inertial = m_inertial / m_norm;
    if truth.len() < 2 {
        return Err(Error::InvalidConfig(
            "truth needs at least two samples".into(),
        ));
    }
    let dt = truth[1].t - truth[0].t;
    let imu_stride = stride_for(noise.rate_imu, dt, "IMU")?;
    let baro_stride = stride_for(noise.rate_baro, dt, "barometer")?;
    let mag_stride = stride_for(noise.rate_mag, dt, "magnetometer")?;

    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let std_baro = noise.var_baro.sqrt();
    let mut streams = SensorStreams {
        imu: Vec::with_capacity(truth.len() / imu_stride + 1),
        baro: Vec::with_capacity(truth.len() / baro_stride + 1),
        mag: Vec::with_capacity(truth.len() / mag_stride + 1),
    };
    for (k, s) in truth.iter().enumerate() {
        if k % imu_stride == 0 {
            streams.imu.push(ImuSample {
                t: s.t,
                accel: s.accel + gaussian3(&mut rng, noise.std_accel),
                omega: s.omega + gaussian3(&mut rng, noise.std_gyro),
            });
        }
        if k % baro_stride == 0 {
            let n: f64 = rng.sample(StandardNormal);
            streams.baro.push(BaroSample {
                t: s.t,
                altitude: s.h + std_baro * n,
            });
        }
        if k % mag_stride == 0 {
            let body =
                s.rotation.matrix().transpose() * m_inertial + gaussian3(&mut rng, noise.std_mag);
            streams.mag.push(MagSample {
                t: s.t,
                field: body.normalize(),
            });
        }
    }
    Ok(streams)
}
