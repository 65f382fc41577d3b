//! Riccati observer for altitude, vertical velocity and tilt.
//!
//! The state `x = [h, ḣ, z]` follows the linear time-varying model
//!
//! ```text
//! ẋ = A(t) x + B g,   y_b = C x + n_b
//! A = [[0, 1, 0], [0, 0, aᵀ], [0, 0, −ω^×]],  B = [0, 1, 0]ᵀ,  C = [1, 0, 0]
//! ```
//!
//! with `a` and `ω` the IMU readings. [`RiccatiObserver`] is the discrete
//! correction–prediction filter run at the IMU rate; [`ContinuousObserver`]
//! integrates the continuous-time observer and its Riccati equation with RK4
//! and serves as a reference for the discretization.

use nalgebra::{RowSVector, SMatrix, SVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geom3::{rodrigues_coefficients, skew, Mat3, RotationMatrix, Vec3};
use crate::sim::{BaroSample, ImuSample, GRAVITY};

pub type Vector5 = SVector<f64, 5>;
pub type Matrix5 = SMatrix<f64, 5, 5>;
pub type Row5 = RowSVector<f64, 5>;

/// Symmetry tolerance accepted by [`Covariance5::new`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// `[h, ḣ, z]`. The tilt part is not constrained to the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State5 {
    pub h: f64,
    pub hdot: f64,
    pub z: Vec3,
}

impl State5 {
    pub fn new(h: f64, hdot: f64, z: Vec3) -> Self {
        Self { h, hdot, z }
    }

    pub fn to_vector(&self) -> Vector5 {
        Vector5::new(self.h, self.hdot, self.z.x, self.z.y, self.z.z)
    }

    pub fn from_vector(v: &Vector5) -> Self {
        Self::new(v[0], v[1], Vec3::new(v[2], v[3], v[4]))
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.hdot.is_finite() && self.z.iter().all(|c| c.is_finite())
    }
}

/// Symmetric positive-definite 5×5 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance5(Matrix5);

impl Covariance5 {
    pub fn new(m: Matrix5) -> Result<Self> {
        let asym = (m - m.transpose()).amax();
        if !(asym <= SYMMETRY_TOLERANCE) {
            return Err(Error::NotPositiveDefinite(format!("asymmetry {asym:e}")));
        }
        if m.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite(
                "Cholesky factorization failed".into(),
            ));
        }
        Ok(Self(m))
    }

    pub fn from_diagonal(d: &[f64; 5]) -> Result<Self> {
        Self::new(Matrix5::from_diagonal(&Vector5::from_row_slice(d)))
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix5) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix5 {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }

    /// Largest entry of `|P − Pᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        (self.0 - self.0.transpose()).amax()
    }

    fn symmetrized(m: Matrix5) -> Self {
        Self((m + m.transpose()) * 0.5)
    }
}

pub(crate) fn min_eigenvalue(m: &Matrix5) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// How the measurement update propagates the covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceUpdate {
    /// `P⁺ = (I − K C) P⁻`.
    #[default]
    Simple,
    /// `P⁺ = (I − K C) P⁻ (I − K C)ᵀ + K M Kᵀ`.
    Joseph,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiConfig {
    /// Process noise `Q`.
    pub process_noise: Matrix5,
    /// Barometer noise variance `M` (m²).
    pub measurement_variance: f64,
    pub initial_covariance: Covariance5,
    /// IMU period `T` (s).
    pub period: f64,
    pub gravity: f64,
    pub covariance_update: CovarianceUpdate,
}

impl RiccatiConfig {
    /// `Q = 10 I₅`, `M = 0.001`, `P₀ = diag(64, 64, 0.25, 0.25, 0.25)`, 200 Hz.
    pub fn reference() -> Self {
        Self {
            process_noise: Matrix5::identity() * 10.0,
            measurement_variance: 0.001,
            initial_covariance: Covariance5::from_matrix_unchecked(Matrix5::from_diagonal(
                &Vector5::new(64.0, 64.0, 0.25, 0.25, 0.25),
            )),
            period: 0.005,
            gravity: GRAVITY,
            covariance_update: CovarianceUpdate::Simple,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Covariance5::new(self.process_noise)
            .map_err(|e| Error::InvalidConfig(format!("process noise Q: {e}")))?;
        if !(self.measurement_variance > 0.0) {
            return Err(Error::NonPositiveMeasurementNoise(
                self.measurement_variance,
            ));
        }
        Covariance5::new(*self.initial_covariance.matrix())
            .map_err(|e| Error::InvalidConfig(format!("initial covariance P0: {e}")))?;
        if !(self.period > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "period must be > 0, got {}",
                self.period
            )));
        }
        Ok(())
    }
}

impl Default for RiccatiConfig {
    fn default() -> Self {
        Self::reference()
    }
}

/// Continuous-time state matrix `A(a, ω)`.
pub fn build_a(accel: &Vec3, omega: &Vec3) -> Matrix5 {
    let mut a = Matrix5::zeros();
    a[(0, 1)] = 1.0;
    a.fixed_view_mut::<1, 3>(1, 2).copy_from(&accel.transpose());
    a.fixed_view_mut::<3, 3>(2, 2).copy_from(&(-skew(omega)));
    a
}

pub fn input_matrix() -> Vector5 {
    Vector5::new(0.0, 1.0, 0.0, 0.0, 0.0)
}

pub fn output_matrix() -> Row5 {
    Row5::new(1.0, 0.0, 0.0, 0.0, 0.0)
}

/// Tilt transition over one IMU period for constant `ω`: the solution of
/// `φ̇ = −ω^× φ`, `φ(0) = I₃`, evaluated at `T`.
pub fn phi22(omega: &Vec3, period: f64) -> RotationMatrix {
    let (sinc, cosc) = rodrigues_coefficients(omega.norm() * period);
    let big_omega = skew(omega);
    let m = Mat3::identity() - big_omega * (period * sinc)
        + big_omega * big_omega * (period * period * cosc);
    RotationMatrix::from_matrix_unchecked(m)
}

/// First-order discrete transition `A_d` and input vector `B_d` for one IMU period.
pub fn discretize(accel: &Vec3, omega: &Vec3, period: f64) -> (Matrix5, Vector5) {
    let t = period;
    let mut ad = Matrix5::identity();
    ad[(0, 1)] = t;
    ad.fixed_view_mut::<1, 3>(0, 2)
        .copy_from(&(accel.transpose() * (0.5 * t * t)));
    ad.fixed_view_mut::<1, 3>(1, 2)
        .copy_from(&(accel.transpose() * t));
    ad.fixed_view_mut::<3, 3>(2, 2)
        .copy_from(phi22(omega, t).matrix());
    (ad, Vector5::new(0.5 * t * t, t, 0.0, 0.0, 0.0))
}

/// Prediction over one IMU period: `x⁻ = A_d x + B_d g`, `P⁻ = A_d P A_dᵀ + Q T`.
pub fn predict(
    xhat: &State5,
    p: &Covariance5,
    accel: &Vec3,
    omega: &Vec3,
    cfg: &RiccatiConfig,
) -> (State5, Covariance5) {
    let (ad, bd) = discretize(accel, omega, cfg.period);
    let x = ad * xhat.to_vector() + bd * cfg.gravity;
    let p = ad * p.matrix() * ad.transpose() + cfg.process_noise * cfg.period;
    (
        State5::from_vector(&x),
        Covariance5::from_matrix_unchecked(p),
    )
}

/// Kalman gain `K = P Cᵀ (C P Cᵀ + M)⁻¹`.
pub fn gain(p_minus: &Covariance5, cfg: &RiccatiConfig) -> Result<Vector5> {
    let m = cfg.measurement_variance;
    if !(m > 0.0) {
        return Err(Error::NonPositiveMeasurementNoise(m));
    }
    let p = p_minus.matrix();
    let innovation_variance = p[(0, 0)] + m;
    Ok(p.column(0) / innovation_variance)
}

/// Barometer update followed by covariance symmetrization.
pub fn correct(
    xhat_minus: &State5,
    p_minus: &Covariance5,
    altitude: f64,
    cfg: &RiccatiConfig,
) -> Result<(State5, Covariance5)> {
    let k = gain(p_minus, cfg)?;
    let c = output_matrix();
    let x = xhat_minus.to_vector();
    let x = x + k * (altitude - x[0]);
    let i_kc = Matrix5::identity() - k * c;
    let p = match cfg.covariance_update {
        CovarianceUpdate::Simple => i_kc * p_minus.matrix(),
        CovarianceUpdate::Joseph => {
            i_kc * p_minus.matrix() * i_kc.transpose()
                + k * k.transpose() * cfg.measurement_variance
        }
    };
    Ok((State5::from_vector(&x), Covariance5::symmetrized(p)))
}

/// Right-hand side of the continuous Riccati equation
/// `Ṗ = A P + P Aᵀ − P Cᵀ M⁻¹ C P + Q`.
pub fn cre_rhs(p: &Matrix5, a: &Matrix5, cfg: &RiccatiConfig) -> Matrix5 {
    let pc = p.column(0);
    a * p + p * a.transpose() - pc * pc.transpose() / cfg.measurement_variance + cfg.process_noise
}

/// Discrete observer running at the IMU rate.
#[derive(Debug, Clone)]
pub struct RiccatiObserver {
    cfg: RiccatiConfig,
    state: State5,
    covariance: Covariance5,
    last_time: Option<f64>,
    predictions: usize,
    corrections: usize,
}

impl RiccatiObserver {
    pub fn new(cfg: RiccatiConfig, initial_state: State5) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            covariance: cfg.initial_covariance,
            cfg,
            state: initial_state,
            last_time: None,
            predictions: 0,
            corrections: 0,
        })
    }

    pub fn config(&self) -> &RiccatiConfig {
        &self.cfg
    }

    pub fn state(&self) -> &State5 {
        &self.state
    }

    pub fn covariance(&self) -> &Covariance5 {
        &self.covariance
    }

    pub fn predictions(&self) -> usize {
        self.predictions
    }

    pub fn corrections(&self) -> usize {
        self.corrections
    }

    /// One IMU tick: predict to `imu.t + T`, then correct when a barometer
    /// sample for that instant is supplied. Returns whether a correction ran.
    pub fn step(&mut self, imu: &ImuSample, baro: Option<&BaroSample>) -> Result<bool> {
        if let Some(previous) = self.last_time {
            if !(imu.t > previous) {
                return Err(Error::TimestampRegression {
                    previous,
                    current: imu.t,
                });
            }
        }
        self.last_time = Some(imu.t);

        let (x, p) = predict(
            &self.state,
            &self.covariance,
            &imu.accel,
            &imu.omega,
            &self.cfg,
        );
        self.predictions += 1;
        let (x, p) = match baro {
            Some(b) => {
                self.corrections += 1;
                correct(&x, &p, b.altitude, &self.cfg)?
            }
            None => (x, Covariance5::symmetrized(*p.matrix())),
        };
        self.state = x;
        self.covariance = p;
        Ok(baro.is_some())
    }
}

/// Runs the discrete observer over an IMU stream, consuming each barometer
/// sample at the tick whose prediction lands within `T/2` of it.
///
/// Returns the estimate at every IMU timestamp (the first entry is the
/// initial state).
pub fn run(
    observer: &mut RiccatiObserver,
    imu: &[ImuSample],
    baro: &[BaroSample],
) -> Result<Vec<State5>> {
    let period = observer.cfg.period;
    let mut aligner = crate::sim::Aligner::new(baro, 0.5 * period);
    let mut estimates = Vec::with_capacity(imu.len());
    estimates.push(*observer.state());
    for sample in imu.iter().take(imu.len().saturating_sub(1)) {
        let b = aligner.take_at(sample.t + period);
        observer.step(sample, b)?;
        estimates.push(*observer.state());
    }
    Ok(estimates)
}

/// Inputs of the continuous-time observer at a given instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousInput {
    pub accel: Vec3,
    pub omega: Vec3,
    pub altitude: f64,
}

/// Continuous-time observer `x̂̇ = A x̂ + B g + P Cᵀ M⁻¹ (y − C x̂)` with its
/// Riccati equation, integrated jointly by classical RK4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousObserver {
    pub t: f64,
    pub state: Vector5,
    pub covariance: Matrix5,
}

impl ContinuousObserver {
    pub fn new(t0: f64, initial_state: &State5, initial_covariance: &Covariance5) -> Self {
        Self {
            t: t0,
            state: initial_state.to_vector(),
            covariance: *initial_covariance.matrix(),
        }
    }

    pub fn estimate(&self) -> State5 {
        State5::from_vector(&self.state)
    }

    fn derivative(
        x: &Vector5,
        p: &Matrix5,
        input: &ContinuousInput,
        cfg: &RiccatiConfig,
    ) -> (Vector5, Matrix5) {
        let a = build_a(&input.accel, &input.omega);
        let k = p.column(0) / cfg.measurement_variance;
        let dx = a * x + input_matrix() * cfg.gravity + k * (input.altitude - x[0]);
        (dx, cre_rhs(p, &a, cfg))
    }

    pub fn rk4_step<F>(&mut self, dt: f64, input: &F, cfg: &RiccatiConfig)
    where
        F: Fn(f64) -> ContinuousInput,
    {
        let (x, p, t) = (self.state, self.covariance, self.t);
        let mid = input(t + 0.5 * dt);
        let (k1x, k1p) = Self::derivative(&x, &p, &input(t), cfg);
        let (k2x, k2p) =
            Self::derivative(&(x + k1x * (0.5 * dt)), &(p + k1p * (0.5 * dt)), &mid, cfg);
        let (k3x, k3p) =
            Self::derivative(&(x + k2x * (0.5 * dt)), &(p + k2p * (0.5 * dt)), &mid, cfg);
        let (k4x, k4p) = Self::derivative(&(x + k3x * dt), &(p + k3p * dt), &input(t + dt), cfg);
        self.state = x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0);
        let p = p + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (dt / 6.0);
        self.covariance = (p + p.transpose()) * 0.5;
        self.t = t + dt;
    }

    /// Integrates up to `t_end` with steps of at most `dt`.
    ///
    /// The Riccati equation is stiff while `P₀₀/M` is large; explicit RK4
    /// is only stable for `dt · P₀₀/M ≲ 2.7`.
    pub fn integrate<F>(&mut self, t_end: f64, dt: f64, input: &F, cfg: &RiccatiConfig)
    where
        F: Fn(f64) -> ContinuousInput,
    {
        let span = t_end - self.t;
        if span <= 0.0 {
            return;
        }
        let steps = (span / dt).ceil() as usize;
        let h = span / steps as f64;
        let t0 = self.t;
        for k in 0..steps {
            self.t = t0 + k as f64 * h;
            self.rk4_step(h, input, cfg);
        }
        self.t = t_end;
    }
}
