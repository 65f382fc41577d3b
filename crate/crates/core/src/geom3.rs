//! Minimal 3D geometry kernel.
//!
//! Vectors and matrices are `nalgebra` fixed-size types. Rotations are wrapped
//! in [`RotationMatrix`], whose checked constructor enforces membership in
//! SO(3). The exponential map, the regularized projection and the attitude
//! error metric used by the observers all live here.

use std::f64::consts::FRAC_PI_2;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `‖RᵀR − I‖` and `|det R − 1|` accepted by [`RotationMatrix::new`].
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Below this angle the Rodrigues coefficients use their Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-7;

/// Tolerance used by [`vex`] to decide antisymmetry.
pub const ANTISYMMETRY_TOLERANCE: f64 = 1e-9;

/// Pitch margin (rad) from ±π/2 inside which the ZYX decomposition is degenerate.
pub const GIMBAL_LOCK_MARGIN: f64 = 1e-6;

/// Unit vertical axis of the inertial frame.
pub fn e3() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Wraps `m` after checking orthogonality and unit determinant.
    pub fn new(m: Mat3) -> Result<Self> {
        let orthogonality = orthogonality_error(&m);
        let det = m.determinant();
        if !(orthogonality <= ROTATION_TOLERANCE) || !((det - 1.0).abs() <= ROTATION_TOLERANCE) {
            return Err(Error::NotARotation { orthogonality, det });
        }
        Ok(Self(m))
    }

    /// Wraps `m` without validation. Callers must know `m` is a rotation,
    /// e.g. a closed-form exponential or a short product of rotations.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_inner(self) -> Mat3 {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Frobenius norm of `RᵀR − I₃`.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.0)
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Tilt (gravity direction in the body frame), `Rᵀe₃`.
    pub fn tilt(&self) -> Vec3 {
        self.0.transpose() * e3()
    }
}

impl Default for RotationMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for RotationMatrix {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &RotationMatrix {
    type Output = Vec3;

    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

fn orthogonality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

/// Cross-product matrix: `skew(u) * v == u.cross(&v)`.
#[rustfmt::skip]
pub fn skew(u: &Vec3) -> Mat3 {
    Mat3::new(
         0.0, -u.z,  u.y,
         u.z,  0.0, -u.x,
        -u.y,  u.x,  0.0,
    )
}

/// Inverse of [`skew`]. Fails when `s` is not antisymmetric.
pub fn vex(s: &Mat3) -> Result<Vec3> {
    let asym = (s + s.transpose()).amax();
    if !(asym <= ANTISYMMETRY_TOLERANCE) {
        return Err(Error::NotAntisymmetric(asym));
    }
    Ok(Vec3::new(
        0.5 * (s[(2, 1)] - s[(1, 2)]),
        0.5 * (s[(0, 2)] - s[(2, 0)]),
        0.5 * (s[(1, 0)] - s[(0, 1)]),
    ))
}

/// Rodrigues coefficients `(sin x / x, (1 − cos x) / x²)`.
pub(crate) fn rodrigues_coefficients(angle: f64) -> (f64, f64) {
    if angle < SMALL_ANGLE {
        let a2 = angle * angle;
        (1.0 - a2 / 6.0, 0.5 - a2 / 24.0)
    } else {
        (angle.sin() / angle, (1.0 - angle.cos()) / (angle * angle))
    }
}

/// Exponential map `exp(θ^×)` via the Rodrigues closed form.
pub fn exp_so3(theta: &Vec3) -> RotationMatrix {
    let (a, b) = rodrigues_coefficients(theta.norm());
    let s = skew(theta);
    RotationMatrix(Mat3::identity() + s * a + s * s * b)
}

/// Regularized projection `(|u|² I₃ − u uᵀ) v`, which vanishes smoothly at `u = 0`.
pub fn proj_reg(u: &Vec3, v: &Vec3) -> Vec3 {
    v * u.norm_squared() - u * u.dot(v)
}

/// `trace(I₃ − R R̂ᵀ)`, in `[0, 4]`.
pub fn attitude_error(r: &RotationMatrix, r_hat: &RotationMatrix) -> f64 {
    3.0 - (r.0 * r_hat.0.transpose()).trace()
}

/// Intrinsic Z–Y–X (yaw, pitch, roll) angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerZyx {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerZyx {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn from_degrees(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::new(roll.to_radians(), pitch.to_radians(), yaw.to_radians())
    }

    /// True when roll and yaw cannot be separated; [`euler_zyx`] then sets roll to 0.
    pub fn is_near_gimbal_lock(&self) -> bool {
        FRAC_PI_2 - self.pitch.abs() <= GIMBAL_LOCK_MARGIN
    }

    pub fn to_rotation(&self) -> RotationMatrix {
        rotation_from_euler_zyx(self.roll, self.pitch, self.yaw)
    }
}

/// Decomposes `R = Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn euler_zyx(r: &RotationMatrix) -> EulerZyx {
    let m = &r.0;
    let pitch = (-m[(2, 0)]).atan2(m[(2, 1)].hypot(m[(2, 2)]));
    let mut angles = EulerZyx::new(0.0, pitch, 0.0);
    if angles.is_near_gimbal_lock() {
        angles.yaw = (-m[(0, 1)]).atan2(m[(1, 1)]);
    } else {
        angles.roll = m[(2, 1)].atan2(m[(2, 2)]);
        angles.yaw = m[(1, 0)].atan2(m[(0, 0)]);
    }
    angles
}

#[rustfmt::skip]
pub fn rotation_from_euler_zyx(roll: f64, pitch: f64, yaw: f64) -> RotationMatrix {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    RotationMatrix(Mat3::new(
        cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
        sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
        -sp,     cp * sr,                cp * cr,
    ))
}

/// Nearest rotation in the Frobenius sense (orthogonal Procrustes, `U Vᵀ` from the SVD).
pub fn reorthonormalize(m: &Mat3) -> Result<RotationMatrix> {
    let svd = m.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::ReflectionAfterProjection(f64::NAN));
    };
    let r = u * v_t;
    let det = r.determinant();
    if !(det > 0.0) {
        return Err(Error::ReflectionAfterProjection(det));
    }
    Ok(RotationMatrix(r))
}
