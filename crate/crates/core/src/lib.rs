//! Attitude estimation from an IMU, a magnetometer and a barometer.
//!
//! A linear time-varying Riccati observer estimates altitude, vertical
//! velocity and the body-frame gravity direction `z = Rᵀe₃` from the
//! accelerometer, gyroscope and barometer. Its tilt estimate feeds a
//! complementary filter on SO(3) that also uses the magnetometer for yaw.
//!
//! Modules:
//! - [`geom3`]: SO(3) primitives.
//! - [`sim`]: truth trajectories and sensor synthesis.
//! - [`riccati`]: the 5-state observer, discrete and continuous.
//! - [`attitude`]: the SO(3) observer.
//! - [`observability`]: Gramian and excitation diagnostics.
//! - [`harness`]: seeded Monte Carlo campaigns and CSV output.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attitude;
pub mod error;
pub mod geom3;
pub mod harness;
pub mod observability;
pub mod riccati;
pub mod sim;

pub use error::{Error, Result};
pub use geom3::{Mat3, RotationMatrix, Vec3};
