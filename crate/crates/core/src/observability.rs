//! Observability diagnostics for the altitude/tilt model.
//!
//! Computes the state transition matrix of `ẋ = A(t) x`, the normalized
//! observability Gramian
//!
//! ```text
//! W(t, t+δ) = (1/δ) ∫ Φᵀ(s, t) Cᵀ C Φ(s, t) ds
//! ```
//!
//! and the persistent-excitation level of the inertial specific force
//! `a_I = R a`, i.e. the smallest eigenvalue of `(1/δ) ∫ a_I a_Iᵀ ds`.
//! Integrals use composite Simpson quadrature refined until the smallest
//! eigenvalue settles.

use nalgebra::SymmetricEigen;

use crate::geom3::{Mat3, RotationMatrix, Vec3};
use crate::riccati::{build_a, min_eigenvalue, output_matrix, Matrix5};
use crate::sim::{Motion, Trajectory};

/// Largest RK4 step used for transition matrices (s).
pub const MAX_TRANSITION_STEP: f64 = 1e-3;

/// Default cutoff for declaring a window uniformly observable.
pub const DEFAULT_MU: f64 = 1e-6;

const MIN_INTERVALS: usize = 200;
const MAX_INTERVALS: usize = 1 << 16;
const REFINEMENT_TOLERANCE: f64 = 1e-8;

/// IMU-side signals at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSample {
    /// Body-frame specific acceleration.
    pub accel: Vec3,
    pub omega: Vec3,
    pub rotation: RotationMatrix,
}

/// A continuous source of [`SignalSample`]s.
pub trait Excitation {
    fn sample(&self, t: f64) -> SignalSample;
}

impl<F: Fn(f64) -> SignalSample> Excitation for F {
    fn sample(&self, t: f64) -> SignalSample {
        self(t)
    }
}

impl<M: Motion> Excitation for Trajectory<M> {
    fn sample(&self, t: f64) -> SignalSample {
        let s = self.sample_at(t);
        SignalSample {
            accel: s.accel,
            omega: s.omega,
            rotation: s.rotation,
        }
    }
}

#[derive(Clone, Copy)]
pub struct SignalWindow<'a> {
    pub t0: f64,
    pub delta: f64,
    pub signal: &'a dyn Excitation,
}

impl<'a> SignalWindow<'a> {
    pub fn new(t0: f64, delta: f64, signal: &'a dyn Excitation) -> Self {
        assert!(delta > 0.0, "window length must be positive");
        Self { t0, delta, signal }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramianReport {
    pub t0: f64,
    pub delta: f64,
    pub w: Matrix5,
    pub min_eig: f64,
    pub mu_threshold: f64,
    pub uniformly_observable_on_window: bool,
    /// Simpson intervals used after refinement.
    pub intervals: usize,
}

fn rk4_transition(phi: &Matrix5, t: f64, h: f64, signal: &dyn Excitation) -> Matrix5 {
    let a_of = |t: f64| {
        let s = signal.sample(t);
        build_a(&s.accel, &s.omega)
    };
    let (a0, am, a1) = (a_of(t), a_of(t + 0.5 * h), a_of(t + h));
    let k1 = a0 * phi;
    let k2 = am * (phi + k1 * (0.5 * h));
    let k3 = am * (phi + k2 * (0.5 * h));
    let k4 = a1 * (phi + k3 * h);
    phi + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Advances `phi = Φ(t_from, ·)` to `Φ(t_to, ·)`.
fn propagate(phi: &Matrix5, t_from: f64, t_to: f64, signal: &dyn Excitation) -> Matrix5 {
    let span = t_to - t_from;
    if span <= 0.0 {
        return *phi;
    }
    let steps = (span / MAX_TRANSITION_STEP).ceil() as usize;
    let h = span / steps as f64;
    (0..steps).fold(*phi, |phi, k| {
        rk4_transition(&phi, t_from + k as f64 * h, h, signal)
    })
}

/// `Φ(t1, t0)`, solution of `∂Φ/∂t1 = A(t1) Φ`, `Φ(t0, t0) = I₅`.
pub fn transition_matrix(t0: f64, t1: f64, signal: &dyn Excitation) -> Matrix5 {
    assert!(t1 >= t0, "transition_matrix needs t1 >= t0");
    propagate(&Matrix5::identity(), t0, t1, signal)
}

fn simpson_weight(k: usize, n: usize) -> f64 {
    if k == 0 || k == n {
        1.0
    } else if k % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

fn gramian_with(window: &SignalWindow<'_>, n: usize) -> Matrix5 {
    let h = window.delta / n as f64;
    let c = output_matrix();
    let mut phi = Matrix5::identity();
    let mut acc = Matrix5::zeros();
    for k in 0..=n {
        let t = window.t0 + k as f64 * h;
        if k > 0 {
            phi = propagate(&phi, t - h, t, window.signal);
        }
        let row = c * phi;
        acc += row.transpose() * row * simpson_weight(k, n);
    }
    let w = acc * (h / 3.0) / window.delta;
    (w + w.transpose()) * 0.5
}

/// Normalized observability Gramian on the window, refined by doubling the
/// Simpson node count until the smallest eigenvalue moves by less than 1e-8.
pub fn gramian(window: &SignalWindow<'_>, mu_threshold: f64) -> GramianReport {
    let mut n = MIN_INTERVALS;
    let mut w = gramian_with(window, n);
    let mut eig = min_eigenvalue(&w);
    while n < MAX_INTERVALS {
        let w2 = gramian_with(window, 2 * n);
        let eig2 = min_eigenvalue(&w2);
        n *= 2;
        let settled = (eig2 - eig).abs() < REFINEMENT_TOLERANCE;
        w = w2;
        eig = eig2;
        if settled {
            break;
        }
    }
    GramianReport {
        t0: window.t0,
        delta: window.delta,
        w,
        min_eig: eig,
        mu_threshold,
        uniformly_observable_on_window: eig >= mu_threshold,
        intervals: n,
    }
}

/// `(1/δ) ∫ f fᵀ ds` over `[t0, t0 + δ]` with `n` Simpson intervals.
fn excitation_gram_with<F: Fn(f64) -> Vec3>(t0: f64, delta: f64, f: &F, n: usize) -> Mat3 {
    let h = delta / n as f64;
    let acc = (0..=n).fold(Mat3::zeros(), |acc, k| {
        let v = f(t0 + k as f64 * h);
        acc + v * v.transpose() * simpson_weight(k, n)
    });
    acc * (h / 3.0) / delta
}

fn min_eigenvalue3(m: &Mat3) -> f64 {
    SymmetricEigen::new((m + m.transpose()) * 0.5)
        .eigenvalues
        .min()
}

/// Normalized outer-product integral of an arbitrary vector signal, refined
/// like [`gramian`].
pub fn excitation_gram<F: Fn(f64) -> Vec3>(t0: f64, delta: f64, f: F) -> Mat3 {
    let mut n = MIN_INTERVALS;
    let mut g = excitation_gram_with(t0, delta, &f, n);
    while n < MAX_INTERVALS {
        let g2 = excitation_gram_with(t0, delta, &f, 2 * n);
        n *= 2;
        let settled = (min_eigenvalue3(&g2) - min_eigenvalue3(&g)).abs() < REFINEMENT_TOLERANCE;
        g = g2;
        if settled {
            break;
        }
    }
    g
}

/// Excitation level of a vector signal: smallest eigenvalue of its
/// normalized outer-product integral, clamped at zero.
pub fn pe_metric_of<F: Fn(f64) -> Vec3>(t0: f64, delta: f64, f: F) -> f64 {
    min_eigenvalue3(&excitation_gram(t0, delta, f)).max(0.0)
}

/// Excitation level of the inertial specific force `a_I(s) = R(s) a(s)` on the window.
pub fn pe_metric(window: &SignalWindow<'_>) -> f64 {
    pe_metric_of(window.t0, window.delta, |t| {
        let s = window.signal.sample(t);
        s.rotation * s.accel
    })
}

/// One row of the per-window diagnostic table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WindowDiagnostics {
    pub t0: f64,
    pub delta: f64,
    pub gramian_min_eig: f64,
    pub pe_metric: f64,
    pub uniformly_observable: bool,
}

/// Gramian and excitation diagnostics for windows `[t0, t0 + δ]`, `t0 = 0, step, …`,
/// that fit inside `[0, duration]`.
pub fn sweep(
    signal: &dyn Excitation,
    duration: f64,
    delta: f64,
    step: f64,
    mu: f64,
) -> Vec<WindowDiagnostics> {
    let mut rows = Vec::new();
    let mut k = 0usize;
    loop {
        let t0 = k as f64 * step;
        if t0 + delta > duration + 1e-9 {
            break;
        }
        let window = SignalWindow::new(t0, delta, signal);
        let report = gramian(&window, mu);
        rows.push(WindowDiagnostics {
            t0,
            delta,
            gramian_min_eig: report.min_eig,
            pe_metric: pe_metric(&window),
            uniformly_observable: report.uniformly_observable_on_window,
        });
        k += 1;
    }
    rows
}
