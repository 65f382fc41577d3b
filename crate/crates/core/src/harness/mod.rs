//! Monte Carlo harness: runs the cascaded observers against a shared truth
//! trajectory over many seeded initial conditions and noise realizations.

mod config;
pub mod io;

pub use config::{CampaignConfig, ConvergenceThresholds, InitSpec, RiccatiSection};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::attitude;
use crate::error::{Error, Result};
use crate::geom3::{
    attitude_error, euler_zyx, exp_so3, rotation_from_euler_zyx, RotationMatrix, Vec3,
};
use crate::riccati::{RiccatiObserver, State5};
use crate::sim::{
    integrate_truth, synthesize_measurements, Aligner, ReferenceScenario, SensorStreams, Trajectory,
};

/// Starting estimates of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConditions {
    pub state: State5,
    pub rotation: RotationMatrix,
}

/// One row of a per-run CSV. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunRow {
    pub t: f64,
    pub h: f64,
    pub hdot: f64,
    pub h_hat: f64,
    pub hdot_hat: f64,
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub zhat1: f64,
    pub zhat2: f64,
    pub zhat3: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub roll_hat: f64,
    pub pitch_hat: f64,
    pub yaw_hat: f64,
    /// `‖ẑ − z‖`.
    pub tilt_err: f64,
    /// `tr(I − R R̂ᵀ)`.
    pub att_err: f64,
}

/// Invariant monitors collected over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunDiagnostics {
    pub min_covariance_eigenvalue: f64,
    pub max_covariance_asymmetry: f64,
    pub max_rotation_orthogonality_error: f64,
    pub predictions: usize,
    pub corrections: usize,
    pub all_finite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_index: usize,
    pub seed: u64,
    pub initial: InitialConditions,
    pub rows: Vec<RunRow>,
    pub diagnostics: RunDiagnostics,
}

impl RunResult {
    pub fn final_row(&self) -> &RunRow {
        self.rows
            .last()
            .expect("a run always records its initial row")
    }

    /// Row whose timestamp is closest to `t`.
    pub fn row_at(&self, t: f64) -> &RunRow {
        let dt = if self.rows.len() > 1 {
            self.rows[1].t - self.rows[0].t
        } else {
            1.0
        };
        let k = ((t - self.rows[0].t) / dt).round().max(0.0) as usize;
        &self.rows[k.min(self.rows.len() - 1)]
    }

    pub fn converged(&self, thresholds: &ConvergenceThresholds) -> bool {
        let last = self.final_row();
        last.tilt_err < thresholds.tilt_error && last.att_err < thresholds.attitude_error
    }
}

/// Per-tick error quantiles across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub t: f64,
    pub tilt_q05: f64,
    pub tilt_q50: f64,
    pub tilt_q95: f64,
    pub att_q05: f64,
    pub att_q50: f64,
    pub att_q95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub rows: Vec<SummaryRow>,
    /// Per run, whether both final errors are under the convergence thresholds.
    pub converged: Vec<bool>,
    /// Wall-clock seconds for the whole campaign, when a clock is available.
    pub wall_clock_s: Option<f64>,
}

impl CampaignSummary {
    pub fn converged_fraction(&self) -> f64 {
        self.converged.iter().filter(|c| **c).count() as f64 / self.converged.len().max(1) as f64
    }

    pub fn row_at(&self, t: f64) -> &SummaryRow {
        self.rows
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("summary has rows")
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub runs: Vec<RunResult>,
    pub summary: CampaignSummary,
}

/// Seed of run `index`, derived from the master seed.
pub fn run_seed(master: u64, index: usize) -> u64 {
    splitmix64(master ^ splitmix64(index as u64))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `R̂(0) = R_mean exp(δθ)` with `δθ ~ N(0, σ² I)`, then
/// `x̂(0) = [h̄, ḣ̄, R̂(0)ᵀe₃] + σ_x ⊙ ν`, `ν ~ N(0, I₅)`.
pub fn sample_initial_conditions<R: Rng>(rng: &mut R, init: &InitSpec) -> InitialConditions {
    let [roll, pitch, yaw] = init.mean_euler_deg.map(f64::to_radians);
    let mean = rotation_from_euler_zyx(roll, pitch, yaw);
    let std = init.attitude_std_deg.to_radians();
    let mut normal = || rng.sample::<f64, _>(StandardNormal);
    let delta = Vec3::new(normal(), normal(), normal()) * std;
    let rotation = mean * exp_so3(&delta);
    let s = init.sigma_x;
    let z = rotation.tilt();
    let state = State5::new(
        init.mean_altitude + s[0] * normal(),
        init.mean_vertical_velocity + s[1] * normal(),
        z + Vec3::new(s[2] * normal(), s[3] * normal(), s[4] * normal()),
    );
    InitialConditions { state, rotation }
}

/// Initial estimates equal to the truth at `t = 0`.
pub fn truth_initial_conditions(truth: &Trajectory<ReferenceScenario>) -> InitialConditions {
    let s = &truth[0];
    InitialConditions {
        state: State5::new(s.h, s.hdot, s.tilt()),
        rotation: s.rotation,
    }
}

/// Truth trajectory of the reference scenario for `cfg`, starting at `R(0) = I`.
pub fn reference_truth(cfg: &CampaignConfig) -> Result<Trajectory<ReferenceScenario>> {
    integrate_truth(
        ReferenceScenario,
        cfg.duration,
        cfg.truth_dt,
        RotationMatrix::identity(),
    )
}

/// Noise streams of run `index`.
pub fn run_streams(
    cfg: &CampaignConfig,
    truth: &Trajectory<ReferenceScenario>,
    seed: u64,
) -> Result<SensorStreams> {
    let noise = crate::sim::NoiseConfig {
        seed: splitmix64(seed ^ 0x006E_6F69_7365),
        ..cfg.noise
    };
    synthesize_measurements(truth, &noise, &cfg.attitude.m_inertial())
}

/// Runs the cascade over precomputed streams.
///
/// At each IMU tick `t_k`: record, step the attitude observer with `ẑ(t_k)`
/// and the magnetometer sample at `t_k`, then step the Riccati observer with
/// the barometer sample at `t_k + T`.
pub fn run_with(
    cfg: &CampaignConfig,
    truth: &Trajectory<ReferenceScenario>,
    streams: &SensorStreams,
    initial: InitialConditions,
) -> Result<(Vec<RunRow>, RunDiagnostics)> {
    let period = cfg.imu_period();
    let stride = ((period / truth.dt()).round() as usize).max(1);
    let mut riccati = RiccatiObserver::new(cfg.riccati_config()?, initial.state)?;
    let mut r_hat = initial.rotation;
    let mut baro = Aligner::new(&streams.baro, 0.5 * period);
    let mut mag = Aligner::new(&streams.mag, 0.5 * period);
    let mut rows = Vec::with_capacity(streams.imu.len());
    let mut diag = RunDiagnostics {
        min_covariance_eigenvalue: f64::INFINITY,
        max_covariance_asymmetry: 0.0,
        max_rotation_orthogonality_error: 0.0,
        predictions: 0,
        corrections: 0,
        all_finite: true,
    };

    for (k, imu) in streams.imu.iter().enumerate() {
        let Some(truth_k) = truth.get(k * stride) else {
            return Err(Error::LengthMismatch {
                what: "IMU samples",
                got: streams.imu.len(),
                expected: truth.len() / stride + 1,
            });
        };
        let x = *riccati.state();
        let row = record(truth_k, &x, &r_hat);
        let p = riccati.covariance();
        diag.min_covariance_eigenvalue = diag.min_covariance_eigenvalue.min(p.min_eigenvalue());
        diag.max_covariance_asymmetry = diag.max_covariance_asymmetry.max(p.asymmetry());
        diag.max_rotation_orthogonality_error = diag
            .max_rotation_orthogonality_error
            .max(r_hat.orthogonality_error());
        diag.all_finite &= x.is_finite() && r_hat.matrix().iter().all(|v| v.is_finite());
        rows.push(row);
        if k + 1 == streams.imu.len() {
            break;
        }
        let m = mag.take_at(imu.t).map(|m| &m.field);
        r_hat = attitude::step(&r_hat, &imu.omega, &x.z, m, &cfg.attitude, period);
        riccati.step(imu, baro.take_at(imu.t + period))?;
    }
    diag.predictions = riccati.predictions();
    diag.corrections = riccati.corrections();
    Ok((rows, diag))
}

fn record(truth: &crate::sim::TruthSample, x: &State5, r_hat: &RotationMatrix) -> RunRow {
    let z = truth.tilt();
    let e = euler_zyx(&truth.rotation);
    let e_hat = euler_zyx(r_hat);
    RunRow {
        t: truth.t,
        h: truth.h,
        hdot: truth.hdot,
        h_hat: x.h,
        hdot_hat: x.hdot,
        z1: z.x,
        z2: z.y,
        z3: z.z,
        zhat1: x.z.x,
        zhat2: x.z.y,
        zhat3: x.z.z,
        roll: e.roll,
        pitch: e.pitch,
        yaw: e.yaw,
        roll_hat: e_hat.roll,
        pitch_hat: e_hat.pitch,
        yaw_hat: e_hat.yaw,
        tilt_err: (x.z - z).norm(),
        att_err: attitude_error(&truth.rotation, r_hat),
    }
}

/// Run `index` of the campaign on a shared truth trajectory.
pub fn run_single_on(
    cfg: &CampaignConfig,
    truth: &Trajectory<ReferenceScenario>,
    index: usize,
) -> Result<RunResult> {
    let seed = run_seed(cfg.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = sample_initial_conditions(&mut rng, &cfg.init);
    let streams = run_streams(cfg, truth, seed)?;
    let (rows, diagnostics) = run_with(cfg, truth, &streams, initial)?;
    Ok(RunResult {
        run_index: index,
        seed,
        initial,
        rows,
        diagnostics,
    })
}

/// Run `index` of the campaign described by `cfg`.
pub fn run_single(cfg: &CampaignConfig, index: usize) -> Result<RunResult> {
    cfg.validate()?;
    run_single_on(cfg, &reference_truth(cfg)?, index)
}

/// Runs every seeded run of the campaign and summarizes the errors.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Campaign> {
    cfg.validate()?;
    #[cfg(not(target_arch = "wasm32"))]
    let start = std::time::Instant::now();
    let truth = reference_truth(cfg)?;
    let runs = run_all(cfg, &truth)?;
    let summary = summarize(&runs, &cfg.convergence);
    #[cfg(not(target_arch = "wasm32"))]
    let summary = CampaignSummary {
        wall_clock_s: Some(start.elapsed().as_secs_f64()),
        ..summary
    };
    Ok(Campaign { runs, summary })
}

#[cfg(feature = "parallel")]
fn run_all(cfg: &CampaignConfig, truth: &Trajectory<ReferenceScenario>) -> Result<Vec<RunResult>> {
    use rayon::prelude::*;
    (0..cfg.n_runs)
        .into_par_iter()
        .map(|i| run_single_on(cfg, truth, i))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all(cfg: &CampaignConfig, truth: &Trajectory<ReferenceScenario>) -> Result<Vec<RunResult>> {
    (0..cfg.n_runs)
        .map(|i| run_single_on(cfg, truth, i))
        .collect()
}

/// Per-tick 5/50/95 % quantiles of the tilt and attitude errors.
pub fn summarize(runs: &[RunResult], thresholds: &ConvergenceThresholds) -> CampaignSummary {
    let n_rows = runs.iter().map(|r| r.rows.len()).min().unwrap_or(0);
    let mut tilt = vec![0.0; runs.len()];
    let mut att = vec![0.0; runs.len()];
    let rows = (0..n_rows)
        .map(|k| {
            for (i, run) in runs.iter().enumerate() {
                tilt[i] = run.rows[k].tilt_err;
                att[i] = run.rows[k].att_err;
            }
            tilt.sort_by(f64::total_cmp);
            att.sort_by(f64::total_cmp);
            SummaryRow {
                t: runs[0].rows[k].t,
                tilt_q05: quantile_sorted(&tilt, 0.05),
                tilt_q50: quantile_sorted(&tilt, 0.50),
                tilt_q95: quantile_sorted(&tilt, 0.95),
                att_q05: quantile_sorted(&att, 0.05),
                att_q50: quantile_sorted(&att, 0.50),
                att_q95: quantile_sorted(&att, 0.95),
            }
        })
        .collect();
    CampaignSummary {
        rows,
        converged: runs.iter().map(|r| r.converged(thresholds)).collect(),
        wall_clock_s: None,
    }
}

/// Quantile of sorted data with linear interpolation between order statistics
/// at position `q (n − 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantiles_interpolate_linearly() {
        let v: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.5), 5.0);
        assert_abs_diff_eq!(quantile_sorted(&v, 0.05), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(quantile_sorted(&v, 0.95), 9.5, epsilon = 1e-12);
        assert_eq!(quantile_sorted(&[1.0, 3.0], 0.5), 2.0);
        assert_eq!(quantile_sorted(&[4.0], 0.95), 4.0);
        assert!(quantile_sorted(&[], 0.5).is_nan());
    }

    #[test]
    fn zero_spread_gives_mean_initial_conditions() {
        let init = InitSpec {
            sigma_x: [0.0; 5],
            attitude_std_deg: 0.0,
            ..InitSpec::default()
        };
        let ic = sample_initial_conditions(&mut ChaCha8Rng::seed_from_u64(9), &init);
        let mean = rotation_from_euler_zyx(
            60f64.to_radians(),
            (-30f64).to_radians(),
            45f64.to_radians(),
        );
        assert_abs_diff_eq!(ic.rotation.into_inner(), mean.into_inner(), epsilon = 1e-15);
        assert_eq!(ic.state.h, 5.0);
        assert_eq!(ic.state.hdot, 5.0);
        assert_abs_diff_eq!(ic.state.z, mean.tilt(), epsilon = 1e-15);
    }

    #[test]
    fn run_seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..100).map(|i| run_seed(7, i)).collect();
        let mut unique = seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), seeds.len());
        assert_eq!(run_seed(7, 3), run_seed(7, 3));
        assert_ne!(run_seed(7, 3), run_seed(8, 3));
    }

    #[test]
    fn short_run_records_every_tick() {
        let cfg = CampaignConfig {
            duration: 1.0,
            n_runs: 1,
            ..CampaignConfig::default()
        };
        let run = run_single(&cfg, 0).unwrap();
        assert_eq!(run.rows.len(), 201);
        assert_abs_diff_eq!(run.final_row().t, 1.0, epsilon = 1e-12);
        assert_eq!(run.diagnostics.predictions, 200);
        assert_eq!(run.diagnostics.corrections, 5);
        assert!(run.diagnostics.all_finite);
        assert_eq!(run_single(&cfg, 0).unwrap(), run);
    }
}
