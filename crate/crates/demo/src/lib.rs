//! Browser front end: a single run, Monte Carlo error bands and an
//! observability sweep, each returned to JavaScript as a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use baro_attitude::harness::{self, CampaignConfig};
use baro_attitude::observability::{sweep, WindowDiagnostics, DEFAULT_MU};

/// Largest number of points handed to the page per series.
const MAX_POINTS: usize = 1500;

/// Knobs exposed by the page.
#[derive(Debug, Clone, Copy)]
pub struct DemoParams {
    pub k_z: f64,
    pub k_m: f64,
    /// Multiplies every sensor noise std (the barometer variance by its square).
    pub noise_scale: f64,
    pub duration: f64,
    pub seed: u64,
}

impl DemoParams {
    fn config(&self, n_runs: usize) -> Result<CampaignConfig, String> {
        let mut cfg = CampaignConfig {
            duration: self.duration,
            n_runs,
            seed: self.seed,
            ..CampaignConfig::default()
        };
        cfg.attitude.k_z = self.k_z;
        cfg.attitude.k_m = self.k_m;
        let s = self.noise_scale;
        if s.is_nan() || s < 0.0 {
            return Err(format!("noise scale must be >= 0, got {s}"));
        }
        cfg.noise.std_accel *= s;
        cfg.noise.std_gyro *= s;
        cfg.noise.std_mag *= s;
        cfg.noise.var_baro *= s * s;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Debug, Serialize)]
pub struct RunSeries {
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub h_hat: Vec<f64>,
    pub z: [Vec<f64>; 3],
    pub z_hat: [Vec<f64>; 3],
    pub euler: [Vec<f64>; 3],
    pub euler_hat: [Vec<f64>; 3],
    pub tilt_err: Vec<f64>,
    pub att_err: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Bands {
    pub t: Vec<f64>,
    pub tilt: [Vec<f64>; 3],
    pub att: [Vec<f64>; 3],
    pub converged_fraction: f64,
}

fn stride(n: usize) -> usize {
    n.div_ceil(MAX_POINTS).max(1)
}

/// One seeded run of the cascade, decimated for plotting.
pub fn single_run(p: &DemoParams) -> Result<RunSeries, String> {
    let cfg = p.config(1)?;
    let run = harness::run_single(&cfg, 0).map_err(|e| e.to_string())?;
    let rows: Vec<_> = run.rows.iter().step_by(stride(run.rows.len())).collect();
    let col = |f: fn(&harness::RunRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
    Ok(RunSeries {
        t: col(|r| r.t),
        h: col(|r| r.h),
        h_hat: col(|r| r.h_hat),
        z: [col(|r| r.z1), col(|r| r.z2), col(|r| r.z3)],
        z_hat: [col(|r| r.zhat1), col(|r| r.zhat2), col(|r| r.zhat3)],
        euler: [col(|r| r.roll), col(|r| r.pitch), col(|r| r.yaw)],
        euler_hat: [
            col(|r| r.roll_hat),
            col(|r| r.pitch_hat),
            col(|r| r.yaw_hat),
        ],
        tilt_err: col(|r| r.tilt_err),
        att_err: col(|r| r.att_err),
    })
}

/// 5/50/95 % error bands over `n_runs` seeded runs.
pub fn campaign_bands(p: &DemoParams, n_runs: usize) -> Result<Bands, String> {
    let cfg = p.config(n_runs)?;
    let c = harness::run_campaign(&cfg).map_err(|e| e.to_string())?;
    let rows: Vec<_> = c
        .summary
        .rows
        .iter()
        .step_by(stride(c.summary.rows.len()))
        .collect();
    let col = |f: fn(&harness::SummaryRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
    Ok(Bands {
        t: col(|r| r.t),
        tilt: [
            col(|r| r.tilt_q05),
            col(|r| r.tilt_q50),
            col(|r| r.tilt_q95),
        ],
        att: [col(|r| r.att_q05), col(|r| r.att_q50), col(|r| r.att_q95)],
        converged_fraction: c.summary.converged_fraction(),
    })
}

/// Gramian and excitation level over sliding windows of the reference trajectory.
pub fn observability_windows(
    duration: f64,
    window: f64,
    step: f64,
) -> Result<Vec<WindowDiagnostics>, String> {
    if !(window > 0.0 && step > 0.0 && duration >= window) {
        return Err("need window > 0, step > 0 and duration >= window".into());
    }
    let cfg = CampaignConfig {
        duration,
        ..CampaignConfig::default()
    };
    let truth = harness::reference_truth(&cfg).map_err(|e| e.to_string())?;
    Ok(sweep(&truth, duration, window, step, DEFAULT_MU))
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = simulateRun)]
pub fn simulate_run_js(
    k_z: f64,
    k_m: f64,
    noise_scale: f64,
    duration: f64,
    seed: u32,
) -> Result<String, JsError> {
    let p = DemoParams {
        k_z,
        k_m,
        noise_scale,
        duration,
        seed: seed.into(),
    };
    to_json(single_run(&p))
}

#[wasm_bindgen(js_name = campaignBands)]
pub fn campaign_bands_js(
    k_z: f64,
    k_m: f64,
    noise_scale: f64,
    duration: f64,
    seed: u32,
    n_runs: u32,
) -> Result<String, JsError> {
    let p = DemoParams {
        k_z,
        k_m,
        noise_scale,
        duration,
        seed: seed.into(),
    };
    to_json(campaign_bands(&p, n_runs as usize))
}

#[wasm_bindgen(js_name = observabilitySweep)]
pub fn observability_sweep_js(duration: f64, window: f64, step: f64) -> Result<String, JsError> {
    to_json(observability_windows(duration, window, step))
}
