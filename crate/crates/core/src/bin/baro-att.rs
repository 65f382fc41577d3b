//! Command-line front end: Monte Carlo campaigns and observability sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use baro_attitude::harness::{self, io, CampaignConfig};
use baro_attitude::observability::{sweep, DEFAULT_MU};
use baro_attitude::Result;

#[derive(Parser)]
#[command(
    name = "baro-att",
    version,
    about = "Barometer-aided attitude estimation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo campaign and write per-run and summary CSVs.
    Simulate(SimulateArgs),
    /// Sweep the observability Gramian and excitation level over sliding windows.
    Gramian(GramianArgs),
    /// Print the built-in default configuration as TOML.
    DefaultConfig,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML campaign configuration.
    #[arg(long)]
    config: PathBuf,
    /// Number of runs (overrides the config).
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Simulated duration in seconds (overrides the config).
    #[arg(long)]
    duration: Option<f64>,
    /// Zero every sensor noise level.
    #[arg(long)]
    noise_free: bool,
    /// Also write gramian.csv for the truth trajectory.
    #[arg(long)]
    gramian: bool,
    /// Also write the truth and sensor streams of run 0.
    #[arg(long)]
    export_streams: bool,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args)]
struct GramianArgs {
    /// TOML campaign configuration; only the duration and truth step are used.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    duration: Option<f64>,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args, Clone, Copy)]
struct WindowArgs {
    /// Gramian window length (s).
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    window: f64,
    /// Spacing of window start times (s).
    #[arg(long, default_value_t = 1.0)]
    window_step: f64,
    /// Uniform observability threshold on the Gramian's smallest eigenvalue.
    #[arg(long, default_value_t = DEFAULT_MU)]
    mu: f64,
}

fn load(path: &Path, duration: Option<f64>) -> Result<CampaignConfig> {
    let mut cfg = CampaignConfig::from_file(path)?;
    if let Some(d) = duration {
        cfg.duration = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_gramian(cfg: &CampaignConfig, w: WindowArgs, out: &Path) -> Result<usize> {
    if !(w.window > 0.0 && w.window_step > 0.0 && w.mu >= 0.0) {
        return Err(baro_attitude::Error::InvalidConfig(
            "--window and --window-step must be > 0, --mu >= 0".into(),
        ));
    }
    let truth = harness::reference_truth(cfg)?;
    let rows = sweep(&truth, cfg.duration, w.window, w.window_step, w.mu);
    io::write_gramian_csv(out, &rows)?;
    Ok(rows.len())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = load(&args.config, args.duration)?;
    if let Some(n) = args.runs {
        cfg.n_runs = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.noise_free {
        cfg = cfg.noise_free();
    }
    cfg.validate()?;

    let campaign = harness::run_campaign(&cfg)?;
    let written = io::write_campaign(&args.out, &campaign)?;
    std::fs::write(args.out.join("config.toml"), cfg.to_toml_string())
        .map_err(|e| baro_attitude::Error::InvalidConfig(format!("{}: {e}", args.out.display())))?;

    if args.export_streams {
        let truth = harness::reference_truth(&cfg)?;
        let streams = harness::run_streams(&cfg, &truth, campaign.runs[0].seed)?;
        let stride = ((cfg.imu_period() / truth.dt()).round() as usize).max(1);
        io::write_streams(&args.out, "run_000_", &truth, stride, &streams)?;
    }
    if args.gramian {
        let n = write_gramian(&cfg, args.window, &args.out.join("gramian.csv"))?;
        println!("gramian: {n} windows");
    }

    let s = &campaign.summary;
    let last = s.rows.last().expect("campaign has rows");
    println!(
        "{} runs, {} files in {}",
        campaign.runs.len(),
        written.len(),
        args.out.display()
    );
    println!(
        "t = {:.3} s: median tilt error {:.3e}, median attitude error {:.3e}, converged {:.1}%",
        last.t,
        last.tilt_q50,
        last.att_q50,
        100.0 * s.converged_fraction()
    );
    if let Some(wall) = s.wall_clock_s {
        println!("wall clock {wall:.2} s");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Gramian(args) => load(&args.config, args.duration).and_then(|cfg| {
            let n = write_gramian(&cfg, args.window, &args.out)?;
            println!("gramian: {n} windows written to {}", args.out.display());
            Ok(())
        }),
        Command::DefaultConfig => {
            print!("{}", CampaignConfig::default().to_toml_string());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
