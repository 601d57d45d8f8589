//! `flexgim` — command-line front end for the flexured-gimbal measurement
//! toolkit.
//!
//! Subcommands mirror the measurement campaign: `simulate` runs the voltage
//! grid on the simulated plant, `calibrate` fits axis sensitivities from a
//! points file, `trim` recovers bias torques with the integral controller,
//! `map`/`coupling`/`thrust`/`validate` run the analyses, `report` renders
//! plot-ready tables, and `campaign` chains the whole pipeline.
//!
//! Exit codes: 0 success, 3 manifest error, 4 data-file parse error,
//! 5 convergence failure, 6 rank-deficient input, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flexgim::campaign::{self, default_out_dir, files};
use flexgim::manifest::Manifest;
use flexgim::report::{
    load_json, read_calibration, read_calibration_points, read_freeflight_points, save_json,
    write_calibration, Calibration, CouplingFile, MappingReport, ThrustFile,
};
use flexgim::{Error, Result};
use flexgim_core::estimation::fit_sensitivity;

#[derive(Parser)]
#[command(name = "flexgim", version, about = "Flexured-gimbal force/torque measurement toolkit")]
struct Cli {
    /// Print per-stage progress to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every grid command in a manifest, writing trace files.
    Simulate {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (default: $FLEXGIM_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the manifest seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Ideal-balance mode: no tilt correction, no damping terms.
        #[arg(long)]
        strict_paper: bool,
    },
    /// Fit per-axis sensitivities from a calibration points CSV.
    Calibrate {
        #[arg(long)]
        points: PathBuf,
        /// Output calibration file (default: <out dir>/calibration.toml).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover plant bias torques with the integral trim controller.
    Trim {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        strict_paper: bool,
    },
    /// Map command voltages to torques from simulated or recorded traces.
    Map {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory holding campaign.json and the trace files.
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        calibration: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-axis coupling residuals from a mapping report.
    Coupling {
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Thrust statistics from a mapping report.
    Thrust {
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the device mapping against free-flight ground truth.
    Validate {
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        freeflight: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render plot-ready CSV tables from the analysis reports.
    Report {
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        coupling: Option<PathBuf>,
        #[arg(long)]
        thrust: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The full pipeline: simulate → calibrate → map → coupling → thrust →
    /// report with one manifest.
    Campaign {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        strict_paper: bool,
    },
}

fn load_manifest(path: &Path, seed: Option<u64>, strict_paper: bool) -> Result<Manifest> {
    let mut manifest = Manifest::load(path)?;
    if let Some(seed) = seed {
        manifest.seed = seed;
    }
    if strict_paper {
        manifest.apply_strict_paper();
    }
    Ok(manifest)
}

fn out_dir(out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(default_out_dir)
}

fn out_file(out: &Option<PathBuf>, name: &str) -> PathBuf {
    match out {
        Some(path) => path.clone(),
        None => default_out_dir().join(name),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { manifest, out, seed, strict_paper } => {
            let manifest = load_manifest(&manifest, seed, strict_paper)?;
            let dir = out_dir(&out);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            campaign::run_simulate(&manifest, &dir, cli.verbose)?;
            println!("{}", dir.join(files::CAMPAIGN_INDEX).display());
        }
        Command::Calibrate { points, out } => {
            let sets = read_calibration_points(&points)?;
            let calibration = Calibration {
                roll: fit_sensitivity(&sets.roll)?,
                pitch: fit_sensitivity(&sets.pitch)?,
            };
            let path = out_file(&out, files::CALIBRATION);
            ensure_parent(&path)?;
            write_calibration(&path, &calibration)?;
            if cli.verbose {
                eprintln!(
                    "calibrate: k_s roll = {} N·m/rad (R² = {}), pitch = {} N·m/rad (R² = {})",
                    calibration.roll.sensitivity,
                    calibration.roll.r_squared,
                    calibration.pitch.sensitivity,
                    calibration.pitch.r_squared
                );
            }
            println!("{}", path.display());
        }
        Command::Trim { manifest, out, seed, strict_paper } => {
            let manifest = load_manifest(&manifest, seed, strict_paper)?;
            let dir = out_dir(&out);
            let trim = campaign::run_trim(&manifest, &dir)?;
            if cli.verbose {
                eprintln!(
                    "trim: bias roll = {} N·m, pitch = {} N·m, converged at {} s",
                    trim.bias_roll_nm, trim.bias_pitch_nm, trim.converged_at_s
                );
            }
            println!("{}", dir.join(files::TRIM).display());
        }
        Command::Map { manifest, traces, calibration, out } => {
            let manifest = load_manifest(&manifest, None, false)?;
            let calibration = read_calibration(&calibration)?;
            let report = campaign::run_map(&manifest, &traces, &calibration)?;
            let path = out_file(&out, files::MAPPING);
            ensure_parent(&path)?;
            save_json(&path, &report)?;
            println!("{}", path.display());
        }
        Command::Coupling { mapping, out } => {
            let report: MappingReport = load_json(&mapping)?;
            let coupling = campaign::run_coupling(&report)?;
            let path = out_file(&out, files::COUPLING);
            ensure_parent(&path)?;
            save_json(&path, &coupling)?;
            println!("{}", path.display());
        }
        Command::Thrust { mapping, out } => {
            let report: MappingReport = load_json(&mapping)?;
            let thrust = campaign::run_thrust(&report)?;
            let path = out_file(&out, files::THRUST);
            ensure_parent(&path)?;
            save_json(&path, &thrust)?;
            println!("{}", path.display());
        }
        Command::Validate { mapping, freeflight, out } => {
            let report: MappingReport = load_json(&mapping)?;
            let points = read_freeflight_points(&freeflight)?;
            let validation = campaign::run_validate(&report, &points)?;
            let path = out_file(&out, files::VALIDATION);
            ensure_parent(&path)?;
            save_json(&path, &validation)?;
            println!("{}", path.display());
        }
        Command::Report { mapping, coupling, thrust, out } => {
            let report: MappingReport = load_json(&mapping)?;
            let coupling: Option<CouplingFile> =
                coupling.as_deref().map(load_json).transpose()?;
            let thrust: Option<ThrustFile> = thrust.as_deref().map(load_json).transpose()?;
            let dir = match out {
                Some(dir) => dir,
                None => default_out_dir().join(files::REPORT_DIR),
            };
            flexgim::report::render_plot_tables(&report, coupling.as_ref(), thrust.as_ref(), &dir)?;
            println!("{}", dir.display());
        }
        Command::Campaign { manifest, out, seed, strict_paper } => {
            let manifest = load_manifest(&manifest, seed, strict_paper)?;
            let dir = out_dir(&out);
            campaign::run_campaign(&manifest, &dir, cli.verbose)?;
            println!("{}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
