use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nvdac::io::RunConfig;
use nvdac::workflow::{self, CalibrateRequest, FitMode};

#[derive(Parser)]
#[command(name = "nvdac", version, about = "NV-center ODMR simulation, fitting and pressure calibration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed stored in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a spectrum or field-sweep map.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write an SVG plot next to the CSV.
        #[arg(long)]
        plot: bool,
    },
    /// Fit stress (α, P) or field magnitude to a spectrum/map file.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "stress")]
        mode: Mode,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate a calibration relation; prints JSON.
    Calibrate {
        #[command(subcommand)]
        what: Calibrate,
        #[command(flatten)]
        common: Common,
        /// Write `calibration.json` here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Stress,
    Field,
}

#[derive(Subcommand)]
enum Calibrate {
    /// Raman edge shift (cm^-1) <-> pressure (GPa).
    Raman {
        #[arg(long, conflicts_with = "pressure", required_unless_present = "pressure", allow_negative_numbers = true)]
        shift: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        pressure: Option<f64>,
    },
    /// Equation of state: volume (cm^3/mol) <-> pressure (GPa).
    Eos {
        #[arg(long, conflicts_with = "volume", required_unless_present = "volume", allow_negative_numbers = true)]
        pressure: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        volume: Option<f64>,
    },
    /// ZPL energy shift for a molar volume change.
    Zpl {
        #[arg(long, allow_negative_numbers = true)]
        delta_v: f64,
        /// `micropillar` or `standard`; configured line when omitted.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Raman shift from the Grüneisen relation at V/V0.
    Gruneisen {
        #[arg(long)]
        v_over_v0: f64,
    },
    /// a1 from a measured center-shift slope at a given α.
    A1 {
        #[arg(long, allow_negative_numbers = true)]
        slope: f64,
        #[arg(long)]
        alpha: f64,
    },
    /// b from a measured splitting slope at a given α.
    B {
        #[arg(long, allow_negative_numbers = true)]
        slope: f64,
        #[arg(long)]
        alpha: f64,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, Box<dyn std::error::Error>> {
    let mut config = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Simulate { common, out, plot } => {
            let config = load_config(&common)?;
            let written = workflow::simulate(&config, &out, plot)?;
            println!("{}", written.csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit { input, mode, common, out } => {
            let config = load_config(&common)?;
            let mode = match mode {
                Mode::Stress => FitMode::Stress,
                Mode::Field => FitMode::Field,
            };
            let report = workflow::fit_file(&input, mode, &config)?;
            let path = workflow::write_report(&report, &out)?;
            println!("{}", path.display());
            if report.converged {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: fit did not converge; best-effort report written to {}", path.display());
                Ok(ExitCode::from(2))
            }
        }
        Command::Calibrate { what, common, out } => {
            let config = load_config(&common)?;
            let req = match what {
                Calibrate::Raman { shift: Some(s), .. } => CalibrateRequest::RamanToPressure { shift_cm: s },
                Calibrate::Raman { pressure, .. } => CalibrateRequest::PressureToRaman {
                    pressure_gpa: pressure.expect("clap enforces one of the two"),
                },
                Calibrate::Eos { pressure: Some(p), .. } => CalibrateRequest::EosVolume { pressure_gpa: p },
                Calibrate::Eos { volume, .. } => CalibrateRequest::EosPressure {
                    volume: volume.expect("clap enforces one of the two"),
                },
                Calibrate::Zpl { delta_v, preset } => CalibrateRequest::Zpl { delta_v, preset },
                Calibrate::Gruneisen { v_over_v0 } => CalibrateRequest::Gruneisen { v_over_v0 },
                Calibrate::A1 { slope, alpha } => CalibrateRequest::A1 { slope, alpha },
                Calibrate::B { slope, alpha } => CalibrateRequest::B { slope, alpha },
            };
            let value = workflow::calibrate(&req, &config)?;
            let text = serde_json::to_string_pretty(&value)? + "\n";
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    let path = dir.join("calibration.json");
                    std::fs::write(&path, text)?;
                    println!("{}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
