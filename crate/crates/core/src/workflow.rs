//! File-level workflows behind the `simulate`, `fit` and `calibrate`
//! commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::calibration::{self, ZplLine};
use crate::error::ModelError;
use crate::fit::{self, FitError, PeakSet, StressFitResult};
use crate::io::config::Units;
use crate::io::{plot, IoError, RunConfig, SpectrumFile, SpectrumMetadata};
use crate::spectra::{add_noise, synthesize_map};
use crate::spin::TransitionPair;

pub const FORMAT_TAG: &str = "nvdac-spectrum/1";

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("spectrum {index}: {source}")]
    Peaks { index: usize, source: FitError },
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Clone, Debug)]
pub struct SimulateOutput {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub svg: Option<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(|e| IoError::file(path, e))
}

/// Synthesizes the configured spectrum (one field value) or map and writes
/// `spectrum.csv`/`map.csv` plus a JSON sidecar into `out_dir`.
pub fn simulate(config: &RunConfig, out_dir: &Path, plot_svg: bool) -> Result<SimulateOutput, WorkflowError> {
    config.validate()?;
    let model = config.model();
    let grid = config.grid()?;
    let s = &config.scenario;
    let fields = s.field_sweep.values();
    let mut map = synthesize_map(s.alpha, s.pressure_gpa, &fields, &s.lineshape, &grid, &model)?;
    if s.noise_sigma > 0.0 {
        for (i, spectrum) in map.spectra.iter_mut().enumerate() {
            *spectrum = add_noise(spectrum, s.noise_sigma, config.seed.wrapping_add(i as u64))?;
        }
    }

    let hash = config.hash();
    let (stem, file) = if fields.len() == 1 {
        ("spectrum", SpectrumFile::from_spectrum(&map.spectra[0], &hash))
    } else {
        ("map", SpectrumFile::from_map(&map, &hash))
    };
    std::fs::create_dir_all(out_dir).map_err(|e| IoError::file(out_dir, e))?;
    let csv = out_dir.join(format!("{stem}.csv"));
    file.write(&csv)?;

    let meta = SpectrumMetadata {
        format: FORMAT_TAG.into(),
        kind: stem.into(),
        config_sha256: hash,
        units: Units::default(),
        alpha: s.alpha,
        pressure_gpa: s.pressure_gpa,
        field_values_mt: fields,
        config: config.clone(),
    };
    let metadata = out_dir.join(format!("{stem}.json"));
    write_file(&metadata, &(serde_json::to_string_pretty(&meta).map_err(IoError::from)? + "\n"))?;

    let svg = if plot_svg {
        let p = out_dir.join(format!("{stem}.svg"));
        write_file(&p, &plot::render_svg(&file))?;
        Some(p)
    } else {
        None
    };
    Ok(SimulateOutput { csv, metadata, svg })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    Stress,
    Field,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub field_mt: Option<f64>,
    pub measured: TransitionPair,
    pub model: TransitionPair,
    pub residual_mhz: [f64; 2],
    pub peaks: PeakSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldEstimate {
    pub b_magnitude_mt: f64,
    pub uncertainty_mt: f64,
    pub residual_rms_mhz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mode: FitMode,
    pub converged: bool,
    pub input_config_sha256: String,
    pub config_sha256: String,
    pub stress: Option<StressFitResult>,
    pub fields: Vec<FieldEstimate>,
    pub points: Vec<FitPoint>,
}

/// Reads a spectrum or map file, extracts two lines per spectrum and fits
/// either `(α, P)` or the field at the configured `(α, P)`.
///
/// A stress fit that runs out of iterations still yields a report, flagged
/// `converged: false`.
pub fn fit_file(input: &Path, mode: FitMode, config: &RunConfig) -> Result<FitReport, WorkflowError> {
    config.validate()?;
    let file = SpectrumFile::read(input)?;
    let model = config.model();

    let mut peaks = Vec::with_capacity(file.blocks.len());
    for (index, block) in file.blocks.iter().enumerate() {
        let spectrum = block.spectrum()?;
        let p = fit::extract_peaks(&spectrum, 2).map_err(|source| WorkflowError::Peaks { index, source })?;
        peaks.push(p);
    }

    let mut report = FitReport {
        mode,
        converged: true,
        input_config_sha256: file.config_hash.clone(),
        config_sha256: config.hash(),
        stress: None,
        fields: Vec::new(),
        points: Vec::new(),
    };

    match mode {
        FitMode::Stress => {
            let data: Vec<(f64, TransitionPair)> = file
                .blocks
                .iter()
                .zip(&peaks)
                .map(|(b, p)| (b.field_mt.unwrap_or(0.0), p.as_pair()))
                .collect();
            let result = match fit::fit_stress(&data, &model, None) {
                Ok(r) => r,
                Err(FitError::NoConvergence { best }) => {
                    report.converged = false;
                    *best
                }
                Err(e) => return Err(e.into()),
            };
            for ((block, p), (m, (_, meas))) in file.blocks.iter().zip(&peaks).zip(result.model_pairs.iter().zip(&data)) {
                report.points.push(FitPoint {
                    field_mt: block.field_mt,
                    measured: *meas,
                    model: *m,
                    residual_mhz: [m.nu_minus - meas.nu_minus, m.nu_plus - meas.nu_plus],
                    peaks: p.clone(),
                });
            }
            report.stress = Some(result);
        }
        FitMode::Field => {
            let known = (config.scenario.alpha, config.scenario.pressure_gpa);
            for (block, p) in file.blocks.iter().zip(&peaks) {
                let meas = p.as_pair();
                let r = fit::fit_field(&meas, known, &model)?;
                report.points.push(FitPoint {
                    field_mt: block.field_mt,
                    measured: meas,
                    model: r.model_pair,
                    residual_mhz: [r.model_pair.nu_minus - meas.nu_minus, r.model_pair.nu_plus - meas.nu_plus],
                    peaks: p.clone(),
                });
                report.fields.push(FieldEstimate {
                    b_magnitude_mt: r.b_magnitude,
                    uncertainty_mt: r.uncertainty,
                    residual_rms_mhz: r.residual_rms,
                });
            }
        }
    }
    Ok(report)
}

pub fn write_report(report: &FitReport, out_dir: &Path) -> Result<PathBuf, WorkflowError> {
    std::fs::create_dir_all(out_dir).map_err(|e| IoError::file(out_dir, e))?;
    let path = out_dir.join("fit_report.json");
    write_file(&path, &(serde_json::to_string_pretty(report).map_err(IoError::from)? + "\n"))?;
    Ok(path)
}

#[derive(Clone, Debug, PartialEq)]
pub enum CalibrateRequest {
    RamanToPressure { shift_cm: f64 },
    PressureToRaman { pressure_gpa: f64 },
    EosVolume { pressure_gpa: f64 },
    EosPressure { volume: f64 },
    Gruneisen { v_over_v0: f64 },
    Zpl { delta_v: f64, preset: Option<String> },
    A1 { slope: f64, alpha: f64 },
    B { slope: f64, alpha: f64 },
}

/// Evaluates one calibration relation; output is a flat JSON object.
pub fn calibrate(req: &CalibrateRequest, config: &RunConfig) -> Result<serde_json::Value, WorkflowError> {
    let c = &config.constants;
    let value = match req {
        CalibrateRequest::RamanToPressure { shift_cm } => {
            json!({ "raman_shift_cm": shift_cm, "pressure_gpa": calibration::raman_edge_to_pressure(*shift_cm, &c.raman)? })
        }
        CalibrateRequest::PressureToRaman { pressure_gpa } => {
            json!({ "pressure_gpa": pressure_gpa, "raman_shift_cm": calibration::pressure_to_raman_edge(*pressure_gpa, &c.raman)? })
        }
        CalibrateRequest::EosVolume { pressure_gpa } => {
            let v = calibration::eos_pressure_to_volume(*pressure_gpa, &c.eos)?;
            json!({ "pressure_gpa": pressure_gpa, "volume_cm3_per_mol": v, "v_over_v0": v / c.eos.v0 })
        }
        CalibrateRequest::EosPressure { volume } => {
            json!({ "volume_cm3_per_mol": volume, "pressure_gpa": calibration::eos_volume_to_pressure(*volume, &c.eos)? })
        }
        CalibrateRequest::Gruneisen { v_over_v0 } => {
            json!({ "v_over_v0": v_over_v0, "raman_shift_cm": calibration::gruneisen_shift(*v_over_v0, &c.gruneisen)? })
        }
        CalibrateRequest::Zpl { delta_v, preset } => {
            let line = match preset {
                Some(name) => ZplLine::preset(name)
                    .ok_or_else(|| ModelError::InvalidInput(format!("unknown ZPL preset `{name}`")))?,
                None => c.zpl,
            };
            let e = calibration::zpl_energy(line.v0 + delta_v, &line)?;
            json!({ "delta_v_cm3_per_mol": delta_v, "energy_mev": e, "shift_mev": e - line.intercept })
        }
        CalibrateRequest::A1 { slope, alpha } => {
            let a1 = calibration::calibrate_a1(*slope, *alpha)?;
            json!({ "center_shift_slope_mhz_per_gpa": slope, "alpha": alpha, "a1_mhz_per_gpa": a1 })
        }
        CalibrateRequest::B { slope, alpha } => {
            let b = calibration::calibrate_b(*slope, *alpha)?;
            json!({ "splitting_slope_mhz_per_gpa": slope, "alpha": alpha, "b_mhz_per_gpa": b })
        }
    };
    Ok(value)
}
