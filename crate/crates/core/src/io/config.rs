//! Run configuration, stored as TOML.
//!
//! Every field has a default, so an empty document is a valid config. The
//! config hash is the SHA-256 of the compact JSON encoding of the fully
//! defaulted struct, which makes it independent of TOML formatting.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IoError;
use crate::calibration::{
    fully_calibrated_couplings, pillar_calibrated_couplings, EosParams, GruneisenParams, RamanGaugeParams, ZplLine,
};
use crate::model::NvModel;
use crate::spectra::{FrequencyGrid, LineshapeParams};
use crate::spin::{StressCouplings, ZfsParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingPreset {
    /// Literature constants as given in `couplings`.
    Literature,
    /// `a1` refit to the micropillar center-shift slope.
    PillarCalibrated,
    /// `a1` as above, `b` refit to the flat-anvil splitting slope.
    FullyCalibrated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    pub zfs: ZfsParams,
    pub couplings: StressCouplings,
    /// Replaces `couplings` when not `literature`.
    pub coupling_preset: CouplingPreset,
    /// Field direction in the cubic frame; `[0, 0, 1]` is the anvil axis.
    pub field_direction: [f64; 3],
    pub raman: RamanGaugeParams,
    pub eos: EosParams,
    pub gruneisen: GruneisenParams,
    pub zpl: ZplLine,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            zfs: ZfsParams::default(),
            couplings: StressCouplings::default(),
            coupling_preset: CouplingPreset::Literature,
            field_direction: [0.0, 0.0, 1.0],
            raman: RamanGaugeParams::default(),
            eos: EosParams::default(),
            gruneisen: GruneisenParams::default(),
            zpl: ZplLine::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSweep {
    pub start_mt: f64,
    pub stop_mt: f64,
    pub points: usize,
}

impl Default for FieldSweep {
    fn default() -> Self {
        Self { start_mt: 0.0, stop_mt: 10.0, points: 11 }
    }
}

impl FieldSweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.start_mt];
        }
        let step = (self.stop_mt - self.start_mt) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start_mt + i as f64 * step).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub step_mhz: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { start_mhz: 2600.0, stop_mhz: 5400.0, step_mhz: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub alpha: f64,
    pub pressure_gpa: f64,
    pub field_sweep: FieldSweep,
    pub lineshape: LineshapeParams,
    pub grid: GridSpec,
    /// PL noise standard deviation; zero disables noise.
    pub noise_sigma: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            alpha: 0.95,
            pressure_gpa: 73.0,
            field_sweep: FieldSweep::default(),
            lineshape: LineshapeParams::default(),
            grid: GridSpec::default(),
            noise_sigma: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub constants: Constants,
    pub scenario: Scenario,
}

fn check(ok: bool, field: &str, reason: &str) -> Result<(), IoError> {
    if ok { Ok(()) } else { Err(IoError::invalid(field, reason)) }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, IoError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| IoError::ConfigSyntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    /// Lower-case hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Checks every field, naming the first offending one.
    pub fn validate(&self) -> Result<(), IoError> {
        let c = &self.constants;
        check(c.zfs.d_zero > 0.0 && c.zfs.d_zero.is_finite(), "constants.zfs.d_zero", "must be positive")?;
        check(c.zfs.gamma_e > 0.0 && c.zfs.gamma_e.is_finite(), "constants.zfs.gamma_e", "must be positive")?;
        for (name, v) in [
            ("a1", c.couplings.a1),
            ("a2", c.couplings.a2),
            ("b", c.couplings.b),
            ("c", c.couplings.c),
            ("d", c.couplings.d),
            ("e", c.couplings.e),
        ] {
            check(v.is_finite(), &format!("constants.couplings.{name}"), "must be finite")?;
        }
        let dir = Vector3::from(c.field_direction);
        check(
            (dir.norm() - 1.0).abs() <= 1e-12,
            "constants.field_direction",
            "must be a unit vector",
        )?;
        check(c.raman.k0 > 0.0, "constants.raman.k0", "must be positive")?;
        check(c.raman.nu0 > 0.0, "constants.raman.nu0", "must be positive")?;
        check(c.raman.k0_prime >= 1.0, "constants.raman.k0_prime", "must be at least 1")?;
        check(c.eos.v0 > 0.0, "constants.eos.v0", "must be positive")?;
        check(c.eos.bulk_modulus > 0.0, "constants.eos.bulk_modulus", "must be positive")?;
        check(c.eos.bulk_modulus_derivative > 0.0, "constants.eos.bulk_modulus_derivative", "must be positive")?;
        check(c.gruneisen.gamma > 0.0, "constants.gruneisen.gamma", "must be positive")?;
        check(c.gruneisen.nu0 > 0.0, "constants.gruneisen.nu0", "must be positive")?;
        check(c.zpl.slope.is_finite(), "constants.zpl.slope", "must be finite")?;
        check(c.zpl.v0 > 0.0, "constants.zpl.v0", "must be positive")?;

        let s = &self.scenario;
        check(s.alpha > 0.0 && s.alpha <= 1.5, "scenario.alpha", "must lie in (0, 1.5]")?;
        check(s.pressure_gpa >= 0.0 && s.pressure_gpa.is_finite(), "scenario.pressure_gpa", "must be non-negative")?;
        let fs = &s.field_sweep;
        check(fs.points >= 1, "scenario.field_sweep.points", "must be at least 1")?;
        check(fs.start_mt >= 0.0 && fs.start_mt.is_finite(), "scenario.field_sweep.start_mt", "must be non-negative")?;
        check(
            fs.stop_mt.is_finite() && (fs.points == 1 || fs.stop_mt > fs.start_mt),
            "scenario.field_sweep.stop_mt",
            "must exceed start_mt",
        )?;
        check(
            s.lineshape.linewidth_fwhm > 0.0 && s.lineshape.linewidth_fwhm.is_finite(),
            "scenario.lineshape.linewidth_fwhm",
            "must be positive",
        )?;
        let (lo, hi) = s.lineshape.contrasts();
        check(lo.abs() < 1.0 && hi.abs() < 1.0, "scenario.lineshape.contrast", "magnitude must be below 1")?;
        check(s.lineshape.baseline.is_finite(), "scenario.lineshape.baseline", "must be finite")?;
        check(s.grid.step_mhz > 0.0, "scenario.grid.step_mhz", "must be positive")?;
        check(s.grid.stop_mhz > s.grid.start_mhz, "scenario.grid.stop_mhz", "must exceed start_mhz")?;
        check(
            (s.grid.stop_mhz - s.grid.start_mhz) / s.grid.step_mhz <= 1e7,
            "scenario.grid.step_mhz",
            "grid would exceed 10 million points",
        )?;
        check(s.noise_sigma >= 0.0 && s.noise_sigma.is_finite(), "scenario.noise_sigma", "must be non-negative")?;
        Ok(())
    }

    pub fn couplings(&self) -> StressCouplings {
        match self.constants.coupling_preset {
            CouplingPreset::Literature => self.constants.couplings,
            CouplingPreset::PillarCalibrated => StressCouplings {
                include_spin_half_mixing: self.constants.couplings.include_spin_half_mixing,
                ..pillar_calibrated_couplings()
            },
            CouplingPreset::FullyCalibrated => StressCouplings {
                include_spin_half_mixing: self.constants.couplings.include_spin_half_mixing,
                ..fully_calibrated_couplings()
            },
        }
    }

    pub fn model(&self) -> NvModel {
        NvModel {
            zfs: self.constants.zfs,
            couplings: self.couplings(),
            field_direction: Vector3::from(self.constants.field_direction),
        }
    }

    pub fn grid(&self) -> Result<FrequencyGrid, IoError> {
        let g = &self.scenario.grid;
        FrequencyGrid::uniform(g.start_mhz, g.stop_mhz, g.step_mhz)
            .map_err(|e| IoError::invalid("scenario.grid", e.to_string()))
    }
}

/// JSON sidecar written next to every spectrum CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub format: String,
    pub kind: String,
    pub config_sha256: String,
    pub units: Units,
    pub alpha: f64,
    pub pressure_gpa: f64,
    pub field_values_mt: Vec<f64>,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub frequency: String,
    pub field: String,
    pub pl: String,
}

impl Default for Units {
    fn default() -> Self {
        Self { frequency: "MHz".into(), field: "mT".into(), pl: "normalized".into() }
    }
}
