//! Pressure-calibration chain: Raman edge gauge, diamond equation of
//! state, Grüneisen scaling of the Raman mode, ZPL energy versus volume, and
//! the calibration of the spin-stress couplings from measured slopes.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::spin::StressCouplings;

/// Center-shift slope measured on the micropillar, MHz/GPa.
pub const PILLAR_CENTER_SLOPE: f64 = 13.42;
pub const PILLAR_ALPHA: f64 = 0.95;
/// Zero-field splitting slope on a flat anvil, MHz/GPa.
pub const ANVIL_SPLITTING_SLOPE: f64 = 3.89;
pub const ANVIL_ALPHA: f64 = 0.56;

/// Second-order Raman edge scale `P = K0·x·(1 + ½(K0′ − 1)·x)`, `x = Δν/ν0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanGaugeParams {
    /// GPa
    pub k0: f64,
    pub k0_prime: f64,
    /// cm⁻¹
    pub nu0: f64,
}

impl Default for RamanGaugeParams {
    fn default() -> Self {
        Self { k0: 547.0, k0_prime: 3.75, nu0: 1333.0 }
    }
}

impl RamanGaugeParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.k0 > 0.0 && self.nu0 > 0.0 && self.k0_prime.is_finite()) {
            return Err(ModelError::InvalidInput("raman gauge needs k0 > 0 and nu0 > 0".into()));
        }
        if self.k0_prime < 1.0 {
            return Err(ModelError::InvalidInput("raman gauge needs k0_prime >= 1 for monotonicity".into()));
        }
        Ok(())
    }
}

/// Pressure (GPa) from the shift (cm⁻¹) of the high-frequency Raman edge.
pub fn raman_edge_to_pressure(delta_nu: f64, gauge: &RamanGaugeParams) -> Result<f64, ModelError> {
    gauge.validate()?;
    if !(delta_nu >= 0.0 && delta_nu.is_finite()) {
        return Err(ModelError::Domain(format!("raman shift must be non-negative, got {delta_nu}")));
    }
    let x = delta_nu / gauge.nu0;
    Ok(gauge.k0 * x * (1.0 + 0.5 * (gauge.k0_prime - 1.0) * x))
}

/// Inverse of [`raman_edge_to_pressure`], closed-form root of the quadratic.
pub fn pressure_to_raman_edge(pressure: f64, gauge: &RamanGaugeParams) -> Result<f64, ModelError> {
    gauge.validate()?;
    if !(pressure >= 0.0 && pressure.is_finite()) {
        return Err(ModelError::Domain(format!("pressure must be non-negative, got {pressure}")));
    }
    let k = gauge.k0;
    let q = 0.5 * (gauge.k0_prime - 1.0);
    // k x + k q x² = P, written to avoid cancellation.
    let x = 2.0 * pressure / (k + (k * k + 4.0 * k * q * pressure).sqrt());
    Ok(x * gauge.nu0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EosForm {
    Vinet,
    BirchMurnaghan3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EosParams {
    /// cm³/mol
    pub v0: f64,
    /// GPa
    pub bulk_modulus: f64,
    pub bulk_modulus_derivative: f64,
    pub form: EosForm,
}

impl Default for EosParams {
    /// Diamond.
    fn default() -> Self {
        Self { v0: 3.417, bulk_modulus: 446.0, bulk_modulus_derivative: 3.0, form: EosForm::Vinet }
    }
}

impl EosParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.v0 > 0.0 && self.bulk_modulus > 0.0 && self.bulk_modulus_derivative > 0.0) {
            return Err(ModelError::InvalidInput("EOS parameters must be positive".into()));
        }
        Ok(())
    }
}

/// `P(V)` in GPa.
pub fn eos_volume_to_pressure(volume: f64, eos: &EosParams) -> Result<f64, ModelError> {
    eos.validate()?;
    if !(volume > 0.0 && volume.is_finite()) {
        return Err(ModelError::Domain(format!("volume must be positive, got {volume}")));
    }
    Ok(eos_pressure_raw(volume, eos))
}

fn eos_pressure_raw(volume: f64, eos: &EosParams) -> f64 {
    let k = eos.bulk_modulus;
    let kp = eos.bulk_modulus_derivative;
    let eta = (volume / eos.v0).cbrt();
    match eos.form {
        EosForm::Vinet => 3.0 * k * (1.0 - eta) / (eta * eta) * (1.5 * (kp - 1.0) * (1.0 - eta)).exp(),
        EosForm::BirchMurnaghan3 => {
            let f2 = eta.powi(-2);
            1.5 * k * (eta.powi(-7) - eta.powi(-5)) * (1.0 + 0.75 * (kp - 4.0) * (f2 - 1.0))
        }
    }
}

/// `V(P)` in cm³/mol, by safeguarded Newton iteration inside a bracket.
pub fn eos_pressure_to_volume(pressure: f64, eos: &EosParams) -> Result<f64, ModelError> {
    eos.validate()?;
    if !(pressure >= 0.0 && pressure.is_finite()) {
        return Err(ModelError::Domain(format!("pressure must be non-negative, got {pressure}")));
    }
    if pressure == 0.0 {
        return Ok(eos.v0);
    }
    let f = |v: f64| eos_pressure_raw(v, eos) - pressure;
    let mut hi = eos.v0;
    let mut lo = 0.5 * eos.v0;
    while f(lo) < 0.0 {
        let next = 0.5 * lo;
        // Past the turning point P(V) stops increasing under compression.
        if next < 1e-3 * eos.v0 || eos_pressure_raw(next, eos) <= eos_pressure_raw(lo, eos) {
            return Err(ModelError::Domain(format!("cannot bracket a volume for P = {pressure} GPa")));
        }
        hi = lo;
        lo = next;
    }
    let mut v = 0.5 * (lo + hi);
    for _ in 0..100 {
        let fv = f(v);
        if fv == 0.0 {
            return Ok(v);
        }
        if fv > 0.0 { lo = v } else { hi = v }
        let h = 1e-7 * v;
        let dfdv = (f(v + h) - f(v - h)) / (2.0 * h);
        let newton = v - fv / dfdv;
        let next = if dfdv < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - v).abs() <= 1e-15 * v {
            return Ok(next);
        }
        v = next;
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GruneisenParams {
    pub gamma: f64,
    /// Ambient Raman frequency, cm⁻¹.
    pub nu0: f64,
}

impl Default for GruneisenParams {
    fn default() -> Self {
        Self { gamma: 0.97, nu0: 1333.0 }
    }
}

/// Hydrostatic Raman shift `ν0·((V/V0)^(−γ) − 1)`, cm⁻¹.
pub fn gruneisen_shift(v_over_v0: f64, g: &GruneisenParams) -> Result<f64, ModelError> {
    if !(g.gamma > 0.0 && g.nu0 > 0.0) {
        return Err(ModelError::InvalidInput("gruneisen parameters must be positive".into()));
    }
    if !(v_over_v0 > 0.0 && v_over_v0 <= 1.0) {
        return Err(ModelError::Domain(format!("V/V0 must lie in (0, 1], got {v_over_v0}")));
    }
    Ok(g.nu0 * v_over_v0.powf(-g.gamma) - g.nu0)
}

/// NV zero-phonon line energy, linear in the molar volume of diamond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZplLine {
    /// meV per cm³/mol
    pub slope: f64,
    /// meV at `v0`
    pub intercept: f64,
    /// cm³/mol
    #[serde(default = "default_v0")]
    pub v0: f64,
}

fn default_v0() -> f64 {
    EosParams::default().v0
}

impl ZplLine {
    pub fn micropillar() -> Self {
        Self { slope: -769.0, intercept: 1945.0, v0: default_v0() }
    }

    pub fn standard_anvil() -> Self {
        Self { slope: -434.0, intercept: 1945.0, v0: default_v0() }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "micropillar" | "pillar" => Some(Self::micropillar()),
            "standard" | "standard_anvil" | "anvil" => Some(Self::standard_anvil()),
            _ => None,
        }
    }
}

impl Default for ZplLine {
    fn default() -> Self {
        Self::micropillar()
    }
}

/// ZPL energy (meV) at `volume` (cm³/mol).
pub fn zpl_energy(volume: f64, line: &ZplLine) -> Result<f64, ModelError> {
    if !(volume > 0.0 && volume.is_finite()) {
        return Err(ModelError::Domain(format!("volume must be positive, got {volume}")));
    }
    if !line.slope.is_finite() || !line.intercept.is_finite() {
        return Err(ModelError::InvalidInput("ZPL line must be finite".into()));
    }
    Ok(line.intercept + line.slope * (volume - line.v0))
}

/// `a1` from a measured center-shift slope, inverting `δ = a1 (1 + 2α) P`.
pub fn calibrate_a1(center_shift_slope: f64, alpha: f64) -> Result<f64, ModelError> {
    if !(alpha > 0.0 && alpha <= 1.5) {
        return Err(ModelError::Domain(format!("alpha must lie in (0, 1.5], got {alpha}")));
    }
    if !(center_shift_slope > 0.0 && center_shift_slope.is_finite()) {
        return Err(ModelError::Domain("center-shift slope must be positive".into()));
    }
    Ok(center_shift_slope / (1.0 + 2.0 * alpha))
}

/// `b` from a measured zero-field splitting slope, inverting
/// `Δσ = 4|b|(1 − α) P`. The sign follows the default coupling set.
pub fn calibrate_b(splitting_slope: f64, alpha: f64) -> Result<f64, ModelError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ModelError::Domain(format!("alpha must lie in (0, 1) to calibrate b, got {alpha}")));
    }
    if !(splitting_slope > 0.0 && splitting_slope.is_finite()) {
        return Err(ModelError::Domain("splitting slope must be positive".into()));
    }
    let magnitude = splitting_slope / (4.0 * (1.0 - alpha));
    Ok(magnitude.copysign(StressCouplings::default().b))
}

/// Literature couplings with `a1` refit to the micropillar center shift.
pub fn pillar_calibrated_couplings() -> StressCouplings {
    StressCouplings {
        a1: calibrate_a1(PILLAR_CENTER_SLOPE, PILLAR_ALPHA).expect("constants in domain"),
        ..StressCouplings::default()
    }
}

/// As [`pillar_calibrated_couplings`], with `b` also refit to the flat-anvil
/// zero-field splitting slope.
pub fn fully_calibrated_couplings() -> StressCouplings {
    StressCouplings {
        b: calibrate_b(ANVIL_SPLITTING_SLOPE, ANVIL_ALPHA).expect("constants in domain"),
        ..pillar_calibrated_couplings()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
}

/// Ordinary least-squares line through `(x, y)`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<LineFit, ModelError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(ModelError::InvalidInput("regression needs two or more paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ModelError::InvalidInput("regression abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_sigma = if x.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LineFit { slope, intercept, slope_sigma })
}
