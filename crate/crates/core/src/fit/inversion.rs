//! Parameter recovery from measured transition pairs: anvil stress `(α, P)`
//! from a field sweep, or field magnitude at known stress.

use serde::{Deserialize, Serialize};

use super::lm::{covariance_sigmas, minimize, LeastSquares, LmConfig, LmOutcome};
use super::FitError;
use crate::model::NvModel;
use crate::spectra::LineshapeParams;
use crate::spin::TransitionPair;

/// Starting anisotropy for stress fits.
pub const ALPHA_INIT: f64 = 0.8;
/// Allowance (MHz) below the zero-field splitting before a field fit is
/// declared inconsistent.
pub const SPLITTING_TOLERANCE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressFitResult {
    pub alpha: f64,
    /// GPa
    pub pressure: f64,
    /// 1σ of `(alpha, pressure)`; `+∞` when a parameter is unidentifiable.
    pub uncertainties: [f64; 2],
    /// MHz
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Model pair at each input field value, same order as the input.
    pub model_pairs: Vec<TransitionPair>,
    /// `½‖r‖²` after the initial point and every accepted step.
    pub cost_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldFitResult {
    /// mT
    pub b_magnitude: f64,
    pub uncertainty: f64,
    /// MHz
    pub residual_rms: f64,
    pub model_pair: TransitionPair,
}

struct StressProblem<'a> {
    data: &'a [(f64, TransitionPair)],
    model: &'a NvModel,
}

impl LeastSquares for StressProblem<'_> {
    fn n_params(&self) -> usize {
        2
    }

    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        self.data
            .iter()
            .flat_map(|&(b, meas)| {
                let m = self.model.pair_unchecked(p[0], p[1], b);
                [m.nu_minus - meas.nu_minus, m.nu_plus - meas.nu_plus]
            })
            .collect()
    }
}

/// Starting point: `α₀ = 0.8`, `P₀` from the center shift at the lowest
/// field through `δ = a1 (1 + 2α₀) P`.
pub fn initial_guess(data: &[(f64, TransitionPair)], model: &NvModel) -> (f64, f64) {
    let lowest = data
        .iter()
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .map(|d| d.1)
        .expect("non-empty data");
    let slope = model.couplings.a1 * (1.0 + 2.0 * ALPHA_INIT);
    let p0 = if slope.abs() > 0.0 { (lowest.center() - model.zfs.d_zero) / slope } else { 0.0 };
    (ALPHA_INIT, p0.max(0.0))
}

/// Least-squares `(α, P)` from `(field mT, measured pair)` points, with the
/// field along the model's field direction.
pub fn fit_stress(
    map_peaks: &[(f64, TransitionPair)],
    model: &NvModel,
    init: Option<(f64, f64)>,
) -> Result<StressFitResult, FitError> {
    model.validate()?;
    let mut fields: Vec<f64> = map_peaks.iter().map(|d| d.0).collect();
    fields.sort_by(f64::total_cmp);
    fields.dedup();
    if fields.len() < 2 {
        return Err(FitError::UnderDetermined(format!(
            "stress fit needs at least 2 distinct field values, got {}",
            fields.len()
        )));
    }
    if map_peaks.iter().any(|(b, p)| !b.is_finite() || !p.nu_minus.is_finite() || !p.nu_plus.is_finite()) {
        return Err(FitError::InvalidInput("non-finite measurement".into()));
    }
    let (a0, p0) = init.unwrap_or_else(|| initial_guess(map_peaks, model));
    let problem = StressProblem { data: map_peaks, model };
    let out = minimize(&problem, &[a0, p0], &LmConfig::default());
    let result = stress_result(&out, map_peaks, model);
    if !out.converged() {
        return Err(FitError::NoConvergence { best: Box::new(result) });
    }
    Ok(result)
}

fn stress_result(out: &LmOutcome, data: &[(f64, TransitionPair)], model: &NvModel) -> StressFitResult {
    let sig = out.uncertainties();
    StressFitResult {
        alpha: out.params[0],
        pressure: out.params[1],
        uncertainties: [sig[0], sig[1]],
        residual_rms: out.rms(),
        iterations: out.iterations,
        converged: out.converged(),
        model_pairs: data.iter().map(|&(b, _)| model.pair_unchecked(out.params[0], out.params[1], b)).collect(),
        cost_history: out.cost_history.clone(),
    }
}

/// Field magnitude (field along the model direction) reproducing `pair` at
/// known `(α, P)`.
///
/// The splitting grows monotonically with `B`, so the splitting equation is
/// solved by bisection first, then polished by 1-D Gauss-Newton on both
/// line positions.
pub fn fit_field(pair: &TransitionPair, known: (f64, f64), model: &NvModel) -> Result<FieldFitResult, FitError> {
    model.validate()?;
    let (alpha, pressure) = known;
    let splitting = |b: f64| model.pair(alpha, pressure, b).map(|p| p.splitting());
    let zero_split = splitting(0.0)?;
    let target = pair.splitting();
    if !target.is_finite() {
        return Err(FitError::InvalidInput("non-finite measurement".into()));
    }
    if target < zero_split - SPLITTING_TOLERANCE {
        return Err(FitError::Inconsistent(format!(
            "measured splitting {target:.3} MHz is below the zero-field stress splitting {zero_split:.3} MHz"
        )));
    }

    let mut b = 0.0;
    if target > zero_split {
        let mut hi = 1.0;
        while splitting(hi)? < target {
            hi *= 2.0;
            if hi > 1e5 {
                return Err(FitError::Inconsistent("splitting not reachable below 100 T".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if splitting(mid)? < target { lo = mid } else { hi = mid }
        }
        b = 0.5 * (lo + hi);
    }

    let resid = |b: f64| -> Result<[f64; 2], FitError> {
        let m = model.pair(alpha, pressure, b)?;
        Ok([m.nu_minus - pair.nu_minus, m.nu_plus - pair.nu_plus])
    };
    let ssr = |r: [f64; 2]| r[0] * r[0] + r[1] * r[1];
    let deriv = |b: f64| -> Result<[f64; 2], FitError> {
        let h = 1e-6 * b.max(1.0);
        let lo = (b - h).max(0.0);
        let up = resid(b + h)?;
        let dn = resid(lo)?;
        let w = b + h - lo;
        Ok([(up[0] - dn[0]) / w, (up[1] - dn[1]) / w])
    };

    let mut r = resid(b)?;
    for _ in 0..20 {
        let j = deriv(b)?;
        let jtj = j[0] * j[0] + j[1] * j[1];
        if jtj == 0.0 {
            break;
        }
        let step = -(j[0] * r[0] + j[1] * r[1]) / jtj;
        let trial = (b + step).max(0.0);
        let r_trial = resid(trial)?;
        if ssr(r_trial) < ssr(r) {
            b = trial;
            r = r_trial;
        } else {
            break;
        }
    }

    let j = deriv(b)?;
    let jac = nalgebra::DMatrix::from_column_slice(2, 1, &j);
    let sigma = covariance_sigmas(&jac, ssr(r))[0];
    Ok(FieldFitResult {
        b_magnitude: b,
        uncertainty: sigma,
        residual_rms: (0.5 * ssr(r)).sqrt(),
        model_pair: model.pair(alpha, pressure, b)?,
    })
}

/// Shot-noise prefactor for a Lorentzian line, `4 / (3√3)`.
pub const LORENTZIAN_SHOT_NOISE_FACTOR: f64 = 0.769_800_358_919_501;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Sensitivity {
    /// mT/√Hz
    Finite(f64),
    /// The resonance does not move with the field to first order.
    Unresponsive(String),
}

impl Sensitivity {
    pub fn value(&self) -> f64 {
        match self {
            Sensitivity::Finite(v) => *v,
            Sensitivity::Unresponsive(_) => f64::INFINITY,
        }
    }
}

/// Shot-noise-limited cw-ODMR field sensitivity,
/// `η = K · fwhm / (|C| · √R · dν/dB)` with `K = 4/(3√3)`.
///
/// `d_delta_d_b` is the rate (MHz/mT) at which the observed frequency
/// moves with the field; `photon_rate` is detected counts per second.
pub fn sensitivity_estimate(shape: &LineshapeParams, photon_rate: f64, d_delta_d_b: f64) -> Result<Sensitivity, FitError> {
    shape.validate()?;
    if !(photon_rate > 0.0 && photon_rate.is_finite()) {
        return Err(FitError::InvalidInput("photon_rate must be positive".into()));
    }
    let (lo, hi) = shape.contrasts();
    let contrast = lo.abs().max(hi.abs());
    if contrast == 0.0 {
        return Err(FitError::InvalidInput("contrast must be non-zero".into()));
    }
    if !(d_delta_d_b >= 0.0) || !d_delta_d_b.is_finite() {
        return Err(FitError::InvalidInput("field slope must be finite and non-negative".into()));
    }
    if d_delta_d_b < 1e-12 {
        return Ok(Sensitivity::Unresponsive(
            "resonance frequency is stationary in the field at this operating point".into(),
        ));
    }
    Ok(Sensitivity::Finite(
        LORENTZIAN_SHOT_NOISE_FACTOR * shape.linewidth_fwhm / (contrast * photon_rate.sqrt() * d_delta_d_b),
    ))
}
