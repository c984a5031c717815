//! Synthetic cw-ODMR spectra and field-sweep maps with Lorentzian lines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::NvModel;
use crate::spin::TransitionPair;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineshapeParams {
    /// Full width at half maximum, MHz.
    pub linewidth_fwhm: f64,
    /// Signed fractional contrast; negative is a PL dip.
    pub contrast: f64,
    /// Optional `(lower, upper)` branch contrasts overriding `contrast`.
    #[serde(default)]
    pub branch_contrast: Option<(f64, f64)>,
    #[serde(default = "one")]
    pub baseline: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for LineshapeParams {
    fn default() -> Self {
        Self { linewidth_fwhm: 10.0, contrast: -0.05, branch_contrast: None, baseline: 1.0 }
    }
}

impl LineshapeParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.linewidth_fwhm > 0.0 && self.linewidth_fwhm.is_finite()) {
            return Err(ModelError::InvalidInput("linewidth_fwhm must be positive".into()));
        }
        let (lo, hi) = self.contrasts();
        if !(lo.abs() < 1.0 && hi.abs() < 1.0) {
            return Err(ModelError::InvalidInput("contrast magnitude must be below 1".into()));
        }
        if !self.baseline.is_finite() {
            return Err(ModelError::InvalidInput("baseline must be finite".into()));
        }
        Ok(())
    }

    /// Contrast of the lower and upper branch.
    pub fn contrasts(&self) -> (f64, f64) {
        self.branch_contrast.unwrap_or((self.contrast, self.contrast))
    }

    pub fn hwhm(&self) -> f64 {
        0.5 * self.linewidth_fwhm
    }
}

/// Strictly increasing frequency samples, MHz.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid(Vec<f64>);

impl FrequencyGrid {
    pub fn from_points(points: Vec<f64>) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::InvalidInput("frequency grid needs at least two points".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) || points.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidInput("frequency grid must be strictly increasing".into()));
        }
        Ok(Self(points))
    }

    /// `start, start + step, …` up to and including `stop` (within step/1e6).
    pub fn uniform(start: f64, stop: f64, step: f64) -> Result<Self, ModelError> {
        if !(step > 0.0) || !(stop > start) {
            return Err(ModelError::InvalidInput("grid needs step > 0 and stop > start".into()));
        }
        let n = ((stop - start) / step + 1e-6).floor() as usize + 1;
        Self::from_points((0..n).map(|i| start + i as f64 * step).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.0[0], self.0[self.0.len() - 1])
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self::uniform(2600.0, 5400.0, 1.0).expect("default grid is valid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdmrSpectrum {
    frequencies: Vec<f64>,
    pl: Vec<f64>,
}

impl OdmrSpectrum {
    pub fn new(frequencies: Vec<f64>, pl: Vec<f64>) -> Result<Self, ModelError> {
        if frequencies.len() != pl.len() {
            return Err(ModelError::InvalidInput("frequency and PL lengths differ".into()));
        }
        FrequencyGrid::from_points(frequencies.clone())?;
        Ok(Self { frequencies, pl })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn pl(&self) -> &[f64] {
        &self.pl
    }

    pub fn len(&self) -> usize {
        self.pl.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pl.is_empty()
    }
}

/// What produced a map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapMetadata {
    pub alpha: f64,
    pub pressure: f64,
    pub lineshape: LineshapeParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdmrMap {
    pub field_values: Vec<f64>,
    pub spectra: Vec<OdmrSpectrum>,
    pub metadata: MapMetadata,
}

fn lorentzian(f: f64, center: f64, hwhm: f64) -> f64 {
    let w2 = hwhm * hwhm;
    let d = f - center;
    w2 / (d * d + w2)
}

/// `pl(f) = baseline + Σ contrast·w²/((f − f_i)² + w²)` over every
/// transition of every pair, `w = fwhm/2`.
pub fn synthesize_spectrum(pairs: &[TransitionPair], shape: &LineshapeParams, grid: &FrequencyGrid) -> OdmrSpectrum {
    let w = shape.hwhm();
    let (c_lo, c_hi) = shape.contrasts();
    let pl = grid
        .points()
        .iter()
        .map(|&f| {
            shape.baseline
                + pairs
                    .iter()
                    .map(|p| c_lo * lorentzian(f, p.nu_minus, w) + c_hi * lorentzian(f, p.nu_plus, w))
                    .sum::<f64>()
        })
        .collect();
    OdmrSpectrum { frequencies: grid.points().to_vec(), pl }
}

/// One spectrum per field value, each summing the four orientations.
pub fn synthesize_map(
    alpha: f64,
    pressure: f64,
    field_sweep: &[f64],
    shape: &LineshapeParams,
    grid: &FrequencyGrid,
    model: &NvModel,
) -> Result<OdmrMap, ModelError> {
    shape.validate()?;
    model.validate()?;
    if field_sweep.is_empty() {
        return Err(ModelError::InvalidInput("field sweep is empty".into()));
    }
    if field_sweep.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ModelError::InvalidInput("field sweep must be strictly ascending".into()));
    }
    let spectra = field_sweep
        .par_iter()
        .map(|&b| model.orientation_pairs(alpha, pressure, b).map(|pairs| synthesize_spectrum(&pairs, shape, grid)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OdmrMap {
        field_values: field_sweep.to_vec(),
        spectra,
        metadata: MapMetadata { alpha, pressure, lineshape: *shape },
    })
}

/// I.i.d. Gaussian PL noise, reproducible for a given seed.
pub fn add_noise(spectrum: &OdmrSpectrum, sigma: f64, seed: u64) -> Result<OdmrSpectrum, ModelError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(ModelError::InvalidInput("noise sigma must be non-negative".into()));
    }
    if sigma == 0.0 {
        return Ok(spectrum.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| ModelError::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pl = spectrum.pl.iter().map(|&v| v + normal.sample(&mut rng)).collect();
    Ok(OdmrSpectrum { frequencies: spectrum.frequencies.clone(), pl })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::uniform(2800.0, 2940.0, 0.5).unwrap()
    }

    #[test]
    fn no_lines_in_range_is_flat() {
        let s = synthesize_spectrum(&[], &LineshapeParams::default(), &grid());
        assert!(s.pl().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_line_depth_and_half_width() {
        let shape = LineshapeParams { linewidth_fwhm: 10.0, contrast: -0.05, ..Default::default() };
        // Both branches at 2870 contribute one line each; use half contrast.
        let shape = LineshapeParams { branch_contrast: Some((-0.05, 0.0)), ..shape };
        let g = FrequencyGrid::from_points(vec![2860.0, 2865.0, 2870.0, 2875.0, 2880.0]).unwrap();
        let s = synthesize_spectrum(&[TransitionPair::new(2870.0, 2870.0)], &shape, &g);
        assert!((s.pl()[2] - 0.95).abs() < 1e-15);
        assert!((s.pl()[1] - 0.975).abs() < 1e-15);
        assert!((s.pl()[3] - 0.975).abs() < 1e-15);
        let min = s.pl().iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(min, s.pl()[2]);
    }

    #[test]
    fn lines_add_linearly() {
        let shape = LineshapeParams::default();
        let g = grid();
        let a = TransitionPair::new(2850.0, 2890.0);
        let b = TransitionPair::new(2860.0, 2900.0);
        let both = synthesize_spectrum(&[a, b], &shape, &g);
        let sa = synthesize_spectrum(&[a], &shape, &g);
        let sb = synthesize_spectrum(&[b], &shape, &g);
        for i in 0..g.len() {
            let sum = 1.0 + (sa.pl()[i] - 1.0) + (sb.pl()[i] - 1.0);
            assert!((both.pl()[i] - sum).abs() < 1e-14);
        }
    }

    #[test]
    fn anvil_map_at_zero_field_shows_two_dips() {
        let m = NvModel::default();
        let map = synthesize_map(0.56, 40.0, &[0.0], &LineshapeParams::default(), &FrequencyGrid::default(), &m)
            .unwrap();
        let s = &map.spectra[0];
        let f = s.frequencies();
        let pl = s.pl();
        let mut minima: Vec<(f64, f64)> = (1..pl.len() - 1)
            .filter(|&i| pl[i] < pl[i - 1] && pl[i] <= pl[i + 1])
            .map(|i| (pl[i], f[i]))
            .collect();
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut two = [minima[0].1, minima[1].1];
        two.sort_by(f64::total_cmp);
        let expected = 4.0 * 2.3 * 0.44 * 40.0;
        assert!((two[1] - two[0] - expected).abs() <= 1.0);
        assert!(((two[1] - two[0]) - 156.0).abs() < 10.0);
    }

    #[test]
    fn zero_field_spectrum_is_symmetric_about_center() {
        let m = NvModel::default();
        let pair = m.pair(0.56, 40.0, 0.0).unwrap();
        let c = pair.center();
        let pts: Vec<f64> = (-200..=200).map(|k| c + k as f64 * 0.5).collect();
        let g = FrequencyGrid::from_points(pts).unwrap();
        let s = synthesize_spectrum(&[pair; 4], &LineshapeParams::default(), &g);
        let n = s.len();
        for i in 0..n {
            assert!((s.pl()[i] - s.pl()[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn map_rejects_bad_sweep() {
        let m = NvModel::default();
        let g = FrequencyGrid::default();
        let sh = LineshapeParams::default();
        assert!(synthesize_map(1.0, 0.0, &[], &sh, &g, &m).is_err());
        assert!(synthesize_map(1.0, 0.0, &[1.0, 1.0], &sh, &g, &m).is_err());
    }

    #[test]
    fn noise_contracts() {
        let g = FrequencyGrid::uniform(0.0, 9999.0, 1.0).unwrap();
        let s = synthesize_spectrum(&[], &LineshapeParams::default(), &g);
        assert_eq!(add_noise(&s, 0.0, 3).unwrap(), s);
        let a = add_noise(&s, 0.01, 42).unwrap();
        let b = add_noise(&s, 0.01, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, add_noise(&s, 0.01, 43).unwrap());
        let n = a.len() as f64;
        let mean = a.pl().iter().map(|v| v - 1.0).sum::<f64>() / n;
        let var = a.pl().iter().map(|v| (v - 1.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / 1e-4 - 1.0).abs() < 0.05, "variance ratio {}", var / 1e-4);
        assert!(add_noise(&s, -1.0, 0).is_err());
    }
}
