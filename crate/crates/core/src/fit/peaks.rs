//! Resonance extraction from a single ODMR spectrum.
//!
//! Candidate lines come from sign changes in the derivative of a boxcar-
//! smoothed trace; the candidates then seed a multi-Lorentzian least-squares
//! fit with a free baseline.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{minimize, LeastSquares, LmConfig};
use super::FitError;
use crate::spectra::OdmrSpectrum;

const SMOOTH_HALF_WIDTH: usize = 2;
/// Fit window half-width around each seeded line, in estimated FWHMs.
const WINDOW_FWHMS: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    /// Line centers, MHz, ascending.
    pub centers: Vec<f64>,
    /// Signed contrast (amplitude over baseline).
    pub depths: Vec<f64>,
    /// FWHM, MHz.
    pub widths: Vec<f64>,
    pub baseline: f64,
    /// RMS fit residual in PL units.
    pub residual_rms: f64,
}

#[derive(Clone, Copy, Debug)]
enum Layout {
    /// `[baseline, (center, amplitude, hwhm)…]`
    Free(usize),
    /// `[baseline, mid, half_separation, amplitude, hwhm]`, two lines.
    Symmetric,
}

struct LorentzianSum<'a> {
    f: &'a [f64],
    y: &'a [f64],
    layout: Layout,
}

impl LorentzianSum<'_> {
    /// `(center, amplitude, hwhm)` per line.
    fn lines(&self, p: &[f64]) -> Vec<(f64, f64, f64)> {
        match self.layout {
            Layout::Free(k) => (0..k).map(|i| (p[1 + 3 * i], p[2 + 3 * i], p[3 + 3 * i])).collect(),
            Layout::Symmetric => vec![(p[1] - p[2], p[3], p[4]), (p[1] + p[2], p[3], p[4])],
        }
    }
}

impl LeastSquares for LorentzianSum<'_> {
    fn n_params(&self) -> usize {
        match self.layout {
            Layout::Free(k) => 1 + 3 * k,
            Layout::Symmetric => 5,
        }
    }

    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        let lines = self.lines(p);
        self.f
            .iter()
            .zip(self.y)
            .map(|(&f, &y)| {
                let model: f64 = lines
                    .iter()
                    .map(|&(c, a, w)| {
                        let d = f - c;
                        a * w * w / (d * d + w * w)
                    })
                    .sum();
                p[0] + model - y
            })
            .collect()
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.n_params();
        let lines = self.lines(p);
        let mut j = DMatrix::zeros(self.f.len(), n);
        for (row, &f) in self.f.iter().enumerate() {
            j[(row, 0)] = 1.0;
            // Partials of a·w²/(d²+w²) with respect to (c, a, w).
            let partials: Vec<(f64, f64, f64)> = lines
                .iter()
                .map(|&(c, a, w)| {
                    let d = f - c;
                    let den = d * d + w * w;
                    let l = w * w / den;
                    (a * 2.0 * d * w * w / (den * den), l, a * 2.0 * w * d * d / (den * den))
                })
                .collect();
            match self.layout {
                Layout::Free(k) => {
                    for (i, &(dc, da, dw)) in partials.iter().enumerate().take(k) {
                        j[(row, 1 + 3 * i)] = dc;
                        j[(row, 2 + 3 * i)] = da;
                        j[(row, 3 + 3 * i)] = dw;
                    }
                }
                Layout::Symmetric => {
                    let (lo, hi) = (partials[0], partials[1]);
                    j[(row, 1)] = lo.0 + hi.0;
                    j[(row, 2)] = hi.0 - lo.0;
                    j[(row, 3)] = lo.1 + hi.1;
                    j[(row, 4)] = lo.2 + hi.2;
                }
            }
        }
        j
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn boxcar(y: &[f64], half: usize) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// FWHM of the feature at `i` in the polarity-corrected trace `y`.
fn width_at(f: &[f64], y: &[f64], i: usize) -> f64 {
    let half = 0.5 * y[i];
    let mut lo = i;
    while lo > 0 && y[lo] > half {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < y.len() && y[hi] > half {
        hi += 1;
    }
    let step = (f[f.len() - 1] - f[0]) / (f.len() - 1) as f64;
    (f[hi] - f[lo]).max(2.0 * step)
}

/// Baseline and `(index, fwhm)` seeds for up to `count` lines. A single
/// seed when two were asked for signals overlapping lines.
fn seed_lines(f: &[f64], pl: &[f64], count: usize) -> Result<(f64, Vec<(usize, f64)>), FitError> {
    let base = median(pl);
    let sm = boxcar(pl, SMOOTH_HALF_WIDTH);
    let (imax, _) = sm
        .iter()
        .enumerate()
        .map(|(i, v)| (i, (v - base).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("spectrum has points");
    let polarity = if sm[imax] < base { -1.0 } else { 1.0 };
    let y: Vec<f64> = sm.iter().map(|v| polarity * (v - base)).collect();
    if !(y[imax] > 0.0) {
        return Err(FitError::NoPeaks);
    }

    // Noise scale from first differences of the raw trace.
    let diffs: Vec<f64> = pl.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let noise = 1.4826 * median(&diffs) / std::f64::consts::SQRT_2;
    let smoothed_noise = noise / ((2 * SMOOTH_HALF_WIDTH + 1) as f64).sqrt();
    let threshold = (3.0 * smoothed_noise).max(0.05 * y[imax]);
    if y[imax] < threshold || y[imax] < 3.0 * smoothed_noise {
        return Err(FitError::NoPeaks);
    }

    // Local maxima of y: derivative changes sign from + to −.
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let mut candidates: Vec<usize> = (1..y.len() - 1).filter(|&i| dy[i - 1] > 0.0 && dy[i] <= 0.0).collect();
    candidates.sort_by(|&a, &b| y[b].total_cmp(&y[a]));

    let first_width = width_at(f, &y, imax);
    let mut seeds = vec![(imax, first_width)];
    if count == 2 {
        let second = candidates
            .iter()
            .copied()
            .find(|&i| y[i] >= threshold && (f[i] - f[imax]).abs() > first_width);
        if let Some(i) = second {
            seeds.push((i, width_at(f, &y, i)));
        }
    }
    Ok((base, seeds))
}

fn window(f: &[f64], centers: &[f64], half_width: f64, min_points: usize) -> (usize, usize) {
    let lo_f = centers.iter().cloned().fold(f64::INFINITY, f64::min) - half_width;
    let hi_f = centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + half_width;
    let lo = f.partition_point(|&v| v < lo_f);
    let hi = f.partition_point(|&v| v <= hi_f);
    if hi - lo < min_points { (0, f.len()) } else { (lo, hi) }
}

/// Fits `expected_count` (1 or 2) Lorentzian lines to `spectrum`.
///
/// When only one feature is found where two were expected, or the two
/// candidates sit within a linewidth of each other, a two-line model with
/// shared width and depth is seeded symmetrically about the feature.
pub fn extract_peaks(spectrum: &OdmrSpectrum, expected_count: usize) -> Result<PeakSet, FitError> {
    if !(expected_count == 1 || expected_count == 2) {
        return Err(FitError::InvalidInput(format!("expected_count must be 1 or 2, got {expected_count}")));
    }
    let f = spectrum.frequencies();
    let pl = spectrum.pl();
    if f.len() < 8 {
        return Err(FitError::InvalidInput("spectrum too short for peak fitting".into()));
    }
    let (base, seeds) = seed_lines(f, pl, expected_count)?;
    let smoothed = boxcar(pl, SMOOTH_HALF_WIDTH);
    let amp = |i: usize| smoothed[i] - base;

    let (layout, init, centers, span) = if expected_count == 2 && seeds.len() == 1 {
        let (i, width) = seeds[0];
        let a = 0.5 * amp(i);
        (Layout::Symmetric, vec![base, f[i], 0.25 * width, a, 0.5 * width], vec![f[i]], width)
    } else {
        let mut init = vec![base];
        let mut span: f64 = 0.0;
        for &(i, width) in &seeds {
            init.extend([f[i], amp(i), 0.5 * width]);
            span = span.max(width);
        }
        let centers = seeds.iter().map(|&(i, _)| f[i]).collect();
        (Layout::Free(seeds.len()), init, centers, span)
    };

    let n_params = init.len();
    let (lo, hi) = window(f, &centers, WINDOW_FWHMS * span, 4 * n_params);
    let problem = LorentzianSum { f: &f[lo..hi], y: &pl[lo..hi], layout };
    let out = minimize(&problem, &init, &LmConfig::default());

    let mut lines: Vec<(f64, f64, f64)> = problem
        .lines(&out.params)
        .into_iter()
        .map(|(c, a, w)| (c, a, 2.0 * w.abs()))
        .collect();
    lines.sort_by(|a, b| a.0.total_cmp(&b.0));
    let baseline = out.params[0];
    let peaks = PeakSet {
        centers: lines.iter().map(|l| l.0).collect(),
        depths: lines.iter().map(|l| l.1 / baseline).collect(),
        widths: lines.iter().map(|l| l.2).collect(),
        baseline,
        residual_rms: out.rms(),
    };

    let (f_lo, f_hi) = (f[0], f[f.len() - 1]);
    let sane = peaks.centers.iter().all(|&c| c.is_finite() && c >= f_lo && c <= f_hi)
        && peaks.widths.iter().all(|&w| w.is_finite() && w > 0.0)
        && baseline.is_finite();
    if !out.converged() || !sane {
        let reason = if sane { "iteration limit reached" } else { "fitted lines left the spectrum" };
        return Err(FitError::PeakNoConvergence { best: Box::new(peaks), reason: reason.into() });
    }
    Ok(peaks)
}

impl PeakSet {
    /// Two-line result as an ordered pair; a single line is duplicated.
    pub fn as_pair(&self) -> crate::spin::TransitionPair {
        let first = self.centers[0];
        let last = *self.centers.last().unwrap_or(&first);
        crate::spin::TransitionPair::new(first, last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{add_noise, synthesize_spectrum, FrequencyGrid, LineshapeParams};
    use crate::spin::TransitionPair;

    fn single(center: f64) -> OdmrSpectrum {
        let shape = LineshapeParams { branch_contrast: Some((-0.05, 0.0)), ..Default::default() };
        let g = FrequencyGrid::uniform(2700.0, 3050.0, 1.0).unwrap();
        synthesize_spectrum(&[TransitionPair::new(center, center)], &shape, &g)
    }

    fn double(lo: f64, hi: f64, fwhm: f64) -> OdmrSpectrum {
        let shape = LineshapeParams { linewidth_fwhm: fwhm, ..Default::default() };
        let g = FrequencyGrid::uniform(3050.0, 3450.0, 1.0).unwrap();
        synthesize_spectrum(&[TransitionPair::new(lo, hi)], &shape, &g)
    }

    #[test]
    fn single_dip_center() {
        let p = extract_peaks(&single(2870.0), 1).unwrap();
        assert_eq!(p.centers.len(), 1);
        assert!((p.centers[0] - 2870.0).abs() < 0.01);
        assert!((p.widths[0] - 10.0).abs() < 1e-6);
        assert!((p.depths[0] + 0.05).abs() < 1e-6);
    }

    #[test]
    fn off_grid_center() {
        let p = extract_peaks(&single(2871.37), 1).unwrap();
        assert!((p.centers[0] - 2871.37).abs() < 1e-6);
    }

    #[test]
    fn two_dips_recovered() {
        let p = extract_peaks(&double(3176.0, 3332.0, 10.0), 2).unwrap();
        assert!((p.centers[0] - 3176.0).abs() < 0.1);
        assert!((p.centers[1] - 3332.0).abs() < 0.1);
    }

    #[test]
    fn overlapping_dips_use_symmetric_fallback() {
        let p = extract_peaks(&double(3245.0, 3251.0, 10.0), 2).unwrap();
        assert!((p.centers[0] - 3245.0).abs() < 1e-4, "{:?}", p.centers);
        assert!((p.centers[1] - 3251.0).abs() < 1e-4);
    }

    #[test]
    fn positive_contrast_is_handled() {
        let shape = LineshapeParams { contrast: 0.02, ..Default::default() };
        let g = FrequencyGrid::uniform(3050.0, 3450.0, 1.0).unwrap();
        let s = synthesize_spectrum(&[TransitionPair::new(3200.0, 3300.0)], &shape, &g);
        let p = extract_peaks(&s, 2).unwrap();
        assert!((p.centers[0] - 3200.0).abs() < 1e-6);
        assert!((p.centers[1] - 3300.0).abs() < 1e-6);
        assert!(p.depths.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn affine_rescaling_does_not_move_centers() {
        let s = double(3176.0, 3332.0, 10.0);
        let noisy = add_noise(&s, 0.005, 9).unwrap();
        let scaled = OdmrSpectrum::new(
            noisy.frequencies().to_vec(),
            noisy.pl().iter().map(|v| 2.5 * v - 0.7).collect(),
        )
        .unwrap();
        let a = extract_peaks(&noisy, 2).unwrap();
        let b = extract_peaks(&scaled, 2).unwrap();
        for (x, y) in a.centers.iter().zip(&b.centers) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn flat_spectrum_has_no_peaks() {
        let g = FrequencyGrid::uniform(2700.0, 3050.0, 1.0).unwrap();
        let s = synthesize_spectrum(&[], &LineshapeParams::default(), &g);
        assert!(matches!(extract_peaks(&s, 1), Err(FitError::NoPeaks)));
    }

    #[test]
    fn bad_count_rejected() {
        assert!(matches!(extract_peaks(&single(2870.0), 3), Err(FitError::InvalidInput(_))));
    }
}
