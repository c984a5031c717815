//! Minimal SVG line plots of spectrum files, for eyeballing only.

use std::fmt::Write as _;

use super::csv::SpectrumFile;

const WIDTH: f64 = 800.0;
const ROW_HEIGHT: f64 = 60.0;
const MARGIN: f64 = 40.0;

/// Stacked traces, one per spectrum, lowest field at the bottom.
pub fn render_svg(file: &SpectrumFile) -> String {
    let rows = file.blocks.len().max(1) as f64;
    let height = rows * ROW_HEIGHT + 2.0 * MARGIN;
    let (f_lo, f_hi) = file
        .blocks
        .iter()
        .flat_map(|b| b.frequencies.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f), hi.max(f)));
    let span = (f_hi - f_lo).max(f64::MIN_POSITIVE);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = WIDTH + 2.0 * MARGIN,
        h = height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (row, block) in file.blocks.iter().enumerate() {
        let (p_lo, p_hi) = block
            .pl
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        let p_span = (p_hi - p_lo).max(1e-12);
        let base_y = MARGIN + (rows - row as f64) * ROW_HEIGHT;
        let mut points = String::new();
        for (f, p) in block.frequencies.iter().zip(&block.pl) {
            let x = MARGIN + (f - f_lo) / span * WIDTH;
            let y = base_y - (p - p_lo) / p_span * ROW_HEIGHT * 0.9;
            let _ = write!(points, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#,
            points.trim_end()
        );
        if let Some(b) = block.field_mt {
            let _ = writeln!(
                svg,
                r#"<text x="2" y="{:.2}" font-size="10">{b:.2} mT</text>"#,
                base_y - ROW_HEIGHT * 0.45
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{:.2}" font-size="11">{f_lo:.0} – {f_hi:.0} MHz</text>"#,
        height - 10.0
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::OdmrSpectrum;

    #[test]
    fn renders_one_polyline_per_spectrum() {
        let s = OdmrSpectrum::new(vec![1.0, 2.0, 3.0], vec![1.0, 0.9, 1.0]).unwrap();
        let svg = render_svg(&SpectrumFile::from_spectrum(&s, &"0".repeat(64)));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg"));
    }
}
