//! Spectrum CSV.
//!
//! ```text
//! field_mt[mT],frequency_mhz[MHz],pl_normalized[1]     <- units row
//! # config_sha256=<64 hex digits>                      <- hash row
//! 0.00000000,2600.00000,1.00000000
//! ```
//!
//! Single spectra omit the `field_mt` column. Numbers carry nine
//! significant digits in positional notation and every row, including the
//! last, ends in `\n`.

use std::fmt::Write as _;
use std::path::Path;

use super::IoError;
use crate::spectra::{OdmrMap, OdmrSpectrum};

pub const MAP_HEADER: &str = "field_mt[mT],frequency_mhz[MHz],pl_normalized[1]";
pub const SPECTRUM_HEADER: &str = "frequency_mhz[MHz],pl_normalized[1]";
const HASH_PREFIX: &str = "# config_sha256=";

/// Nine significant digits, positional notation.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000".to_string();
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::with_capacity(24);
    if negative {
        out.push('-');
    }
    if exp >= 8 {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', (exp - 8) as usize));
    } else if exp >= 0 {
        let split = (exp + 1) as usize;
        out.push_str(&digits[..split]);
        out.push('.');
        out.push_str(&digits[split..]);
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    }
    out
}

/// Parsed or to-be-written spectrum file.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumFile {
    pub config_hash: String,
    /// One entry per spectrum: field value (maps only) and samples.
    pub blocks: Vec<SpectrumBlock>,
    pub has_field_column: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumBlock {
    pub field_mt: Option<f64>,
    pub frequencies: Vec<f64>,
    pub pl: Vec<f64>,
}

impl SpectrumBlock {
    pub fn spectrum(&self) -> Result<OdmrSpectrum, IoError> {
        OdmrSpectrum::new(self.frequencies.clone(), self.pl.clone())
            .map_err(|e| IoError::parse(0, e.to_string()))
    }
}

impl SpectrumFile {
    pub fn from_spectrum(spectrum: &OdmrSpectrum, config_hash: &str) -> Self {
        Self {
            config_hash: config_hash.to_string(),
            has_field_column: false,
            blocks: vec![SpectrumBlock {
                field_mt: None,
                frequencies: spectrum.frequencies().to_vec(),
                pl: spectrum.pl().to_vec(),
            }],
        }
    }

    pub fn from_map(map: &OdmrMap, config_hash: &str) -> Self {
        Self {
            config_hash: config_hash.to_string(),
            has_field_column: true,
            blocks: map
                .field_values
                .iter()
                .zip(&map.spectra)
                .map(|(&b, s)| SpectrumBlock {
                    field_mt: Some(b),
                    frequencies: s.frequencies().to_vec(),
                    pl: s.pl().to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.has_field_column { MAP_HEADER } else { SPECTRUM_HEADER });
        out.push('\n');
        out.push_str(HASH_PREFIX);
        out.push_str(&self.config_hash);
        out.push('\n');
        for block in &self.blocks {
            let field = block.field_mt.map(format_sig9);
            for (f, p) in block.frequencies.iter().zip(&block.pl) {
                if let Some(b) = &field {
                    out.push_str(b);
                    out.push(',');
                }
                let _ = writeln!(out, "{},{}", format_sig9(*f), format_sig9(*p));
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| IoError::file(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        if text.is_empty() {
            return Err(IoError::parse(1, "empty file"));
        }
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        let line = |i: usize| -> Result<&str, IoError> {
            let raw = lines.get(i).ok_or_else(|| IoError::parse(i + 1, "unexpected end of file"))?;
            raw.strip_suffix('\n')
                .ok_or_else(|| IoError::parse(i + 1, "truncated line (missing line terminator)"))
        };

        let header = line(0)?;
        let has_field_column = match header {
            MAP_HEADER => true,
            SPECTRUM_HEADER => false,
            other => return Err(IoError::parse(1, format!("unrecognized units row `{other}`"))),
        };
        let hash_row = line(1)?;
        let config_hash = hash_row
            .strip_prefix(HASH_PREFIX)
            .filter(|h| h.len() == 64 && h.chars().all(|c| c.is_ascii_hexdigit()))
            .ok_or_else(|| IoError::parse(2, "expected `# config_sha256=<64 hex digits>`"))?
            .to_string();

        let ncols = if has_field_column { 3 } else { 2 };
        let mut blocks: Vec<SpectrumBlock> = Vec::new();
        for i in 2..lines.len() {
            let row = line(i)?;
            let fields: Vec<&str> = row.split(',').collect();
            if fields.len() != ncols {
                return Err(IoError::parse(i + 1, format!("expected {ncols} columns, found {}", fields.len())));
            }
            let mut vals = [0.0; 3];
            for (k, s) in fields.iter().enumerate() {
                vals[k] = s
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| IoError::parse(i + 1, format!("column {} is not a number: `{s}`", k + 1)))?;
            }
            let (field, f, p) = if has_field_column {
                (Some(vals[0]), vals[1], vals[2])
            } else {
                (None, vals[0], vals[1])
            };
            let start_new = match blocks.last() {
                Some(b) => b.field_mt != field,
                None => true,
            };
            if start_new {
                if let (Some(prev), Some(b)) = (blocks.last().and_then(|b| b.field_mt), field) {
                    if !(b > prev) {
                        return Err(IoError::parse(i + 1, "field values must be ascending"));
                    }
                }
                blocks.push(SpectrumBlock { field_mt: field, frequencies: Vec::new(), pl: Vec::new() });
            }
            let block = blocks.last_mut().expect("just pushed");
            if let Some(&last) = block.frequencies.last() {
                if !(f > last) {
                    return Err(IoError::parse(i + 1, "frequencies must be strictly increasing"));
                }
            }
            block.frequencies.push(f);
            block.pl.push(p);
        }
        if blocks.is_empty() {
            return Err(IoError::parse(lines.len() + 1, "no data rows"));
        }
        // All spectra of a map share the first spectrum's grid.
        let mut row_no = 3;
        let grid = blocks[0].frequencies.clone();
        for b in &blocks {
            if b.frequencies != grid {
                let n = b.frequencies.len().min(grid.len());
                let bad = (0..n).find(|&k| b.frequencies[k] != grid[k]).unwrap_or(n);
                return Err(IoError::parse(
                    row_no + bad,
                    format!("spectrum has {} rows on a different grid than the first ({} rows)", b.frequencies.len(), grid.len()),
                ));
            }
            if b.frequencies.len() < 2 {
                return Err(IoError::parse(row_no, "spectrum needs at least two rows"));
            }
            row_no += b.frequencies.len();
        }
        Ok(Self { config_hash, blocks, has_field_column })
    }
}
