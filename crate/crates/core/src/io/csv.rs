//! Spectrum curves as CSV with columns `t,beta,alpha,H`.
//!
//! Values are written in scientific notation with 17 significant digits,
//! which re-parses to the same `f64`. A transposed curve carries a leading
//! `# orientation: transposed` comment.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::patterns::Orientation;
use crate::spectrum::{SpectrumCurve, SpectrumSample};

pub const HEADER: &str = "t,beta,alpha,H";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn curve_to_csv(curve: &SpectrumCurve) -> String {
    let mut out = String::new();
    if curve.orientation == Orientation::Transposed {
        let _ = writeln!(out, "# orientation: transposed (input zeta = {})", fmt_f64(curve.zeta));
    }
    out.push_str(HEADER);
    out.push('\n');
    for s in &curve.samples {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.beta),
            fmt_f64(s.alpha),
            fmt_f64(s.h)
        );
    }
    out
}

/// Read back the rows written by [`curve_to_csv`], skipping comments.
pub fn parse_curve_csv(text: &str) -> Result<Vec<SpectrumSample>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some(HEADER) => {}
        other => return Err(Error::Parse(format!("expected header `{HEADER}`, found {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(row, line)| {
            let v = line
                .split(',')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", row + 1)))?;
            match v[..] {
                [t, beta, alpha, h] => Ok(SpectrumSample { t, beta, alpha, h }),
                _ => Err(Error::Parse(format!("row {}: expected 4 fields", row + 1))),
            }
        })
        .collect()
}

/// Per-sample Monte Carlo ratios, `index,ratio`.
pub fn ratios_to_csv(ratios: &[f64]) -> String {
    let mut out = String::from("index,ratio\n");
    for (i, r) in ratios.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmt_f64(*r));
    }
    out
}
