//! Binary grayscale (P5) rasters of level-`k` approximate squares and of the
//! individual patterns.

use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::coding::Coding;
use crate::empirics::normalized;
use crate::error::{Error, Result};
use crate::patterns::{PatternSequence, Pattern};

/// Default cap on `N_l · M_k`.
pub const DEFAULT_PIXEL_CAP: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RenderMode {
    /// Occupied cells white on black.
    Set,
    /// Gray level linear in `ln μ(S)`.
    Measure,
    /// Gray level linear in `ln μ_t(S)`.
    Tilted(f64),
}

impl FromStr for RenderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<RenderMode> {
        match s {
            "set" => Ok(RenderMode::Set),
            "measure" => Ok(RenderMode::Measure),
            _ => s
                .strip_prefix("tilted:")
                .and_then(|t| t.parse().ok())
                .filter(|t: &f64| t.is_finite())
                .map(RenderMode::Tilted)
                .ok_or_else(|| Error::Usage(format!("unknown render mode `{s}` (set, measure, tilted:T)"))),
        }
    }
}

/// Row-major 8-bit raster, top row first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, fill: u8) -> Raster {
        Raster {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Number of nonzero pixels.
    pub fn filled(&self) -> usize {
        self.pixels.iter().filter(|&&v| v != 0).count()
    }

    pub fn transposed(&self) -> Raster {
        let mut out = Raster::new(self.height, self.width, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                // Swapping axes about the lower-left origin.
                let (ox, oy) = (self.height - 1 - y, self.width - 1 - x);
                out.set(ox, oy, self.get(x, y));
            }
        }
        out
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Raster> {
        let bad = || Error::Parse("not a binary 8-bit PGM".into());
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad());
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?);
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        if fields[0] != "P5" || num(fields[3])? != 255 {
            return Err(bad());
        }
        let (width, height) = (num(fields[1])?, num(fields[2])?);
        let pixels = bytes.get(pos + 1..).ok_or_else(bad)?.to_vec();
        if pixels.len() != width * height {
            return Err(bad());
        }
        Ok(Raster { width, height, pixels })
    }
}

/// Render the depth-`k` approximate squares on the `N_l × M_k` grid, one
/// pixel per square, in the input orientation.
pub fn render(seq: &PatternSequence, k: usize, mode: RenderMode, pixel_cap: u128, enum_cap: u128) -> Result<Raster> {
    if k == 0 {
        return Err(Error::Usage("render depth must be at least 1".into()));
    }
    let (seq, model) = normalized(seq);
    let coding = Coding::new(seq, k);
    let l = coding.l_of_k(k)?;
    let (w, h) = (coding.scales().n_product(l), coding.scales().m_product(k));
    let pixels = w * h;
    let cap = BigUint::from(pixel_cap);
    if pixels > cap {
        return Err(Error::PixelCap {
            pixels: pixels.to_u128().unwrap_or(u128::MAX),
            cap: pixel_cap,
        });
    }
    let (w, h) = (w.to_usize().expect("capped"), h.to_usize().expect("capped"));
    let tilt = match mode {
        RenderMode::Tilted(t) => Some(model.tilt(t)),
        _ => None,
    };
    let mut cells = Vec::new();
    for a in coding.enumerate_squares(k, enum_cap)? {
        let (x, y) = coding.cell(&a)?;
        let value = match (&mode, &tilt) {
            (RenderMode::Set, _) => 0.0,
            (_, Some(tilt)) => coding.log_mu_t_square(&a, tilt)?,
            _ => coding.log_mu_square(&a)?,
        };
        cells.push((x.to_usize().expect("capped"), y.to_usize().expect("capped"), value));
    }
    let lo = cells.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    let hi = cells.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    let mut raster = Raster::new(w, h, 0);
    for (x, y, v) in cells {
        let gray = if hi > lo {
            1 + (254.0 * (v - lo) / (hi - lo)).round() as u8
        } else {
            255
        };
        raster.set(x, h - 1 - y, gray);
    }
    if model.was_transposed() {
        raster = raster.transposed();
    }
    Ok(raster)
}

/// The `n × m` grid of a pattern: digits black, empty cells white, one-pixel
/// gray grid lines, `cell` pixels per side.
pub fn pattern_diagram(p: &Pattern, cell: usize) -> Raster {
    let (n, m) = (p.n as usize, p.m as usize);
    let (w, h) = (n * (cell + 1) + 1, m * (cell + 1) + 1);
    let mut r = Raster::new(w, h, 128);
    for i in 0..n {
        for j in 0..m {
            let fill = if p.digits.contains(&(i as u32, j as u32)) { 0 } else { 255 };
            let x0 = 1 + i * (cell + 1);
            let y0 = 1 + (m - 1 - j) * (cell + 1);
            for y in y0..y0 + cell {
                for x in x0..x0 + cell {
                    r.set(x, y, fill);
                }
            }
        }
    }
    r
}
