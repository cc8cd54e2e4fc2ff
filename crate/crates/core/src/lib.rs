//! Fine multifractal spectra of self-affine Moran measures.
//!
//! A self-affine Moran carpet is built level by level from a finite family of
//! grid patterns `(n, m, D)`, each occurring with a fixed limiting frequency.
//! This crate computes the Legendre-form spectrum `H(α) = inf_t {αt + β(t)}`
//! for the measure carried by such a carpet, decides the separation
//! conditions under which that formula is known to hold, and checks the
//! theory empirically on exactly enumerated approximate squares and on
//! Monte Carlo samples from the tilted measures.
//!
//! Module map:
//!
//! * [`patterns`]: patterns, pattern systems, frequencies, level sequences.
//! * [`coding`]: symbolic words, cumulative scales, approximate squares and
//!   the measures they carry.
//! * [`spectrum`]: `β(t)`, `α(t)`, tilted weights and `H(α)`.
//! * [`conditions`]: row/column separation checks and theorem licensing.
//! * [`empirics`]: Monte Carlo and enumeration cross-checks.
//! * [`io`] and [`cli`]: configuration documents, output formats and the
//!   `moranfrac` command line.

pub mod cli;
pub mod coding;
pub mod conditions;
pub mod empirics;
pub mod error;
pub mod io;
pub mod numeric;
pub mod patterns;
pub mod spectrum;

pub use coding::{ApproxSquareAddress, Coding, CumulativeScales, Rect, Word};
pub use conditions::{condition_report, ConditionReport, License};
pub use error::{Error, Result};
pub use patterns::{
    Orientation, Pattern, PatternSequence, PatternSystem, SequenceMode, ValidationReport,
};
pub use spectrum::{AlphaGrid, AlphaRange, SpectralModel, SpectrumCurve, TiltParams};
