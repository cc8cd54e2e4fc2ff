//! Python bindings for `moranfrac`.
//!
//! Structured results such as reports and Monte Carlo records are returned
//! as JSON strings in the same schema the command line writes.

use moranfrac::empirics;
use moranfrac::io::{self, report::ReportOptions, Config};
use moranfrac::patterns::validate_system;
use moranfrac::{condition_report, AlphaGrid, Error, PatternSequence};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json<T: Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A pattern system together with its level sequence.
#[pyclass(name = "PatternSystem", module = "pymoranfrac", frozen)]
pub struct PySystem {
    input: Vec<u8>,
    cfg: Config,
    seq: PatternSequence,
}

impl PySystem {
    fn build(input: Vec<u8>, cfg: Config) -> PyResult<Self> {
        let seq = cfg.realize().map_err(err)?;
        Ok(PySystem { input, cfg, seq })
    }
}

#[pymethods]
impl PySystem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let cfg = io::parse_config(text).map_err(err)?;
        Self::build(text.as_bytes().to_vec(), cfg)
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Self::from_json(&text)
    }

    fn to_json(&self) -> String {
        io::serialize_config(&self.cfg.system, &self.cfg.sequence)
    }

    fn names(&self) -> Vec<String> {
        self.seq.system().patterns.iter().map(|p| p.name.clone()).collect()
    }

    fn zeta(&self) -> f64 {
        self.seq.system().zeta()
    }

    fn transpose(&self) -> PyResult<Self> {
        let cfg = Config { system: self.cfg.system.transpose(), sequence: self.cfg.sequence.clone() };
        Self::build(io::serialize_config(&cfg.system, &cfg.sequence).into_bytes(), cfg)
    }

    /// Validation report as JSON.
    fn validate(&self) -> PyResult<String> {
        json(&validate_system(self.seq.system()))
    }

    /// Separation checks and licensing as JSON.
    fn conditions(&self) -> PyResult<String> {
        json(&condition_report(self.seq.system()))
    }

    fn prefix(&self, len: usize) -> Vec<usize> {
        self.seq.prefix(len)
    }

    fn model(&self) -> PyModel {
        PyModel { inner: moranfrac::SpectralModel::new(self.seq.system()) }
    }

    #[pyo3(signature = (t, depth, samples, seed = 0))]
    fn mc_local_dimension(&self, t: f64, depth: usize, samples: usize, seed: u64) -> PyResult<String> {
        json(&empirics::mc_local_dimension(&self.seq, t, depth, samples, seed).map_err(err)?)
    }

    #[pyo3(signature = (t, depth, samples, seed = 0))]
    fn mc_ratios(&self, t: f64, depth: usize, samples: usize, seed: u64) -> PyResult<Vec<f64>> {
        empirics::mc_ratios(&self.seq, t, depth, samples, seed).map_err(err)
    }

    #[pyo3(signature = (mc_depth = 200, mc_samples = 1000, seed = 0))]
    fn report(&self, mc_depth: usize, mc_samples: usize, seed: u64) -> PyResult<String> {
        let opts = ReportOptions { mc_depth, mc_samples, seed, ..ReportOptions::default() };
        let rep = io::build_report(&self.input, &self.cfg, &opts).map_err(err)?;
        Ok(io::report::report_to_json(&rep))
    }

    fn __repr__(&self) -> String {
        format!("PatternSystem(names={:?}, zeta={:.6})", self.names(), self.zeta())
    }
}

/// Spectral quantities in `ζ ≤ 1` orientation.
#[pyclass(name = "SpectralModel", module = "pymoranfrac", frozen)]
pub struct PyModel {
    inner: moranfrac::SpectralModel,
}

#[pymethods]
impl PyModel {
    fn zeta(&self) -> f64 {
        self.inner.zeta()
    }

    fn was_transposed(&self) -> bool {
        self.inner.was_transposed()
    }

    fn beta(&self, t: f64) -> f64 {
        self.inner.beta(t)
    }

    fn alpha(&self, t: f64) -> f64 {
        self.inner.alpha(t)
    }

    fn alpha_range(&self) -> (f64, f64) {
        let r = self.inner.alpha_range();
        (r.alpha_min, r.alpha_max)
    }

    fn solve_t(&self, alpha: f64) -> PyResult<f64> {
        self.inner.solve_t(alpha).map_err(err)
    }

    /// `H(α)` via the Legendre transform.
    fn h(&self, alpha: f64) -> PyResult<f64> {
        Ok(self.inner.legendre(alpha).map_err(err)?.h)
    }

    /// Rows `(t, β, α, H)` of the spectrum on an α grid.
    #[pyo3(signature = (steps = 200, t_min = None, t_max = None))]
    fn curve(&self, steps: usize, t_min: Option<f64>, t_max: Option<f64>) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let mut grid = AlphaGrid::new(steps);
        if let (Some(a), Some(b)) = (t_min, t_max) {
            grid = grid.with_t_range(a, b);
        } else if t_min.is_some() || t_max.is_some() {
            return Err(PyValueError::new_err("t_min and t_max must be given together"));
        }
        let curve = self.inner.spectrum_curve(&grid).map_err(err)?;
        Ok(curve.samples.iter().map(|s| (s.t, s.beta, s.alpha, s.h)).collect())
    }
}

/// Hausdorff dimension of the carpet of one pattern (McMullen's formula).
#[pyfunction]
fn mcmullen_dimension(n: u32, m: u32, digits: Vec<(u32, u32)>) -> PyResult<f64> {
    let sys = moranfrac::PatternSystem::single(moranfrac::Pattern::uniform("P", n, m, digits));
    validate_system(&sys).into_result().map_err(err)?;
    let seq = PatternSequence::balanced(&sys).map_err(err)?;
    let (upright, _) = empirics::normalized(&seq);
    Ok(empirics::mcmullen_oracle(&upright.system().patterns[0]))
}

#[pymodule]
fn pymoranfrac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(mcmullen_dimension, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
