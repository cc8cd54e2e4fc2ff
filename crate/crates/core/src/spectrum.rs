//! Closed-form multifractal machinery.
//!
//! For a system with `ζ ≤ 1` each pattern contributes
//!
//! ```text
//! β_γ(t) = log_m Σ_{(i,j)∈D} p(i,j)^t u(j)^{1-ζ},   u(j) = q(j)^t / Σ_{i:(i,j)∈D} p(i,j)^t
//! ```
//!
//! and `β(t)` is the `f_γ log m_γ` weighted mean of the `β_γ`. The tilted
//! digit weights `P_γ(w) = m^{-β_γ(t)} p^t u^{1-ζ}` are probability vectors,
//! `α(t)` is the mean per-digit exponent under them, and
//! `H(α) = inf_t {αt + β(t)}` is attained where `α(t) = α`.
//!
//! Systems with `ζ > 1` are handled by transposing first: a
//! [`SpectralModel`] always works in the orientation where `ζ ≤ 1`.
//! Everything is evaluated in log space and stays finite for `|t|` in the
//! thousands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{linspace, log_sum_exp};
use crate::patterns::{Orientation, Pattern, PatternSystem};

/// Row and column marginals of one pattern at parameter `t`.
///
/// Entries for unoccupied rows (columns) are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowMarginals {
    pub pattern: String,
    pub t: f64,
    pub q: Vec<f64>,
    pub q_hat: Vec<f64>,
    /// `s_j = Σ_{i:(i,j)∈D} p(i,j)^t`.
    pub s: Vec<f64>,
    pub s_hat: Vec<f64>,
    /// `u(j) = q(j)^t / s_j`.
    pub u: Vec<f64>,
    pub u_hat: Vec<f64>,
}

pub fn row_marginals(p: &Pattern, t: f64) -> RowMarginals {
    let q = p.row_marginal();
    let q_hat = p.col_marginal();
    let mut s = vec![0.0; p.m as usize];
    let mut s_hat = vec![0.0; p.n as usize];
    for (&(i, j), &prob) in p.digits.iter().zip(&p.probs) {
        let pt = prob.powf(t);
        s[j as usize] += pt;
        s_hat[i as usize] += pt;
    }
    let ratio = |q: &[f64], s: &[f64]| -> Vec<f64> {
        q.iter()
            .zip(s)
            .map(|(&q, &s)| if s > 0.0 { q.powf(t) / s } else { 0.0 })
            .collect()
    };
    RowMarginals {
        pattern: p.name.clone(),
        t,
        u: ratio(&q, &s),
        u_hat: ratio(&q_hat, &s_hat),
        q,
        q_hat,
        s,
        s_hat,
    }
}

/// Per-pattern log tables reused across `t`.
#[derive(Clone, Debug)]
struct Prepared {
    ln_m: f64,
    rows: usize,
    cols: usize,
    log_p: Vec<f64>,
    row_of: Vec<usize>,
    col_of: Vec<usize>,
    /// `ln q(j)` indexed by row; `-inf` on empty rows.
    log_q: Vec<f64>,
    /// Per-digit exponent `-ζ ln p - (1-ζ) ln q`.
    exponent: Vec<f64>,
}

impl Prepared {
    fn new(p: &Pattern, zeta: f64) -> Prepared {
        let log_p: Vec<f64> = p.probs.iter().map(|x| x.ln()).collect();
        let row_of: Vec<usize> = p.digits.iter().map(|d| d.1 as usize).collect();
        let col_of: Vec<usize> = p.digits.iter().map(|d| d.0 as usize).collect();
        let log_q: Vec<f64> = p.row_marginal().iter().map(|q| q.ln()).collect();
        let exponent = log_p
            .iter()
            .zip(&row_of)
            .map(|(&lp, &j)| -zeta * lp - (1.0 - zeta) * log_q[j])
            .collect();
        Prepared {
            ln_m: (p.m as f64).ln(),
            rows: p.m as usize,
            cols: p.n as usize,
            log_p,
            row_of,
            col_of,
            log_q,
            exponent,
        }
    }

    /// `ln u(j)` per row at `t`; `-inf` on empty rows.
    fn log_u(&self, t: f64) -> Vec<f64> {
        let mut terms: Vec<Vec<f64>> = vec![Vec::new(); self.rows];
        for (&lp, &j) in self.log_p.iter().zip(&self.row_of) {
            terms[j].push(t * lp);
        }
        terms
            .iter()
            .zip(&self.log_q)
            .map(|(row, &lq)| {
                if row.is_empty() {
                    f64::NEG_INFINITY
                } else {
                    t * lq - log_sum_exp(row.iter().copied())
                }
            })
            .collect()
    }

    /// Unnormalized log tilt terms `t ln p + (1-ζ) ln u(j)` per digit.
    fn tilt_terms(&self, t: f64, zeta: f64) -> Vec<f64> {
        let log_u = self.log_u(t);
        self.log_p
            .iter()
            .zip(&self.row_of)
            .map(|(&lp, &j)| {
                let lu = if zeta == 1.0 { 0.0 } else { (1.0 - zeta) * log_u[j] };
                t * lp + lu
            })
            .collect()
    }

    fn beta(&self, t: f64, zeta: f64) -> f64 {
        log_sum_exp(self.tilt_terms(t, zeta)) / self.ln_m
    }

    /// `(β_γ(t), ln P_γ(w))`.
    fn tilt(&self, t: f64, zeta: f64) -> (f64, Vec<f64>) {
        let terms = self.tilt_terms(t, zeta);
        let lse = log_sum_exp(terms.iter().copied());
        (lse / self.ln_m, terms.iter().map(|a| a - lse).collect())
    }

    /// `Σ_w P(w) e(w)`.
    fn mean_exponent(&self, t: f64, zeta: f64) -> f64 {
        let terms = self.tilt_terms(t, zeta);
        let lse = log_sum_exp(terms.iter().copied());
        terms
            .iter()
            .zip(&self.exponent)
            .map(|(a, e)| (a - lse).exp() * e)
            .sum()
    }
}

/// `β_γ(t)`: the explicit solution of `m^{-β} Σ p^t u^{1-ζ} = 1`.
///
/// Requires `0 < ζ ≤ 1`; transpose the system first otherwise.
pub fn beta_gamma(p: &Pattern, t: f64, zeta: f64) -> f64 {
    Prepared::new(p, zeta).beta(t, zeta)
}

/// Tilted digit weights of every pattern at one `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltParams {
    pub t: f64,
    pub zeta: f64,
    /// Orientation of the system these weights belong to.
    pub orientation: Orientation,
    /// `β_γ(t)` per pattern.
    pub beta: Vec<f64>,
    /// `ln P_γ(w)` per pattern, aligned with the pattern's digits.
    pub log_weights: Vec<Vec<f64>>,
    /// `ln Q_γ(j)` per pattern and row; `-inf` on empty rows.
    pub log_row_sums: Vec<Vec<f64>>,
    /// `ln Q̂_γ(i)` per pattern and column; `-inf` on empty columns.
    pub log_col_sums: Vec<Vec<f64>>,
}

impl TiltParams {
    /// `P_γ(w)` for pattern `g`.
    pub fn weights(&self, g: usize) -> Vec<f64> {
        self.log_weights[g].iter().map(|x| x.exp()).collect()
    }

    /// `Q_γ(j)` for pattern `g`.
    pub fn row_sums(&self, g: usize) -> Vec<f64> {
        self.log_row_sums[g].iter().map(|x| x.exp()).collect()
    }

    /// `Q̂_γ(i)` for pattern `g`.
    pub fn col_sums(&self, g: usize) -> Vec<f64> {
        self.log_col_sums[g].iter().map(|x| x.exp()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaRange {
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl AlphaRange {
    pub fn is_degenerate(&self) -> bool {
        self.alpha_max - self.alpha_min <= 1e-12 * self.alpha_max.abs().max(1.0)
    }

    pub fn width(&self) -> f64 {
        self.alpha_max - self.alpha_min
    }

    pub fn contains_open(&self, alpha: f64) -> bool {
        alpha > self.alpha_min && alpha < self.alpha_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub t: f64,
    pub beta: f64,
    pub alpha: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    /// Sorted by increasing `t` (decreasing `α`).
    pub samples: Vec<SpectrumSample>,
    pub alpha_range: AlphaRange,
    /// `ζ` of the input system, before any transposition.
    pub zeta: f64,
    pub orientation: Orientation,
}

/// Which `α` values a curve is evaluated at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaGrid {
    pub steps: usize,
    /// Excluded margin at each end, as a fraction of `α_max - α_min`.
    pub margin: f64,
    /// Restrict to `α ∈ [α(t_max), α(t_min)]`.
    pub t_range: Option<(f64, f64)>,
}

impl AlphaGrid {
    pub fn new(steps: usize) -> AlphaGrid {
        AlphaGrid {
            steps,
            margin: 1e-3,
            t_range: None,
        }
    }

    pub fn with_t_range(mut self, t_min: f64, t_max: f64) -> AlphaGrid {
        self.t_range = Some((t_min, t_max));
        self
    }
}

impl Default for AlphaGrid {
    fn default() -> Self {
        AlphaGrid::new(200)
    }
}

/// Spectral functions of a system, in the orientation where `ζ ≤ 1`.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    system: PatternSystem,
    input_zeta: f64,
    zeta: f64,
    freq: Vec<f64>,
    /// `Σ f log m` of the normalized system.
    log_scale: f64,
    prepared: Vec<Prepared>,
}

impl SpectralModel {
    /// Transposes when `ζ > 1`.
    pub fn new(sys: &PatternSystem) -> SpectralModel {
        let input_zeta = sys.zeta();
        let system = if input_zeta > 1.0 { sys.transpose() } else { sys.clone() };
        SpectralModel::in_orientation(system, input_zeta)
    }

    fn in_orientation(system: PatternSystem, input_zeta: f64) -> SpectralModel {
        let zeta = system.zeta();
        let freq: Vec<f64> = (0..system.len()).map(|g| system.frequency_f64(g)).collect();
        let log_scale = system
            .patterns
            .iter()
            .zip(&freq)
            .map(|(p, f)| f * (p.m as f64).ln())
            .sum();
        let prepared = system.patterns.iter().map(|p| Prepared::new(p, zeta)).collect();
        SpectralModel {
            system,
            input_zeta,
            zeta,
            freq,
            log_scale,
            prepared,
        }
    }

    /// The system the formulas run on (transposed if the input had `ζ > 1`).
    pub fn system(&self) -> &PatternSystem {
        &self.system
    }

    pub fn orientation(&self) -> Orientation {
        self.system.orientation
    }

    pub fn was_transposed(&self) -> bool {
        self.input_zeta > 1.0
    }

    /// `ζ` of the normalized system, always `≤ 1`.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn input_zeta(&self) -> f64 {
        self.input_zeta
    }

    pub fn beta_gamma(&self, g: usize, t: f64) -> f64 {
        self.prepared[g].beta(t, self.zeta)
    }

    /// Normalized weights `f_γ log m_γ / Σ f log m` entering `β(t)`.
    pub fn beta_weights(&self) -> Vec<f64> {
        self.prepared
            .iter()
            .zip(&self.freq)
            .map(|(p, f)| f * p.ln_m / self.log_scale)
            .collect()
    }

    pub fn beta(&self, t: f64) -> f64 {
        let num: f64 = self
            .prepared
            .iter()
            .zip(&self.freq)
            .filter(|(_, &f)| f > 0.0)
            .map(|(p, f)| f * p.ln_m * p.beta(t, self.zeta))
            .sum();
        num / self.log_scale
    }

    pub fn alpha(&self, t: f64) -> f64 {
        let num: f64 = self
            .prepared
            .iter()
            .zip(&self.freq)
            .filter(|(_, &f)| f > 0.0)
            .map(|(p, f)| f * p.mean_exponent(t, self.zeta))
            .sum();
        num / self.log_scale
    }

    pub fn tilt(&self, t: f64) -> TiltParams {
        let mut beta = Vec::with_capacity(self.prepared.len());
        let mut log_weights = Vec::with_capacity(self.prepared.len());
        let mut log_row_sums = Vec::with_capacity(self.prepared.len());
        let mut log_col_sums = Vec::with_capacity(self.prepared.len());
        for p in &self.prepared {
            let (b, lw) = p.tilt(t, self.zeta);
            let mut rows = vec![Vec::new(); p.rows];
            let mut cols = vec![Vec::new(); p.cols];
            for ((&w, &j), &i) in lw.iter().zip(&p.row_of).zip(&p.col_of) {
                rows[j].push(w);
                cols[i].push(w);
            }
            beta.push(b);
            log_row_sums.push(rows.into_iter().map(log_sum_exp).collect());
            log_col_sums.push(cols.into_iter().map(log_sum_exp).collect());
            log_weights.push(lw);
        }
        TiltParams {
            t,
            zeta: self.zeta,
            orientation: self.orientation(),
            beta,
            log_weights,
            log_row_sums,
            log_col_sums,
        }
    }

    pub fn alpha_range(&self) -> AlphaRange {
        let (mut lo, mut hi) = (0.0, 0.0);
        for (p, &f) in self.prepared.iter().zip(&self.freq) {
            if f == 0.0 {
                continue;
            }
            let min = p.exponent.iter().copied().fold(f64::INFINITY, f64::min);
            let max = p.exponent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            lo += f * min;
            hi += f * max;
        }
        AlphaRange {
            alpha_min: lo / self.log_scale,
            alpha_max: hi / self.log_scale,
        }
    }

    /// The `t` with `α(t) = alpha`, by bisection on an expanding bracket.
    pub fn solve_t(&self, alpha: f64) -> Result<f64> {
        let range = self.alpha_range();
        if range.is_degenerate() {
            return Err(Error::Degenerate {
                alpha: range.alpha_min,
            });
        }
        if !range.contains_open(alpha) {
            return Err(Error::OutOfRange {
                alpha,
                min: range.alpha_min,
                max: range.alpha_max,
            });
        }
        let mut bound = 8.0f64;
        while !(self.alpha(-bound) > alpha && self.alpha(bound) < alpha) {
            bound *= 2.0;
            if bound > 65536.0 {
                return Err(Error::NoBracket { alpha });
            }
        }
        // α(t) is non-increasing: α(lo) > alpha > α(hi).
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let a = self.alpha(mid);
            if a == alpha {
                return Ok(mid);
            }
            if a > alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (da, db) = ((self.alpha(lo) - alpha).abs(), (self.alpha(hi) - alpha).abs());
        Ok(if da <= db { lo } else { hi })
    }

    /// `H(alpha)` together with the minimizing `t`.
    pub fn legendre(&self, alpha: f64) -> Result<SpectrumSample> {
        let t = self.solve_t(alpha)?;
        let beta = self.beta(t);
        Ok(SpectrumSample {
            t,
            beta,
            alpha,
            h: t * alpha + beta,
        })
    }

    /// The sample at a given `t`, with `α = α(t)`.
    pub fn sample_at(&self, t: f64) -> SpectrumSample {
        let alpha = self.alpha(t);
        let beta = self.beta(t);
        SpectrumSample {
            t,
            beta,
            alpha,
            h: t * alpha + beta,
        }
    }

    /// Grid `α` values for a curve.
    pub fn alpha_grid(&self, grid: &AlphaGrid) -> Result<Vec<f64>> {
        let range = self.alpha_range();
        if range.is_degenerate() {
            return Err(Error::Degenerate {
                alpha: range.alpha_min,
            });
        }
        let eps = grid.margin * range.width();
        let (mut a, mut b) = (range.alpha_min + eps, range.alpha_max - eps);
        if let Some((t_min, t_max)) = grid.t_range {
            if t_min >= t_max {
                return Err(Error::Usage(format!("t-min {t_min} must be below t-max {t_max}")));
            }
            a = a.max(self.alpha(t_max));
            b = b.min(self.alpha(t_min));
        }
        if a > b {
            return Err(Error::Domain(format!(
                "empty alpha window [{a}, {b}] after applying margins"
            )));
        }
        Ok(linspace(a, b, grid.steps))
    }

    pub fn spectrum_curve(&self, grid: &AlphaGrid) -> Result<SpectrumCurve> {
        let mut samples = self
            .alpha_grid(grid)?
            .into_iter()
            .map(|a| self.legendre(a))
            .collect::<Result<Vec<_>>>()?;
        samples.sort_by(|x, y| x.t.total_cmp(&y.t));
        Ok(SpectrumCurve {
            samples,
            alpha_range: self.alpha_range(),
            zeta: self.input_zeta,
            orientation: self.orientation(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carpet() -> Pattern {
        Pattern::uniform("C", 3, 2, vec![(0, 0), (1, 1), (2, 0)])
    }

    fn diagonal() -> Pattern {
        Pattern::uniform("D", 2, 2, vec![(0, 0), (1, 1)])
    }

    #[test]
    fn carpet_marginals() {
        let c = carpet();
        for t in [-2.0, 0.0, 0.5, 3.0] {
            let rm = row_marginals(&c, t);
            assert!((rm.q[0] - 2.0 / 3.0).abs() < 1e-15);
            assert!((rm.q[1] - 1.0 / 3.0).abs() < 1e-15);
        }
        let one = row_marginals(&c, 1.0);
        assert!((one.u[0] - 1.0).abs() < 1e-15 && (one.u[1] - 1.0).abs() < 1e-15);
        let zero = row_marginals(&c, 0.0);
        assert!((zero.u[0] - 0.5).abs() < 1e-15 && (zero.u[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn beta_gamma_examples() {
        let c = carpet();
        let zeta = 2f64.ln() / 3f64.ln();
        assert!(beta_gamma(&c, 1.0, zeta).abs() < 1e-15);
        let expected = (2f64.powf(zeta) + 1.0).log2();
        assert!((beta_gamma(&c, 0.0, zeta) - expected).abs() < 1e-13);
        assert!((beta_gamma(&diagonal(), 2.0, 1.0) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn tilt_at_zero_on_carpet() {
        let model = SpectralModel::new(&PatternSystem::single(carpet()));
        let tilt = model.tilt(0.0);
        let w = tilt.weights(0);
        let z = model.zeta();
        let middle = 1.0 / (2f64.powf(z) + 1.0);
        assert!((w[1] - middle).abs() < 1e-14);
        assert!((w[1] - 0.3924).abs() < 1e-4);
        assert!((w[0] - 0.3038).abs() < 1e-4 && (w[0] - w[2]).abs() < 1e-15);
        let sum: f64 = w.iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn alpha_examples() {
        let model = SpectralModel::new(&PatternSystem::single(carpet()));
        assert!((model.alpha(1.0) - 1.3389).abs() < 5e-5);
        assert!((model.alpha(0.0) - 1.3607).abs() < 5e-5);
        let r = model.alpha_range();
        assert!((r.alpha_min - 1.2159).abs() < 5e-5);
        assert!((r.alpha_max - 3f64.log2()).abs() < 1e-14);

        let diag = SpectralModel::new(&PatternSystem::single(diagonal()));
        for t in [-3.0, 0.0, 4.0] {
            assert!((diag.alpha(t) - 1.0).abs() < 1e-14);
        }
        assert!(diag.alpha_range().is_degenerate());
        assert!(matches!(diag.solve_t(1.0), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn full_grid_range() {
        let full = Pattern::uniform("F", 2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        let r = SpectralModel::new(&PatternSystem::single(full)).alpha_range();
        assert!((r.alpha_min - 2.0).abs() < 1e-14 && (r.alpha_max - 2.0).abs() < 1e-14);
    }

    #[test]
    fn solve_t_inverts_alpha() {
        let model = SpectralModel::new(&PatternSystem::single(carpet()));
        for t in [0.0, 1.0, -3.5, 7.25] {
            let a = model.alpha(t);
            let back = model.solve_t(a).unwrap();
            assert!((back - t).abs() < 1e-6, "t = {t}, got {back}");
            assert!((model.alpha(back) - a).abs() <= 1e-10);
        }
        assert!(matches!(model.solve_t(1.2), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn curve_special_points() {
        let model = SpectralModel::new(&PatternSystem::single(carpet()));
        let at0 = model.legendre(model.alpha(0.0)).unwrap();
        assert!((at0.h - 1.3497).abs() < 1e-4);
        assert!((at0.h - model.beta(0.0)).abs() < 1e-9);
        let a1 = model.alpha(1.0);
        let at1 = model.legendre(a1).unwrap();
        assert!((at1.h - a1).abs() < 1e-8);

        let curve = model.spectrum_curve(&AlphaGrid::new(25)).unwrap();
        assert_eq!(curve.samples.len(), 25);
        assert!(curve.samples.windows(2).all(|w| w[0].t < w[1].t && w[0].alpha > w[1].alpha));
        assert!(curve.samples.iter().all(|s| s.h <= model.beta(0.0) + 1e-12));
    }

    #[test]
    fn t_range_narrows_grid() {
        let model = SpectralModel::new(&PatternSystem::single(carpet()));
        let grid = AlphaGrid::new(11).with_t_range(-1.0, 2.0);
        let alphas = model.alpha_grid(&grid).unwrap();
        assert!((alphas[0] - model.alpha(2.0)).abs() < 1e-15);
        assert!((alphas[10] - model.alpha(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn model_transposes_wide_systems() {
        // n = 2, m = 4: ζ = 2 > 1.
        let tall = Pattern::uniform("T", 2, 4, vec![(0, 0), (1, 1), (1, 3)]);
        let sys = PatternSystem::single(tall);
        let model = SpectralModel::new(&sys);
        assert!(model.was_transposed());
        assert_eq!(model.orientation(), Orientation::Transposed);
        assert!((model.zeta() - 0.5).abs() < 1e-15);
        assert!(model.beta(1.0).abs() < 1e-14);
    }
}
