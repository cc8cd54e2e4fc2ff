//! Desk-scale empirical checks of the spectral formulas.
//!
//! All routines run in the orientation where `ζ ≤ 1`, transposing the
//! sequence when needed. Monte Carlo work is sharded by sample index with
//! one PRNG stream per sample; per-sample values are collected in index
//! order and reduced sequentially, so results are bit-reproducible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{Coding, SampleWeights};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::patterns::{Orientation, Pattern, PatternSequence};
use crate::spectrum::SpectralModel;

/// Tilt parameters used by [`partition_check`].
pub const PARTITION_TS: [f64; 5] = [-2.0, 0.0, 0.5, 1.0, 2.0];

/// The sequence in the orientation the spectral model uses.
pub fn normalized(seq: &PatternSequence) -> (PatternSequence, SpectralModel) {
    let model = SpectralModel::new(seq.system());
    let seq = if model.was_transposed() { seq.transposed() } else { seq.clone() };
    (seq, model)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub t: f64,
    pub k: usize,
    pub l: usize,
    pub samples: usize,
    pub seed: u64,
    /// Sample mean of `ln μ(S_k(w)) / (-ln M_k)`.
    pub mean: f64,
    pub std_dev: f64,
    pub target_alpha: f64,
    pub relative_deviation: f64,
    pub orientation: Orientation,
}

/// Per-sample ratios `ln μ(S_k(w)) / (-ln M_k)` for words drawn from `μ̃_t`.
pub fn mc_ratios(seq: &PatternSequence, t: f64, k: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if k == 0 || samples == 0 {
        return Err(Error::Usage("depth and sample count must be at least 1".into()));
    }
    let (seq, model) = normalized(seq);
    let coding = Coding::new(seq, k);
    let tilt = model.tilt(t);
    let sampler = coding.sampler(SampleWeights::Tilt(&tilt))?;
    let len = coding.word_len_for(k)?;
    let scale = -coding.scales().log_m(k);
    let base = coding.base();
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let w = sampler.sample(len, seed, i)?;
            Ok(coding.log_measure_of_word(&w, k, &base)? / scale)
        })
        .collect()
}

pub fn mc_local_dimension(seq: &PatternSequence, t: f64, k: usize, samples: usize, seed: u64) -> Result<McStats> {
    let ratios = mc_ratios(seq, t, k, samples, seed)?;
    Ok(summarize(seq, t, k, seed, &ratios))
}

/// Statistics of precomputed ratios, as returned by [`mc_ratios`].
pub fn summarize(seq: &PatternSequence, t: f64, k: usize, seed: u64, ratios: &[f64]) -> McStats {
    let (seq, model) = normalized(seq);
    let l = Coding::new(seq, k).l_of_k(k).expect("k within depth");
    let n = ratios.len();
    let mean = ratios.iter().copied().collect::<CompensatedSum>().value() / n as f64;
    let var = if n > 1 {
        ratios
            .iter()
            .map(|r| (r - mean).powi(2))
            .collect::<CompensatedSum>()
            .value()
            / (n - 1) as f64
    } else {
        0.0
    };
    let target = model.alpha(t);
    McStats {
        t,
        k,
        l,
        samples: n,
        seed,
        mean,
        std_dev: var.sqrt(),
        target_alpha: target,
        relative_deviation: (mean - target).abs() / target,
        orientation: model.orientation(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionResiduals {
    pub k: usize,
    pub squares: u128,
    /// `|Σ_S μ(S) - 1|`.
    pub base: f64,
    /// `(t, |Σ_S μ_t(S) - 1|)` for each `t` in [`PARTITION_TS`].
    pub tilted: Vec<(f64, f64)>,
    pub tilted_max: f64,
}

pub fn partition_check(seq: &PatternSequence, k: usize, cap: u128) -> Result<PartitionResiduals> {
    let (seq, model) = normalized(seq);
    let coding = Coding::new(seq, k);
    let squares: Vec<_> = coding.enumerate_squares(k, cap)?.collect();
    let total = |f: &dyn Fn(&crate::coding::ApproxSquareAddress) -> Result<f64>| -> Result<f64> {
        let mut acc = CompensatedSum::default();
        for a in &squares {
            acc.add(f(a)?.exp());
        }
        Ok(acc.value())
    };
    let base = (total(&|a| coding.log_mu_square(a))? - 1.0).abs();
    let mut tilted = Vec::new();
    for t in PARTITION_TS {
        let tilt = model.tilt(t);
        let r = (total(&|a| coding.log_mu_t_square(a, &tilt))? - 1.0).abs();
        tilted.push((t, r));
    }
    let tilted_max = tilted.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(PartitionResiduals {
        k,
        squares: squares.len() as u128,
        base,
        tilted,
        tilted_max,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub k: usize,
    pub t: f64,
    /// `Σ_S μ(S)^t` over enumerated squares.
    pub enumerated: f64,
    /// `Π_{h≤l} Σ_w p_h(w)^t · Π_{l<h≤k} Σ_j q_h(j)^t` (mirrored for `l > k`).
    pub product_form: f64,
    pub relative_gap: f64,
}

pub fn moment_crosscheck(seq: &PatternSequence, k: usize, t: f64, cap: u128) -> Result<MomentCheck> {
    let (seq, _) = normalized(seq);
    let coding = Coding::new(seq, k);
    let mut acc = CompensatedSum::default();
    for a in coding.enumerate_squares(k, cap)? {
        acc.add((t * coding.log_mu_square(&a)?).exp());
    }
    let enumerated = acc.value();

    let l = coding.l_of_k(k)?;
    let sys = coding.system();
    let levels = coding.scales().levels();
    let mut product = 1.0;
    for h in 1..=k.max(l) {
        let p = &sys.patterns[levels[h - 1]];
        let factor: f64 = if h <= k.min(l) {
            p.probs.iter().map(|x| x.powf(t)).sum()
        } else if h <= k {
            p.row_marginal().iter().filter(|&&q| q > 0.0).map(|q| q.powf(t)).sum()
        } else {
            p.col_marginal().iter().filter(|&&q| q > 0.0).map(|q| q.powf(t)).sum()
        };
        product *= factor;
    }
    Ok(MomentCheck {
        k,
        t,
        enumerated,
        product_form: product,
        relative_gap: (enumerated - product).abs() / product.abs(),
    })
}

/// Counting histogram of the exponents `ln μ(S) / (-ln M_k)`.
///
/// This is a coarse diagnostic; its log-count exponents are not the fine
/// spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub k: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `ln(count) / ln M_k` per bin; `None` for empty bins.
    pub exponents: Vec<Option<f64>>,
    pub total: u64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Center of the first fullest bin.
    pub fn modal_center(&self) -> f64 {
        let mut best = 0;
        for (b, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = b;
            }
        }
        self.centers()[best]
    }
}

pub fn coarse_histogram(seq: &PatternSequence, k: usize, bins: usize, cap: u128) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Usage("histogram needs at least one bin".into()));
    }
    let (seq, _) = normalized(seq);
    let coding = Coding::new(seq, k);
    let scale = -coding.scales().log_m(k);
    let ratios = coding
        .enumerate_squares(k, cap)?
        .map(|a| Ok(coding.log_mu_square(&a)? / scale))
        .collect::<Result<Vec<f64>>>()?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|b| lo + width * b as f64).collect();
    let mut counts = vec![0u64; bins];
    for r in &ratios {
        let b = (((r - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let log_mk = coding.scales().log_m(k);
    let exponents = counts
        .iter()
        .map(|&c| (c > 0).then(|| (c as f64).ln() / log_mk))
        .collect();
    Ok(Histogram {
        k,
        edges,
        counts,
        exponents,
        total: ratios.len() as u64,
        ratio_min: lo,
        ratio_max: hi,
    })
}

/// McMullen's dimension `log_m Σ_j r(j)^{log_n m}` of a single-pattern carpet.
pub fn mcmullen_oracle(p: &Pattern) -> f64 {
    let (n, m) = (p.n as f64, p.m as f64);
    let exponent = m.ln() / n.ln();
    let sum: f64 = p
        .row_occupancy()
        .iter()
        .filter(|&&r| r > 0)
        .map(|&r| (r as f64).powf(exponent))
        .sum();
    sum.ln() / m.ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaDiagnostic {
    pub t: f64,
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
    /// First level of the tail window, `depth / 2` (at least 1).
    pub tail_start: usize,
    /// `(ε, fraction of words with min_{K≤k≤depth} D_k ≥ -ε)`.
    pub tail_fractions: Vec<(f64, f64)>,
    /// Smallest and largest `D_k` over all words and `k ≤ depth`.
    pub min_d: f64,
    pub max_d: f64,
    pub mean_word_min: f64,
    pub mean_word_max: f64,
}

/// Traces of `D_k(w) = I_{l(k)}(w) - I_k(w)` along words drawn from `μ̃_t`.
/// Informational only.
pub fn replica_diagnostic(
    seq: &PatternSequence,
    t: f64,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<ReplicaDiagnostic> {
    if depth == 0 || samples == 0 {
        return Err(Error::Usage("depth and sample count must be at least 1".into()));
    }
    let (seq, model) = normalized(seq);
    let coding = Coding::new(seq, depth);
    let tilt = model.tilt(t);
    let sampler = coding.sampler(SampleWeights::Tilt(&tilt))?;
    let len = coding.word_len_for(depth)?;
    let log_u = coding.log_u_table(t);
    let ls: Vec<usize> = (1..=depth).map(|k| coding.l_of_k(k)).collect::<Result<_>>()?;
    let tail_start = (depth / 2).max(1);
    let epsilons = [0.1, 0.01];

    // Per word: (min D, max D, min D over the tail window).
    let traces: Vec<(f64, f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let w = sampler.sample(len, seed, i)?;
            let prefix = coding.log_u_prefix(&w, &log_u);
            let (mut lo, mut hi, mut tail) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
            for k in 1..=depth {
                let l = ls[k - 1];
                let d = prefix[l] / l as f64 - prefix[k] / k as f64;
                lo = lo.min(d);
                hi = hi.max(d);
                if k >= tail_start {
                    tail = tail.min(d);
                }
            }
            Ok((lo, hi, tail))
        })
        .collect::<Result<_>>()?;

    let n = traces.len() as f64;
    let tail_fractions = epsilons
        .iter()
        .map(|&eps| (eps, traces.iter().filter(|x| x.2 >= -eps).count() as f64 / n))
        .collect();
    Ok(ReplicaDiagnostic {
        t,
        depth,
        samples,
        seed,
        tail_start,
        tail_fractions,
        min_d: traces.iter().map(|x| x.0).fold(f64::INFINITY, f64::min),
        max_d: traces.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max),
        mean_word_min: traces.iter().map(|x| x.0).collect::<CompensatedSum>().value() / n,
        mean_word_max: traces.iter().map(|x| x.1).collect::<CompensatedSum>().value() / n,
    })
}
