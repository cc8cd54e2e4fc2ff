#![allow(dead_code)]

use std::path::PathBuf;

use moranfrac::io::{parse_config, Config};
use moranfrac::{Pattern, PatternSequence, PatternSystem};

pub const CORPUS: [&str; 10] = [
    "ex24_case1",
    "ex24_case1b",
    "ex24_case2",
    "ex24_case3",
    "carpet32_uniform",
    "carpet32_weighted",
    "bm43",
    "full22_weighted",
    "diagonal",
    "mixed_explicit",
];

/// Systems with a nondegenerate α-range.
pub const SPECTRAL: [&str; 9] = [
    "ex24_case1",
    "ex24_case1b",
    "ex24_case2",
    "ex24_case3",
    "carpet32_uniform",
    "carpet32_weighted",
    "bm43",
    "full22_weighted",
    "mixed_explicit",
];

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(format!("{name}.json"))
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/goldens").join(format!("{name}.csv"))
}

pub fn load(name: &str) -> Config {
    let text = std::fs::read_to_string(corpus_path(name)).unwrap();
    parse_config(&text).unwrap()
}

pub fn system(name: &str) -> PatternSystem {
    load(name).system
}

pub fn sequence(name: &str) -> PatternSequence {
    load(name).realize().unwrap()
}

pub fn carpet() -> Pattern {
    Pattern::uniform("C", 3, 2, vec![(0, 0), (1, 1), (2, 0)])
}

pub fn diagonal() -> Pattern {
    Pattern::uniform("D", 2, 2, vec![(0, 0), (1, 1)])
}

/// `β_γ(t)` by bisection on the defining equation
/// `m^{-β} Σ p^t u^{1-ζ} = 1`, with `u(j) = q(j)^t / Σ_{row j} p^t`.
pub fn beta_gamma_oracle(p: &Pattern, t: f64, zeta: f64) -> f64 {
    let s = direct_sum(p, t, zeta);
    let m = p.m as f64;
    let f = |b: f64| m.powf(-b) * s - 1.0;
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `Σ_{(i,j)∈D} p^t u(j)^{1-ζ}` computed term by term.
pub fn direct_sum(p: &Pattern, t: f64, zeta: f64) -> f64 {
    let mut total = 0.0;
    for (d, &prob) in p.digits.iter().zip(&p.probs) {
        let j = d.1;
        let q: f64 = p.digits.iter().zip(&p.probs).filter(|(e, _)| e.1 == j).map(|(_, &x)| x).sum();
        let s: f64 = p
            .digits
            .iter()
            .zip(&p.probs)
            .filter(|(e, _)| e.1 == j)
            .map(|(_, &x)| x.powf(t))
            .sum();
        total += prob.powf(t) * (q.powf(t) / s).powf(1.0 - zeta);
    }
    total
}

/// The McMullen closed form, evaluated here from occupancy counts.
pub fn mcmullen(p: &Pattern) -> f64 {
    let (n, m) = (p.n as f64, p.m as f64);
    let mut total = 0.0;
    for j in 0..p.m {
        let r = p.digits.iter().filter(|d| d.1 == j).count() as f64;
        if r > 0.0 {
            total += r.powf(m.ln() / n.ln());
        }
    }
    total.ln() / m.ln()
}
