mod common;

use std::collections::BTreeSet;

use common::{direct_sum, mcmullen};
use moranfrac::coding::Coding;
use moranfrac::conditions::{check_cor2, check_csc, check_lrsc, check_rsc, check_tbsc};
use moranfrac::empirics::{moment_crosscheck, partition_check};
use moranfrac::io::csv::fmt_f64;
use moranfrac::io::{parse_config, serialize_config};
use moranfrac::patterns::{renormalize, validate_system, Frequency};
use moranfrac::{Pattern, PatternSequence, PatternSystem, SequenceMode, SpectralModel};
use proptest::prelude::*;
use proptest::sample::subsequence;

/// A valid pattern on an `n × m` grid with random positive probabilities.
fn pattern(name: &'static str) -> impl Strategy<Value = Pattern> {
    (2u32..=5, 2u32..=5)
        .prop_flat_map(|(n, m)| {
            let cells: Vec<(u32, u32)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
            let max = cells.len();
            (Just((n, m)), subsequence(cells, 2..=max.min(8)))
        })
        .prop_flat_map(|((n, m), digits)| {
            let len = digits.len();
            (Just((n, m, digits)), prop::collection::vec(1u32..=20, len))
        })
        .prop_map(move |((n, m, digits), weights)| {
            let total: u32 = weights.iter().sum();
            let mut probs: Vec<f64> = weights.iter().map(|&w| w as f64 / total as f64).collect();
            while renormalize(&mut probs).is_some() {}
            Pattern::new(name, n, m, digits, probs)
        })
}

fn frequencies(len: usize) -> impl Strategy<Value = Vec<Frequency>> {
    prop::collection::vec(1u64..=12, len).prop_map(|w| {
        let total: u64 = w.iter().sum();
        w.iter().map(|&x| Frequency::new(x, total)).collect()
    })
}

fn system() -> impl Strategy<Value = PatternSystem> {
    (pattern("A"), pattern("B"), pattern("C"), 1usize..=3).prop_flat_map(|(a, b, c, len)| {
        let pats: Vec<Pattern> = [a, b, c].into_iter().take(len).collect();
        frequencies(len).prop_map(move |f| PatternSystem::new(pats.clone(), f))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balanced_discrepancy_is_bounded(weights in prop::collection::vec(0u64..=9, 1..=5), den in 1u64..=50) {
        let total: u64 = weights.iter().sum();
        prop_assume!(total > 0);
        let pats: Vec<Pattern> = (0..weights.len())
            .map(|g| Pattern::uniform(format!("P{g}"), 2, 2, vec![(0, 0), (1, 1)]))
            .collect();
        let freqs: Vec<Frequency> = weights.iter().map(|&w| Frequency::new(w * den, total * den)).collect();
        let sys = PatternSystem::new(pats, freqs.clone());
        let seq = PatternSequence::balanced(&sys).unwrap();
        let card = weights.len() as f64;
        let mut counts = vec![0u64; weights.len()];
        for (n, g) in seq.iter().take(100_000).enumerate() {
            counts[g] += 1;
            let n = (n + 1) as f64;
            for (h, f) in freqs.iter().enumerate() {
                let exact = *f.numer() as f64 / *f.denom() as f64;
                prop_assert!((counts[h] as f64 - exact * n).abs() <= card);
            }
        }
    }

    #[test]
    fn config_round_trip(sys in system(), explicit in any::<bool>()) {
        let mode = if explicit {
            SequenceMode::Explicit { levels: sys.patterns.iter().rev().map(|p| p.name.clone()).collect() }
        } else {
            SequenceMode::Balanced
        };
        let text = serialize_config(&sys, &mode);
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(&cfg.system, &sys);
        prop_assert_eq!(&cfg.sequence, &mode);
        prop_assert_eq!(serialize_config(&cfg.system, &cfg.sequence), text);
    }

    #[test]
    fn transpose_is_an_involution(sys in system()) {
        prop_assert_eq!(sys.transpose().transpose(), sys.clone());
        prop_assert!(sys.zeta() > 0.0);
        prop_assert!((sys.zeta() * sys.transpose().zeta() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generated_systems_validate(sys in system()) {
        let v = validate_system(&sys);
        prop_assert!(v.ok, "{:?}", v.messages);
    }

    #[test]
    fn validation_rejects_each_violation(p in pattern("A"), kind in 0usize..6) {
        let mut q = p.clone();
        match kind {
            0 => q.n = 1,
            1 => { q.digits.truncate(1); q.probs = vec![1.0]; }
            2 => q.probs[0] = 0.0,
            3 => q.probs[0] += 0.01,
            4 => q.digits[0] = (q.n, 0),
            _ => q.digits[1] = q.digits[0],
        }
        prop_assert!(!validate_system(&PatternSystem::single(q)).ok);
        prop_assert!(validate_system(&PatternSystem::single(p)).ok);
    }

    #[test]
    fn spectral_identities(sys in system(), t in -8.0f64..8.0) {
        let model = SpectralModel::new(&sys);
        prop_assert!(model.beta(1.0).abs() < 1e-12);
        for (g, p) in model.system().patterns.iter().enumerate() {
            let b = model.beta_gamma(g, t);
            let r = (p.m as f64).powf(-b) * direct_sum(p, t, model.zeta()) - 1.0;
            prop_assert!(r.abs() < 1e-12, "residual {}", r);
            let tilt = model.tilt(t);
            prop_assert!((tilt.weights(g).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((tilt.row_sums(g).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((tilt.col_sums(g).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let h = 1e-5;
        let d = (model.beta(t + h) - model.beta(t - h)) / (2.0 * h);
        prop_assert!((model.alpha(t) + d).abs() < 1e-6);
        let second = model.beta(t + 0.1) - 2.0 * model.beta(t) + model.beta(t - 0.1);
        prop_assert!(second >= -1e-9);
        prop_assert!(model.alpha(t + 0.1) <= model.alpha(t) + 1e-12);
        let r = model.alpha_range();
        prop_assert!(model.alpha(t) >= r.alpha_min - 1e-12 && model.alpha(t) <= r.alpha_max + 1e-12);
    }

    #[test]
    fn legendre_is_concave(sys in system()) {
        let model = SpectralModel::new(&sys);
        prop_assume!(!model.alpha_range().is_degenerate());
        let curve = model.spectrum_curve(&moranfrac::AlphaGrid::new(40)).unwrap();
        let mut pts: Vec<(f64, f64)> = curve.samples.iter().map(|s| (s.alpha, s.h)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pts.windows(3) {
            prop_assert!(w[0].1 - 2.0 * w[1].1 + w[2].1 <= 1e-8);
        }
        let b0 = model.beta(0.0);
        prop_assert!(pts.iter().all(|p| p.1 <= b0 + 1e-8));
    }

    #[test]
    fn single_pattern_dimension(p in pattern("A")) {
        let model = SpectralModel::new(&PatternSystem::single(p));
        let upright = &model.system().patterns[0];
        prop_assert!((model.beta(0.0) - mcmullen(upright)).abs() < 1e-10);
    }

    #[test]
    fn partition_and_moments(sys in system(), k in 1usize..=4, t in -2.0f64..2.0) {
        let seq = PatternSequence::balanced(&sys).unwrap();
        let c = Coding::new(moranfrac::empirics::normalized(&seq).0, k);
        prop_assume!(c.square_count(k).unwrap() <= 20_000);
        let r = partition_check(&seq, k, 20_000).unwrap();
        prop_assert!(r.base < 1e-12 && r.tilted_max < 1e-12, "{:?}", r);
        let m = moment_crosscheck(&seq, k, t, 20_000).unwrap();
        prop_assert!(m.relative_gap < 1e-10, "{:?}", m);
    }

    #[test]
    fn condition_involutions(sys in system()) {
        prop_assert_eq!(check_csc(&sys), check_rsc(&sys.transpose()));
        prop_assert_eq!(check_lrsc(&sys), check_tbsc(&sys.transpose()));
    }

    #[test]
    fn cor2_ignores_digit_order(sys in system(), seed in any::<u64>()) {
        let mut shuffled = sys.clone();
        for (g, p) in shuffled.patterns.iter_mut().enumerate() {
            let n = p.digits.len();
            let shift = (seed as usize).wrapping_add(g) % n;
            p.digits.rotate_left(shift);
            p.probs.rotate_left(shift);
        }
        prop_assert_eq!(check_cor2(&sys).holds, check_cor2(&shuffled).holds);
    }

    #[test]
    fn squares_tile_disjointly(sys in system(), k in 1usize..=3) {
        let seq = PatternSequence::balanced(&sys).unwrap();
        let c = Coding::new(moranfrac::empirics::normalized(&seq).0, k);
        prop_assume!(c.square_count(k).unwrap() <= 20_000);
        let cells: Vec<_> = c.enumerate_squares(k, 20_000).unwrap().map(|a| c.cell(&a).unwrap()).collect();
        let unique: BTreeSet<_> = cells.iter().cloned().collect();
        prop_assert_eq!(unique.len(), cells.len());
    }

    #[test]
    fn csv_values_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
