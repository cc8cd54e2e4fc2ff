mod common;

use common::*;
use moranfrac::cli;
use moranfrac::io::csv::parse_curve_csv;
use moranfrac::io::report::RunReport;
use moranfrac::io::{raster, Raster, RenderMode};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["moranfrac"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}

fn cfg(name: &str) -> String {
    corpus_path(name).to_str().unwrap().to_owned()
}

#[test]
fn validate_reports_license_and_zeta() {
    let (code, out, _) = run(&["validate", "--config", &cfg("ex24_case3")]);
    assert_eq!(code, 0);
    assert!(out.contains("licensed: thm_mfa_via_RSC"), "{out}");
    assert!(out.contains("zeta: 0.860"), "{out}");
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(corpus_path("carpet32_uniform")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["patterns"][0]["probs"] = serde_json::json!([0.5, 0.5, 0.5]);
    std::fs::write(&bad, doc.to_string()).unwrap();
    let (code, out, _) = run(&["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("does not sum to 1"));

    let (code, _, err) = run(&["validate", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");

    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "{\"patterns\": [").unwrap();
    assert_eq!(run(&["validate", "--config", garbled.to_str().unwrap()]).0, 2);

    assert_eq!(run(&["frobnicate", "--config", "x"]).0, 2);
    assert_eq!(run(&["validate"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn spectrum_csv_contents() {
    let (code, out, _) = run(&["spectrum", "--config", &cfg("carpet32_uniform")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("t,beta,alpha,H\n"));
    let rows = parse_curve_csv(&out).unwrap();
    assert_eq!(rows.len(), 200);
    let near0 = rows.iter().min_by(|a, b| a.t.abs().total_cmp(&b.t.abs())).unwrap();
    assert!(near0.t.abs() < 0.05 && (near0.h - 1.3497).abs() < 1e-3, "{near0:?}");

    let (_, out, _) = run(&["spectrum", "--config", &cfg("bm43"), "--alpha-steps", "37"]);
    assert_eq!(parse_curve_csv(&out).unwrap().len(), 37);

    let (code, out, _) = run(&["spectrum", "--config", &cfg("ex24_case1b"), "--alpha-steps", "5"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# orientation: transposed"));
}

#[test]
fn spectrum_t_range_and_svg() {
    let (code, out, _) = run(&[
        "spectrum", "--config", &cfg("carpet32_weighted"), "--t-min", "-2", "--t-max", "3", "--alpha-steps", "11",
    ]);
    assert_eq!(code, 0);
    let rows = parse_curve_csv(&out).unwrap();
    assert!(rows.iter().all(|r| r.t >= -2.0 - 1e-9 && r.t <= 3.0 + 1e-9), "{rows:?}");
    let (code, svg, _) = run(&["spectrum", "--config", &cfg("carpet32_weighted"), "--format", "svg"]);
    assert_eq!(code, 0);
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    assert_eq!(svg, run(&["spectrum", "--config", &cfg("carpet32_weighted"), "--format", "svg"]).1);
    assert_eq!(run(&["spectrum", "--config", &cfg("carpet32_weighted"), "--t-min", "3", "--t-max", "1"]).0, 2);
}

#[test]
fn unlicensed_curve_is_still_emitted() {
    let (code, out, err) = run(&["spectrum", "--config", &cfg("mixed_explicit"), "--alpha-steps", "4"]);
    assert_eq!(code, 0);
    assert_eq!(parse_curve_csv(&out).unwrap().len(), 4);
    assert!(err.contains("unlicensed"));
    assert!(!run(&["spectrum", "--config", &cfg("ex24_case3")]).2.contains("unlicensed"));
}

#[test]
fn degenerate_spectrum_fails() {
    let (code, _, err) = run(&["spectrum", "--config", &cfg("diagonal")]);
    assert_eq!(code, 1);
    assert!(err.contains("degenerate spectrum: α_min = α_max = 1"), "{err}");
}

#[test]
fn sample_record_and_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc.json");
    let per = dir.path().join("mc.csv");
    let args = [
        "sample", "--config", &cfg("carpet32_uniform"), "--t", "1", "--depth", "300", "--samples", "400",
        "--seed", "9", "--out", out.to_str().unwrap(), "--samples-csv", per.to_str().unwrap(),
    ];
    assert_eq!(run(&args).0, 0);
    let first = (std::fs::read(&out).unwrap(), std::fs::read(&per).unwrap());
    assert_eq!(run(&args).0, 0);
    assert_eq!(first, (std::fs::read(&out).unwrap(), std::fs::read(&per).unwrap()));
    let rec: serde_json::Value = serde_json::from_slice(&first.0).unwrap();
    assert!((rec["target_alpha"].as_f64().unwrap() - 1.3389).abs() < 1e-4);
    assert_eq!(String::from_utf8(first.1).unwrap().lines().count(), 401);
    assert_eq!(run(&["sample", "--config", &cfg("carpet32_uniform"), "--samples", "0"]).0, 2);
}

#[test]
fn render_counts_and_diagrams() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("diag.pgm");
    let (code, _, _) = run(&["render", "--config", &cfg("diagonal"), "--depth", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = Raster::from_pgm(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!((r.width, r.height, r.filled()), (256, 256, 256));
    assert!(dir.path().join("diag.pattern-D.pgm").exists());

    let out = dir.path().join("carpet.pgm");
    let p = out.to_str().unwrap();
    assert_eq!(run(&["render", "--config", &cfg("carpet32_uniform"), "--depth", "4", "--out", p]).0, 0);
    let r = Raster::from_pgm(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!((r.width, r.height, r.filled()), (27, 16, 54));

    assert_eq!(run(&["render", "--config", &cfg("full22_weighted"), "--depth", "3", "--mode", "measure", "--out", p]).0, 0);
    let r = Raster::from_pgm(&std::fs::read(&out).unwrap()).unwrap();
    assert!(r.pixels.iter().collect::<std::collections::HashSet<_>>().len() > 2);
    // Uniform probabilities with l = k give equal masses.
    assert_eq!(run(&["render", "--config", &cfg("diagonal"), "--depth", "6", "--mode", "measure", "--out", p]).0, 0);
    let r = Raster::from_pgm(&std::fs::read(&out).unwrap()).unwrap();
    assert!(r.pixels.iter().all(|&v| v == 0 || v == 255));
    assert_eq!(r.filled(), 64);

    assert_eq!(run(&["render", "--config", &cfg("diagonal"), "--depth", "13", "--out", p]).0, 1);
    assert_eq!(run(&["render", "--config", &cfg("diagonal"), "--mode", "fuzzy", "--out", p]).0, 2);
}

#[test]
fn render_transposed_system_in_input_orientation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.pgm");
    let (code, _, err) = run(&["render", "--config", &cfg("ex24_case1b"), "--depth", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let r = Raster::from_pgm(&std::fs::read(&out).unwrap()).unwrap();
    let seq = sequence("ex24_case1b").transposed();
    let direct = raster::render(&seq, 2, RenderMode::Set, raster::DEFAULT_PIXEL_CAP, u128::MAX).unwrap();
    assert_eq!(r, direct.transposed());
    assert!(r.filled() > 0);
}

#[test]
fn enumerate_lists_and_caps() {
    let (code, out, _) = run(&["enumerate", "--config", &cfg("carpet32_uniform"), "--depth", "5"]);
    assert_eq!(code, 0);
    assert!(out.contains("count = 162"));
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 163);
    let (code, out, _) = run(&["enumerate", "--config", &cfg("carpet32_uniform"), "--depth", "8", "--bins", "6"]);
    assert_eq!(code, 0);
    assert!(out.contains("lo,hi,count,exponent"));
}

#[test]
fn report_contents() {
    let (code, out, _) = run(&["report", "--config", &cfg("ex24_case1"), "--depth", "50", "--samples", "50"]);
    assert_eq!(code, 0);
    let rep: RunReport = serde_json::from_str(&out).unwrap();
    assert!((rep.zeta - 0.9888).abs() < 5e-4);
    assert!(rep.conditions.tbsc.holds);
    assert_eq!(rep.spectrum.len(), 21);
    assert_eq!(rep.input_digest.len(), 64);
    assert_eq!(rep.checks.monte_carlo.len(), 3);
    let again: RunReport =
        serde_json::from_str(&run(&["report", "--config", &cfg("ex24_case1"), "--depth", "50", "--samples", "50"]).1)
            .unwrap();
    assert_eq!(rep.input_digest, again.input_digest);

    let (_, out, _) = run(&["report", "--config", &cfg("mixed_explicit"), "--depth", "20", "--samples", "20"]);
    let rep: RunReport = serde_json::from_str(&out).unwrap();
    assert!(rep.warnings.iter().any(|w| w.contains("spectrum formula unproven for this system")));

    let (code, out, _) = run(&["report", "--config", &cfg("diagonal"), "--depth", "20", "--samples", "20"]);
    assert_eq!(code, 0);
    let rep: RunReport = serde_json::from_str(&out).unwrap();
    assert!(rep.spectrum.is_empty());
}

#[test]
fn report_numbers_are_finite() {
    for name in CORPUS {
        let (code, out, err) = run(&["report", "--config", &cfg(name), "--depth", "30", "--samples", "30"]);
        assert_eq!(code, 0, "{name}: {err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        fn walk(v: &serde_json::Value, name: &str) {
            match v {
                serde_json::Value::Number(n) => assert!(n.as_f64().unwrap().is_finite(), "{name}"),
                serde_json::Value::Array(a) => a.iter().for_each(|x| walk(x, name)),
                serde_json::Value::Object(o) => o.values().for_each(|x| walk(x, name)),
                _ => {}
            }
        }
        walk(&v, name);
    }
}
