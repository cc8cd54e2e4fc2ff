//! The `moranfrac` command line.
//!
//! Exit status: 0 on success, 1 on domain or invariant failures, 2 on usage
//! and parse failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::coding::{Coding, DEFAULT_ENUM_CAP};
use crate::conditions::{condition_report, ConditionReport, License};
use crate::empirics::{self, normalized};
use crate::error::{Error, Result};
use crate::io::{self, csv, raster, report, svg, Config, RenderMode};
use crate::patterns::{validate_system, Severity, ValidationReport};
use crate::spectrum::{AlphaGrid, SpectralModel};

pub const ENUM_CAP_VAR: &str = "MORANFRAC_ENUM_CAP";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Check the configuration and the separation conditions.
    Validate,
    /// Solve the Legendre spectrum on an α grid.
    Spectrum,
    /// Monte Carlo local dimensions under the tilted measure.
    Sample,
    /// List the depth-k approximate squares.
    Enumerate,
    /// Raster of the depth-k approximate squares.
    Render,
    /// Full structured run report.
    Report,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Pgm,
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "moranfrac", version, about = "Fine multifractal spectra of self-affine Moran measures")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Configuration document (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Lower end of the t window for `spectrum`.
    #[arg(long, allow_hyphen_values = true)]
    pub t_min: Option<f64>,
    /// Upper end of the t window for `spectrum`.
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    /// Number of α grid points (default 200).
    #[arg(long)]
    pub alpha_steps: Option<usize>,
    /// Level k (default depends on the command).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Tilt parameter for `sample`.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Render mode: set, measure or tilted:T.
    #[arg(long)]
    pub mode: Option<String>,
    /// Per-sample ratios CSV for `sample`.
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
    /// Histogram bins for `enumerate`; 0 lists squares instead.
    #[arg(long, default_value_t = 0)]
    pub bins: usize,
}

/// Run the command line and return the exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&args, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn enum_cap() -> Result<u128> {
    match std::env::var(ENUM_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{ENUM_CAP_VAR} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_ENUM_CAP),
    }
}

fn load(path: &Path) -> Result<(Vec<u8>, Config)> {
    let bytes = std::fs::read(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse(format!("config is not UTF-8: {e}")))?;
    let cfg = io::parse_config(text)?;
    Ok((bytes, cfg))
}

/// Parse and validate; an invalid system is an invariant failure.
fn load_valid(path: &Path) -> Result<(Vec<u8>, Config)> {
    let (bytes, cfg) = load(path)?;
    validate_system(&cfg.system).into_result()?;
    Ok((bytes, cfg))
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn positive(v: Option<usize>, default: usize, what: &str) -> Result<usize> {
    match v.unwrap_or(default) {
        0 => Err(Error::Usage(format!("{what} must be at least 1"))),
        n => Ok(n),
    }
}

fn dispatch(args: &Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match args.command {
        Command::Validate => cmd_validate(args, stdout),
        Command::Spectrum => cmd_spectrum(args, stdout, stderr),
        Command::Sample => cmd_sample(args, stdout),
        Command::Enumerate => cmd_enumerate(args, stdout),
        Command::Render => cmd_render(args, stdout, stderr),
        Command::Report => cmd_report(args, stdout),
    }
}

pub fn validation_text(v: &ValidationReport, c: Option<&ConditionReport>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "validation: {}", if v.ok { "ok" } else { "failed" });
    for m in &v.messages {
        let tag = match m.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        let _ = writeln!(s, "  [{tag}] {}", m.text);
    }
    if let Some(z) = v.zeta {
        let _ = writeln!(s, "zeta: {z:.6}");
    }
    if let Some(np) = v.n_plus {
        let _ = writeln!(s, "n_plus: {np}");
    }
    for o in &v.occupancy {
        let _ = writeln!(s, "occupancy `{}`: rows {:?}, cols {:?}", o.pattern, o.rows, o.cols);
    }
    if let Some(c) = c {
        for (name, check) in [("rsc", &c.rsc), ("tbsc", &c.tbsc), ("csc", &c.csc), ("lrsc", &c.lrsc), ("cor2", &c.cor2)] {
            let _ = writeln!(s, "{name}: {}", check.holds);
            for d in &check.details {
                let _ = writeln!(s, "  {d}");
            }
        }
        let _ = writeln!(s, "licensed: {}", c.licensed);
        for n in &c.notes {
            let _ = writeln!(s, "note: {n}");
        }
    }
    s
}

fn cmd_validate(args: &Args, stdout: &mut dyn Write) -> Result<i32> {
    let (_, cfg) = load(&args.config)?;
    let mut v = validate_system(&cfg.system);
    if v.ok {
        match cfg.realize() {
            Ok(seq) => {
                for m in seq.notes() {
                    v.push(m.severity, m.text);
                }
            }
            Err(e) => v.push(Severity::Error, e.to_string()),
        }
    }
    let conditions = v.ok.then(|| condition_report(&cfg.system));
    let format = args.format.unwrap_or(Format::Text);
    let body = match format {
        Format::Json => {
            let doc = serde_json::json!({ "validation": v, "conditions": conditions });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializes");
            s.push('\n');
            s
        }
        _ => validation_text(&v, conditions.as_ref()),
    };
    emit(args.out.as_deref(), stdout, body.as_bytes())?;
    Ok(if v.ok { 0 } else { 1 })
}

fn cmd_spectrum(args: &Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let (_, cfg) = load_valid(&args.config)?;
    if condition_report(&cfg.system).licensed == License::None {
        let _ = writeln!(stderr, "warning: unlicensed: spectrum formula unproven for this system");
    }
    let model = SpectralModel::new(&cfg.system);
    let mut grid = AlphaGrid::new(positive(args.alpha_steps, AlphaGrid::default().steps, "--alpha-steps")?);
    match (args.t_min, args.t_max) {
        (None, None) => {}
        (a, b) => grid = grid.with_t_range(a.unwrap_or(f64::NEG_INFINITY), b.unwrap_or(f64::INFINITY)),
    }
    let curve = model.spectrum_curve(&grid)?;
    let body = match args.format.unwrap_or(Format::Csv) {
        Format::Csv => csv::curve_to_csv(&curve),
        Format::Svg => svg::curve_to_svg(&curve),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&curve).expect("serializes");
            s.push('\n');
            s
        }
        f => return Err(Error::Usage(format!("spectrum cannot be written as {f:?}"))),
    };
    emit(args.out.as_deref(), stdout, body.as_bytes())?;
    Ok(0)
}

fn cmd_sample(args: &Args, stdout: &mut dyn Write) -> Result<i32> {
    let (_, cfg) = load_valid(&args.config)?;
    let seq = cfg.realize()?;
    let t = args.t.unwrap_or(1.0);
    if !t.is_finite() {
        return Err(Error::Usage("--t must be finite".into()));
    }
    let depth = positive(args.depth, 1000, "--depth")?;
    let samples = positive(args.samples, 10_000, "--samples")?;
    let seed = args.seed.unwrap_or(0);
    let ratios = empirics::mc_ratios(&seq, t, depth, samples, seed)?;
    let stats = empirics::summarize(&seq, t, depth, seed, &ratios);
    let mut body = serde_json::to_string_pretty(&stats).expect("serializes");
    body.push('\n');
    emit(args.out.as_deref(), stdout, body.as_bytes())?;
    if let Some(p) = &args.samples_csv {
        std::fs::write(p, csv::ratios_to_csv(&ratios))?;
    }
    Ok(0)
}

fn cmd_enumerate(args: &Args, stdout: &mut dyn Write) -> Result<i32> {
    let (_, cfg) = load_valid(&args.config)?;
    let seq = cfg.realize()?;
    let k = positive(args.depth, 3, "--depth")?;
    let cap = enum_cap()?;
    let mut s = String::new();
    if args.bins > 0 {
        let h = empirics::coarse_histogram(&seq, k, args.bins, cap)?;
        let _ = writeln!(s, "# coarse histogram diagnostic at k = {k}; not the fine spectrum");
        let _ = writeln!(s, "lo,hi,count,exponent");
        for (b, c) in h.counts.iter().enumerate() {
            let e = h.exponents[b].map(csv::fmt_f64).unwrap_or_default();
            let _ = writeln!(s, "{},{},{c},{e}", csv::fmt_f64(h.edges[b]), csv::fmt_f64(h.edges[b + 1]));
        }
    } else {
        let (nseq, model) = normalized(&seq);
        let coding = Coding::new(nseq, k);
        let l = coding.l_of_k(k)?;
        if model.was_transposed() {
            let _ = writeln!(s, "# orientation: transposed");
        }
        let _ = writeln!(s, "# k = {k}, l = {l}, count = {}", coding.square_count(k)?);
        let _ = writeln!(s, "i_part,j_part,x,y,log_mu");
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
        for a in coding.enumerate_squares(k, cap)? {
            let (x, y) = coding.cell(&a)?;
            let _ = writeln!(
                s,
                "{},{},{x},{y},{}",
                join(&a.i_part),
                join(&a.j_part),
                csv::fmt_f64(coding.log_mu_square(&a)?)
            );
        }
    }
    emit(args.out.as_deref(), stdout, s.as_bytes())?;
    Ok(0)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn cmd_render(args: &Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    if let Some(f) = args.format {
        if f != Format::Pgm {
            return Err(Error::Usage("render writes pgm only".into()));
        }
    }
    let (_, cfg) = load_valid(&args.config)?;
    let seq = cfg.realize()?;
    let k = positive(args.depth, 8, "--depth")?;
    let mode: RenderMode = args.mode.as_deref().unwrap_or("set").parse()?;
    let r = raster::render(&seq, k, mode, raster::DEFAULT_PIXEL_CAP, enum_cap()?)?;
    emit(args.out.as_deref(), stdout, &r.to_pgm())?;
    if let Some(out) = &args.out {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for p in &cfg.system.patterns {
            let path = out.with_file_name(format!("{stem}.pattern-{}.pgm", sanitize(&p.name)));
            std::fs::write(&path, raster::pattern_diagram(p, 16).to_pgm())?;
            let _ = writeln!(stderr, "wrote {}", path.display());
        }
    }
    Ok(0)
}

fn cmd_report(args: &Args, stdout: &mut dyn Write) -> Result<i32> {
    let (bytes, cfg) = load_valid(&args.config)?;
    let defaults = report::ReportOptions::default();
    let opts = report::ReportOptions {
        mc_depth: args.depth.unwrap_or(defaults.mc_depth),
        mc_samples: args.samples.unwrap_or(defaults.mc_samples),
        seed: args.seed.unwrap_or(defaults.seed),
        enum_cap: enum_cap()?,
    };
    let rep = report::build_report(&bytes, &cfg, &opts)?;
    emit(args.out.as_deref(), stdout, report::report_to_json(&rep).as_bytes())?;
    Ok(0)
}
