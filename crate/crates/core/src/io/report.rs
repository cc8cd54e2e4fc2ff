//! The structured run report.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coding::{Coding, DEFAULT_ENUM_CAP};
use crate::conditions::{condition_report, ConditionReport, License};
use crate::empirics::{self, McStats, MomentCheck, PartitionResiduals};
use crate::error::Result;
use crate::io::config::Config;
use crate::patterns::{validate_system, Orientation, Severity, ValidationReport};
use crate::spectrum::{AlphaGrid, AlphaRange, SpectralModel, SpectrumSample};

pub const REPORT_SPECTRUM_STEPS: usize = 21;
pub const REPORT_MOMENT_TS: [f64; 4] = [-2.0, -1.0, 0.5, 2.0];
pub const REPORT_MC_TS: [f64; 3] = [0.0, 1.0, 2.0];
/// Largest enumeration depth and square count used by the report checks.
pub const REPORT_MAX_K: usize = 5;
pub const REPORT_MAX_SQUARES: u128 = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub mc_depth: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub enum_cap: u128,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            mc_depth: 200,
            mc_samples: 1000,
            seed: 0,
            enum_cap: DEFAULT_ENUM_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub partition: Option<PartitionResiduals>,
    pub moments: Vec<MomentCheck>,
    pub monte_carlo: Vec<McStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the configuration bytes, lowercase hex.
    pub input_digest: String,
    pub validation: ValidationReport,
    pub conditions: ConditionReport,
    pub zeta: f64,
    pub orientation: Orientation,
    pub alpha_range: AlphaRange,
    pub spectrum: Vec<SpectrumSample>,
    pub checks: EmpiricalSummary,
    pub warnings: Vec<String>,
}

pub fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Build the report for a validated configuration.
pub fn build_report(input: &[u8], cfg: &Config, opts: &ReportOptions) -> Result<RunReport> {
    let validation = validate_system(&cfg.system).into_result()?;
    let seq = cfg.realize()?;
    let conditions = condition_report(&cfg.system);
    let model = SpectralModel::new(&cfg.system);
    let alpha_range = model.alpha_range();

    let mut warnings: Vec<String> = validation
        .messages
        .iter()
        .filter(|m| m.severity == Severity::Warning)
        .map(|m| m.text.clone())
        .collect();
    if conditions.licensed == License::None {
        warnings.extend(conditions.notes.iter().filter(|n| n.contains("unproven")).cloned());
    }

    let spectrum = if alpha_range.is_degenerate() {
        warnings.push(format!(
            "degenerate spectrum: α_min = α_max = {}; no curve sampled",
            alpha_range.alpha_min
        ));
        Vec::new()
    } else {
        model.spectrum_curve(&AlphaGrid::new(REPORT_SPECTRUM_STEPS))?.samples
    };

    let (nseq, _) = empirics::normalized(&seq);
    let coding = Coding::new(nseq, REPORT_MAX_K);
    let cap = opts.enum_cap.min(REPORT_MAX_SQUARES);
    let mut k = REPORT_MAX_K;
    while k > 1 && coding.square_count(k)? > cap {
        k -= 1;
    }
    let (partition, moments) = if coding.square_count(k)? <= cap {
        let partition = empirics::partition_check(&seq, k, cap)?;
        let moments = REPORT_MOMENT_TS
            .iter()
            .map(|&t| empirics::moment_crosscheck(&seq, k, t, cap))
            .collect::<Result<Vec<_>>>()?;
        (Some(partition), moments)
    } else {
        warnings.push("enumeration checks skipped: level-1 square count exceeds the cap".into());
        (None, Vec::new())
    };
    let monte_carlo = if opts.mc_samples == 0 || opts.mc_depth == 0 {
        Vec::new()
    } else {
        REPORT_MC_TS
            .iter()
            .map(|&t| empirics::mc_local_dimension(&seq, t, opts.mc_depth, opts.mc_samples, opts.seed))
            .collect::<Result<Vec<_>>>()?
    };

    Ok(RunReport {
        tool: "moranfrac".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        input_digest: digest(input),
        validation,
        conditions,
        zeta: cfg.system.zeta(),
        orientation: model.orientation(),
        alpha_range,
        spectrum,
        checks: EmpiricalSummary {
            partition,
            moments,
            monte_carlo,
        },
        warnings,
    })
}

pub fn report_to_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
