//! Run reports: JSON summary plus CSV traces and subspace exports. The
//! report is deterministic given config + seed except for the `timing`
//! block, which consumers normalize before byte comparisons.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ngca_core::cumulant::CumulantKernelOutcome;
use ngca_core::deflation::NgcaResult;
use ngca_core::instance::NgcaInstance;
use ngca_core::moments::GapReport;
use ngca_core::subspace::{orthonormalize, subspace_distance, Subspace};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub environment: Environment,
    pub instance: InstanceSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_descent: Option<MethodReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cumulant: Option<MethodReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    /// Wall-clock seconds; excluded from the determinism contract.
    pub timing: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub version: String,
    pub config_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_gap: Option<f64>,
    pub subgaussian_k: f64,
    /// Ground truth, serialized so reports are self-auditing.
    pub gamma_perp_basis: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MethodReport {
    pub recovered_nongaussian_basis: Vec<Vec<f64>>,
    pub recovered_dim: usize,
    /// Defined when the recovered dimension matches the truth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_to_truth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<LevelSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_report: Option<GapReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_estimate_along_recovered: Option<ngca_core::entropy::EntropyEstimate>,
    pub trace_files: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub ambient_dim: usize,
    pub accepted: bool,
    pub restarts_used: usize,
    pub final_entropy: f64,
    pub final_grad_norm: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Comparison {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_descent_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cumulant_distance: Option<f64>,
    pub preferred: String,
}

pub struct OutputPaths {
    pub dir: PathBuf,
    pub report: PathBuf,
    pub traces: PathBuf,
    pub subspaces: PathBuf,
}

pub fn prepare_output(dir: &str) -> Result<OutputPaths> {
    let dir = PathBuf::from(dir);
    let traces = dir.join("traces");
    let subspaces = dir.join("subspaces");
    std::fs::create_dir_all(&traces).context("creating traces dir")?;
    std::fs::create_dir_all(&subspaces).context("creating subspaces dir")?;
    Ok(OutputPaths { report: dir.join("report.json"), dir, traces, subspaces })
}

pub fn instance_summary(inst: &NgcaInstance) -> InstanceSummary {
    InstanceSummary {
        n: inst.ambient_dim(),
        p: inst.gaussian_dim(),
        q: inst.nongaussian_dim(),
        r: inst.moment_order(),
        moment_gap: inst.moment_gap(),
        subgaussian_k: inst.subgaussian_k(),
        gamma_perp_basis: basis_columns(&inst.gamma_perp()),
    }
}

pub fn basis_columns(s: &Subspace) -> Vec<Vec<f64>> {
    s.basis_columns().to_vec()
}

pub fn write_subspace_csv(basis: &[Vec<f64>], path: &Path) -> Result<()> {
    let mut text = String::new();
    for col in basis {
        let line: Vec<String> = col.iter().map(|x| format!("{x:.16e}")).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_subspace_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut cols = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let col: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .context("parsing subspace csv")?;
        cols.push(col);
    }
    Ok(cols)
}

/// Distance between the recovered subspace and the truth, when ranks agree.
pub fn distance_if_comparable(recovered: &Subspace, truth: &Subspace) -> Option<f64> {
    if recovered.dim() != truth.dim() {
        return None;
    }
    subspace_distance(recovered, truth).ok()
}

pub fn entropy_method_report(
    result: &NgcaResult,
    truth_perp: &Subspace,
    trace_files: Vec<String>,
    gap_report: Option<GapReport>,
    entropy_along: Option<ngca_core::entropy::EntropyEstimate>,
) -> MethodReport {
    MethodReport {
        recovered_nongaussian_basis: basis_columns(&result.nongaussian_subspace),
        recovered_dim: result.nongaussian_subspace.dim(),
        distance_to_truth: distance_if_comparable(&result.nongaussian_subspace, truth_perp),
        levels: Some(
            result
                .levels
                .iter()
                .map(|l| LevelSummary {
                    level: l.level,
                    ambient_dim: l.ambient_dim,
                    accepted: l.accepted,
                    restarts_used: l.restarts_used,
                    final_entropy: l.final_entropy,
                    final_grad_norm: l.final_grad_norm,
                })
                .collect(),
        ),
        spectrum: None,
        gap_report,
        entropy_estimate_along_recovered: entropy_along,
        trace_files,
    }
}

pub fn cumulant_method_report(
    outcome: &CumulantKernelOutcome,
    truth_perp: &Subspace,
    gap_report: Option<GapReport>,
) -> MethodReport {
    let complement = ngca_core::subspace::orthogonal_complement(&outcome.gaussian);
    MethodReport {
        recovered_nongaussian_basis: basis_columns(&complement),
        recovered_dim: complement.dim(),
        distance_to_truth: distance_if_comparable(&complement, truth_perp),
        levels: None,
        spectrum: Some(outcome.report.eigvals.clone()),
        gap_report,
        entropy_estimate_along_recovered: None,
        trace_files: vec!["spectrum.csv".into()],
    }
}

/// Recompute every reported distance from the serialized subspace files and
/// compare to the report values; a mismatch beyond 1e-10 is an invariant
/// violation (exit code 2).
pub fn audit_report(report: &RunReport, paths: &OutputPaths) -> Result<bool> {
    let truth_cols = read_subspace_csv(&paths.subspaces.join("truth_gamma_perp.csv"))?;
    let n = report.instance.n;
    let truth = if truth_cols.is_empty() {
        Subspace::trivial(n)
    } else {
        orthonormalize(&truth_cols).context("truth basis")?
    };
    for (name, method) in [
        ("entropy_descent", report.entropy_descent.as_ref()),
        ("cumulant", report.cumulant.as_ref()),
    ] {
        let Some(m) = method else { continue };
        let Some(reported) = m.distance_to_truth else { continue };
        let cols = read_subspace_csv(&paths.subspaces.join(format!("{name}.csv")))?;
        let recovered = if cols.is_empty() {
            Subspace::trivial(n)
        } else {
            orthonormalize(&cols).context("recovered basis")?
        };
        let again = subspace_distance(&recovered, &truth).context("distance recompute")?;
        if (again - reported).abs() > 1e-10 {
            eprintln!(
                "invariant violation: {name} distance {reported} not reproducible from \
                 serialized subspaces (recomputed {again})"
            );
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn write_report(report: &RunReport, paths: &OutputPaths) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&paths.report, text).context("writing report.json")?;
    Ok(())
}

pub fn crate_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

pub fn hash_and_env(cfg: &ExperimentConfig, seed: u64) -> Environment {
    Environment {
        seed,
        version: crate_version(),
        config_hash: crate::config::config_hash(cfg),
    }
}
