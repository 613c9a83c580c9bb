//! `ngca` — configuration-driven experiment runner for non-Gaussian
//! component analysis: planted-instance generation, entropy-descent and
//! cumulant-kernel recovery, property suites, and CSV ingestion.
//!
//! Exit codes: 0 success, 2 invariant violation, 3 config error.

mod config;
mod props;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ngca_core::cumulant::{cumulant_kernel, write_spectrum_csv};
use ngca_core::deflation::{full_alg, FullConfig};
use ngca_core::descent::write_trace_points_csv;
use ngca_core::entropy::{default_config, relative_entropy_averaged};
use ngca_core::instance::{draw_samples, synthesize_instance, NgcaInstance};
use ngca_core::moments::{detect_gap, empirical_moments};
use ngca_core::sample::{isotropize, marginal, read_csv, write_binary, write_csv};
use ngca_core::subspace::UnitVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::{ExperimentConfig, MethodSelector};

#[derive(Parser)]
#[command(name = "ngca", version, about = "Non-Gaussian component analysis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config; writes report.json and CSVs.
    Run {
        config: PathBuf,
    },
    /// Run the seeded property suites (all, or a single named suite).
    Props {
        suite: Option<String>,
    },
    /// Generate a planted instance: samples (binary + CSV) and ground truth.
    GenInstance {
        spec: PathBuf,
    },
    /// Ingest a numeric CSV into the binary sample format.
    Ingest {
        csv: PathBuf,
        /// Center and whiten the ingested samples.
        #[arg(long)]
        whiten: bool,
        /// Skip the first line.
        #[arg(long)]
        has_header: bool,
        /// Output path (defaults to the input with extension .ngca).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => match cmd_run(&config) {
            Ok(ok) => {
                if ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => exit_for_error(e),
        },
        Command::Props { suite } => cmd_props(suite.as_deref()),
        Command::GenInstance { spec } => match cmd_gen(&spec) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => exit_for_error(e),
        },
        Command::Ingest { csv, whiten, has_header, output } => {
            match cmd_ingest(&csv, whiten, has_header, output) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => exit_for_error(e),
            }
        }
    }
}

fn exit_for_error(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    let config_like = e.downcast_ref::<config::ConfigError>().is_some()
        || matches!(
            e.downcast_ref::<ngca_core::sample::SampleError>(),
            Some(ngca_core::sample::SampleError::Parse { .. })
                | Some(ngca_core::sample::SampleError::BadFormat(_))
        );
    if config_like {
        ExitCode::from(3)
    } else {
        ExitCode::FAILURE
    }
}

fn effective_seed(config_seed: u64) -> u64 {
    match std::env::var("NGCA_SEED") {
        Ok(v) => v.parse().unwrap_or(config_seed),
        Err(_) => config_seed,
    }
}

fn build_instance(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<NgcaInstance> {
    let laws = cfg.instance.laws.iter().map(|l| l.build()).collect();
    synthesize_instance(cfg.instance.n, cfg.instance.p, laws, cfg.instance.r, rng)
        .context("instance synthesis")
}

fn cmd_run(path: &std::path::Path) -> Result<bool> {
    let cfg = config::load_experiment(path)?;
    let seed = effective_seed(cfg.sampling.seed);
    let paths = report::prepare_output(&cfg.output.dir)?;
    let started = Instant::now();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instance = build_instance(&cfg, &mut rng)?;
    let raw = draw_samples(&instance, cfg.sampling.n_samples, seed.wrapping_add(1));
    let (iso, _) = isotropize(&raw).context("isotropize")?;
    let truth_perp = instance.gamma_perp();
    report::write_subspace_csv(
        &report::basis_columns(&truth_perp),
        &paths.subspaces.join("truth_gamma_perp.csv"),
    )?;

    let d_hint = instance.moment_gap().unwrap_or(0.5);
    let k_hint = instance.subgaussian_k();
    let want_entropy =
        matches!(cfg.method, MethodSelector::EntropyDescent | MethodSelector::Both);
    let want_cumulant = matches!(cfg.method, MethodSelector::Cumulant | MethodSelector::Both);

    let mut entropy_report = None;
    let mut entropy_secs = None;
    if want_entropy {
        let t0 = Instant::now();
        let full_cfg: FullConfig = cfg
            .solver
            .apply(FullConfig::for_samples(iso.len(), d_hint, k_hint, cfg.instance.r));
        let result = full_alg(&iso, &full_cfg, &mut rng).context("entropy descent")?;
        if !result.check_invariants() {
            eprintln!("invariant violation: deflation result inconsistent");
            return Ok(false);
        }
        let mut trace_files = Vec::new();
        for level in &result.levels {
            let fname = format!("level_{:02}_entropy.csv", level.level);
            let gamma = (level.ambient_dim == instance.ambient_dim())
                .then_some(instance.gamma());
            write_trace_points_csv(&level.trace, &paths.traces.join(&fname), gamma)?;
            trace_files.push(format!("traces/{fname}"));
        }
        report::write_subspace_csv(
            &report::basis_columns(&result.nongaussian_subspace),
            &paths.subspaces.join("entropy_descent.csv"),
        )?;
        let (gap, s_along) = recovered_direction_diagnostics(&iso, &result.nongaussian_subspace, d_hint);
        entropy_report = Some(report::entropy_method_report(
            &result,
            &truth_perp,
            trace_files,
            gap,
            s_along,
        ));
        entropy_secs = Some(t0.elapsed().as_secs_f64());
    }

    let mut cumulant_report = None;
    let mut cumulant_secs = None;
    if want_cumulant {
        let t0 = Instant::now();
        let orders = cfg.solver.orders.clone().unwrap_or_else(|| vec![3, 4]);
        let tol = cfg.solver.kernel_tol.unwrap_or(0.05);
        let outcome = cumulant_kernel(&iso, &orders, tol).context("cumulant kernel")?;
        write_spectrum_csv(&outcome.report, &paths.dir.join("spectrum.csv"))?;
        let complement = ngca_core::subspace::orthogonal_complement(&outcome.gaussian);
        report::write_subspace_csv(
            &report::basis_columns(&complement),
            &paths.subspaces.join("cumulant.csv"),
        )?;
        let (gap, _) = recovered_direction_diagnostics(&iso, &complement, d_hint);
        cumulant_report = Some(report::cumulant_method_report(&outcome, &truth_perp, gap));
        cumulant_secs = Some(t0.elapsed().as_secs_f64());
    }

    let comparison = match (&entropy_report, &cumulant_report) {
        (Some(e), Some(c)) => {
            let preferred = match (e.distance_to_truth, c.distance_to_truth) {
                (Some(de), Some(dc)) => {
                    if de <= dc { "entropy_descent" } else { "cumulant" }
                }
                (Some(_), None) => "entropy_descent",
                (None, Some(_)) => "cumulant",
                (None, None) => "neither",
            };
            Some(report::Comparison {
                entropy_descent_distance: e.distance_to_truth,
                cumulant_distance: c.distance_to_truth,
                preferred: preferred.into(),
            })
        }
        _ => None,
    };

    let run_report = report::RunReport {
        schema_version: config::SCHEMA_VERSION,
        environment: report::hash_and_env(&cfg, seed),
        instance: report::instance_summary(&instance),
        entropy_descent: entropy_report,
        cumulant: cumulant_report,
        comparison,
        timing: serde_json::json!({
            "total_s": started.elapsed().as_secs_f64(),
            "entropy_descent_s": entropy_secs,
            "cumulant_s": cumulant_secs,
        }),
    };
    report::write_report(&run_report, &paths)?;
    let ok = report::audit_report(&run_report, &paths)?;
    if ok {
        println!("report written to {}", paths.report.display());
    }
    Ok(ok)
}

/// Moment-gap certificate and entropy estimate along the first recovered
/// non-Gaussian basis direction, when one exists.
fn recovered_direction_diagnostics(
    iso: &ngca_core::sample::SampleSet,
    recovered: &ngca_core::subspace::Subspace,
    d_hint: f64,
) -> (
    Option<ngca_core::moments::GapReport>,
    Option<ngca_core::entropy::EntropyEstimate>,
) {
    let Some(first) = recovered.basis_columns().first() else {
        return (None, None);
    };
    let Ok(u) = UnitVector::new(first.clone()) else {
        return (None, None);
    };
    let Ok(m) = marginal(iso, &u) else {
        return (None, None);
    };
    let mv = empirical_moments(&m, 6);
    let gap = detect_gap(&mv, d_hint);
    let cfg = default_config(m.len().max(1_000), 2.0, 0.1);
    let s = relative_entropy_averaged(&m, &cfg, 3).ok();
    (Some(gap), s)
}

fn cmd_props(which: Option<&str>) -> ExitCode {
    let results = match which {
        None => props::run_all(),
        Some(name) => match props::run_suite(name) {
            Some(r) => vec![r],
            None => {
                eprintln!(
                    "error: unknown suite `{name}`; available: {}",
                    props::SUITE_NAMES.join(", ")
                );
                return ExitCode::from(3);
            }
        },
    };
    let mut all_pass = true;
    for r in &results {
        println!("suite {:<26} {}  — {}", r.name, if r.pass { "PASS" } else { "FAIL" }, r.detail);
        all_pass &= r.pass;
    }
    if all_pass {
        println!("{} suite(s) passed", results.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn cmd_gen(path: &std::path::Path) -> Result<()> {
    let spec = config::load_gen_spec(path)?;
    let seed = effective_seed(spec.sampling.seed);
    let out = PathBuf::from(&spec.output.dir);
    std::fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let laws = spec.instance.laws.iter().map(|l| l.build()).collect();
    let instance = synthesize_instance(spec.instance.n, spec.instance.p, laws, spec.instance.r, &mut rng)
        .context("instance synthesis")?;
    let samples = draw_samples(&instance, spec.sampling.n_samples, seed.wrapping_add(1));
    write_binary(&samples, &out.join("samples.ngca"))?;
    if spec.output.formats.iter().any(|f| f == "csv") {
        write_csv(&samples, &out.join("samples.csv"))?;
    }
    report::write_subspace_csv(
        &report::basis_columns(&instance.gamma_perp()),
        &out.join("truth_gamma_perp.csv"),
    )?;
    let meta = serde_json::json!({
        "schema_version": config::SCHEMA_VERSION,
        "seed": seed,
        "n": instance.ambient_dim(),
        "p": instance.gaussian_dim(),
        "q": instance.nongaussian_dim(),
        "r": instance.moment_order(),
        "moment_gap": instance.moment_gap(),
        "subgaussian_k": instance.subgaussian_k(),
        "n_samples": samples.len(),
    });
    std::fs::write(out.join("meta.json"), format!("{}\n", serde_json::to_string_pretty(&meta)?))?;
    println!(
        "instance written to {} ({} samples, n={}, q={})",
        out.display(),
        samples.len(),
        instance.ambient_dim(),
        instance.nongaussian_dim()
    );
    Ok(())
}

fn cmd_ingest(
    csv: &std::path::Path,
    whiten: bool,
    has_header: bool,
    output: Option<PathBuf>,
) -> Result<()> {
    let set = read_csv(csv, has_header).context("reading csv")?;
    let set = if whiten {
        let (iso, _) = isotropize(&set).context("whitening")?;
        iso
    } else {
        set
    };
    let out = output.unwrap_or_else(|| csv.with_extension("ngca"));
    write_binary(&set, &out)?;
    println!(
        "ingested {} rows × {} columns{} -> {}",
        set.len(),
        set.ambient_dim(),
        if whiten { " (whitened)" } else { "" },
        out.display()
    );
    Ok(())
}
