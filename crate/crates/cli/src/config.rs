//! Experiment configuration schema. Strict: unknown keys are rejected, and
//! parse errors carry the failing key path.

use std::path::Path;

use ngca_core::deflation::FullConfig;
use ngca_core::laws::NonGaussianLaw;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config invalid at `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("io error reading config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub instance: InstanceSpec,
    pub sampling: SamplingSpec,
    pub method: MethodSelector,
    #[serde(default)]
    pub solver: SolverOverrides,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub laws: Vec<LawSpec>,
    pub r: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub kind: LawKindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKindSpec {
    Uniform,
    LaplaceTruncated,
    TwoPointSmoothed,
    GaussianMixtureSymmetric,
    ExponentialTruncated,
}

impl LawSpec {
    pub fn build(&self) -> NonGaussianLaw {
        match self.kind {
            LawKindSpec::Uniform => NonGaussianLaw::uniform(),
            LawKindSpec::LaplaceTruncated => match self.param {
                Some(c) => NonGaussianLaw::laplace_truncated_at(c),
                None => NonGaussianLaw::laplace_truncated(),
            },
            LawKindSpec::TwoPointSmoothed => {
                NonGaussianLaw::two_point_smoothed(self.param.unwrap_or(0.2))
            }
            LawKindSpec::GaussianMixtureSymmetric => {
                NonGaussianLaw::gaussian_mixture_symmetric(self.param.unwrap_or(0.9))
            }
            LawKindSpec::ExponentialTruncated => match self.param {
                Some(c) => NonGaussianLaw::exponential_truncated_at(c),
                None => NonGaussianLaw::exponential_truncated(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSelector {
    EntropyDescent,
    Cumulant,
    Both,
}

/// Optional overrides of the solver defaults; anything absent keeps the
/// instance-calibrated default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_repeats: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts_per_level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_t_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accept_tangential: Option<bool>,
    /// Cumulant kernel threshold relative to the top eigenvalue.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_tol: Option<f64>,
    /// Cumulant tensor orders (subset of {3, 4}).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<usize>>,
    /// Moment-gap hint for external data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_hint: Option<f64>,
    /// Subgaussian hint for external data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_hint: Option<f64>,
}

impl SolverOverrides {
    pub fn apply(&self, mut cfg: FullConfig) -> FullConfig {
        if let Some(v) = self.eta {
            cfg.descent.eta = v;
        }
        if let Some(v) = self.eps1 {
            cfg.descent.eps1 = v;
        }
        if let Some(v) = self.eps2 {
            cfg.descent.eps2 = v;
        }
        if let Some(v) = self.max_iters {
            cfg.descent.max_iters = v;
        }
        if let Some(v) = self.fd_step_h {
            cfg.descent.fd_step_h = v;
        }
        if let Some(v) = self.grad_repeats {
            cfg.descent.grad_repeats = v;
        }
        if let Some(v) = self.restarts_per_level {
            cfg.restarts_per_level = v;
        }
        if let Some(v) = self.noise_t_prime {
            cfg.noise_t_prime = v;
        }
        if let Some(v) = self.accept_tangential {
            cfg.descent.accept_tangential = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["json".into(), "csv".into()]
}

/// Instance-generation spec (`ngca gen-instance`): the experiment config
/// without method/solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub schema_version: u32,
    pub instance: InstanceSpec,
    pub sampling: SamplingSpec,
    pub output: OutputSpec,
}

fn parse_strict<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Invalid {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ExperimentConfig = parse_strict(&text)?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::SchemaVersion(cfg.schema_version));
    }
    validate_instance(&cfg.instance)?;
    Ok(cfg)
}

pub fn load_gen_spec(path: &Path) -> Result<GenSpec, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let spec: GenSpec = parse_strict(&text)?;
    if spec.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::SchemaVersion(spec.schema_version));
    }
    validate_instance(&spec.instance)?;
    Ok(spec)
}

fn validate_instance(spec: &InstanceSpec) -> Result<(), ConfigError> {
    if spec.p + spec.laws.len() != spec.n {
        return Err(ConfigError::Invalid {
            path: "instance".into(),
            message: format!(
                "p + |laws| must equal n (p={}, laws={}, n={})",
                spec.p,
                spec.laws.len(),
                spec.n
            ),
        });
    }
    if spec.r < 3 || spec.r > 8 {
        return Err(ConfigError::Invalid {
            path: "instance.r".into(),
            message: "moment order r must be in 3..=8".into(),
        });
    }
    Ok(())
}

/// FNV-1a over the canonical config bytes; stamped into reports so a report
/// can be traced back to the exact configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
