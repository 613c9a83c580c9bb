//! Projected gradient descent on the unit sphere with the estimated relative
//! entropy of the 1-D marginal as the objective.
//!
//! The gradient is a central finite difference of the entropy estimate along
//! each coordinate, with common samples across all evaluations. A run
//! executes its full iteration budget and then applies the accept test
//! (gradient norm ≤ ε₁ and entropy ≤ ε₂) at the final iterate; a failed test
//! is a typed `Failure`, never a panic.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::entropy::{EntropyError, HistogramConfig};
#[cfg(test)]
use crate::entropy::relative_entropy_averaged;
use crate::sample::{SampleError, SampleSet};
#[cfg(test)]
use crate::sample::marginal_unnormalized;
use crate::subspace::{random_unit_vector, Subspace, UnitVector};

/// Two consecutive entropy rises must each exceed this before the step size
/// is halved; smaller wobble is estimator noise, not divergence.
const ETA_HALVING_GUARD: f64 = 5e-4;

#[derive(Debug, Error)]
pub enum DescentError {
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("degenerate step: u - eta*delta vanished")]
    DegenerateStep,
    #[error("invalid descent config: {0}")]
    BadConfig(String),
}

/// Step size, accept thresholds, iteration budget, and finite-difference
/// parameters for one descent run.
#[derive(Debug, Clone, Serialize)]
pub struct DescentConfig {
    /// Initial step size; halved after two consecutive significant entropy
    /// increases, floored at 1/256 of the initial value.
    pub eta: f64,
    /// Accept threshold on the estimated gradient norm.
    pub eps1: f64,
    /// Accept threshold on the estimated relative entropy.
    pub eps2: f64,
    pub max_iters: usize,
    /// Central-difference step h.
    pub fd_step_h: f64,
    /// Entropy estimates per evaluation, averaged over histogram phases.
    pub grad_repeats: usize,
    pub entropy_cfg: HistogramConfig,
    /// Accept on the tangential gradient norm ‖(I − uuᵀ)·∇̂S‖ instead of the
    /// full Euclidean norm. At wide finite-difference steps the Euclidean
    /// norm is dominated by a deterministic radial artifact of the
    /// variance-term asymmetry, which the sphere projection nullifies; the
    /// tangential norm is the quantity the step actually responds to.
    pub accept_tangential: bool,
}

impl DescentConfig {
    /// Defaults sized for a given sample count and subgaussian parameter.
    pub fn for_samples(n_samples: usize, subgaussian_k: f64) -> Self {
        Self {
            eta: 0.25,
            eps1: 0.01,
            eps2: 0.004,
            max_iters: 400,
            fd_step_h: 0.05,
            grad_repeats: 3,
            entropy_cfg: crate::entropy::default_config(n_samples, subgaussian_k, 0.1),
            accept_tangential: false,
        }
    }

    pub fn validate(&self) -> Result<(), DescentError> {
        if !(self.eta > 0.0 && self.eps1 > 0.0 && self.eps2 > 0.0) {
            return Err(DescentError::BadConfig("eta, eps1, eps2 must be positive".into()));
        }
        if !(self.fd_step_h > 1e-6 && self.fd_step_h < 0.5) {
            return Err(DescentError::BadConfig(format!(
                "fd_step_h {} outside (1e-6, 0.5)",
                self.fd_step_h
            )));
        }
        if self.max_iters == 0 || self.grad_repeats == 0 {
            return Err(DescentError::BadConfig("max_iters and grad_repeats must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentStatus {
    Success,
    Failure,
}

/// One recorded iterate of a descent run.
#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub iter: usize,
    pub grad_norm: f64,
    pub entropy: f64,
    /// The iterate itself, kept so callers with ground truth can audit the
    /// trajectory.
    pub direction: Vec<f64>,
}

/// Result of one descent run: accepted direction or typed failure, plus the
/// full per-iteration trace.
#[derive(Debug, Clone, Serialize)]
pub struct DescentOutcome {
    pub status: DescentStatus,
    pub direction: Option<UnitVector>,
    pub final_grad_norm: f64,
    pub final_entropy: f64,
    pub iterations_used: usize,
    pub trace: Vec<TracePoint>,
}

impl DescentOutcome {
    pub fn is_success(&self) -> bool {
        self.status == DescentStatus::Success
    }
}

/// Entropy of the marginal along a (possibly unnormalized) direction,
/// averaged over `repeats` histogram phases.
#[cfg(test)]
fn entropy_along(
    s: &SampleSet,
    dir: &[f64],
    cfg: &HistogramConfig,
    repeats: usize,
) -> Result<f64, DescentError> {
    let m = marginal_unnormalized(s, dir)?;
    Ok(relative_entropy_averaged(&m, cfg, repeats)?.value)
}

/// Column-major copy of the sample matrix, reused across descent iterations
/// so each probe marginal is a single saxpy over the base marginal:
/// ⟨x, u ± h·e_i⟩ = ⟨x, u⟩ ± h·x_i.
struct DescentEngine<'a> {
    cols: Vec<Vec<f64>>,
    n_samples: usize,
    cfg: &'a DescentConfig,
}

impl<'a> DescentEngine<'a> {
    fn new(s: &SampleSet, cfg: &'a DescentConfig) -> Self {
        let n = s.ambient_dim();
        let mut cols = vec![Vec::with_capacity(s.len()); n];
        for row in s.data().rows() {
            for (j, col) in cols.iter_mut().enumerate() {
                col.push(row[j]);
            }
        }
        Self { cols, n_samples: s.len(), cfg }
    }

    fn base_marginal(&self, u: &UnitVector) -> Vec<f64> {
        let mut m0 = vec![0.0f64; self.n_samples];
        for (col, &uj) in self.cols.iter().zip(u.coords()) {
            if uj != 0.0 {
                for (m, &c) in m0.iter_mut().zip(col) {
                    *m += uj * c;
                }
            }
        }
        m0
    }

    fn entropy(&self, m0: &[f64]) -> Result<f64, DescentError> {
        Ok(crate::entropy::relative_entropy_combination(
            m0,
            &self.cols[0],
            0.0,
            &self.cfg.entropy_cfg,
            self.cfg.grad_repeats,
        )?
        .value)
    }

    fn gradient(&self, m0: &[f64]) -> Result<Vec<f64>, DescentError> {
        let h = self.cfg.fd_step_h;
        let results: Vec<Result<f64, DescentError>> = (0..self.cols.len())
            .into_par_iter()
            .map(|i| {
                let sp = crate::entropy::relative_entropy_combination(
                    m0,
                    &self.cols[i],
                    h,
                    &self.cfg.entropy_cfg,
                    self.cfg.grad_repeats,
                )?
                .value;
                let sm = crate::entropy::relative_entropy_combination(
                    m0,
                    &self.cols[i],
                    -h,
                    &self.cfg.entropy_cfg,
                    self.cfg.grad_repeats,
                )?
                .value;
                Ok((sp - sm) / (2.0 * h))
            })
            .collect();
        results.into_iter().collect()
    }
}

/// Central-difference estimate of ∇_u S(⟨X, u⟩):
/// component i = [Ŝ(u + h·e_i) − Ŝ(u − h·e_i)] / (2h), common samples across
/// all 2n evaluations.
pub fn estimate_gradient(
    s: &SampleSet,
    u: &UnitVector,
    cfg: &DescentConfig,
) -> Result<Vec<f64>, DescentError> {
    cfg.validate()?;
    let n = s.ambient_dim();
    if u.dim() != n {
        return Err(DescentError::Sample(SampleError::DimensionMismatch {
            expected: n,
            got: u.dim(),
        }));
    }
    let engine = DescentEngine::new(s, cfg);
    let m0 = engine.base_marginal(u);
    engine.gradient(&m0)
}

/// One projected step: `u ← (u − η·Δ) / ‖u − η·Δ‖`.
pub fn projected_step(u: &UnitVector, delta: &[f64], eta: f64) -> Result<UnitVector, DescentError> {
    assert_eq!(u.dim(), delta.len());
    let moved: Vec<f64> = u
        .coords()
        .iter()
        .zip(delta)
        .map(|(x, d)| x - eta * d)
        .collect();
    let norm: f64 = moved.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 1e-12 {
        return Err(DescentError::DegenerateStep);
    }
    UnitVector::normalized(moved).map_err(|_| DescentError::DegenerateStep)
}

/// Run projected gradient descent from a random start.
///
/// Iterates for the full budget, then applies the accept conjunction at the
/// final point. `Success` therefore guarantees `final_grad_norm <= eps1` and
/// `final_entropy <= eps2`.
pub fn grad_des(
    s: &SampleSet,
    cfg: &DescentConfig,
    rng: &mut impl Rng,
) -> Result<DescentOutcome, DescentError> {
    cfg.validate()?;
    let n = s.ambient_dim();
    assert!(n >= 1, "descent needs ambient dimension >= 1");
    let engine = DescentEngine::new(s, cfg);
    let mut u = random_unit_vector(rng, n);
    let mut eta = cfg.eta;
    let eta_floor = cfg.eta / 256.0;
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    let mut prev_entropy: Option<f64> = None;
    let mut rising_streak = 0usize;

    for iter in 0..cfg.max_iters {
        let m0 = engine.base_marginal(&u);
        let grad = engine.gradient(&m0)?;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let entropy = engine.entropy(&m0)?;
        trace.push(TracePoint { iter, grad_norm, entropy, direction: u.coords().to_vec() });

        if let Some(prev) = prev_entropy {
            if entropy > prev + ETA_HALVING_GUARD {
                rising_streak += 1;
                if rising_streak >= 2 {
                    eta = (eta / 2.0).max(eta_floor);
                    rising_streak = 0;
                }
            } else {
                rising_streak = 0;
            }
        }
        prev_entropy = Some(entropy);

        u = projected_step(&u, &grad, eta)?;
    }

    let m0 = engine.base_marginal(&u);
    let final_grad = engine.gradient(&m0)?;
    let final_grad_norm = final_grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let final_entropy = engine.entropy(&m0)?;
    trace.push(TracePoint {
        iter: cfg.max_iters,
        grad_norm: final_grad_norm,
        entropy: final_entropy,
        direction: u.coords().to_vec(),
    });

    let accept_norm = if cfg.accept_tangential {
        let radial: f64 = final_grad.iter().zip(u.coords()).map(|(g, x)| g * x).sum();
        final_grad
            .iter()
            .zip(u.coords())
            .map(|(g, x)| (g - radial * x) * (g - radial * x))
            .sum::<f64>()
            .sqrt()
    } else {
        final_grad_norm
    };
    let accepted = accept_norm <= cfg.eps1 && final_entropy <= cfg.eps2;
    Ok(DescentOutcome {
        status: if accepted { DescentStatus::Success } else { DescentStatus::Failure },
        direction: accepted.then_some(u),
        // The norm the accept test used (tangential when so configured);
        // the trace keeps the raw Euclidean norms.
        final_grad_norm: accept_norm,
        final_entropy,
        iterations_used: cfg.max_iters,
        trace,
    })
}

/// Write a trace as CSV (`iter,grad_norm,entropy[,u_proj_gamma]`); the
/// projection column appears when ground truth is supplied.
pub fn write_trace_csv(
    outcome: &DescentOutcome,
    path: &Path,
    gamma: Option<&Subspace>,
) -> std::io::Result<()> {
    write_trace_points_csv(&outcome.trace, path, gamma)
}

/// CSV writer for a bare trace slice (used for per-level deflation traces).
pub fn write_trace_points_csv(
    trace: &[TracePoint],
    path: &Path,
    gamma: Option<&Subspace>,
) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    match gamma {
        Some(_) => writeln!(f, "iter,grad_norm,entropy,u_proj_gamma")?,
        None => writeln!(f, "iter,grad_norm,entropy")?,
    }
    for p in trace {
        match gamma {
            Some(g) => {
                let proj = crate::subspace::project(g, &p.direction)
                    .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
                    .unwrap_or(f64::NAN);
                writeln!(f, "{},{:.6e},{:.6e},{:.6e}", p.iter, p.grad_norm, p.entropy, proj)?;
            }
            None => writeln!(f, "{},{:.6e},{:.6e}", p.iter, p.grad_norm, p.entropy)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{draw_samples, synthesize_instance};
    use crate::laws::NonGaussianLaw;
    use crate::sample::isotropize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_set(n_rows: usize, n_cols: usize, seed: u64) -> SampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data =
            ndarray::Array2::from_shape_fn((n_rows, n_cols), |_| rng.sample(StandardNormal));
        SampleSet::new(data, seed)
    }

    #[test]
    fn projected_step_examples() {
        let u = UnitVector::new(vec![1.0, 0.0]).unwrap();
        // delta = 0: unchanged.
        let same = projected_step(&u, &[0.0, 0.0], 0.3).unwrap();
        assert_eq!(same.coords(), u.coords());
        // u=e1, delta=e2, eta=1: (e1 - e2)/√2.
        let stepped = projected_step(&u, &[0.0, 1.0], 1.0).unwrap();
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((stepped.coords()[0] - inv_sqrt2).abs() < 1e-12);
        assert!((stepped.coords()[1] + inv_sqrt2).abs() < 1e-12);
        // Random steps are unit norm.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u = random_unit_vector(&mut rng, 4);
            let delta: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            let eta: f64 = rng.random::<f64>();
            let out = projected_step(&u, &delta, eta).unwrap();
            let norm: f64 = out.coords().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        // Degenerate: step lands on the origin.
        let degenerate = projected_step(&u, &[1.0, 0.0], 1.0);
        assert!(matches!(degenerate, Err(DescentError::DegenerateStep)));
    }

    #[test]
    fn gradient_small_on_gaussian_data() {
        let s = gaussian_set(100_000, 5, 71);
        let cfg = DescentConfig::for_samples(s.len(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let u = random_unit_vector(&mut rng, 5);
        let g = estimate_gradient(&s, &u, &cfg).unwrap();
        let norm: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm <= 0.05, "gradient norm {norm} on pure-Gaussian data");
    }

    #[test]
    fn gradient_halving_self_consistency() {
        // ‖g(h) − g(h/2)‖ ≤ ‖g(h)‖/2 + 0.1 (second-order scaling of central
        // differences) on a planted instance.
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let inst =
            synthesize_instance(3, 2, vec![NonGaussianLaw::uniform()], 4, &mut rng).unwrap();
        let raw = draw_samples(&inst, 100_000, 74);
        let (s, _) = isotropize(&raw).unwrap();
        let u = random_unit_vector(&mut rng, 3);
        let cfg_h = DescentConfig { fd_step_h: 0.1, ..DescentConfig::for_samples(s.len(), 1.0) };
        let cfg_h2 = DescentConfig { fd_step_h: 0.05, ..cfg_h.clone() };
        let g1 = estimate_gradient(&s, &u, &cfg_h).unwrap();
        let g2 = estimate_gradient(&s, &u, &cfg_h2).unwrap();
        let n1: f64 = g1.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: f64 = g1
            .iter()
            .zip(&g2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff <= n1 / 2.0 + 0.1, "diff {diff}, n1 {n1}");
    }

    #[test]
    fn gradient_points_away_from_gaussian_subspace() {
        // 2-D instance, u near the planted uniform axis (tilted off the
        // apex, where the tangential gradient vanishes by symmetry): the
        // entropy decreases toward Γ, so the gradient must have negative
        // inner product with the tangent pointing at Γ.
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        let inst =
            synthesize_instance(2, 1, vec![NonGaussianLaw::uniform()], 4, &mut rng).unwrap();
        let raw = draw_samples(&inst, 100_000, 76);
        let (s, _) = isotropize(&raw).unwrap();
        // The non-Gaussian axis is rotation column 1; Γ is column 0.
        let axis: Vec<f64> = (0..2).map(|i| inst.rotation()[[i, 1]]).collect();
        let gamma_dir: Vec<f64> = (0..2).map(|i| inst.rotation()[[i, 0]]).collect();
        let u = UnitVector::normalized(
            axis.iter().zip(&gamma_dir).map(|(a, g)| a + 0.36 * g).collect(),
        )
        .unwrap();
        // Tangent at u pointing toward Γ.
        let along_u: f64 = gamma_dir.iter().zip(u.coords()).map(|(g, x)| g * x).sum();
        let toward_gamma: Vec<f64> = gamma_dir
            .iter()
            .zip(u.coords())
            .map(|(g, x)| g - along_u * x)
            .collect();
        let tg_norm: f64 = toward_gamma.iter().map(|x| x * x).sum::<f64>().sqrt();
        let toward_gamma: Vec<f64> = toward_gamma.iter().map(|x| x / tg_norm).collect();

        let cfg = DescentConfig::for_samples(s.len(), 1.0);
        let g = estimate_gradient(&s, &u, &cfg).unwrap();
        let along: f64 = g.iter().zip(&toward_gamma).map(|(a, b)| a * b).sum();
        // Entropy strictly decreases along the geodesic toward Γ.
        let s_here = entropy_along(&s, u.coords(), &cfg.entropy_cfg, 3).unwrap();
        let probe: Vec<f64> = u
            .coords()
            .iter()
            .zip(&toward_gamma)
            .map(|(x, t)| 0.9 * x + 0.45 * t)
            .collect();
        let s_there = entropy_along(&s, &probe, &cfg.entropy_cfg, 3).unwrap();
        assert!(s_there < s_here, "geodesic check: {s_there} !< {s_here}");
        assert!(along.abs() > 1e-4, "gradient should see the contrast");
        assert!(
            along < 0.0,
            "⟨g, toward Γ⟩ = {along}; negative means descent moves toward Γ"
        );
    }

    #[test]
    fn grad_des_gaussian_accepts_quickly() {
        // Pure Gaussian data: objective ≈ 0 everywhere, so even a 5-iteration
        // budget accepts.
        let s = gaussian_set(100_000, 5, 77);
        let cfg = DescentConfig { max_iters: 5, ..DescentConfig::for_samples(s.len(), 1.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let out = grad_des(&s, &cfg, &mut rng).unwrap();
        assert!(out.is_success(), "entropy {}, grad {}", out.final_entropy, out.final_grad_norm);
        assert!(out.final_entropy <= 0.03);
        assert!(out.iterations_used <= 5);
        // Accept soundness by construction.
        assert!(out.final_grad_norm <= cfg.eps1 && out.final_entropy <= cfg.eps2);
        assert_eq!(out.trace.len(), 6);
    }

    #[test]
    fn grad_des_all_nongaussian_fails() {
        // Both coordinates uniform: no Gaussian direction exists; the accept
        // test must reject (entropy stays above eps2 everywhere).
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let inst = synthesize_instance(
            2,
            0,
            vec![NonGaussianLaw::uniform(), NonGaussianLaw::uniform()],
            4,
            &mut rng,
        )
        .unwrap();
        let raw = draw_samples(&inst, 100_000, 80);
        let (s, _) = isotropize(&raw).unwrap();
        let cfg = DescentConfig { max_iters: 60, ..DescentConfig::for_samples(s.len(), 1.0) };
        let out = grad_des(&s, &cfg, &mut rng).unwrap();
        assert_eq!(out.status, DescentStatus::Failure);
        assert!(out.direction.is_none());
        assert!(out.final_entropy > cfg.eps2, "entropy {}", out.final_entropy);
    }

    #[test]
    fn grad_des_recovers_gaussian_direction_in_planted_instance() {
        // n=4, p=3, q=1 uniform: the accepted direction should lie mostly in
        // Γ. The flat entropy landscape near Γ needs a long, large-step run.
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let inst =
            synthesize_instance(4, 3, vec![NonGaussianLaw::uniform()], 4, &mut rng).unwrap();
        let raw = draw_samples(&inst, 200_000, 82);
        let (s, _) = isotropize(&raw).unwrap();
        let cfg = DescentConfig {
            eta: 1.0,
            max_iters: 2500,
            fd_step_h: 0.2,
            eps1: 0.02,
            ..DescentConfig::for_samples(s.len(), 1.0)
        };
        let out = grad_des(&s, &cfg, &mut rng).unwrap();
        assert!(out.is_success(), "entropy {}, grad {}", out.final_entropy, out.final_grad_norm);
        let u = out.direction.unwrap();
        let proj = crate::subspace::project(inst.gamma(), u.coords()).unwrap();
        let norm: f64 = proj.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm >= 0.95, "‖P_Γ u‖ = {norm}");
    }

    #[test]
    fn monotone_descent_modulo_noise() {
        // Significant entropy increases (> 2× noise scale) in ≤ 10% of steps.
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let inst =
            synthesize_instance(3, 2, vec![NonGaussianLaw::uniform()], 4, &mut rng).unwrap();
        let raw = draw_samples(&inst, 100_000, 84);
        let (s, _) = isotropize(&raw).unwrap();
        let cfg = DescentConfig { max_iters: 100, ..DescentConfig::for_samples(s.len(), 1.0) };
        let out = grad_des(&s, &cfg, &mut rng).unwrap();
        let rises = out
            .trace
            .windows(2)
            .filter(|w| w[1].entropy > w[0].entropy + 1e-3)
            .count();
        assert!(
            rises <= out.trace.len() / 10,
            "{rises} significant rises in {} steps",
            out.trace.len()
        );
    }

    #[test]
    fn low_gradient_iterates_have_low_entropy() {
        // Critical-point geometry: among iterates with a nontrivial Gaussian
        // projection (ratio >= 1/(2n²)), a small gradient norm co-occurs
        // with small entropy. Soft check: at most 5% violations.
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        let inst =
            synthesize_instance(3, 2, vec![NonGaussianLaw::uniform()], 4, &mut rng).unwrap();
        let raw = draw_samples(&inst, 100_000, 90);
        let (s, _) = isotropize(&raw).unwrap();
        let cfg = DescentConfig { max_iters: 120, ..DescentConfig::for_samples(s.len(), 1.0) };
        let n = 3.0f64;
        let entropy_cap = cfg.eps1 * n * n * 4.0; // measured constant C ≈ 4
        let mut eligible = 0usize;
        let mut violations = 0usize;
        for seed in 0..3u64 {
            let mut drng = ChaCha8Rng::seed_from_u64(900 + seed);
            let out = grad_des(&s, &cfg, &mut drng).unwrap();
            for p in &out.trace {
                let pg = crate::subspace::project(inst.gamma(), &p.direction).unwrap();
                let g_norm: f64 = pg.iter().map(|x| x * x).sum::<f64>().sqrt();
                let perp: f64 = (1.0 - g_norm * g_norm).max(0.0).sqrt();
                if g_norm / perp.max(1e-12) < 1.0 / (2.0 * n * n) {
                    continue;
                }
                if p.grad_norm <= cfg.eps1 {
                    eligible += 1;
                    if p.entropy > entropy_cap {
                        violations += 1;
                    }
                }
            }
        }
        assert!(eligible > 0, "descent should reach low-gradient iterates");
        assert!(
            violations * 20 <= eligible,
            "{violations}/{eligible} low-gradient iterates had high entropy"
        );
    }

    #[test]
    fn scale_projection_property() {
        // Renormalization never increases the objective: Ŝ(λ·marginal) ≥
        // Ŝ(marginal) − 2·noise for λ around 1 (20 directions, both scales).
        let s = gaussian_set(100_000, 4, 85);
        let cfg = DescentConfig::for_samples(s.len(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(86);
        for _ in 0..20 {
            let u = random_unit_vector(&mut rng, 4);
            let base = entropy_along(&s, u.coords(), &cfg.entropy_cfg, 3).unwrap();
            for lambda in [0.9f64, 1.1] {
                let scaled: Vec<f64> = u.coords().iter().map(|x| lambda * x).collect();
                let s_scaled = entropy_along(&s, &scaled, &cfg.entropy_cfg, 3).unwrap();
                assert!(
                    s_scaled >= base - 0.01,
                    "λ={lambda}: S(λW) = {s_scaled} < S(W) − slack = {}",
                    base - 0.01
                );
            }
        }
    }

    #[test]
    fn trace_csv_written() {
        let s = gaussian_set(5_000, 2, 87);
        let cfg = DescentConfig {
            max_iters: 3,
            entropy_cfg: crate::entropy::default_config(5_000, 1.0, 0.1),
            ..DescentConfig::for_samples(5_000, 1.0)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        let out = grad_des(&s, &cfg, &mut rng).unwrap();
        let dir = std::env::temp_dir().join("ngca_trace_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trace.csv");
        write_trace_csv(&out, &path, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("iter,grad_norm,entropy"));
        assert_eq!(text.lines().count(), out.trace.len() + 1);
    }
}
