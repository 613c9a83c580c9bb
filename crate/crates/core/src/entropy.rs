//! Histogram estimation of the relative entropy of a 1-D marginal with
//! respect to the standard Gaussian, plus analytic oracles.
//!
//! The estimator truncates at ±A, buckets [−A, A] into width-B cells, and
//! returns `Σ (N_i/N)·log(N_i/(N·B))` as an estimate of `∫ f log f`. For a
//! mean-zero sample the relative entropy follows from the identity
//! `S(W) = ∫f log f + Var(W)/2 + log √(2π)`; the variance term uses the
//! untruncated sample so discretization error is not compounded.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laws::NonGaussianLaw;
use crate::quad;
use crate::stats::gauss_cdf;

const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("need at least 100 samples (got {0})")]
    TooFewSamples(usize),
    #[error("no samples inside the truncation window [-{0}, {0}]")]
    AllSamplesTruncated(f64),
    #[error("sample variance {0:.4} outside [0.25, 4]; input does not look normalized")]
    VarianceOutOfRange(f64),
    #[error("non-finite sample encountered")]
    NonFiniteSample,
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] quad::QuadError),
    #[error("invalid histogram config: {0}")]
    BadConfig(String),
}

/// Truncation and bucketing parameters of the histogram estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    /// Integrate over [−A, A]; samples outside are discarded.
    pub truncation_a: f64,
    /// Bucket width B.
    pub bucket_width: f64,
    /// Buckets with fewer samples than this contribute zero to the sum
    /// (the 0·log 0 := 0 continuous extension; default 1 drops only empties).
    pub min_count_floor: usize,
}

impl HistogramConfig {
    pub fn new(truncation_a: f64, bucket_width: f64, min_count_floor: usize) -> Result<Self, EntropyError> {
        if truncation_a.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
            || bucket_width.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        {
            return Err(EntropyError::BadConfig("A and B must be positive".into()));
        }
        if truncation_a / bucket_width > 1e7 {
            return Err(EntropyError::BadConfig(format!(
                "bucket count guard exceeded: A/B = {:.3e}",
                truncation_a / bucket_width
            )));
        }
        Ok(Self { truncation_a, bucket_width, min_count_floor })
    }

    fn bucket_count(&self) -> usize {
        (2.0 * self.truncation_a / self.bucket_width).ceil() as usize + 2
    }
}

/// Practical defaults: `A = K·√(2·log N) + 2` (subgaussian tails truncated to
/// ≈2/N mass), `B = N^{−1/3}` clipped to [1e−4, 0.2], floor 1.
///
/// The noise level `t` of the smoothed variable is accepted for interface
/// completeness; the desk-scale defaults do not depend on it.
pub fn default_config(n_samples: usize, subgaussian_k: f64, t: f64) -> HistogramConfig {
    assert!(n_samples >= 1_000, "defaults are calibrated for N >= 1e3");
    assert!(subgaussian_k >= 1.0);
    assert!((0.0..1.0).contains(&t));
    let a = subgaussian_k * (2.0 * (n_samples as f64).ln()).sqrt() + 2.0;
    let b = (n_samples as f64).powf(-1.0 / 3.0).clamp(1e-4, 0.2);
    HistogramConfig { truncation_a: a, bucket_width: b, min_count_floor: 1 }
}

fn histogram_counts(samples: &[f64], cfg: &HistogramConfig, origin_shift: f64) -> (Vec<u32>, u64) {
    let nb = cfg.bucket_count();
    let mut counts = vec![0u32; nb];
    let mut kept = 0u64;
    let a = cfg.truncation_a;
    let b = cfg.bucket_width;
    for &x in samples {
        if x.abs() <= a {
            let idx = ((x + a - origin_shift) / b).floor() as i64 + 1;
            let idx = idx.clamp(0, nb as i64 - 1) as usize;
            counts[idx] += 1;
            kept += 1;
        }
    }
    (counts, kept)
}

fn plogp_from_counts(counts: &[u32], kept: u64, total: u64, cfg: &HistogramConfig) -> f64 {
    debug_assert!(kept > 0);
    let n = total as f64;
    let b = cfg.bucket_width;
    let floor = cfg.min_count_floor.max(1) as u32;
    let mut acc = 0.0;
    for &c in counts {
        if c >= floor {
            let p = c as f64 / n;
            acc += p * (p / b).ln();
        }
    }
    acc
}

/// Histogram estimate of `∫ f log f` over [−A, A]:
/// `Σ over populated buckets of (N_i/N)·log(N_i/(N·B))`.
pub fn estimate_plogp(samples: &[f64], cfg: &HistogramConfig) -> Result<f64, EntropyError> {
    estimate_plogp_averaged(samples, cfg, 1)
}

/// Same estimator averaged over `repeats` bucket-origin shifts (0, B/m, …,
/// (m−1)B/m). Averaging over grid phases cancels most of the discretization
/// sawtooth without touching the per-phase estimator; repeats share the
/// sample set, so the result is deterministic.
pub fn estimate_plogp_averaged(
    samples: &[f64],
    cfg: &HistogramConfig,
    repeats: usize,
) -> Result<f64, EntropyError> {
    if samples.len() < 100 {
        return Err(EntropyError::TooFewSamples(samples.len()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(EntropyError::NonFiniteSample);
    }
    let repeats = repeats.max(1);
    let mut acc = 0.0;
    for j in 0..repeats {
        let shift = cfg.bucket_width * j as f64 / repeats as f64;
        let (counts, kept) = histogram_counts(samples, cfg, shift);
        if kept == 0 {
            return Err(EntropyError::AllSamplesTruncated(cfg.truncation_a));
        }
        acc += plogp_from_counts(&counts, kept, samples.len() as u64, cfg);
    }
    Ok(acc / repeats as f64)
}

/// One-pass estimator core: streams `value_at(i)`, accumulating variance and
/// a fine histogram of width B/repeats from which every phase-shifted coarse
/// histogram is assembled exactly (floor((⌊y⌋−j)/m) = floor((y−j)/m) for
/// integer j). Avoids materializing the marginal and rescanning per phase.
fn fused_estimate(
    value_at: impl Fn(usize) -> f64,
    n: usize,
    cfg: &HistogramConfig,
    repeats: usize,
) -> Result<EntropyEstimate, EntropyError> {
    if n < 100 {
        return Err(EntropyError::TooFewSamples(n));
    }
    let repeats = repeats.max(1);
    let a = cfg.truncation_a;
    let b = cfg.bucket_width;
    let inv_bf = repeats as f64 / b;
    let n_fine = (2.0 * a * inv_bf).ceil() as usize + 2 * repeats + 4;
    let mut fine = vec![0u32; n_fine];
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    let mut kept = 0u64;
    for i in 0..n {
        let x = value_at(i);
        if !x.is_finite() {
            return Err(EntropyError::NonFiniteSample);
        }
        sum += x;
        sumsq += x * x;
        if x.abs() <= a {
            let idx = (((x + a) * inv_bf) as usize).min(n_fine - 1);
            fine[idx] += 1;
            kept += 1;
        }
    }
    let mean = sum / n as f64;
    let var = (sumsq / n as f64 - mean * mean).max(0.0);
    if !(0.25..=4.0).contains(&var) {
        return Err(EntropyError::VarianceOutOfRange(var));
    }
    if kept == 0 {
        return Err(EntropyError::AllSamplesTruncated(a));
    }
    let floor = cfg.min_count_floor.max(1) as u32;
    let nf = n as f64;
    let mut raw_acc = 0.0;
    for j in 0..repeats {
        // Coarse bucket i of phase j covers fine[i·repeats + j, (i+1)·repeats + j);
        // fine indices below j form the phase's clipped leading bucket.
        let mut phase_sum = 0.0;
        let mut bucket_count = 0u32;
        let mut consumed = 0usize;
        let lead = j.min(n_fine);
        for &c in &fine[..lead] {
            bucket_count += c;
        }
        let flush = |count: u32, acc: &mut f64| {
            if count >= floor {
                let p = count as f64 / nf;
                *acc += p * (p / b).ln();
            }
        };
        flush(bucket_count, &mut phase_sum);
        bucket_count = 0;
        for &c in &fine[lead..] {
            bucket_count += c;
            consumed += 1;
            if consumed == repeats {
                flush(bucket_count, &mut phase_sum);
                bucket_count = 0;
                consumed = 0;
            }
        }
        flush(bucket_count, &mut phase_sum);
        raw_acc += phase_sum;
    }
    let raw = raw_acc / repeats as f64;
    Ok(EntropyEstimate {
        value: raw + var / 2.0 + LOG_SQRT_2PI,
        raw_integral: raw,
        sample_variance: var,
        config: *cfg,
        n,
    })
}

/// Relative entropy of the marginal `base + scale·col` without materializing
/// it; the workhorse of the gradient probes.
pub fn relative_entropy_combination(
    base: &[f64],
    col: &[f64],
    scale: f64,
    cfg: &HistogramConfig,
    repeats: usize,
) -> Result<EntropyEstimate, EntropyError> {
    assert_eq!(base.len(), col.len());
    if scale == 0.0 {
        fused_estimate(|i| base[i], base.len(), cfg, repeats)
    } else {
        fused_estimate(|i| base[i] + scale * col[i], base.len(), cfg, repeats)
    }
}

/// A relative entropy estimate plus the configuration that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Estimated S: relative entropy against the standard Gaussian.
    pub value: f64,
    /// The histogram estimate of ∫ f log f.
    pub raw_integral: f64,
    /// Empirical variance of the (untruncated) input sample.
    pub sample_variance: f64,
    pub config: HistogramConfig,
    pub n: usize,
}

/// Estimate the relative entropy of a mean-zero, roughly unit-variance 1-D
/// sample: `value = ∫f log f + Var/2 + log √(2π)`.
pub fn relative_entropy(samples: &[f64], cfg: &HistogramConfig) -> Result<EntropyEstimate, EntropyError> {
    relative_entropy_averaged(samples, cfg, 1)
}

/// [`relative_entropy`] with phase-averaged bucket origins (see
/// [`estimate_plogp_averaged`]).
pub fn relative_entropy_averaged(
    samples: &[f64],
    cfg: &HistogramConfig,
    repeats: usize,
) -> Result<EntropyEstimate, EntropyError> {
    fused_estimate(|i| samples[i], samples.len(), cfg, repeats)
}

/// Total-variation distance between the sample histogram and the standard
/// Gaussian, over the same buckets (tail masses on both sides included).
pub fn histogram_tv_distance(samples: &[f64], cfg: &HistogramConfig) -> Result<f64, EntropyError> {
    if samples.len() < 100 {
        return Err(EntropyError::TooFewSamples(samples.len()));
    }
    let (counts, kept) = histogram_counts(samples, cfg, 0.0);
    if kept == 0 {
        return Err(EntropyError::AllSamplesTruncated(cfg.truncation_a));
    }
    let n = samples.len() as f64;
    let a = cfg.truncation_a;
    let b = cfg.bucket_width;
    let mut acc = 0.0;
    let mut gauss_mass_inside = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let lo = (-a + (i as f64 - 1.0) * b).max(-a);
        let hi = (lo + b).min(a);
        if hi <= lo {
            continue;
        }
        let q = gauss_cdf(hi) - gauss_cdf(lo);
        gauss_mass_inside += q;
        acc += (c as f64 / n - q).abs();
    }
    let p_outside = 1.0 - kept as f64 / n;
    let q_outside = (1.0 - gauss_mass_inside).max(0.0);
    Ok(0.5 * (acc + p_outside + q_outside))
}

/// Target of the analytic relative-entropy oracle.
pub enum AnalyticTarget<'a> {
    /// λ·Z for λ > 0: closed form −log λ + (λ²−1)/2.
    ScaledGaussian(f64),
    /// A menu law: adaptive quadrature of ∫ f log(f/g) to 1e-8.
    Law(&'a NonGaussianLaw),
}

/// Analytic relative entropy with respect to the standard Gaussian.
pub fn analytic_relative_entropy(target: AnalyticTarget<'_>) -> Result<f64, EntropyError> {
    match target {
        AnalyticTarget::ScaledGaussian(lambda) => {
            assert!(lambda > 0.0);
            Ok(-lambda.ln() + (lambda * lambda - 1.0) / 2.0)
        }
        AnalyticTarget::Law(law) => {
            let (lo, hi) = law.quad_range();
            let integrand = |x: f64| {
                let f = law.density(x);
                if f <= 0.0 {
                    0.0
                } else {
                    f * (f.ln() + 0.5 * x * x + LOG_SQRT_2PI)
                }
            };
            Ok(quad::integrate_piecewise(integrand, lo, hi, &law.knots(), 1e-8)?)
        }
    }
}

/// Relative entropy of λ·Z by direct quadrature of the scaled-Gaussian
/// density; an independent route used to cross-check the closed form.
pub fn scaled_gaussian_relative_entropy_quadrature(lambda: f64) -> Result<f64, EntropyError> {
    assert!(lambda > 0.0);
    let range = 14.0 * lambda.max(1.0);
    let integrand = move |x: f64| {
        let f = (-0.5 * (x / lambda) * (x / lambda)).exp()
            / (lambda * (2.0 * std::f64::consts::PI).sqrt());
        if f <= 0.0 {
            0.0
        } else {
            f * (f.ln() + 0.5 * x * x + LOG_SQRT_2PI)
        }
    };
    Ok(quad::integrate(integrand, -range, range, 1e-9)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::NonGaussianLaw;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn uniform_samples(n: usize, seed: u64) -> Vec<f64> {
        let law = NonGaussianLaw::uniform();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| law.sample(&mut rng)).collect()
    }

    #[test]
    fn config_guards() {
        assert!(HistogramConfig::new(0.0, 0.1, 1).is_err());
        assert!(HistogramConfig::new(8.0, -0.1, 1).is_err());
        assert!(HistogramConfig::new(1e6, 1e-4, 1).is_err()); // A/B = 1e10
        assert!(HistogramConfig::new(8.0, 0.05, 1).is_ok());
    }

    #[test]
    fn default_config_reference_points() {
        // N=1e5, K=1: A = √(2·ln 1e5) + 2 ≈ 6.80, B = 1e5^{-1/3}.
        let cfg = default_config(100_000, 1.0, 0.3);
        assert!((cfg.truncation_a - 6.7985).abs() < 0.05, "A = {}", cfg.truncation_a);
        assert!((cfg.bucket_width - 0.021544).abs() < 1e-5, "B = {}", cfg.bucket_width);
        // N=1e3: B = 0.1 exactly, A ≈ 5.7.
        let cfg = default_config(1_000, 1.0, 0.3);
        assert!((cfg.bucket_width - 0.1).abs() < 1e-12);
        assert!((cfg.truncation_a - 5.717).abs() < 0.05);
        // K=3, N=1e6: wide subgaussian tails covered, A ≈ 17.8.
        let cfg = default_config(1_000_000, 3.0, 0.3);
        assert!((cfg.truncation_a - 17.77).abs() < 0.1);
        assert_eq!(cfg.min_count_floor, 1);
    }

    #[test]
    fn plogp_degenerate_single_bucket() {
        // All samples identical: single bucket, estimate = -log B.
        let samples = vec![0.01; 500];
        let cfg = HistogramConfig::new(1.0, 0.05, 1).unwrap();
        let v = estimate_plogp(&samples, &cfg).unwrap();
        assert!((v - (1.0 / 0.05f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn plogp_gaussian_matches_negative_differential_entropy() {
        // ∫ g log g = −½log(2πe) ≈ −1.4189.
        let samples = gaussian_samples(100_000, 41);
        let cfg = HistogramConfig::new(8.0, 0.05, 1).unwrap();
        let v = estimate_plogp(&samples, &cfg).unwrap();
        assert!((v + 1.418_938_5).abs() <= 0.02, "plogp = {v}");
    }

    #[test]
    fn plogp_uniform_matches_analytic() {
        // ∫ f log f = −log(2√3) ≈ −1.2425 for the unit-variance uniform.
        let samples = uniform_samples(100_000, 43);
        let cfg = HistogramConfig::new(8.0, 0.05, 1).unwrap();
        let v = estimate_plogp(&samples, &cfg).unwrap();
        assert!((v + 1.242_453_3).abs() <= 0.02, "plogp = {v}");
    }

    #[test]
    fn plogp_guards() {
        let cfg = HistogramConfig::new(8.0, 0.05, 1).unwrap();
        assert!(matches!(
            estimate_plogp(&[0.0; 50], &cfg),
            Err(EntropyError::TooFewSamples(50))
        ));
        let far = vec![100.0; 500];
        assert!(matches!(
            estimate_plogp(&far, &cfg),
            Err(EntropyError::AllSamplesTruncated(_))
        ));
    }

    #[test]
    fn relative_entropy_gaussian_near_zero() {
        let samples = gaussian_samples(100_000, 47);
        let cfg = default_config(samples.len(), 1.0, 0.1);
        let est = relative_entropy(&samples, &cfg).unwrap();
        assert!(est.value.abs() <= 0.02, "S = {}", est.value);
        // Conversion identity is exact arithmetic.
        let recon = est.raw_integral + est.sample_variance / 2.0 + LOG_SQRT_2PI;
        assert_eq!(est.value, recon);
    }

    #[test]
    fn relative_entropy_uniform_reference() {
        let samples = uniform_samples(100_000, 53);
        let cfg = default_config(samples.len(), 1.0, 0.1);
        let est = relative_entropy(&samples, &cfg).unwrap();
        assert!((est.value - 0.176_485_2).abs() <= 0.03, "S = {}", est.value);
    }

    #[test]
    fn relative_entropy_variance_guard() {
        let samples: Vec<f64> = gaussian_samples(10_000, 59).iter().map(|x| 10.0 * x).collect();
        assert!(matches!(
            relative_entropy(&samples, &default_config(10_000, 1.0, 0.1)),
            Err(EntropyError::VarianceOutOfRange(_))
        ));
    }

    #[test]
    fn nonnegativity_over_seeds() {
        // 50 seeded Gaussian runs at N=1e5: mean |S| ≤ 0.01, max ≤ 0.03.
        let cfg = default_config(100_000, 1.0, 0.1);
        let mut sum_abs = 0.0;
        let mut max_abs = 0.0f64;
        for seed in 0..50u64 {
            let samples = gaussian_samples(100_000, 1000 + seed);
            let est = relative_entropy(&samples, &cfg).unwrap();
            sum_abs += est.value.abs();
            max_abs = max_abs.max(est.value.abs());
            assert!(est.value >= -0.05);
        }
        assert!(sum_abs / 50.0 <= 0.01, "mean |S| = {}", sum_abs / 50.0);
        assert!(max_abs <= 0.03, "max |S| = {max_abs}");
    }

    #[test]
    fn analytic_scaled_gaussian() {
        assert_eq!(analytic_relative_entropy(AnalyticTarget::ScaledGaussian(1.0)).unwrap(), 0.0);
        let s2 = analytic_relative_entropy(AnalyticTarget::ScaledGaussian(2.0)).unwrap();
        assert!((s2 - 0.806_852_819_440_054_7).abs() < 1e-12);
        // Cross-check against the independent quadrature route.
        for lambda in [0.5, 1.0, 2.0] {
            let closed =
                analytic_relative_entropy(AnalyticTarget::ScaledGaussian(lambda)).unwrap();
            let quadded = scaled_gaussian_relative_entropy_quadrature(lambda).unwrap();
            assert!(
                (closed - quadded).abs() < 1e-6,
                "λ={lambda}: closed {closed} vs quad {quadded}"
            );
        }
    }

    #[test]
    fn analytic_uniform_entropy() {
        let law = NonGaussianLaw::uniform();
        let s = analytic_relative_entropy(AnalyticTarget::Law(&law)).unwrap();
        // −log(2√3) + 1/2 + log √(2π)
        let exact = -(2.0 * 3.0f64.sqrt()).ln() + 0.5 + LOG_SQRT_2PI;
        assert!((s - exact).abs() < 1e-8, "quadrature {s} vs closed {exact}");
        assert!((s - 0.176_485_2).abs() < 1e-6);
    }

    #[test]
    fn scaling_law_identity() {
        // S(λW) − S(W) = −log λ + (λ²−1)/2 exactly for the Gaussian family.
        for lambda in [0.5, 0.8, 1.25, 2.0] {
            let s = analytic_relative_entropy(AnalyticTarget::ScaledGaussian(lambda)).unwrap();
            let expect = -(lambda as f64).ln() + (lambda * lambda - 1.0) / 2.0;
            assert_eq!(s, expect);
            assert!(s >= 0.0);
        }
    }

    #[test]
    fn estimator_scaling_law() {
        // Estimator-level: Ŝ(λ·sample) − Ŝ(sample) ≈ −log λ + (λ²−1)/2 within 0.05.
        let samples = gaussian_samples(100_000, 61);
        let cfg = default_config(samples.len(), 1.0, 0.1);
        let base = relative_entropy(&samples, &cfg).unwrap().value;
        for lambda in [0.8f64, 1.25] {
            let scaled: Vec<f64> = samples.iter().map(|x| lambda * x).collect();
            let s = relative_entropy(&scaled, &cfg).unwrap().value;
            let expect = -lambda.ln() + (lambda * lambda - 1.0) / 2.0;
            assert!(
                ((s - base) - expect).abs() <= 0.05,
                "λ={lambda}: got {}, want {expect}",
                s - base
            );
        }
    }

    #[test]
    fn monotone_truncation() {
        // Increasing A with B fixed never decreases the number counted.
        let samples = gaussian_samples(10_000, 67);
        for (a_small, a_big) in [(1.0, 2.0), (2.0, 4.0), (4.0, 8.0)] {
            let count = |a: f64| {
                samples.iter().filter(|x| x.abs() <= a).count()
            };
            assert!(count(a_big) >= count(a_small));
        }
    }

    #[test]
    fn consistency_in_n() {
        // Doubling N does not increase the median absolute error (20 trials).
        let law = NonGaussianLaw::uniform();
        let truth = 0.176_485_2;
        let mut errs_small = Vec::new();
        let mut errs_big = Vec::new();
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
            let small: Vec<f64> = (0..20_000).map(|_| law.sample(&mut rng)).collect();
            let big: Vec<f64> = (0..40_000).map(|_| law.sample(&mut rng)).collect();
            let cs = default_config(small.len(), 1.0, 0.1);
            let cb = default_config(big.len(), 1.0, 0.1);
            errs_small.push((relative_entropy(&small, &cs).unwrap().value - truth).abs());
            errs_big.push((relative_entropy(&big, &cb).unwrap().value - truth).abs());
        }
        let med = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            0.5 * (v[9] + v[10])
        };
        assert!(med(&mut errs_big) <= med(&mut errs_small) + 1e-12);
    }

    #[test]
    fn pinsker_direction_check() {
        // Ŝ ≥ 2·d_TV² − 0.05 on the uniform law, TV from the same histogram.
        let samples = uniform_samples(100_000, 71);
        let cfg = default_config(samples.len(), 1.0, 0.1);
        let s = relative_entropy(&samples, &cfg).unwrap().value;
        let tv = histogram_tv_distance(&samples, &cfg).unwrap();
        assert!(s >= 2.0 * tv * tv - 0.05, "S = {s}, 2·TV² = {}", 2.0 * tv * tv);
    }

    #[test]
    fn phase_averaging_is_deterministic() {
        let samples = gaussian_samples(50_000, 73);
        let cfg = default_config(samples.len(), 1.0, 0.1);
        let a = relative_entropy_averaged(&samples, &cfg, 3).unwrap().value;
        let b = relative_entropy_averaged(&samples, &cfg, 3).unwrap().value;
        assert_eq!(a, b);
    }

    #[test]
    fn fused_path_matches_reference_histogram() {
        // The streaming estimator and the per-phase rescan agree.
        let samples = gaussian_samples(30_000, 74);
        let cfg = default_config(samples.len(), 1.0, 0.1);
        for repeats in [1usize, 3] {
            let fused = relative_entropy_combination(
                &samples,
                &vec![0.0; samples.len()],
                0.0,
                &cfg,
                repeats,
            )
            .unwrap();
            let reference = estimate_plogp_averaged(&samples, &cfg, repeats).unwrap();
            assert!(
                (fused.raw_integral - reference).abs() < 1e-12,
                "repeats={repeats}: fused {} vs reference {reference}",
                fused.raw_integral
            );
            let var = crate::stats::variance(&samples);
            assert!((fused.sample_variance - var).abs() < 1e-10);
        }
        // Nonzero combination scale agrees with an explicit marginal.
        let col = gaussian_samples(30_000, 75);
        let explicit: Vec<f64> =
            samples.iter().zip(&col).map(|(a, b)| a + 0.05 * b).collect();
        let fused = relative_entropy_combination(&samples, &col, 0.05, &cfg, 3).unwrap();
        let direct = relative_entropy_averaged(&explicit, &cfg, 3).unwrap();
        assert!((fused.value - direct.value).abs() < 1e-12);
    }
}
