//! Empirical and Gaussian moments, moment-gap detection, the exact
//! mixed-moment identity for Gaussian-smoothed variables, smoothed-gap lower
//! bounds, and the entropy-decay diagnostic bound.

use serde::{Deserialize, Serialize};

use crate::stats::{binomial, factorial, gaussian_moment_f};

/// Empirical moments M_1..=r with per-order standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct MomentVector {
    order_max: usize,
    values: Vec<f64>,
    std_errors: Vec<f64>,
    n: usize,
}

impl MomentVector {
    pub fn order_max(&self) -> usize {
        self.order_max
    }

    /// M_k, 1 ≤ k ≤ order_max.
    pub fn value(&self, k: usize) -> f64 {
        assert!((1..=self.order_max).contains(&k));
        self.values[k - 1]
    }

    /// Standard error of M_k: sample std of x^k over √N.
    pub fn std_error(&self, k: usize) -> f64 {
        assert!((1..=self.order_max).contains(&k));
        self.std_errors[k - 1]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Empirical moments of a 1-D sample: values[k] = (1/N)·Σ x^k.
pub fn empirical_moments(samples: &[f64], r: usize) -> MomentVector {
    assert!(samples.len() >= 30, "need at least 30 samples");
    assert!((1..=12).contains(&r), "moment order must be in 1..=12");
    let n = samples.len() as f64;
    let mut values = vec![0.0; r];
    let mut second = vec![0.0; r];
    for &x in samples {
        let mut p = 1.0;
        for k in 0..r {
            p *= x;
            values[k] += p;
            second[k] += p * p;
        }
    }
    let mut std_errors = vec![0.0; r];
    for k in 0..r {
        values[k] /= n;
        second[k] /= n;
        std_errors[k] = ((second[k] - values[k] * values[k]).max(0.0) / n).sqrt();
    }
    MomentVector { order_max: r, values, std_errors, n: samples.len() }
}

/// Gaussian moments: 0 for odd k, (k−1)!! for even k.
pub fn gaussian_moment(k: usize) -> f64 {
    gaussian_moment_f(k)
}

/// Exact mixed-moment gap of `W = α·Y + √(1−α²)·Z` at order k:
///
/// `M_k(W) − M_k(Z) = Σ_{j=1}^{k} C(k,j)·αʲ·(M_j(Y) − M_j(Z))·(1−α²)^{(k−j)/2}·M_{k−j}(Z)`
///
/// `signal_coeff` is the coefficient multiplying the non-Gaussian variable;
/// naming it explicitly avoids transposition bugs between the two smoothing
/// conventions in circulation.
pub fn mixed_moment_gap(moments_y: &[f64], signal_coeff: f64, k: usize) -> f64 {
    assert!(k >= 1 && moments_y.len() >= k, "need moments of Y up to order k");
    assert!((0.0..=1.0).contains(&signal_coeff));
    let noise = (1.0 - signal_coeff * signal_coeff).max(0.0).sqrt();
    let mut total = 0.0;
    for j in 1..=k {
        let gap_j = moments_y[j - 1] - gaussian_moment(j);
        if gap_j == 0.0 {
            continue;
        }
        total += binomial(k, j)
            * signal_coeff.powi(j as i32)
            * gap_j
            * noise.powi((k - j) as i32)
            * gaussian_moment(k - j);
    }
    total
}

/// Mixed-moment gap in the `W = t·Y + √(1−t²)·Z` parametrization.
///
/// Requires the mean-0/variance-1 convention on Y (M_1 = 0, M_2 = 1).
pub fn moment_mixing(moments_y: &[f64], t: f64, k: usize) -> f64 {
    assert!(moments_y.len() >= 2);
    assert!(moments_y[0].abs() < 1e-9, "Y must be centered (M1 = 0)");
    assert!((moments_y[1] - 1.0).abs() < 1e-9, "Y must have unit variance (M2 = 1)");
    mixed_moment_gap(moments_y, t, k)
}

/// Mixed-moment gap in the `W = √(1−t²)·Y + t·Z` parametrization
/// (the smoothing step's convention: t is the *noise* coefficient).
pub fn smoothed_moment_gap(moments_y: &[f64], t: f64, k: usize) -> f64 {
    assert!((0.0..=1.0).contains(&t));
    let signal = (1.0 - t * t).max(0.0).sqrt();
    mixed_moment_gap(moments_y, signal, k)
}

/// Lower bounds on the surviving gap after smoothing `W = √(1−t²)Y + tZ`,
/// when the first gap of size D occurs at order k.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmoothedGapBound {
    /// `max(0, D·((1−t²)^{k/2} − t(1−t²)^{3/2}(1+√(k−3))^k))`.
    pub value: f64,
    /// The cruder Bernoulli-style bound `D·(1 − kt²/2 − t·k^{k/2})`.
    pub bernoulli: f64,
}

/// Predicted lower bound on the smoothed moment gap.
pub fn predicted_smoothed_gap(d: f64, k: usize, t: f64) -> SmoothedGapBound {
    assert!(k >= 3, "gap order must be >= 3");
    assert!((0.0..1.0).contains(&t));
    let s2 = 1.0 - t * t;
    let kf = k as f64;
    let main = s2.powf(kf / 2.0) - t * s2.powf(1.5) * (1.0 + (kf - 3.0).sqrt()).powi(k as i32);
    let bernoulli = d * (1.0 - kf * t * t / 2.0 - t * kf.powf(kf / 2.0));
    SmoothedGapBound { value: (d * main).max(0.0), bernoulli }
}

/// Report of the first statistically certified moment gap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    /// Smallest order k ∈ [3, r] whose gap clears D with a 4-standard-error
    /// buffer, if any.
    pub k_star: Option<usize>,
    /// |M_k* − gaussian_moment(k*)| when k_star exists, else 0.
    pub gap: f64,
    pub d_threshold: f64,
    /// Raw |M_k − gaussian_moment(k)| for k = 3..=r.
    pub all_gaps: Vec<f64>,
}

/// Find the first order whose empirical gap exceeds D as a statistical
/// certificate: `|M_k − M_k(Z)| − 4·se_k ≥ D`.
pub fn detect_gap(mv: &MomentVector, d: f64) -> GapReport {
    let r = mv.order_max();
    assert!(r >= 3, "need moments to order 3 at least");
    let mut k_star = None;
    let mut gap = 0.0;
    let mut all_gaps = Vec::with_capacity(r - 2);
    for k in 3..=r {
        let g = (mv.value(k) - gaussian_moment(k)).abs();
        all_gaps.push(g);
        if k_star.is_none() && g - 4.0 * mv.std_error(k) >= d {
            k_star = Some(k);
            gap = g;
        }
    }
    GapReport { k_star, gap, d_threshold: d, all_gaps }
}

/// Diagnostic upper bound `5·A·r!·(ε/D²)^{1/2r}` with
/// `A = 4r²K(3 + log(K/D))` on the non-Gaussian weight of a direction whose
/// relative entropy is ε. Loose at desk scale; exposed for reporting only.
pub fn entropy_decay_bound(eps: f64, d: f64, r: usize, k: f64) -> f64 {
    assert!(eps > 0.0 && d > 0.0 && k >= 1.0 && r >= 3);
    let a = entropy_bound_a(d, r, k);
    5.0 * a * factorial(r) * (eps / (d * d)).powf(1.0 / (2.0 * r as f64))
}

/// The truncation radius `A = 4r²K(3 + log(K/D))` entering the decay bound
/// and the termination thresholds.
pub fn entropy_bound_a(d: f64, r: usize, k: f64) -> f64 {
    4.0 * (r * r) as f64 * k * (3.0 + (k / d).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{menu, NonGaussianLaw};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_moment_table() {
        assert_eq!(gaussian_moment(3), 0.0);
        assert_eq!(gaussian_moment(4), 3.0);
        assert_eq!(gaussian_moment(6), 15.0);
        // Recurrence M_k = (k−1)·M_{k−2} for even k.
        for k in (4..=12).step_by(2) {
            assert_eq!(gaussian_moment(k), (k - 1) as f64 * gaussian_moment(k - 2));
        }
    }

    #[test]
    fn constant_samples_have_exact_moments() {
        let samples = vec![2.0; 64];
        let mv = empirical_moments(&samples, 5);
        for k in 1..=5 {
            assert_eq!(mv.value(k), 2.0f64.powi(k as i32));
            assert_eq!(mv.std_error(k), 0.0);
        }
    }

    #[test]
    fn gaussian_sample_kurtosis() {
        use rand_distr::StandardNormal;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let samples: Vec<f64> = (0..1_000_000).map(|_| rng.sample(StandardNormal)).collect();
        let mv = empirical_moments(&samples, 4);
        assert!((mv.value(4) - 3.0).abs() <= 4.0 * mv.std_error(4));
    }

    #[test]
    fn uniform_sample_kurtosis() {
        let law = NonGaussianLaw::uniform();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let samples: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
        let mv = empirical_moments(&samples, 4);
        assert!((mv.value(4) - 1.8).abs() <= 4.0 * mv.std_error(4));
    }

    #[test]
    fn mixing_degenerate_cases() {
        let law = NonGaussianLaw::uniform();
        let m: Vec<f64> = (1..=6).map(|k| law.moment(k)).collect();
        for k in 3..=6 {
            assert_eq!(moment_mixing(&m, 0.0, k), 0.0);
            let full = moment_mixing(&m, 1.0, k);
            assert!((full - (law.moment(k) - gaussian_moment(k))).abs() < 1e-12);
        }
    }

    #[test]
    fn mixing_third_order_single_term() {
        // Only j = 3 survives when M1, M2 match the Gaussian.
        let m = vec![0.0, 1.0, 2.0];
        let v = moment_mixing(&m, 0.5, 3);
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn mixing_matches_monte_carlo() {
        use rand_distr::StandardNormal;
        // Smaller-N version of the acceptance check, all menu laws.
        let n = 200_000;
        for (i, law) in menu().into_iter().enumerate() {
            let moments: Vec<f64> = (1..=4).map(|k| law.moment(k)).collect();
            for (j, &t) in [0.2, 0.5, 0.8].iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + 10 * i as u64 + j as u64);
                let draws: Vec<f64> = (0..n)
                    .map(|_| {
                        let y = law.sample(&mut rng);
                        let z: f64 = rng.sample(StandardNormal);
                        t * y + (1.0f64 - t * t).sqrt() * z
                    })
                    .collect();
                let mv = empirical_moments(&draws, 4);
                for k in [3usize, 4] {
                    let predicted = moment_mixing(&moments, t, k);
                    let measured = mv.value(k) - gaussian_moment(k);
                    assert!(
                        (measured - predicted).abs() <= 4.0 * mv.std_error(k),
                        "{} k={k} t={t}: predicted {predicted}, measured {measured} (se {})",
                        law.name(),
                        mv.std_error(k)
                    );
                }
            }
        }
    }

    #[test]
    fn smoothed_convention_adapter() {
        let law = NonGaussianLaw::uniform();
        let m: Vec<f64> = (1..=4).map(|k| law.moment(k)).collect();
        let t = 0.3;
        let via_adapter = smoothed_moment_gap(&m, t, 4);
        let direct = mixed_moment_gap(&m, (1.0f64 - t * t).sqrt(), 4);
        assert_eq!(via_adapter, direct);
    }

    #[test]
    fn predicted_gap_reference_points() {
        assert_eq!(predicted_smoothed_gap(2.0, 4, 0.0).value, 2.0);
        // k=3, t=0.2: D·0.8·0.96^{3/2}.
        let b = predicted_smoothed_gap(1.0, 3, 0.2);
        assert!((b.value - 0.8 * 0.96f64.powf(1.5)).abs() < 1e-12);
        // Large t clips at zero.
        assert_eq!(predicted_smoothed_gap(1.0, 5, 0.9).value, 0.0);
    }

    #[test]
    fn bernoulli_bound_is_dominated_for_low_orders() {
        // The cruder bound stays below the main expression for k ∈ {3, 4};
        // for k ≥ 5 the inequality genuinely fails (the (1+√(k−3))^k factor
        // overtakes k^{k/2}), so only the valid range is asserted.
        for k in [3usize, 4] {
            for i in 0..=30 {
                let t = 0.01 * i as f64;
                let b = predicted_smoothed_gap(1.0, k, t);
                let raw_main = (1.0 - t * t).powf(k as f64 / 2.0)
                    - t * (1.0 - t * t).powf(1.5) * (1.0 + ((k - 3) as f64).sqrt()).powi(k as i32);
                assert!(
                    raw_main >= b.bernoulli - 1e-12,
                    "k={k} t={t}: main {raw_main} < bernoulli {}",
                    b.bernoulli
                );
            }
        }
    }

    #[test]
    fn detect_gap_gaussian_finds_nothing() {
        use rand_distr::StandardNormal;
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let samples: Vec<f64> = (0..200_000).map(|_| rng.sample(StandardNormal)).collect();
        let mv = empirical_moments(&samples, 6);
        let rep = detect_gap(&mv, 0.5);
        assert!(rep.k_star.is_none());
    }

    #[test]
    fn detect_gap_uniform_at_order_four() {
        let law = NonGaussianLaw::uniform();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let samples: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
        let mv = empirical_moments(&samples, 6);
        let rep = detect_gap(&mv, 1.0);
        assert_eq!(rep.k_star, Some(4));
        assert!((rep.gap - 1.2).abs() < 0.05);
    }

    #[test]
    fn detect_gap_near_rademacher() {
        let law = NonGaussianLaw::two_point_smoothed(0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let samples: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
        let mv = empirical_moments(&samples, 4);
        let rep = detect_gap(&mv, 1.5);
        assert_eq!(rep.k_star, Some(4));
        assert!((rep.gap - 1.85).abs() < 0.05);
    }

    #[test]
    fn decay_bound_reference_value() {
        // D=1, K=1, r=3, ε=1e−12: A = 108, bound = 5·108·6·1e−2 = 32.4.
        let b = entropy_decay_bound(1e-12, 1.0, 3, 1.0);
        assert!((b - 32.4).abs() < 1e-9);
        // Monotone: increasing in ε, decreasing in D.
        assert!(entropy_decay_bound(1e-10, 1.0, 3, 1.0) > b);
        assert!(entropy_decay_bound(1e-12, 2.0, 3, 1.0) < b);
        // ε → 0 limit.
        assert!(entropy_decay_bound(1e-30, 1.0, 3, 1.0) < 1e-2 * b);
    }
}
