//! The menu of non-Gaussian marginal laws used to plant instances.
//!
//! Every law is standardized to mean 0 and variance 1 *exactly* (the
//! standardization constants come from closed-form raw moments, not from
//! samples), carries its moments up to order 8, has a density (smoothed or
//! bounded-support families only), and a certified subgaussian parameter K
//! computed from the analytic tail.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::stats::{binomial, gauss_cdf, gaussian_moment_f};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Uniform,
    LaplaceTruncated,
    TwoPointSmoothed,
    GaussianMixtureSymmetric,
    /// Skewed fixture: truncated unit exponential, recentered and rescaled.
    ExponentialTruncated,
}

/// A standardized (mean-0, variance-1) non-Gaussian law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonGaussianLaw {
    kind: LawKind,
    params: Vec<f64>,
    subgaussian_k: f64,
    /// Standardized moments M_1..M_8 (index k-1).
    analytic_moments: [f64; 8],
    /// Raw-to-standard transform: x_std = (x_raw - shift) / scale.
    shift: f64,
    scale: f64,
}

impl NonGaussianLaw {
    /// Uniform on [-√3, √3].
    pub fn uniform() -> Self {
        let mut m = [0.0; 8];
        for k in 1..=8usize {
            if k % 2 == 0 {
                m[k - 1] = 3f64.powi(k as i32 / 2) / (k as f64 + 1.0);
            }
        }
        let mut law = Self {
            kind: LawKind::Uniform,
            params: vec![],
            subgaussian_k: 1.0,
            analytic_moments: m,
            shift: 0.0,
            scale: 1.0,
        };
        law.subgaussian_k = law.compute_k();
        law
    }

    /// Unit-rate Laplace truncated to [-c, c] and rescaled (default c = 5).
    pub fn laplace_truncated() -> Self {
        Self::laplace_truncated_at(5.0)
    }

    pub fn laplace_truncated_at(c: f64) -> Self {
        assert!(c > 0.5);
        let i = exp_partial_moments(c, 8);
        // Raw even moments: E|Y|^k = I_k / I_0, odd vanish by symmetry.
        let sigma2 = i[2] / i[0];
        let scale = sigma2.sqrt();
        let mut m = [0.0; 8];
        for k in 1..=8usize {
            if k % 2 == 0 {
                m[k - 1] = (i[k] / i[0]) / sigma2.powi(k as i32 / 2);
            }
        }
        let mut law = Self {
            kind: LawKind::LaplaceTruncated,
            params: vec![c],
            subgaussian_k: 1.0,
            analytic_moments: m,
            shift: 0.0,
            scale,
        };
        law.subgaussian_k = law.compute_k();
        law
    }

    /// Rademacher convolved with N(0, σ²), rescaled to unit variance
    /// (default σ = 0.2). Has a smooth density unlike the bare Rademacher.
    pub fn two_point_smoothed(sigma: f64) -> Self {
        assert!(sigma > 0.0);
        let scale = (1.0 + sigma * sigma).sqrt();
        let mut m = [0.0; 8];
        for k in 1..=8usize {
            if k % 2 == 0 {
                let mut raw = 0.0;
                for j in (0..=k).step_by(2) {
                    raw += binomial(k, j) * sigma.powi((k - j) as i32) * gaussian_moment_f(k - j);
                }
                m[k - 1] = raw / scale.powi(k as i32);
            }
        }
        let mut law = Self {
            kind: LawKind::TwoPointSmoothed,
            params: vec![sigma],
            subgaussian_k: 1.0,
            analytic_moments: m,
            shift: 0.0,
            scale,
        };
        law.subgaussian_k = law.compute_k();
        law
    }

    /// Equal mixture of N(±μ, 1-μ²); variance is 1 by construction (μ < 1).
    pub fn gaussian_mixture_symmetric(mu: f64) -> Self {
        assert!((0.0..1.0).contains(&mu));
        let s = (1.0 - mu * mu).sqrt();
        let mut m = [0.0; 8];
        for k in 1..=8usize {
            if k % 2 == 0 {
                let mut val = 0.0;
                for j in (0..=k).step_by(2) {
                    val += binomial(k, j) * mu.powi(j as i32)
                        * s.powi((k - j) as i32)
                        * gaussian_moment_f(k - j);
                }
                m[k - 1] = val;
            }
        }
        let mut law = Self {
            kind: LawKind::GaussianMixtureSymmetric,
            params: vec![mu],
            subgaussian_k: 1.0,
            analytic_moments: m,
            shift: 0.0,
            scale: 1.0,
        };
        law.subgaussian_k = law.compute_k();
        law
    }

    /// Unit exponential truncated at c, recentered to mean 0 and rescaled to
    /// variance 1 (default c = 8). The only skewed entry in the menu.
    pub fn exponential_truncated() -> Self {
        Self::exponential_truncated_at(8.0)
    }

    pub fn exponential_truncated_at(c: f64) -> Self {
        assert!(c > 2.0);
        let i = exp_partial_moments(c, 8);
        let raw: Vec<f64> = (0..=8).map(|k| i[k] / i[0]).collect();
        let shift = raw[1];
        let var = raw[2] - raw[1] * raw[1];
        let scale = var.sqrt();
        let mut m = [0.0; 8];
        for k in 1..=8usize {
            // Central moments by binomial shift, then rescale.
            let mut central = 0.0;
            for j in 0..=k {
                central += binomial(k, j) * raw[j] * (-shift).powi((k - j) as i32);
            }
            m[k - 1] = central / scale.powi(k as i32);
        }
        let mut law = Self {
            kind: LawKind::ExponentialTruncated,
            params: vec![c],
            subgaussian_k: 1.0,
            analytic_moments: m,
            shift,
            scale,
        };
        law.subgaussian_k = law.compute_k();
        law
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LawKind::Uniform => "uniform",
            LawKind::LaplaceTruncated => "laplace_truncated",
            LawKind::TwoPointSmoothed => "two_point_smoothed",
            LawKind::GaussianMixtureSymmetric => "gaussian_mixture_symmetric",
            LawKind::ExponentialTruncated => "exponential_truncated",
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn subgaussian_k(&self) -> f64 {
        self.subgaussian_k
    }

    /// Standardized moment M_k, 1 ≤ k ≤ 8. M_0 = 1 for convenience.
    pub fn moment(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        assert!(k <= 8, "analytic moments available up to order 8");
        self.analytic_moments[k - 1]
    }

    pub fn moments(&self) -> &[f64; 8] {
        &self.analytic_moments
    }

    /// One standardized draw.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self.kind {
            LawKind::Uniform => (2.0 * rng.random::<f64>() - 1.0) * SQRT3,
            LawKind::LaplaceTruncated => {
                let c = self.params[0];
                let u: f64 = rng.random();
                let mag = -(1.0 - u * (1.0 - (-c).exp())).ln();
                let sgn = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                sgn * mag / self.scale
            }
            LawKind::TwoPointSmoothed => {
                let sigma = self.params[0];
                let r = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                let g: f64 = rng.sample(StandardNormal);
                (r + sigma * g) / self.scale
            }
            LawKind::GaussianMixtureSymmetric => {
                let mu = self.params[0];
                let s = (1.0 - mu * mu).sqrt();
                let r = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                let g: f64 = rng.sample(StandardNormal);
                r * mu + s * g
            }
            LawKind::ExponentialTruncated => {
                let c = self.params[0];
                let u: f64 = rng.random();
                let y = -(1.0 - u * (1.0 - (-c).exp())).ln();
                (y - self.shift) / self.scale
            }
        }
    }

    /// Standardized density.
    pub fn density(&self, x: f64) -> f64 {
        let y = self.scale * x + self.shift;
        self.scale * self.raw_density(y)
    }

    fn raw_density(&self, y: f64) -> f64 {
        match self.kind {
            LawKind::Uniform => {
                if y.abs() <= SQRT3 {
                    1.0 / (2.0 * SQRT3)
                } else {
                    0.0
                }
            }
            LawKind::LaplaceTruncated => {
                let c = self.params[0];
                if y.abs() <= c {
                    (-y.abs()).exp() / (2.0 * (1.0 - (-c).exp()))
                } else {
                    0.0
                }
            }
            LawKind::TwoPointSmoothed => {
                let sigma = self.params[0];
                0.5 * (gauss_pdf_scaled(y - 1.0, sigma) + gauss_pdf_scaled(y + 1.0, sigma))
            }
            LawKind::GaussianMixtureSymmetric => {
                let mu = self.params[0];
                let s = (1.0 - mu * mu).sqrt();
                0.5 * (gauss_pdf_scaled(y - mu, s) + gauss_pdf_scaled(y + mu, s))
            }
            LawKind::ExponentialTruncated => {
                let c = self.params[0];
                if (0.0..=c).contains(&y) {
                    (-y).exp() / (1.0 - (-c).exp())
                } else {
                    0.0
                }
            }
        }
    }

    /// Analytic two-sided tail Pr[|X| ≥ t] of the standardized law.
    pub fn tail_prob(&self, t: f64) -> f64 {
        assert!(t >= 0.0);
        match self.kind {
            LawKind::Uniform => (1.0 - t / SQRT3).max(0.0),
            LawKind::LaplaceTruncated => {
                let c = self.params[0];
                let y = self.scale * t;
                if y >= c {
                    0.0
                } else {
                    ((-y).exp() - (-c).exp()) / (1.0 - (-c).exp())
                }
            }
            LawKind::TwoPointSmoothed => {
                let sigma = self.params[0];
                let s = self.scale * t;
                gauss_sf((s - 1.0) / sigma) + gauss_sf((s + 1.0) / sigma)
            }
            LawKind::GaussianMixtureSymmetric => {
                let mu = self.params[0];
                let sd = (1.0 - mu * mu).sqrt();
                gauss_sf((t - mu) / sd) + gauss_sf((t + mu) / sd)
            }
            LawKind::ExponentialTruncated => {
                let c = self.params[0];
                let z = 1.0 - (-c).exp();
                let hi = self.scale * t + self.shift;
                let upper = if hi >= c { 0.0 } else { ((-hi).exp() - (-c).exp()) / z };
                let lo = self.shift - self.scale * t;
                let lower = if lo <= 0.0 { 0.0 } else { (1.0 - (-lo).exp()) / z };
                upper + lower
            }
        }
    }

    /// Interval carrying all but ≲1e-16 of the mass, for quadrature.
    pub fn quad_range(&self) -> (f64, f64) {
        match self.kind {
            LawKind::Uniform => (-SQRT3, SQRT3),
            LawKind::LaplaceTruncated | LawKind::ExponentialTruncated => {
                let c = self.params[0];
                ((-self.shift - 0.0_f64.max(c)) / self.scale - 1.0, (c - self.shift) / self.scale)
            }
            LawKind::TwoPointSmoothed | LawKind::GaussianMixtureSymmetric => {
                let k = self.subgaussian_k.max(1.0);
                (-9.0 * k, 9.0 * k)
            }
        }
    }

    /// Interior points where the density loses smoothness.
    pub fn knots(&self) -> Vec<f64> {
        match self.kind {
            LawKind::Uniform => vec![-SQRT3, SQRT3],
            LawKind::LaplaceTruncated => {
                let c = self.params[0];
                vec![-c / self.scale, 0.0, c / self.scale]
            }
            LawKind::ExponentialTruncated => {
                let c = self.params[0];
                vec![-self.shift / self.scale, (c - self.shift) / self.scale]
            }
            // Smooth, but the mixture peaks are narrow relative to the
            // quadrature range; split there so they cannot be stepped over.
            LawKind::TwoPointSmoothed => vec![-1.0 / self.scale, 0.0, 1.0 / self.scale],
            LawKind::GaussianMixtureSymmetric => {
                let mu = self.params[0];
                vec![-mu, 0.0, mu]
            }
        }
    }

    /// Smallest K ≥ 1 with Pr[|X| ≥ t] ≤ 2·e^{-t²/K²} on a fine tail grid.
    fn compute_k(&self) -> f64 {
        let t_max = match self.kind {
            LawKind::Uniform => SQRT3,
            LawKind::LaplaceTruncated | LawKind::ExponentialTruncated => {
                (self.params[0] + self.shift.abs()) / self.scale
            }
            _ => 12.0,
        };
        let mut grid_sup = 0.0f64;
        let steps = 4000;
        for i in 1..steps {
            let t = t_max * i as f64 / steps as f64;
            let p = self.tail_prob(t);
            if p <= 1e-290 {
                continue;
            }
            let k = t / (2.0 / p).ln().sqrt();
            grid_sup = grid_sup.max(k);
        }
        // Small safety factor so the grid supremum certifies all t.
        (grid_sup * 1.005).max(1.0)
    }
}

fn gauss_pdf_scaled(u: f64, sd: f64) -> f64 {
    (-0.5 * (u / sd) * (u / sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

fn gauss_sf(x: f64) -> f64 {
    1.0 - gauss_cdf(x)
}

/// I_k = ∫_0^c x^k e^{-x} dx for k = 0..=max, by the exact recursion
/// I_k = k·I_{k-1} − c^k e^{-c}.
fn exp_partial_moments(c: f64, max: usize) -> Vec<f64> {
    let ec = (-c).exp();
    let mut out = vec![0.0; max + 1];
    out[0] = 1.0 - ec;
    for k in 1..=max {
        out[k] = k as f64 * out[k - 1] - c.powi(k as i32) * ec;
    }
    out
}

/// The standard menu used by generators and test fixtures.
pub fn menu() -> Vec<NonGaussianLaw> {
    vec![
        NonGaussianLaw::uniform(),
        NonGaussianLaw::laplace_truncated(),
        NonGaussianLaw::two_point_smoothed(0.2),
        NonGaussianLaw::gaussian_mixture_symmetric(0.9),
        NonGaussianLaw::exponential_truncated(),
    ]
}
