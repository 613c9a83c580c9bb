//! Planted instance synthesis: a hidden rotation carrying p Gaussian
//! coordinates and q non-Gaussian coordinates, with the identifiability gap D
//! computed from closed-form moments at build time.

use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::laws::NonGaussianLaw;
use crate::sample::SampleSet;
use crate::stats::binomial;
use crate::subspace::{orthonormalize, random_unit_vector, Subspace};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("need p + |laws| = n (got n={n}, p={p}, {q} laws)")]
    BadShape { n: usize, p: usize, q: usize },
    #[error("moment order bound r must be >= 3 (got {0})")]
    BadOrder(usize),
    #[error("moment gap D = {0:.3e} below 1e-3; instance unusable as a fixture")]
    MomentGapTooSmall(f64),
}

/// User-supplied sampler for dependent non-Gaussian blocks.
pub type JointSampler = Arc<dyn Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync>;

/// The non-Gaussian component: either an independent product of menu laws
/// (closed-form moments) or a user-supplied joint sampler for dependence
/// experiments (D estimated by Monte Carlo).
#[derive(Clone)]
pub enum NonGaussianComponent {
    Product(Vec<NonGaussianLaw>),
    Joint { dim: usize, sampler: JointSampler },
}

impl std::fmt::Debug for NonGaussianComponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Product(laws) => f.debug_tuple("Product").field(laws).finish(),
            Self::Joint { dim, .. } => f.debug_struct("Joint").field("dim", dim).finish(),
        }
    }
}

/// A planted instance: `X = R·(z, x̃)` with `z ~ N(0, I_p)`, `x̃` from the
/// non-Gaussian component, and `R` a hidden Haar rotation.
#[derive(Debug, Clone)]
pub struct NgcaInstance {
    n: usize,
    p: usize,
    rotation: Array2<f64>,
    component: NonGaussianComponent,
    gamma: Subspace,
    /// Worst-direction moment gap over the non-Gaussian sphere; `None` for
    /// pure-Gaussian instances.
    d_gap: Option<f64>,
    r: usize,
}

impl NgcaInstance {
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// Gaussian dimension p.
    pub fn gaussian_dim(&self) -> usize {
        self.p
    }

    /// Non-Gaussian dimension q = n − p.
    pub fn nongaussian_dim(&self) -> usize {
        self.n - self.p
    }

    pub fn is_gaussian_only(&self) -> bool {
        self.p == self.n
    }

    pub fn rotation(&self) -> &Array2<f64> {
        &self.rotation
    }

    pub fn component(&self) -> &NonGaussianComponent {
        &self.component
    }

    /// Ground-truth Gaussian subspace Γ (rotation applied to the first p axes).
    pub fn gamma(&self) -> &Subspace {
        &self.gamma
    }

    /// Ground-truth non-Gaussian subspace Γ^⊥.
    pub fn gamma_perp(&self) -> Subspace {
        crate::subspace::orthogonal_complement(&self.gamma)
    }

    pub fn moment_gap(&self) -> Option<f64> {
        self.d_gap
    }

    pub fn moment_order(&self) -> usize {
        self.r
    }

    /// Largest subgaussian parameter among the component laws (1 for pure
    /// Gaussian instances).
    pub fn subgaussian_k(&self) -> f64 {
        match &self.component {
            NonGaussianComponent::Product(laws) => laws
                .iter()
                .map(|l| l.subgaussian_k())
                .fold(1.0f64, f64::max),
            NonGaussianComponent::Joint { .. } => 2.0,
        }
    }

    /// Analytic moments M_0..=r of the marginal ⟨x̃, a⟩ for a direction `a`
    /// in component coordinates (product components only).
    pub fn projection_moments(&self, a: &[f64], r: usize) -> Option<Vec<f64>> {
        match &self.component {
            NonGaussianComponent::Product(laws) => {
                Some(projection_moments(laws, a, r))
            }
            NonGaussianComponent::Joint { .. } => None,
        }
    }
}

/// Moments M_0..=r of `Σ a_i X_i` for independent standardized laws, by
/// binomial composition one coordinate at a time.
pub fn projection_moments(laws: &[NonGaussianLaw], a: &[f64], r: usize) -> Vec<f64> {
    assert_eq!(laws.len(), a.len());
    assert!(r <= 8);
    let mut acc = vec![0.0; r + 1];
    acc[0] = 1.0;
    for (law, &coef) in laws.iter().zip(a) {
        let mut next = vec![0.0; r + 1];
        for k in 0..=r {
            let mut val = 0.0;
            for i in 0..=k {
                let mj = coef.powi((k - i) as i32) * law.moment(k - i);
                val += binomial(k, i) * acc[i] * mj;
            }
            next[k] = val;
        }
        acc = next;
    }
    acc
}

/// Moment gap of a direction: `max_{3<=k<=r} |M_k(⟨x̃,a⟩) − M_k(Z)|`.
pub fn direction_gap(laws: &[NonGaussianLaw], a: &[f64], r: usize) -> f64 {
    let m = projection_moments(laws, a, r);
    (3..=r)
        .map(|k| (m[k] - crate::moments::gaussian_moment(k)).abs())
        .fold(0.0f64, f64::max)
}

/// Numerical infimum of [`direction_gap`] over the unit sphere of the
/// component space: coarse random/axis sweep plus local polish.
fn min_direction_gap(laws: &[NonGaussianLaw], r: usize, rng: &mut impl Rng) -> f64 {
    let q = laws.len();
    if q == 1 {
        return direction_gap(laws, &[1.0], r);
    }
    let mut best = f64::INFINITY;
    let mut best_dir = vec![0.0; q];
    let consider = |dir: &[f64], best: &mut f64, best_dir: &mut Vec<f64>| {
        let g = direction_gap(laws, dir, r);
        if g < *best {
            *best = g;
            best_dir.copy_from_slice(dir);
        }
    };
    for i in 0..q {
        let mut axis = vec![0.0; q];
        axis[i] = 1.0;
        consider(&axis, &mut best, &mut best_dir);
    }
    // Balanced diagonals are the usual minimizers for i.i.d. products.
    for signs in 0..(1usize << (q - 1)) {
        let mut d = vec![1.0 / (q as f64).sqrt(); q];
        for (j, dj) in d.iter_mut().enumerate().skip(1) {
            if signs >> (j - 1) & 1 == 1 {
                *dj = -*dj;
            }
        }
        consider(&d, &mut best, &mut best_dir);
    }
    for _ in 0..400 * q {
        let u = random_unit_vector(rng, q);
        consider(u.coords(), &mut best, &mut best_dir);
    }
    // Local polish around the best candidate.
    let mut step = 0.1;
    while step > 1e-4 {
        let mut improved = false;
        for i in 0..q {
            for sgn in [-1.0, 1.0] {
                let mut cand = best_dir.clone();
                cand[i] += sgn * step;
                let norm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
                cand.iter_mut().for_each(|x| *x /= norm);
                let g = direction_gap(laws, &cand, r);
                if g < best {
                    best = g;
                    best_dir = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Draw a Haar-distributed rotation: QR of a Gaussian matrix; the
/// Gram–Schmidt normalization fixes the sign convention (positive diagonal
/// of R), making the draw deterministic under the seed.
fn haar_rotation(n: usize, rng: &mut impl Rng) -> Array2<f64> {
    loop {
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        if let Ok(q) = orthonormalize(&cols) {
            if q.dim() == n {
                return q.basis_matrix();
            }
        }
    }
}

/// Build a planted instance with `p = n − laws.len()` Gaussian coordinates.
pub fn synthesize_instance(
    n: usize,
    p: usize,
    laws: Vec<NonGaussianLaw>,
    r: usize,
    rng: &mut impl Rng,
) -> Result<NgcaInstance, InstanceError> {
    let q = laws.len();
    if p + q != n || n == 0 {
        return Err(InstanceError::BadShape { n, p, q });
    }
    if r < 3 {
        return Err(InstanceError::BadOrder(r));
    }
    let rotation = haar_rotation(n, rng);
    let gamma_cols: Vec<Vec<f64>> = (0..p)
        .map(|j| (0..n).map(|i| rotation[[i, j]]).collect())
        .collect();
    let gamma = if p == 0 {
        Subspace::trivial(n)
    } else {
        Subspace::from_orthonormal(gamma_cols, n).expect("rotation columns are orthonormal")
    };
    let d_gap = if q == 0 {
        None
    } else {
        let d = min_direction_gap(&laws, r, rng);
        if d < 1e-3 {
            return Err(InstanceError::MomentGapTooSmall(d));
        }
        // Build-time audit: random directions must clear the stored gap.
        for _ in 0..50 {
            let a = random_unit_vector(rng, q);
            let g = direction_gap(&laws, a.coords(), r);
            debug_assert!(g >= d - 1e-3, "direction gap {g} below stored D {d}");
        }
        Some(d)
    };
    Ok(NgcaInstance {
        n,
        p,
        rotation,
        component: NonGaussianComponent::Product(laws),
        gamma,
        d_gap,
        r,
    })
}

/// Planted instance with a user-supplied joint sampler for the non-Gaussian
/// block (dependence experiments). D is estimated by Monte Carlo over random
/// directions.
pub fn synthesize_instance_with_sampler(
    n: usize,
    p: usize,
    dim: usize,
    sampler: JointSampler,
    r: usize,
    rng: &mut impl Rng,
) -> Result<NgcaInstance, InstanceError> {
    if p + dim != n || n == 0 {
        return Err(InstanceError::BadShape { n, p, q: dim });
    }
    if r < 3 {
        return Err(InstanceError::BadOrder(r));
    }
    let rotation = haar_rotation(n, rng);
    let gamma_cols: Vec<Vec<f64>> = (0..p)
        .map(|j| (0..n).map(|i| rotation[[i, j]]).collect())
        .collect();
    let gamma = if p == 0 {
        Subspace::trivial(n)
    } else {
        Subspace::from_orthonormal(gamma_cols, n).expect("rotation columns are orthonormal")
    };
    // Monte Carlo gap estimate: 2e4 draws, 50 directions.
    let draws = 20_000;
    let samples: Vec<Vec<f64>> = (0..draws).map(|_| sampler(rng)).collect();
    let mut d_est = f64::INFINITY;
    for _ in 0..50 {
        let a = random_unit_vector(rng, dim);
        let proj: Vec<f64> = samples
            .iter()
            .map(|s| s.iter().zip(a.coords()).map(|(x, c)| x * c).sum())
            .collect();
        let mv = crate::moments::empirical_moments(&proj, r);
        let gap = (3..=r)
            .map(|k| (mv.value(k) - crate::moments::gaussian_moment(k)).abs())
            .fold(0.0f64, f64::max);
        d_est = d_est.min(gap);
    }
    if d_est < 1e-3 {
        return Err(InstanceError::MomentGapTooSmall(d_est));
    }
    Ok(NgcaInstance {
        n,
        p,
        rotation,
        component: NonGaussianComponent::Joint { dim, sampler },
        gamma,
        d_gap: Some(d_est),
        r,
    })
}

/// Draw N samples: row = rotation · (z₁..z_p, x̃₁..x̃_q). Deterministic under
/// the seed, which is recorded on the returned set.
pub fn draw_samples(inst: &NgcaInstance, n_samples: usize, seed: u64) -> SampleSet {
    assert!(n_samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = inst.n;
    let p = inst.p;
    let mut data = Array2::<f64>::zeros((n_samples, n));
    let mut latent = vec![0.0; n];
    for row_idx in 0..n_samples {
        for l in latent.iter_mut().take(p) {
            *l = rng.sample(StandardNormal);
        }
        match &inst.component {
            NonGaussianComponent::Product(laws) => {
                for (j, law) in laws.iter().enumerate() {
                    latent[p + j] = law.sample(&mut rng);
                }
            }
            NonGaussianComponent::Joint { dim, sampler } => {
                let draw = sampler(&mut rng);
                assert_eq!(draw.len(), *dim, "joint sampler returned wrong dimension");
                latent[p..].copy_from_slice(&draw);
            }
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, l) in latent.iter().enumerate() {
                acc += inst.rotation[[i, j]] * l;
            }
            data[[row_idx, i]] = acc;
        }
    }
    SampleSet::new(data, seed)
}
