//! Dense subspace algebra: orthonormal bases, projectors, complements, the
//! projector-Frobenius subspace distance, and the near-orthonormal
//! perturbation bound checker used to audit deflation error accumulation.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad;

/// Numerical rank tolerance: residual columns with norm below this (relative
/// to the largest input column) are dropped during orthonormalization.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum SubspaceError {
    #[error("no input vectors")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("subspaces have unequal rank ({0} vs {1}); distance is defined for equal ranks")]
    UnequalRank(usize, usize),
    #[error("input spans only rank {rank}, need {need}")]
    RankDeficient { rank: usize, need: usize },
    #[error("vector is not unit length (norm {0})")]
    NotUnit(f64),
    #[error("degenerate step: pre-normalization vector vanished")]
    DegenerateStep,
}

/// A unit vector in ℝⁿ (‖·‖₂ = 1 to 1e-9 relative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Wrap a vector, checking the unit-norm invariant.
    pub fn new(coords: Vec<f64>) -> Result<Self, SubspaceError> {
        let n = norm(&coords);
        if (n - 1.0).abs() > 1e-9 {
            return Err(SubspaceError::NotUnit(n));
        }
        Ok(Self { coords })
    }

    /// Normalize a nonzero vector into a unit vector.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self, SubspaceError> {
        let n = norm(&coords);
        if n < 1e-12 {
            return Err(SubspaceError::DegenerateStep);
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.coords, other.coords())
    }

    pub fn as_array(&self) -> Array1<f64> {
        Array1::from_vec(self.coords.clone())
    }
}

/// Orthonormal basis of a k-dimensional subspace of ℝⁿ.
///
/// Columns of `basis` are orthonormal; `0 ≤ dim ≤ ambient_dim`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Subspace {
    basis: Vec<Vec<f64>>, // column-major: basis[j] is the j-th basis vector
    ambient_dim: usize,
}

impl Subspace {
    /// Build from orthonormal columns, verifying `basisᵀ·basis = I` to 1e-9.
    pub fn from_orthonormal(columns: Vec<Vec<f64>>, ambient_dim: usize) -> Result<Self, SubspaceError> {
        for col in &columns {
            if col.len() != ambient_dim {
                return Err(SubspaceError::DimensionMismatch {
                    expected: ambient_dim,
                    got: col.len(),
                });
            }
        }
        for i in 0..columns.len() {
            for j in i..columns.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot(&columns[i], &columns[j]) - want).abs() > 1e-9 {
                    return Err(SubspaceError::NotUnit(dot(&columns[i], &columns[j])));
                }
            }
        }
        Ok(Self { basis: columns, ambient_dim })
    }

    /// The zero subspace of ℝⁿ.
    pub fn trivial(ambient_dim: usize) -> Self {
        Self { basis: Vec::new(), ambient_dim }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn basis_columns(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Basis as an n×k matrix.
    pub fn basis_matrix(&self) -> Array2<f64> {
        let mut b = Array2::<f64>::zeros((self.ambient_dim, self.dim()));
        for (j, col) in self.basis.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                b[[i, j]] = x;
            }
        }
        b
    }

    /// The n×n orthogonal projector onto this subspace.
    pub fn projector(&self) -> Array2<f64> {
        let b = self.basis_matrix();
        b.dot(&b.t())
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Classical Gram–Schmidt with one reorthogonalization pass.
///
/// Input vectors whose residual after projection drops below [`RANK_TOL`]
/// (relative to the largest input norm) are dropped, so the returned
/// subspace has the numerical rank of the input.
pub fn orthonormalize(vectors: &[Vec<f64>]) -> Result<Subspace, SubspaceError> {
    if vectors.is_empty() {
        return Err(SubspaceError::EmptyInput);
    }
    let n = vectors[0].len();
    for v in vectors {
        if v.len() != n {
            return Err(SubspaceError::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let scale = vectors.iter().map(|v| norm(v)).fold(0.0f64, f64::max).max(1e-300);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _pass in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let r = norm(&w);
        if r > RANK_TOL * scale {
            w.iter_mut().for_each(|x| *x /= r);
            basis.push(w);
        }
    }
    Ok(Subspace { basis, ambient_dim: n })
}

/// Orthogonal projection of `v` onto `s` (i.e. `B·Bᵀ·v`).
pub fn project(s: &Subspace, v: &[f64]) -> Result<Vec<f64>, SubspaceError> {
    if v.len() != s.ambient_dim {
        return Err(SubspaceError::DimensionMismatch { expected: s.ambient_dim, got: v.len() });
    }
    let mut out = vec![0.0; v.len()];
    for b in &s.basis {
        let c = dot(v, b);
        for (oi, bi) in out.iter_mut().zip(b) {
            *oi += c * bi;
        }
    }
    Ok(out)
}

/// Orthogonal complement, dim `n - k`.
///
/// Completes the basis greedily from coordinate vectors, always taking the
/// candidate with the largest residual so near-parallel candidates never
/// enter ill-conditioned.
pub fn orthogonal_complement(s: &Subspace) -> Subspace {
    let n = s.ambient_dim;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() + s.dim() < n {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..n {
            let mut w = vec![0.0; n];
            w[i] = 1.0;
            for _pass in 0..2 {
                for b in s.basis.iter().chain(basis.iter()) {
                    let c = dot(&w, b);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= c * bi;
                    }
                }
            }
            let r = norm(&w);
            if best.as_ref().is_none_or(|(br, _)| r > *br) {
                best = Some((r, w));
            }
        }
        let (r, mut w) = best.expect("n > 0");
        debug_assert!(r > 1e-8, "complement candidate residual {r}");
        w.iter_mut().for_each(|x| *x /= r);
        basis.push(w);
    }
    Subspace { basis, ambient_dim: n }
}

/// Distance `‖P_a − P_b‖_F` between equal-dimensional subspaces.
///
/// Symmetric, nonnegative, zero iff equal spans, and invariant under the
/// choice of orthonormal basis. Computed as `√(2k − 2‖AᵀB‖_F²)`.
pub fn subspace_distance(a: &Subspace, b: &Subspace) -> Result<f64, SubspaceError> {
    if a.ambient_dim != b.ambient_dim {
        return Err(SubspaceError::DimensionMismatch {
            expected: a.ambient_dim,
            got: b.ambient_dim,
        });
    }
    if a.dim() != b.dim() {
        return Err(SubspaceError::UnequalRank(a.dim(), b.dim()));
    }
    let mut cross = 0.0;
    for x in &a.basis {
        for y in &b.basis {
            let c = dot(x, y);
            cross += c * c;
        }
    }
    Ok((2.0 * a.dim() as f64 - 2.0 * cross).max(0.0).sqrt())
}

/// Outcome of checking `d(Λ_k, Γ_k) ≤ 6k²·ε^{1/4}` for unit vectors `γ_i`
/// close to an orthonormal family `λ_i`.
///
/// Two hypothesis thresholds are recorded: `1/(25k²)` (the bound's own
/// hypothesis) and the stricter `1/(50k²)` used when the bound feeds the
/// deflation analysis. `hypothesis_violated` refers to the looser one; the
/// bound and distance are reported either way.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub k: usize,
    pub epsilon: f64,
    pub distance: f64,
    pub bound: f64,
    pub holds: bool,
    pub threshold_lemma: f64,
    pub threshold_deflation: f64,
    pub hypothesis_violated: bool,
}

/// Evaluate the perturbation bound for `gammas` against orthonormal `lambdas`.
///
/// `epsilon = max_i (1 − ⟨λ_i, γ_i⟩)`; the spans are compared with
/// [`subspace_distance`]. Errors with `RankDeficient` if span(γ) has lower
/// numerical rank than k.
pub fn check_perturbation_bound(
    lambdas: &[UnitVector],
    gammas: &[UnitVector],
) -> Result<PerturbationReport, SubspaceError> {
    if lambdas.is_empty() {
        return Err(SubspaceError::EmptyInput);
    }
    if lambdas.len() != gammas.len() {
        return Err(SubspaceError::DimensionMismatch {
            expected: lambdas.len(),
            got: gammas.len(),
        });
    }
    let k = lambdas.len();
    let lam_cols: Vec<Vec<f64>> = lambdas.iter().map(|u| u.coords().to_vec()).collect();
    let gam_cols: Vec<Vec<f64>> = gammas.iter().map(|u| u.coords().to_vec()).collect();
    let lam = orthonormalize(&lam_cols)?;
    if lam.dim() != k {
        return Err(SubspaceError::RankDeficient { rank: lam.dim(), need: k });
    }
    let gam = orthonormalize(&gam_cols)?;
    if gam.dim() != k {
        return Err(SubspaceError::RankDeficient { rank: gam.dim(), need: k });
    }
    let epsilon = lambdas
        .iter()
        .zip(gammas)
        .map(|(l, g)| 1.0 - l.dot(g))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let distance = subspace_distance(&lam, &gam)?;
    let bound = 6.0 * (k * k) as f64 * epsilon.powf(0.25);
    let threshold_lemma = 1.0 / (25 * k * k) as f64;
    let threshold_deflation = 1.0 / (50 * k * k) as f64;
    Ok(PerturbationReport {
        k,
        epsilon,
        distance,
        bound,
        holds: distance <= bound,
        threshold_lemma,
        threshold_deflation,
        hypothesis_violated: epsilon >= threshold_lemma,
    })
}

/// Uniform direction on the sphere 𝕊^{n-1}: normalized isotropic Gaussian draw.
pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> UnitVector {
    assert!(n >= 1, "random_unit_vector: need n >= 1");
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = UnitVector::normalized(v) {
            return u;
        }
    }
}

/// Haar-distributed random subspace of dimension k in ℝⁿ.
pub fn random_subspace(rng: &mut impl Rng, n: usize, k: usize) -> Subspace {
    assert!(k <= n);
    loop {
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        if k == 0 {
            return Subspace::trivial(n);
        }
        if let Ok(s) = orthonormalize(&cols) {
            if s.dim() == k {
                return s;
            }
        }
    }
}

/// Exact probability that a uniform point on 𝕊^{n-1} satisfies
/// `|⟨r, v⟩| ≥ alpha` for a fixed unit vector v, by quadrature of the
/// marginal density ∝ (1−x²)^{(n−3)/2}.
///
/// This is the one-dimensional spherical cap volume, the minimizing case of
/// the projection-ratio concentration bound.
pub fn cap_probability(n: usize, alpha: f64) -> f64 {
    assert!(n >= 2 && (0.0..1.0).contains(&alpha));
    let p = (n as f64 - 3.0) / 2.0;
    let dens = |x: f64| (1.0 - x * x).max(0.0).powf(p);
    let total = quad::integrate(dens, 0.0, 1.0, 1e-12).expect("cap quadrature");
    let tail = quad::integrate(dens, alpha, 1.0, 1e-12).expect("cap quadrature");
    tail / total
}

pub(crate) fn view_dot(a: ArrayView1<f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
