//! Spectral baseline via joint cumulants: Gaussian directions annihilate all
//! joint cumulants of order ≥ 3, so the Gaussian subspace is the kernel of
//! the Gram matrix `Σ slice·sliceᵀ` of the flattened order-3/4 cumulant
//! tensors. Working with the n×n Gram sidesteps the n³×n stacked matrix.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::sym_eigen;
use crate::sample::SampleSet;
use crate::subspace::Subspace;

/// Dense tensors are exact but sized n^4; keep the ambient dimension small.
const MAX_AMBIENT: usize = 32;

#[derive(Debug, Error)]
pub enum CumulantError {
    #[error("data not isotropic: covariance deviates from I by {0:.3} in max norm")]
    NotIsotropic(f64),
    #[error("need at least 1000 samples (got {0})")]
    TooFewSamples(usize),
    #[error("ambient dimension {0} exceeds the dense-tensor guard {MAX_AMBIENT}")]
    AmbientTooLarge(usize),
    #[error("unsupported cumulant orders {0:?}; only {{3, 4}} are implemented")]
    BadOrders(Vec<usize>),
}

/// Dense symmetric order-3 tensor.
#[derive(Debug, Clone)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }
}

/// Dense symmetric order-4 tensor.
#[derive(Debug, Clone)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }
}

fn centered_rows(s: &SampleSet) -> Vec<f64> {
    let mu = s.empirical_mean();
    let n = s.ambient_dim();
    let mut out = Vec::with_capacity(s.len() * n);
    for row in s.data().rows() {
        for i in 0..n {
            out.push(row[i] - mu[i]);
        }
    }
    out
}

/// Third joint cumulant κ₃[i][j][k] = (1/N)·Σ x_i x_j x_k of the centered
/// sample (the third cumulant equals the third central moment).
pub fn joint_cumulant_order3(s: &SampleSet) -> Result<Tensor3, CumulantError> {
    if s.len() < 1_000 {
        return Err(CumulantError::TooFewSamples(s.len()));
    }
    let n = s.ambient_dim();
    if n > MAX_AMBIENT {
        return Err(CumulantError::AmbientTooLarge(n));
    }
    let rows = centered_rows(s);
    // Centering audit.
    for i in 0..n {
        let m: f64 = rows.chunks_exact(n).map(|r| r[i]).sum::<f64>() / s.len() as f64;
        debug_assert!(m.abs() <= 1e-6, "residual mean {m} after centering");
    }
    let chunk = 16_384usize;
    let partials: Vec<Vec<f64>> = rows
        .par_chunks(chunk * n)
        .map(|block| {
            let mut acc = vec![0.0f64; n * n * n];
            for x in block.chunks_exact(n) {
                for i in 0..n {
                    let xi = x[i];
                    for j in 0..n {
                        let xij = xi * x[j];
                        let base = (i * n + j) * n;
                        for (k, xk) in x.iter().enumerate() {
                            acc[base + k] += xij * xk;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut data = vec![0.0f64; n * n * n];
    for p in partials {
        for (d, v) in data.iter_mut().zip(p) {
            *d += v;
        }
    }
    let nf = s.len() as f64;
    data.iter_mut().for_each(|v| *v /= nf);
    Ok(Tensor3 { n, data })
}

/// Fourth joint cumulant under the isotropic convention:
/// κ₄[i][j][k][l] = (1/N)·Σ x_i x_j x_k x_l − (δ_ij δ_kl + δ_ik δ_jl + δ_il δ_jk).
///
/// Requires empirical covariance within 1e-2 of I in max norm.
pub fn joint_cumulant_order4(s: &SampleSet) -> Result<Tensor4, CumulantError> {
    if s.len() < 1_000 {
        return Err(CumulantError::TooFewSamples(s.len()));
    }
    let n = s.ambient_dim();
    if n > MAX_AMBIENT {
        return Err(CumulantError::AmbientTooLarge(n));
    }
    let cov = s.empirical_covariance();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((cov[[i, j]] - want).abs());
        }
    }
    if dev > 1e-2 {
        return Err(CumulantError::NotIsotropic(dev));
    }
    let rows = centered_rows(s);
    let chunk = 8_192usize;
    let partials: Vec<Vec<f64>> = rows
        .par_chunks(chunk * n)
        .map(|block| {
            let mut acc = vec![0.0f64; n * n * n * n];
            let mut pair = vec![0.0f64; n * n];
            for x in block.chunks_exact(n) {
                for i in 0..n {
                    for j in 0..n {
                        pair[i * n + j] = x[i] * x[j];
                    }
                }
                for ij in 0..n * n {
                    let pij = pair[ij];
                    let base = ij * n * n;
                    for (kl, pkl) in pair.iter().enumerate() {
                        acc[base + kl] += pij * pkl;
                    }
                }
            }
            acc
        })
        .collect();
    let mut data = vec![0.0f64; n * n * n * n];
    for p in partials {
        for (d, v) in data.iter_mut().zip(p) {
            *d += v;
        }
    }
    let nf = s.len() as f64;
    data.iter_mut().for_each(|v| *v /= nf);
    // Subtract the Gaussian (identity-covariance) Wick terms.
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    data[((i * n + j) * n + k) * n + l] -=
                        delta(i, j) * delta(k, l) + delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k);
                }
            }
        }
    }
    Ok(Tensor4 { n, data })
}

/// The Gram matrix of the flattened cumulant slices, its spectrum, and the
/// kernel threshold bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct CumulantGram {
    pub order_set: Vec<usize>,
    pub gram: Vec<Vec<f64>>,
    /// Ascending.
    pub eigvals: Vec<f64>,
    /// Column i pairs with eigvals[i].
    pub eigvecs: Vec<Vec<f64>>,
    /// Median eigenvalue, the working noise floor.
    pub noise_floor: f64,
}

/// Result of reading the Gaussian subspace off the Gram kernel.
#[derive(Debug, Clone, Serialize)]
pub struct CumulantKernelOutcome {
    pub gaussian: Subspace,
    pub report: CumulantGram,
    /// Set when no 10× spectral gap separates kernel from non-kernel
    /// eigenvalues; the subspace is then unreliable.
    pub degenerate_spectrum: bool,
}

/// Estimate the Gaussian subspace as the kernel of the cumulant Gram matrix.
///
/// `orders ⊆ {3, 4}`; `kernel_tol` is relative to the top eigenvalue. When
/// the whole spectrum sits within 10× of the noise floor (pure-Gaussian
/// data), the kernel is the full space.
pub fn cumulant_kernel(
    s: &SampleSet,
    orders: &[usize],
    kernel_tol: f64,
) -> Result<CumulantKernelOutcome, CumulantError> {
    if orders.is_empty() || orders.iter().any(|o| *o != 3 && *o != 4) {
        return Err(CumulantError::BadOrders(orders.to_vec()));
    }
    let n = s.ambient_dim();
    let mut gram = Array2::<f64>::zeros((n, n));
    for &order in orders {
        match order {
            3 => {
                let t = joint_cumulant_order3(s)?;
                for i in 0..n {
                    for j in 0..n {
                        for u in 0..n {
                            for v in u..n {
                                let inc = t.get(i, j, u) * t.get(i, j, v);
                                gram[[u, v]] += inc;
                            }
                        }
                    }
                }
            }
            4 => {
                let t = joint_cumulant_order4(s)?;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            for u in 0..n {
                                for v in u..n {
                                    let inc = t.get(i, j, k, u) * t.get(i, j, k, v);
                                    gram[[u, v]] += inc;
                                }
                            }
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    for u in 0..n {
        for v in 0..u {
            gram[[u, v]] = gram[[v, u]];
        }
    }

    let eig = sym_eigen(&gram);
    let eigvals: Vec<f64> = eig.values.to_vec();
    let noise_floor = median(&eigvals);
    let lambda_max = *eigvals.last().expect("n >= 1");

    let (kernel_dims, degenerate) = if lambda_max <= 10.0 * noise_floor.max(f64::MIN_POSITIVE) {
        // No signal anywhere: every direction is Gaussian.
        (n, false)
    } else {
        let cut = kernel_tol * lambda_max;
        let k = eigvals.iter().filter(|&&l| l <= cut).count();
        if k == 0 || k == n {
            (k, true)
        } else {
            let max_kernel = eigvals[k - 1];
            let min_signal = eigvals[k];
            (k, max_kernel * 10.0 > min_signal)
        }
    };

    let cols: Vec<Vec<f64>> = (0..kernel_dims)
        .map(|c| (0..n).map(|r| eig.vectors[[r, c]]).collect())
        .collect();
    let gaussian = if kernel_dims == 0 {
        Subspace::trivial(n)
    } else {
        Subspace::from_orthonormal(cols, n).expect("eigenvectors are orthonormal")
    };
    let report = CumulantGram {
        order_set: orders.to_vec(),
        gram: (0..n).map(|i| (0..n).map(|j| gram[[i, j]]).collect()).collect(),
        eigvals,
        eigvecs: (0..n)
            .map(|c| (0..n).map(|r| eig.vectors[[r, c]]).collect())
            .collect(),
        noise_floor,
        };
    Ok(CumulantKernelOutcome { gaussian, report, degenerate_spectrum: degenerate })
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    }
}

/// Spectrum CSV: `index,eigenvalue`, ascending.
pub fn write_spectrum_csv(report: &CumulantGram, path: &Path) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "index,eigenvalue")?;
    for (i, l) in report.eigvals.iter().enumerate() {
        writeln!(f, "{i},{l:.12e}")?;
    }
    Ok(())
}

/// Gram of the same data under an orthogonal map Q, for equivariance audits:
/// returns `‖gram(QX) − Q·gram(X)·Qᵀ‖_F`.
pub fn equivariance_defect(
    s: &SampleSet,
    q: &Array2<f64>,
    orders: &[usize],
) -> Result<f64, CumulantError> {
    let n = s.ambient_dim();
    let rotated = SampleSet::new(s.data().dot(&q.t().to_owned()), s.seed());
    let g_base = cumulant_kernel(s, orders, 0.05)?.report.gram;
    let g_rot = cumulant_kernel(&rotated, orders, 0.05)?.report.gram;
    let mut base = Array2::<f64>::zeros((n, n));
    let mut rot = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            base[[i, j]] = g_base[i][j];
            rot[[i, j]] = g_rot[i][j];
        }
    }
    let conjugated = q.dot(&base).dot(&q.t());
    Ok(crate::linalg::fro_norm(&(&rot - &conjugated)))
}
