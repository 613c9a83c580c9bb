//! Small dense symmetric linear algebra: cyclic Jacobi eigendecomposition and
//! the symmetric inverse square root used for whitening.
//!
//! Matrices here are at most a few dozen rows, so the O(n³)-per-sweep Jacobi
//! iteration is plenty and avoids a LAPACK dependency. The rotation order is
//! fixed, which keeps results bit-reproducible across runs.

use ndarray::{Array1, Array2};

/// Eigendecomposition of a symmetric matrix.
///
/// `values` ascending, `vectors` column `i` paired with `values[i]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Panics if `a` is not square. Off-diagonal asymmetry up to 1e-9 is
/// tolerated and symmetrized away.
pub fn sym_eigen(a: &Array2<f64>) -> SymEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen: matrix must be square");
    let mut m = a.clone();
    // Symmetrize to guard against roundoff in the caller.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = avg;
            m[[j, i]] = avg;
        }
    }
    let mut v = Array2::<f64>::eye(n);
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let tol = 1e-14 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]].abs();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= tol / (n * n) as f64 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[[i, i]].partial_cmp(&m[[j, j]]).unwrap());
    let values = Array1::from_iter(idx.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (col, &i) in idx.iter().enumerate() {
        // Sign convention: largest-magnitude entry positive, for determinism.
        let mut lead = 0usize;
        for k in 0..n {
            if v[[k, i]].abs() > v[[lead, i]].abs() {
                lead = k;
            }
        }
        let sgn = if v[[lead, i]] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[[k, col]] = sgn * v[[k, i]];
        }
    }
    SymEigen { values, vectors }
}

/// Symmetric inverse square root `A^{-1/2}` of a positive definite matrix.
///
/// Returns `None` if the smallest eigenvalue is at or below `min_eig`.
pub fn sym_inv_sqrt(a: &Array2<f64>, min_eig: f64) -> Option<Array2<f64>> {
    let eig = sym_eigen(a);
    if eig.values.iter().any(|&l| l <= min_eig) {
        return None;
    }
    let n = a.nrows();
    let mut out = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        let w = 1.0 / eig.values[k].sqrt();
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] += w * eig.vectors[[i, k]] * eig.vectors[[j, k]];
            }
        }
    }
    Some(out)
}

/// Frobenius norm of a matrix.
pub fn fro_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
