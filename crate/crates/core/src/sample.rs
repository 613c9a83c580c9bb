//! Sample matrices with provenance: whitening, Gaussian smoothing, projection
//! during deflation, 1-D marginals, and (de)serialization.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::sym_inv_sqrt;
use crate::subspace::{Subspace, UnitVector};

const MAGIC: &[u8; 4] = b"NGCA";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("empirical covariance is numerically singular (min eigenvalue <= 1e-10)")]
    SingularCovariance,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad sample file: {0}")]
    BadFormat(String),
    #[error("parse error at row {row}, column {col}")]
    Parse { row: usize, col: usize },
}

/// One entry in the provenance chain of a [`SampleSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum Transform {
    Whiten,
    Smooth { t: f64 },
    Project { from_dim: usize, to_dim: usize },
    External,
}

/// An N×n matrix of samples plus the seed and transform chain that produced it.
#[derive(Debug, Clone)]
pub struct SampleSet {
    data: Array2<f64>,
    seed: u64,
    lineage: Vec<Transform>,
}

impl SampleSet {
    pub fn new(data: Array2<f64>, seed: u64) -> Self {
        Self { data, seed, lineage: Vec::new() }
    }

    pub fn external(data: Array2<f64>) -> Self {
        Self { data, seed: 0, lineage: vec![Transform::External] }
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn ambient_dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lineage(&self) -> &[Transform] {
        &self.lineage
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub(crate) fn push_transform(mut self, t: Transform) -> Self {
        self.lineage.push(t);
        self
    }

    /// Empirical mean vector.
    pub fn empirical_mean(&self) -> Array1<f64> {
        let n = self.len() as f64;
        self.data.t().dot(&Array1::from_elem(self.len(), 1.0 / n))
    }

    /// Empirical covariance (1/N normalization, about the empirical mean).
    pub fn empirical_covariance(&self) -> Array2<f64> {
        let mu = self.empirical_mean();
        let n = self.len() as f64;
        let d = self.ambient_dim();
        let mut cov = Array2::<f64>::zeros((d, d));
        for row in self.data.rows() {
            for i in 0..d {
                let di = row[i] - mu[i];
                for j in i..d {
                    cov[[i, j]] += di * (row[j] - mu[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                cov[[i, j]] /= n;
                cov[[j, i]] = cov[[i, j]];
            }
        }
        cov
    }
}

/// Center and whiten: output has empirical mean exactly 0 and empirical
/// covariance I (to roundoff) via the symmetric inverse square root of the
/// sample covariance. Returns the applied transform matrix.
pub fn isotropize(s: &SampleSet) -> Result<(SampleSet, Array2<f64>), SampleError> {
    let n = s.ambient_dim();
    let cov = s.empirical_covariance();
    let w = sym_inv_sqrt(&cov, 1e-10).ok_or(SampleError::SingularCovariance)?;
    let mu = s.empirical_mean();
    let mut out = Array2::<f64>::zeros((s.len(), n));
    for (r, row) in s.data.rows().into_iter().enumerate() {
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += w[[i, j]] * (row[j] - mu[j]);
            }
            out[[r, i]] = acc;
        }
    }
    let result = SampleSet { data: out, seed: s.seed, lineage: s.lineage.clone() }
        .push_transform(Transform::Whiten);
    Ok((result, w))
}

/// Ornstein–Uhlenbeck style smoothing: each row becomes
/// `√(1−t²)·row + t·g` with a fresh standard Gaussian g.
pub fn smooth_with_gaussian(s: &SampleSet, t: f64, rng: &mut impl Rng) -> SampleSet {
    assert!((0.0..1.0).contains(&t), "noise level t must be in [0, 1)");
    let keep = (1.0 - t * t).sqrt();
    let mut data = s.data.clone();
    if t > 0.0 {
        for mut row in data.rows_mut() {
            for x in row.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *x = keep * *x + t * g;
            }
        }
    }
    SampleSet { data, seed: s.seed, lineage: s.lineage.clone() }
        .push_transform(Transform::Smooth { t })
}

/// Express `P_v(x)` in an orthonormal basis of `v`; the ambient dimension
/// shrinks to dim(v).
pub fn project_samples(s: &SampleSet, v: &Subspace) -> Result<SampleSet, SampleError> {
    if v.ambient_dim() != s.ambient_dim() {
        return Err(SampleError::DimensionMismatch {
            expected: s.ambient_dim(),
            got: v.ambient_dim(),
        });
    }
    let b = v.basis_matrix();
    let data = s.data.dot(&b);
    Ok(SampleSet { data, seed: s.seed, lineage: s.lineage.clone() }.push_transform(
        Transform::Project { from_dim: s.ambient_dim(), to_dim: v.dim() },
    ))
}

/// The 1-D marginal ⟨row, u⟩ per row.
pub fn marginal(s: &SampleSet, u: &UnitVector) -> Result<Vec<f64>, SampleError> {
    if u.dim() != s.ambient_dim() {
        return Err(SampleError::DimensionMismatch { expected: s.ambient_dim(), got: u.dim() });
    }
    Ok(s
        .data
        .rows()
        .into_iter()
        .map(|row| crate::subspace::view_dot(row, u.coords()))
        .collect())
}

/// Marginal along an arbitrary (not necessarily unit) direction.
pub fn marginal_unnormalized(s: &SampleSet, dir: &[f64]) -> Result<Vec<f64>, SampleError> {
    if dir.len() != s.ambient_dim() {
        return Err(SampleError::DimensionMismatch { expected: s.ambient_dim(), got: dir.len() });
    }
    Ok(s
        .data
        .rows()
        .into_iter()
        .map(|row| crate::subspace::view_dot(row, dir))
        .collect())
}

/// Binary format: magic "NGCA", version u32, N u64, n u32, seed u64, then
/// row-major little-endian f64 data.
pub fn write_binary(s: &SampleSet, path: &Path) -> Result<(), SampleError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_all(&FORMAT_VERSION.to_le_bytes())?;
    f.write_all(&(s.len() as u64).to_le_bytes())?;
    f.write_all(&(s.ambient_dim() as u32).to_le_bytes())?;
    f.write_all(&s.seed.to_le_bytes())?;
    for row in s.data.rows() {
        for &x in row {
            f.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<SampleSet, SampleError> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SampleError::BadFormat("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    f.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != FORMAT_VERSION {
        return Err(SampleError::BadFormat(format!("unsupported version {version}")));
    }
    f.read_exact(&mut b8)?;
    let n_rows = u64::from_le_bytes(b8) as usize;
    f.read_exact(&mut b4)?;
    let n_cols = u32::from_le_bytes(b4) as usize;
    f.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    let mut data = Array2::<f64>::zeros((n_rows, n_cols));
    for r in 0..n_rows {
        for c in 0..n_cols {
            f.read_exact(&mut b8)?;
            data[[r, c]] = f64::from_le_bytes(b8);
        }
    }
    Ok(SampleSet { data, seed, lineage: Vec::new() })
}

/// CSV export, one row per sample, 17 significant digits.
pub fn write_csv(s: &SampleSet, path: &Path) -> Result<(), SampleError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for row in s.data.rows() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

/// Parse a rectangular numeric CSV into a sample set (lineage `External`).
pub fn read_csv(path: &Path, has_header: bool) -> Result<SampleSet, SampleError> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, has_header)
}

pub fn parse_csv(text: &str, has_header: bool) -> Result<SampleSet, SampleError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (ri, line) in text.lines().enumerate().skip(if has_header { 1 } else { 0 }) {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (ci, cell) in line.split(',').enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| SampleError::Parse { row: ri, col: ci })?;
            row.push(v);
        }
        if let Some(w) = width {
            if row.len() != w {
                return Err(SampleError::Parse { row: ri, col: row.len() });
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    let w = width.ok_or_else(|| SampleError::BadFormat("empty csv".into()))?;
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let data = Array2::from_shape_vec((rows.len(), w), flat)
        .map_err(|e| SampleError::BadFormat(e.to_string()))?;
    Ok(SampleSet::external(data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fro_norm;
    use crate::subspace::orthonormalize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian_set(n_rows: usize, n_cols: usize, seed: u64) -> SampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Array2::from_shape_fn((n_rows, n_cols), |_| rng.sample(StandardNormal));
        SampleSet::new(data, seed)
    }

    #[test]
    fn isotropize_is_exact() {
        let s = gaussian_set(2000, 4, 3);
        // Make it anisotropic first.
        let mut scaled = s.data().clone();
        for mut row in scaled.rows_mut() {
            row[0] *= 2.0;
            row[2] *= 0.5;
        }
        let s = SampleSet::new(scaled, 3);
        let (iso, transform) = isotropize(&s).unwrap();
        let mu = iso.empirical_mean();
        assert!(mu.iter().all(|x| x.abs() < 1e-12));
        let cov = iso.empirical_covariance();
        assert!(fro_norm(&(&cov - &Array2::<f64>::eye(4))) < 1e-10);
        // Transform ≈ diag(1/2, 1, 2, 1) up to sampling error.
        assert!((transform[[0, 0]] - 0.5).abs() < 0.1);
        assert!((transform[[2, 2]] - 2.0).abs() < 0.25);
        assert_eq!(iso.lineage(), &[Transform::Whiten]);
    }

    #[test]
    fn isotropize_rank_deficient_errors() {
        // N < n: covariance is singular.
        let s = gaussian_set(3, 5, 1);
        assert!(matches!(isotropize(&s), Err(SampleError::SingularCovariance)));
    }

    #[test]
    fn smooth_zero_noise_is_identity() {
        let s = gaussian_set(50, 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sm = smooth_with_gaussian(&s, 0.0, &mut rng);
        assert_eq!(s.data(), sm.data());
        assert_eq!(sm.lineage(), &[Transform::Smooth { t: 0.0 }]);
    }

    #[test]
    fn smooth_keeps_gaussian_gaussian() {
        // Gaussian input is a fixed point in distribution: marginals keep
        // Gaussian kurtosis for any t.
        let s = gaussian_set(100_000, 1, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        for t in [0.1, 0.5, 0.9] {
            let sm = smooth_with_gaussian(&s, t, &mut rng);
            let m: Vec<f64> = sm.data().column(0).to_vec();
            let mv = crate::moments::empirical_moments(&m, 4);
            assert!(mv.value(3).abs() <= 4.0 * mv.std_error(3));
            assert!((mv.value(4) - 3.0).abs() <= 4.0 * mv.std_error(4), "t={t}");
        }
    }

    #[test]
    fn smooth_preserves_unit_variance() {
        let s = gaussian_set(100_000, 2, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sm = smooth_with_gaussian(&s, 0.5, &mut rng);
        let cov = sm.empirical_covariance();
        let n = s.len() as f64;
        let err = fro_norm(&(&cov - &Array2::<f64>::eye(2)));
        assert!(err <= 8.0 * 2.0 / n.sqrt(), "cov error {err}");
    }

    #[test]
    fn project_full_space_preserves_geometry() {
        let s = gaussian_set(200, 3, 9);
        let full = orthonormalize(&[
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
        ])
        .unwrap();
        let p = project_samples(&s, &full).unwrap();
        assert_eq!(p.ambient_dim(), 3);
        // Pairwise inner products preserved by orthogonal change of basis.
        for i in [0usize, 17, 54] {
            for j in [3usize, 88, 199] {
                let a: f64 = s.data().row(i).dot(&s.data().row(j));
                let b: f64 = p.data().row(i).dot(&p.data().row(j));
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn project_onto_axis_is_column() {
        let s = gaussian_set(40, 3, 11);
        let e1 = orthonormalize(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let p = project_samples(&s, &e1).unwrap();
        assert_eq!(p.ambient_dim(), 1);
        for i in 0..40 {
            assert_eq!(p.data()[[i, 0]], s.data()[[i, 0]]);
        }
    }

    #[test]
    fn marginal_examples() {
        let s = gaussian_set(30, 3, 13);
        let u = UnitVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let m = marginal(&s, &u).unwrap();
        for i in 0..30 {
            assert_eq!(m[i], s.data()[[i, 0]]);
        }
        let neg = UnitVector::new(vec![-1.0, 0.0, 0.0]).unwrap();
        let mn = marginal(&s, &neg).unwrap();
        for i in 0..30 {
            assert_eq!(mn[i], -m[i]);
        }
        let bad = UnitVector::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(marginal(&s, &bad), Err(SampleError::DimensionMismatch { .. })));
    }

    #[test]
    fn binary_round_trip_bit_exact() {
        let s = gaussian_set(17, 5, 21);
        let dir = std::env::temp_dir().join("ngca_core_test_bin");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.ngca");
        write_binary(&s, &path).unwrap();
        let back = read_binary(&path).unwrap();
        assert_eq!(back.seed(), 21);
        assert_eq!(back.data(), s.data());
    }

    #[test]
    fn csv_round_trip_bit_exact() {
        let s = gaussian_set(9, 3, 23);
        let dir = std::env::temp_dir().join("ngca_core_test_csv");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.csv");
        write_csv(&s, &path).unwrap();
        let back = read_csv(&path, false).unwrap();
        assert_eq!(back.data(), s.data());
        assert_eq!(back.lineage(), &[Transform::External]);
    }

    #[test]
    fn csv_parse_error_reports_position() {
        let err = parse_csv("1.0,2.0\n3.0,oops\n", false).unwrap_err();
        match err {
            SampleError::Parse { row, col } => {
                assert_eq!((row, col), (1, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
