//! Python bindings for the NGCA core: planted instances, sample transforms,
//! the entropy estimator, and both subspace-recovery methods.

use ndarray::Array2;
use ngca_core::cumulant::cumulant_kernel;
use ngca_core::deflation::{full_alg, noise_level, termination_thresholds, FullConfig};
use ngca_core::entropy::{
    analytic_relative_entropy, default_config, relative_entropy_averaged, AnalyticTarget,
};
use ngca_core::instance::{draw_samples, synthesize_instance, NgcaInstance};
use ngca_core::laws::NonGaussianLaw;
use ngca_core::sample::{isotropize, marginal, smooth_with_gaussian, SampleSet};
use ngca_core::subspace::{orthonormalize, subspace_distance, UnitVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn law_from_name(name: &str) -> PyResult<NonGaussianLaw> {
    Ok(match name {
        "uniform" => NonGaussianLaw::uniform(),
        "laplace_truncated" => NonGaussianLaw::laplace_truncated(),
        "two_point_smoothed" => NonGaussianLaw::two_point_smoothed(0.2),
        "gaussian_mixture_symmetric" => NonGaussianLaw::gaussian_mixture_symmetric(0.9),
        "exponential_truncated" => NonGaussianLaw::exponential_truncated(),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown law `{other}`; expected uniform, laplace_truncated, two_point_smoothed, \
                 gaussian_mixture_symmetric or exponential_truncated"
            )))
        }
    })
}

fn to_value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A planted NGCA instance with a hidden rotation.
#[pyclass(name = "Instance")]
struct PyInstance {
    inner: NgcaInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    fn new(n: usize, p: usize, laws: Vec<String>, r: usize, seed: u64) -> PyResult<Self> {
        let laws = laws
            .iter()
            .map(|name| law_from_name(name))
            .collect::<PyResult<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inner = synthesize_instance(n, p, laws, r, &mut rng).map_err(to_value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    #[getter]
    fn gaussian_dim(&self) -> usize {
        self.inner.gaussian_dim()
    }

    #[getter]
    fn moment_gap(&self) -> Option<f64> {
        self.inner.moment_gap()
    }

    #[getter]
    fn subgaussian_k(&self) -> f64 {
        self.inner.subgaussian_k()
    }

    /// Orthonormal basis (list of columns) of the true non-Gaussian subspace.
    fn gamma_perp_basis(&self) -> Vec<Vec<f64>> {
        self.inner.gamma_perp().basis_columns().to_vec()
    }

    /// Draw N samples deterministically under the given seed.
    fn draw(&self, n_samples: usize, seed: u64) -> PySampleSet {
        PySampleSet { inner: draw_samples(&self.inner, n_samples, seed) }
    }
}

/// An N×n sample matrix with provenance.
#[pyclass(name = "SampleSet")]
struct PySampleSet {
    inner: SampleSet,
}

#[pymethods]
impl PySampleSet {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        if rows.is_empty() {
            return Err(PyValueError::new_err("need at least one row"));
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("rows must be rectangular"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), n), flat).map_err(to_value_err)?;
        Ok(Self { inner: SampleSet::external(data) })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.len(), self.inner.ambient_dim())
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner
            .data()
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect()
    }

    /// Center and whiten to exact empirical isotropy.
    fn isotropize(&self) -> PyResult<PySampleSet> {
        let (iso, _) = isotropize(&self.inner).map_err(to_value_err)?;
        Ok(PySampleSet { inner: iso })
    }

    /// Replace each row by sqrt(1-t^2)*row + t*g with fresh Gaussian g.
    fn smooth(&self, t: f64, seed: u64) -> PySampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PySampleSet { inner: smooth_with_gaussian(&self.inner, t, &mut rng) }
    }

    /// 1-D marginal along a unit direction.
    fn marginal(&self, direction: Vec<f64>) -> PyResult<Vec<f64>> {
        let u = UnitVector::normalized(direction).map_err(to_value_err)?;
        marginal(&self.inner, &u).map_err(to_value_err)
    }
}

/// Histogram estimate of the relative entropy (vs the standard Gaussian) of
/// a mean-zero, roughly unit-variance 1-D sample.
#[pyfunction]
#[pyo3(signature = (samples, subgaussian_k = 1.0))]
fn relative_entropy(samples: Vec<f64>, subgaussian_k: f64) -> PyResult<f64> {
    let cfg = default_config(samples.len().max(1_000), subgaussian_k.max(1.0), 0.1);
    Ok(relative_entropy_averaged(&samples, &cfg, 3)
        .map_err(to_value_err)?
        .value)
}

/// Exact relative entropy of a named menu law, by quadrature.
#[pyfunction]
fn law_relative_entropy(law: &str) -> PyResult<f64> {
    let law = law_from_name(law)?;
    analytic_relative_entropy(AnalyticTarget::Law(&law)).map_err(to_value_err)
}

/// Entropy-descent deflation. Returns (nongaussian_basis_columns,
/// per-level (accepted, final_entropy, final_grad_norm)).
#[pyfunction]
#[pyo3(signature = (samples, d_hint, k_hint, r, seed, max_iters = 400, restarts = 5))]
#[allow(clippy::type_complexity)]
fn recover_entropy(
    samples: &PySampleSet,
    d_hint: f64,
    k_hint: f64,
    r: usize,
    seed: u64,
    max_iters: usize,
    restarts: usize,
) -> PyResult<(Vec<Vec<f64>>, Vec<(bool, f64, f64)>)> {
    let mut cfg = FullConfig::for_samples(samples.inner.len(), d_hint, k_hint, r);
    cfg.descent.max_iters = max_iters;
    cfg.restarts_per_level = restarts;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let result = full_alg(&samples.inner, &cfg, &mut rng).map_err(to_value_err)?;
    let levels = result
        .levels
        .iter()
        .map(|l| (l.accepted, l.final_entropy, l.final_grad_norm))
        .collect();
    Ok((result.nongaussian_subspace.basis_columns().to_vec(), levels))
}

/// Cumulant-kernel baseline. Returns (nongaussian_basis_columns,
/// gram_eigenvalues_ascending).
#[pyfunction]
#[pyo3(signature = (samples, orders = vec![3, 4], kernel_tol = 0.05))]
fn recover_cumulant(
    samples: &PySampleSet,
    orders: Vec<usize>,
    kernel_tol: f64,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let outcome = cumulant_kernel(&samples.inner, &orders, kernel_tol).map_err(to_value_err)?;
    let complement = ngca_core::subspace::orthogonal_complement(&outcome.gaussian);
    Ok((complement.basis_columns().to_vec(), outcome.report.eigvals))
}

/// Frobenius distance between the projectors of two subspaces given by
/// basis columns (orthonormalized internally).
#[pyfunction]
fn projector_distance(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    let sa = orthonormalize(&a).map_err(to_value_err)?;
    let sb = orthonormalize(&b).map_err(to_value_err)?;
    subspace_distance(&sa, &sb).map_err(to_value_err)
}

/// Gaussian moment: 0 for odd k, (k-1)!! for even k.
#[pyfunction]
fn gaussian_moment(k: usize) -> f64 {
    ngca_core::moments::gaussian_moment(k)
}

/// Exact mixed-moment gap of t*Y + sqrt(1-t^2)*Z at order k, given the
/// moments M_1..M_k of Y.
#[pyfunction]
fn moment_mixing(moments_y: Vec<f64>, t: f64, k: usize) -> f64 {
    ngca_core::moments::moment_mixing(&moments_y, t, k)
}

/// Up-front smoothing level t' for a moment order bound r.
#[pyfunction]
fn smoothing_level(r: usize) -> f64 {
    noise_level(r)
}

/// Proof-driven (diagnostic) accept thresholds (eps1, eps2).
#[pyfunction]
fn proof_thresholds(d: f64, k: f64, r: usize, n: usize) -> (f64, f64) {
    termination_thresholds(d, k, r, n)
}

#[pymodule]
fn ngca_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySampleSet>()?;
    m.add_function(wrap_pyfunction!(relative_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(law_relative_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(recover_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(recover_cumulant, m)?)?;
    m.add_function(wrap_pyfunction!(projector_distance, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_moment, m)?)?;
    m.add_function(wrap_pyfunction!(moment_mixing, m)?)?;
    m.add_function(wrap_pyfunction!(smoothing_level, m)?)?;
    m.add_function(wrap_pyfunction!(proof_thresholds, m)?)?;
    Ok(())
}
