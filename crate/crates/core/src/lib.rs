//! Non-Gaussian component analysis: recover the non-Gaussian subspace of an
//! isotropic random vector from samples.
//!
//! The model: `X ∈ ℝⁿ` is isotropic (zero mean, identity covariance) and splits
//! as an independent sum of a standard Gaussian on a hidden subspace Γ and a
//! non-Gaussian component on Γ^⊥. Every one-dimensional marginal of the
//! non-Gaussian part differs from `N(0,1)` in at least one moment of order
//! ≤ r. The task is to estimate Γ^⊥ from samples.
//!
//! Two solvers are provided:
//!
//! * [`deflation`] — projected gradient descent on the unit sphere with the
//!   relative entropy of the 1-D marginal as contrast function
//!   ([`descent::grad_des`]), deflating one Gaussian direction at a time and
//!   returning the orthogonal complement ([`deflation::full_alg`]).
//! * [`cumulant`] — a spectral baseline: Gaussian directions annihilate all
//!   joint cumulants of order ≥ 3, so the Gaussian subspace is the kernel of
//!   the Gram matrix of the flattened order-3/4 cumulant tensors.
//!
//! Supporting machinery: dense subspace algebra ([`subspace`]), a planted
//! instance generator with closed-form moment oracles ([`instance`], [`laws`]),
//! histogram entropy estimation with analytic oracles ([`entropy`]), and
//! moment-gap diagnostics ([`moments`]).

pub mod cumulant;
pub mod deflation;
pub mod descent;
pub mod entropy;
pub mod instance;
pub mod laws;
pub mod linalg;
pub mod moments;
pub mod quad;
pub mod sample;
pub mod subspace;

pub(crate) mod stats;

pub use deflation::{full_alg, FullConfig, NgcaResult};
pub use descent::{grad_des, DescentConfig, DescentOutcome, DescentStatus};
pub use entropy::{relative_entropy, EntropyEstimate, HistogramConfig};
pub use instance::{draw_samples, synthesize_instance, NgcaInstance};
pub use laws::NonGaussianLaw;
pub use sample::SampleSet;
pub use subspace::{Subspace, UnitVector};
