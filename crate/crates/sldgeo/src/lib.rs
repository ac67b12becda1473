//! SLD information geometry on manifolds of strictly positive density operators.
//!
//! The library implements the symmetric-logarithmic-derivative (SLD) structure on
//! the manifold `S(H)` of strictly positive density operators over a
//! finite-dimensional Hilbert space: the SLD Fisher metric, the dual pair of
//! e/m affine connections, parallel transports, the (non-vanishing) torsion of
//! the e-connection, and exact e-geodesics. On top of that geometric core it
//! provides
//!
//! - deciders and constructors for e-autoparallel submanifolds: the
//!   observable-certificate test, involutivity of e-parallel distributions,
//!   quasi-classical exponential families, and the dimension-three
//!   counterexample where involutivity fails;
//! - quantum estimation machinery: POVM estimators and their moments, local
//!   unbiasedness, the SLD Cramér-Rao gap, randomized locally unbiased
//!   estimators, efficient filtrations, and efficient estimation of scalar
//!   functions;
//! - closed-form qubit formulas (Bloch parametrization, analytic SLDs,
//!   semi-ellipse geodesics, semi-ellipsoid surfaces) that serve as the exact
//!   oracle layer for everything else.
//!
//! All state-producing operations validate positivity and unit trace. Values
//! are immutable after construction and all operations are pure functions, so
//! everything is safe to share across threads. Grid and Monte-Carlo loops are
//! data-parallel via rayon when the default `parallel` feature is enabled and
//! fall back to sequential iteration otherwise.

use thiserror::Error;

pub use nalgebra;

pub mod autoparallel;
pub mod catalog;
pub mod estimation;
pub mod manifold;
pub mod operator;
pub mod qubit;
pub mod rng;

mod exec;

pub use autoparallel::{
    check_e_autoparallel_m_affine, counterexample_dim_ge3, involutivity_check,
    parallel_field_dimension, quasi_exponential_state, real_subspace, AutoparallelReport,
    AutoparallelWitness, InvolutivityReport,
};
pub use estimation::{
    build_filtration, build_local_random_estimator, check_locally_unbiased, cr_gap,
    efficient_function_space_dim, estimator_moments, monte_carlo_moments,
    scalar_efficient_estimator, DiscreteEstimator, FiltrationSpec, McMoments,
};
pub use manifold::{
    e_covariant_derivative, e_geodesic, e_transport, m_transport, torsion, FisherMatrix,
    ParametricModel, TangentVector,
};
pub use operator::{
    expectation, sld_inner, solve_sld, sym_product, tensor_power_operator, DensityOperator,
    HermitianOperator, OperatorSubspace,
};
pub use qubit::{BlochVector, GeodesicParams};

/// Hermiticity tolerance enforced at construction.
pub const HERM_TOL: f64 = 1e-12;
/// Strict-positivity floor for density-operator eigenvalues.
pub const POS_TOL: f64 = 1e-10;
/// Unit-trace tolerance for density operators.
pub const TRACE_TOL: f64 = 1e-12;
/// Relative residual bound for the SLD solver round trip.
pub const SLD_RESIDUAL_TOL: f64 = 1e-9;
/// Eigenvalue-pair-sum floor below which the SLD solve is refused.
pub const SLD_SINGULAR_TOL: f64 = 1e-12;
/// Singular-value cutoff (relative to the largest) for subspace ranks.
pub const SUBSPACE_RANK_CUTOFF: f64 = 1e-10;
/// Overflow guard on `|theta| * ||F||` in operator exponentials.
pub const EXP_ARG_GUARD: f64 = 700.0;
/// Largest total Hilbert-space dimension accepted for tensor-power lifts.
pub const TENSOR_DIM_GUARD: usize = 4096;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("state is not strictly positive (min eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("trace is {0}, expected 1 within {TRACE_TOL:.0e}")]
    InvalidTrace(f64),
    #[error("near-singular state: smallest eigenvalue pair sum {0:.3e}")]
    NearSingularState(f64),
    #[error("singular model: {0}")]
    SingularModel(String),
    #[error("point {0:?} lies outside the model domain")]
    OutsideDomain(Vec<f64>),
    #[error("dimension guard exceeded: {0} > {1}")]
    DimensionGuard(usize, usize),
    #[error("finite-difference step underflow near the domain boundary (axis {0})")]
    StepUnderflow(usize),
    #[error("basis is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("operators do not commute (max commutator norm {0:.3e})")]
    NotCommuting(f64),
    #[error("invalid estimator: {0}")]
    InvalidEstimator(String),
    #[error("estimator is not locally unbiased (defect {0:.3e})")]
    NotLocallyUnbiased(f64),
    #[error("too few samples: got {0}, need at least {1}")]
    TooFewSamples(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
