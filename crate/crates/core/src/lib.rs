//! Operator-algebra engine for spin-chain Hamiltonians of the form
//! `H = N + eps * P`, where `N` is a diagonal number operator with integer
//! spectrum and `P` is an extensive local perturbation.
//!
//! The crate builds, through an iterative normal form, a pair of dressed
//! operators that are quasi-conserved under the exact dynamics, together
//! with certified error accounting for every truncation the finite
//! implementation performs. A dense exact-diagonalization harness measures
//! the resulting claims (integer spectrum, closeness, quasi-conservation,
//! commutativity, effective dynamics) on chains small enough to densify.
//!
//! Layout:
//! - [`lattice`]: sites and finite lattices.
//! - [`algebra`]: ladder/Z string operators, extensive operators, kappa-norms.
//! - [`truncation`]: truncation policy and the certified error ledger.
//! - [`homological`]: ad_N eigendecomposition and the homological equation.
//! - [`conjugation`]: truncated adjoint series `e^{-iG} A e^{iG}` with tail bounds.
//! - [`normal_form`]: the iterative scheme, dressing, and closed-form constants.
//! - [`dense`]: exact-diagonalization verification harness.
//! - [`ising`]: the shipped transverse-coupling Ising demo model.
//! - [`serialize`]: JSON-lines operator format.

pub mod algebra;
pub mod conjugation;
pub mod dense;
pub mod homological;
pub mod ising;
pub mod lattice;
pub mod normal_form;
pub mod serialize;
pub mod truncation;
pub mod util;

pub use algebra::{ExtensiveOperator, LadderString, Letter, LocalTerm, NumberOperator, Pattern};
pub use conjugation::{
    conjugate, lemma1_bound, lemma2_estimates, ConjugationReport, ConjugationSettings,
};
pub use dense::{DenseOperator, DriftCurve};
pub use homological::{ad_n_decompose, average_over_flow, solve_homological, AdEigenComponent};
pub use lattice::{Lattice, Site};
pub use normal_form::{
    compute_eps0, dress, run, step, DressDirection, NormalFormParams, NormalFormResult,
    NormalFormState, TheoryConstants,
};
pub use truncation::{truncate, ErrorLedger, LedgerEntry, TruncationPolicy};

/// Largest support size for which per-term operator norms are computed densely.
pub const MAX_DENSE_SUPPORT: usize = 14;

/// Largest lattice (site count) the dense harness will densify.
pub const MAX_DENSE_SITES: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("support of size {size} exceeds dense-norm capability ({max}); use a tighter truncation policy")]
    SupportTooLarge { size: usize, max: usize },
    #[error("lattice with {sites} sites exceeds dense capacity of {max} sites")]
    LatticeTooLarge { sites: usize, max: usize },
    #[error("densification requires a one-dimensional lattice, got d = {0}")]
    NotOneDimensional(usize),
    #[error("contraction ratio {ratio:.6e} exceeds eta_max = {eta_max} in {context}; shrink eps or enlarge the norm-index budget")]
    ContractionViolation {
        ratio: f64,
        eta_max: f64,
        context: String,
    },
    #[error("research mode required: eps = {eps:.6e} is not below eps0 = {eps0:.6e}; override n_star to proceed")]
    ResearchModeRequired { eps: f64, eps0: f64 },
    #[error("flow average needs M > {required} quadrature nodes, got {got}")]
    QuadratureNodes { required: usize, got: usize },
    #[error("matrix is not Hermitian: asymmetry {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("state vector is not normalized: | ||psi|| - 1 | = {defect:.3e}")]
    NotNormalized { defect: f64 },
    #[error("series did not settle below tolerance within {max_order} orders")]
    SeriesStalled { max_order: usize },
    #[error("normal-form step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("operator format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
