//! Decide whether a finite-dimensional commutative algebra is an evolution
//! algebra, i.e. admits a basis `{e_i}` with `e_i e_j = 0` for `i ≠ j`.
//!
//! The algebra is given by structure constants `e_i e_j = Σ_k m_ijk e_k`.
//! Its structure matrices `(M_k)_ij = m_ijk` are symmetric, and a natural
//! basis exists exactly when they are simultaneously diagonalisable by
//! congruence after removing the annihilator. [`is_evolution_algebra`]
//! returns either a natural basis checked against the constants or a
//! refutation naming the failing invariant.
//!
//! Everything is generic over the real scalar `T` (`f32` or `f64`); the
//! aliases below fix `T = f64` unless suffixed with `32`.
//!
//! ```
//! use evolalg::{paper_example, is_evolution_algebra, DecisionOptions, ExampleId};
//!
//! let spec = paper_example::<f64>(ExampleId::Mendel(0.25)).unwrap();
//! let verdict = is_evolution_algebra(&spec, &DecisionOptions::default());
//! assert!(verdict.outcome.is_evolution());
//! ```

pub mod algebra;
pub mod corpus;
pub mod decision;
pub mod error;
pub mod matrix;
pub mod numkernel;
pub mod pencil;
pub mod scalar;
pub mod sdc;
pub mod sds;
pub mod tol;

pub use algebra::{AdaptedBasis, AlgebraSpec, Index3, MStructureSet, UncheckedSpec};
pub use corpus::{
    adversarial_instance, example_fixture, paper_example, planted_evolution_algebra,
    AdversarialInstance, AdversarialKind, ExampleId, Fixture,
};
pub use decision::{
    check_certificate, explain, is_evolution_algebra, Branch, Certificate, CertificateCheck,
    DecisionOptions, Diagnostics, Outcome, Verdict,
};
pub use error::{AlgebraError, CorpusError, KernelError, SolverError, ToleranceError};
pub use matrix::{DenseMatrix, Field};
pub use pencil::{max_pencil_rank, Directions, LinearPencil, PencilRankWitness};
pub use scalar::{Real, C};
pub use sdc::{
    sdc_full_rank, sdc_reduced, verify_congruence, CongruenceCheck, Refutation, SdcResult,
};
pub use sds::{are_sds, common_eigenbasis, SdsResult, SdsWitness};
pub use tol::ToleranceContext;

pub type Matrix = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type Algebra = AlgebraSpec<f64>;
pub type Algebra32 = AlgebraSpec<f32>;
pub type Tolerances = ToleranceContext<f64>;
pub type Tolerances32 = ToleranceContext<f32>;
pub type Complex = C<f64>;
