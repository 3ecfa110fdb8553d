//! Sub-Riemannian geodesic flow on SO(n).
//!
//! Skew-matrix algebra, inertia data and Hamiltonians, the Euler flow and
//! its integrators, sub-Riemannian Manakov integrals, numerical checks of
//! the bi-Hamiltonian structure, the Riemannian-to-sub-Riemannian limit,
//! and the closed-form SO(3) rolling ball.
//!
//! All pairings use `⟨A, B⟩ = -½ Tr(AB)`, and every gradient is the skew
//! matrix representing a differential under that pairing. With this choice
//! `grad H_sR = Ω` and the Euler flow is `Ṁ = [M, Ω]`.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod elliptic;
pub mod error;
pub mod exec;
pub mod flows;
pub mod limits;
pub mod manakov;
pub mod metrics;
pub mod poisson;
pub mod rolling;

pub use algebra::{DiffMatrix, SkewMatrix, Splitting};
pub use error::{Error, Result};
pub use exec::Execution;
pub use flows::{Integration, Scheme, Trajectory};
pub use manakov::{IntegralFamily, Observable};
pub use metrics::{MassKind, MassSpec};
pub use poisson::{Check, VerificationReport, Verifier};
pub use rolling::RollingParams;
