//! Numerical laboratory for locally conformally Kähler (LCK) metric
//! potentials on linear Hopf manifolds.
//!
//! Given a linear strict contraction A of C^n, the quotient of C^n minus the
//! origin by the group generated by A is a Hopf manifold. This crate builds
//! the additive flow generated by log A, certifies that a chosen hypersurface
//! (sphere, ellipsoid, or Lyapunov-constructed ellipsoid) crosses each flow
//! orbit exactly once, solves for the orbit time of any point, and evaluates
//! the automorphic potential together with its Wirtinger derivative stack.
//! On top of that sit sampled verifications: plurisubharmonicity, the dd^c
//! power identity, the LCK identities for the associated forms, deck-map
//! pullback laws, and a decision procedure for the canonical Vaisman
//! candidate on diagonalizable contractions.
//!
//! The `pipeline` module orchestrates all checks from a declarative config
//! and emits machine-readable reports; the `lcklab` binary wraps it in a CLI.

pub mod config;
pub mod error;
pub mod forms;
pub mod linalg;
pub mod pipeline;
pub mod potential;
pub mod report;
pub mod sampling;
pub mod shell;
pub mod tol;
pub mod vaisman;
pub mod wirtinger;

pub use error::{LckError, Result};
pub use tol::ToleranceProfile;
