//! Error types shared by every module.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, LckError>;

#[derive(Debug, Error)]
pub enum LckError {
    #[error("not a strict contraction: eigenvalue {eigenvalue} has modulus {modulus:.6} >= 1")]
    NotContraction { eigenvalue: Complex64, modulus: f64 },

    #[error("singular map: eigenvalue modulus {modulus:.3e} below {threshold:.3e}")]
    Singular { modulus: f64, threshold: f64 },

    #[error("eigenvalue {eigenvalue} lies within {distance:.3e} of the log branch cut (arg = pi)")]
    BranchAmbiguity { eigenvalue: Complex64, distance: f64 },

    #[error("matrix is not diagonalizable (eigenbasis condition {condition:.3e} exceeds {limit:.3e})")]
    NotDiagonalizable { condition: f64, limit: f64 },

    #[error("linear system too ill-conditioned: estimate {condition:.3e} exceeds {limit:.3e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("h1 is not positive definite on W (min eigenvalue {min_eig:.3e})")]
    DegenerateW { min_eig: f64 },

    #[error("point is not on the shell: |F - 1| = {deviation:.3e}")]
    NotOnShell { deviation: f64 },

    #[error("defining-function gradient degenerate at the given point (norm {norm:.3e})")]
    DegenerateGradient { norm: f64 },

    #[error("shell is not admissible for this flow: {reason}")]
    Inadmissible { reason: String },

    #[error("no sign change found while bracketing the orbit crossing (walked |t| <= {limit})")]
    NoBracket { limit: f64 },

    #[error("root solver exceeded {limit} iterations (last residual {residual:.3e})")]
    MaxIterations { limit: usize, residual: f64 },

    #[error("orbit crossing is degenerate: |dF/dt| = {derivative:.3e} below guard")]
    DegenerateCrossing { derivative: f64 },

    #[error("point too close to the origin for the finite-difference step ({norm:.3e} vs step {step:.3e})")]
    StepUnderflow { norm: f64, step: f64 },

    #[error("plurisubharmonicity fails at the top of the lambda bracket ({lambda_top})")]
    BracketNotPsh { lambda_top: f64 },

    #[error("homothety ratio is not constant across samples (spread {spread:.3e} exceeds {tolerance:.3e})")]
    NonConstantRatio { spread: f64, tolerance: f64 },

    #[error("finite-difference noise above budget ({metric:.3e} > {budget:.3e}); result withheld")]
    NoiseDominated { metric: f64, budget: f64 },

    #[error("check unsupported in complex dimension {n}")]
    DimensionUnsupported { n: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical verification failed in {context}: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NumericalFailure {
        context: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
