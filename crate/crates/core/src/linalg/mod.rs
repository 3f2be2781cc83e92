//! Complex dense linear algebra: spectra of contractions, principal matrix
//! logarithms, Lyapunov solves and Hermitian-form positivity certification.
//!
//! Everything here works at desk scale (n <= ~8); dense algorithms are chosen
//! for robustness, not asymptotics.

mod lemma;
mod logm;
mod lyapunov;

pub use lemma::{lemma_linear_u0, LemmaLinearInstance};
pub use logm::principal_log;
pub use lyapunov::{is_stable, solve_lyapunov};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{LckError, Result};
use crate::tol::ToleranceProfile;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub(crate) fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Frobenius norm.
#[inline]
pub fn frob(m: &CMatrix) -> f64 {
    m.norm()
}

/// Unconjugated dot product `sum_j a_j b_j`.
#[inline]
pub(crate) fn dot_unconj(a: &CVector, b: &CVector) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Matrix exponential (scaling-and-squaring Padé, via nalgebra).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.exp()
}

// ---------------------------------------------------------------------------
// Schur decomposition and eigenvector extraction
// ---------------------------------------------------------------------------

pub(crate) struct SchurFactors {
    pub q: CMatrix,
    pub t: CMatrix,
}

pub(crate) fn schur(a: &CMatrix) -> Result<SchurFactors> {
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| LckError::InvalidInput("Schur iteration failed to converge".into()))?;
    let (q, t) = schur.unpack();
    Ok(SchurFactors { q, t })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    let se = nalgebra::linalg::SymmetricEigen::try_new(h.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| LckError::InvalidInput("Hermitian eigensolve failed to converge".into()))?;
    let mut ev: Vec<f64> = se.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Eigenvectors of an upper-triangular matrix by back substitution.
///
/// Near-equal diagonal entries are guarded LAPACK-style by a floor on the
/// divisor; defective matrices then surface as an ill-conditioned basis.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let floor = f64::EPSILON * frob(t).max(1.0) * n as f64;
    let mut v = CMatrix::zeros(n, n);
    for i in 0..n {
        let lam = t[(i, i)];
        let mut w = CVector::zeros(n);
        w[i] = cr(1.0);
        for j in (0..i).rev() {
            let mut num = c(0.0, 0.0);
            for k in j + 1..=i {
                num += t[(j, k)] * w[k];
            }
            let mut den = t[(j, j)] - lam;
            if den.norm() < floor {
                den = cr(floor);
            }
            w[j] = -num / den;
        }
        let norm = w.norm();
        for r in 0..n {
            v[(r, i)] = w[r] / cr(norm);
        }
    }
    v
}

/// Spectral condition number, via the Hermitian eigenvalues of `M* M`.
pub(crate) fn condition_number(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    match hermitian_eigenvalues(&gram) {
        Ok(ev) => {
            let min = ev.first().copied().unwrap_or(0.0);
            let max = ev.last().copied().unwrap_or(0.0);
            if min <= 0.0 {
                f64::INFINITY
            } else {
                (max / min).sqrt()
            }
        }
        Err(_) => f64::INFINITY,
    }
}

// ---------------------------------------------------------------------------
// Contraction
// ---------------------------------------------------------------------------

/// A linear strict contraction of C^n together with its eigendata.
#[derive(Debug, Clone)]
pub struct Contraction {
    matrix: CMatrix,
    eigenvalues: Vec<Complex64>,
    diagonalizable: bool,
    eigenbasis: Option<CMatrix>,
    eigenbasis_inv: Option<CMatrix>,
    absolute_part: Option<CMatrix>,
    eigenbasis_condition: f64,
}

impl Contraction {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.diagonalizable
    }

    /// Eigenbasis Q with `A = Q diag(alpha) Q^-1`, when diagonalizable.
    pub fn eigenbasis(&self) -> Option<&CMatrix> {
        self.eigenbasis.as_ref()
    }

    pub fn eigenbasis_inv(&self) -> Option<&CMatrix> {
        self.eigenbasis_inv.as_ref()
    }

    /// `A_abs`: same eigenbasis, eigenvalues `|alpha_i|`.
    pub fn absolute_part(&self) -> Option<&CMatrix> {
        self.absolute_part.as_ref()
    }

    pub fn eigenbasis_condition(&self) -> f64 {
        self.eigenbasis_condition
    }
}

/// Validate a matrix as a strict invertible contraction and extract eigendata.
///
/// Diagonalizability is decided by the eigenvector-matrix condition number
/// against `tol.diag_cond_limit`; past that cliff `A_abs` and the canonical
/// transversal field are undefined and callers get `None`.
pub fn spectral_check(a: &CMatrix, tol: &ToleranceProfile) -> Result<Contraction> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(LckError::InvalidInput(format!(
            "expected a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(LckError::InvalidInput("matrix has non-finite entries".into()));
    }

    let n = a.nrows();
    let scale = frob(a).max(f64::MIN_POSITIVE);
    let SchurFactors { q, t } = schur(a)?;
    let eigenvalues: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    for &ev in &eigenvalues {
        if ev.norm() <= tol.singular_rel * scale {
            return Err(LckError::Singular {
                modulus: ev.norm(),
                threshold: tol.singular_rel * scale,
            });
        }
    }
    if let Some(&bad) = eigenvalues.iter().find(|e| e.norm() >= 1.0) {
        return Err(LckError::NotContraction {
            eigenvalue: bad,
            modulus: bad.norm(),
        });
    }

    let v = &q * triangular_eigenvectors(&t);
    let condition = condition_number(&v);
    let mut diagonalizable = condition.is_finite() && condition <= tol.diag_cond_limit;

    let mut eigenbasis = None;
    let mut eigenbasis_inv = None;
    let mut absolute_part = None;
    if diagonalizable {
        match v.clone().try_inverse() {
            Some(vinv) => {
                let d = CMatrix::from_diagonal(&CVector::from_iterator(
                    n,
                    eigenvalues.iter().copied(),
                ));
                let recon = &v * &d * &vinv;
                if frob(&(recon - a)) <= tol.reconstruct_rel * scale {
                    let d_abs = CMatrix::from_diagonal(&CVector::from_iterator(
                        n,
                        eigenvalues.iter().map(|e| cr(e.norm())),
                    ));
                    absolute_part = Some(&v * d_abs * &vinv);
                    eigenbasis = Some(v);
                    eigenbasis_inv = Some(vinv);
                } else {
                    diagonalizable = false;
                }
            }
            None => diagonalizable = false,
        }
    }

    Ok(Contraction {
        matrix: a.clone(),
        eigenvalues,
        diagonalizable,
        eigenbasis,
        eigenbasis_inv,
        absolute_part,
        eigenbasis_condition: condition,
    })
}

// ---------------------------------------------------------------------------
// Flow generator
// ---------------------------------------------------------------------------

/// Additive generator `L = log A` of the one-parameter flow `sigma(t) = exp(tL)`.
///
/// The flow contracts for t > 0 and the deck map is `sigma(step) = A` with the
/// default step 1.
#[derive(Debug, Clone)]
pub struct FlowGenerator {
    generator: CMatrix,
    step: f64,
}

impl FlowGenerator {
    pub fn new(generator: CMatrix, step: f64) -> Result<Self> {
        if step <= 0.0 || !step.is_finite() {
            return Err(LckError::InvalidInput("flow step must be positive".into()));
        }
        Ok(Self { generator, step })
    }

    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `sigma(t) = exp(tL)`.
    pub fn flow(&self, t: f64) -> CMatrix {
        expm(&(self.generator.clone() * cr(t)))
    }

    pub fn apply(&self, t: f64, z: &CVector) -> CVector {
        self.flow(t) * z
    }

    /// Largest real part in the spectrum of L (negative for contractions).
    pub fn spectral_abscissa(&self) -> Result<f64> {
        let SchurFactors { t, .. } = schur(&self.generator)?;
        Ok((0..t.nrows()).map(|i| t[(i, i)].re).fold(f64::NEG_INFINITY, f64::max))
    }
}

// ---------------------------------------------------------------------------
// Hermitian forms
// ---------------------------------------------------------------------------

/// A Hermitian form stored as its (hermitized) matrix.
///
/// Convention: `eval(a, b) = b^* H a`, so `quad(x) = x^* H x` is real.
#[derive(Debug, Clone)]
pub struct HermitianForm {
    matrix: CMatrix,
}

impl HermitianForm {
    pub fn new(m: CMatrix, tol: &ToleranceProfile) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(LckError::InvalidInput("Hermitian form must be square".into()));
        }
        let asym = frob(&(&m - m.adjoint()));
        let bound = tol.hermitian_rel * frob(&m).max(1.0);
        if asym > bound {
            return Err(LckError::NotHermitian {
                asymmetry: asym,
                tolerance: bound,
            });
        }
        Ok(Self::from_hermitized(m))
    }

    /// Wrap a matrix, forcing exact Hermiticity by averaging with its adjoint.
    pub fn from_hermitized(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()) * cr(0.5);
        Self { matrix: h }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `b^* H a`.
    pub fn eval(&self, a: &CVector, b: &CVector) -> Complex64 {
        (b.adjoint() * &self.matrix * a)[(0, 0)]
    }

    /// `x^* H x` (real for Hermitian H).
    pub fn quad(&self, x: &CVector) -> f64 {
        self.eval(x, x).re
    }

    /// Eigenvalues, ascending (all real).
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix).unwrap_or_else(|_| vec![f64::NAN])
    }

    pub fn min_eig(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::NAN)
    }

    pub fn max_eig(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(f64::NAN)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eig() > 0.0
    }
}

/// Smallest eigenvalue of a Hermitian form.
pub fn min_eig_hermitian(h: &HermitianForm) -> f64 {
    h.min_eig()
}
