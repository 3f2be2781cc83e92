//! Continuous Lyapunov solve `L* P + P L = -I` by dense vectorization.
//!
//! At desk scale the n^2 x n^2 system is solved directly with LU; a one-norm
//! condition estimate guards against silently inaccurate solutions.

use super::{cr, frob, schur, CMatrix, CVector, FlowGenerator, HermitianForm, SchurFactors};
use crate::error::{LckError, Result};
use crate::tol::ToleranceProfile;

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve `L* P + P L = -I` for Hermitian positive definite P.
pub fn solve_lyapunov(flow: &FlowGenerator, tol: &ToleranceProfile) -> Result<HermitianForm> {
    let l = flow.generator();
    let n = l.nrows();

    let abscissa = flow.spectral_abscissa()?;
    if abscissa >= 0.0 {
        return Err(LckError::InvalidInput(format!(
            "Lyapunov solve needs a stable generator; spectral abscissa = {abscissa:.3e}"
        )));
    }

    // vec(L* P) + vec(P L) = (I (x) L* + L^T (x) I) vec(P), column stacking.
    let id = CMatrix::identity(n, n);
    let system = kron(&id, &l.adjoint()) + kron(&l.transpose(), &id);
    let rhs = CVector::from_iterator(
        n * n,
        (0..n * n).map(|idx| if idx % (n + 1) == 0 { cr(-1.0) } else { cr(0.0) }),
    );

    let lu = system.clone().lu();
    let inv = lu.try_inverse().ok_or(LckError::IllConditioned {
        condition: f64::INFINITY,
        limit: tol.lyapunov_cond_limit,
    })?;
    let condition = one_norm(&system) * one_norm(&inv);
    if !condition.is_finite() || condition > tol.lyapunov_cond_limit {
        return Err(LckError::IllConditioned {
            condition,
            limit: tol.lyapunov_cond_limit,
        });
    }
    let p_vec = &inv * rhs;

    let mut p = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            p[(i, j)] = p_vec[j * n + i];
        }
    }
    let p = HermitianForm::from_hermitized(p);

    let residual = frob(&(l.adjoint() * p.matrix() + p.matrix() * l + id));
    if residual > tol.lyapunov_residual {
        return Err(LckError::NumericalFailure {
            context: "solve_lyapunov: identity residual",
            residual,
            tolerance: tol.lyapunov_residual,
        });
    }
    if !p.is_positive_definite() {
        return Err(LckError::NumericalFailure {
            context: "solve_lyapunov: P not positive definite",
            residual: p.min_eig(),
            tolerance: 0.0,
        });
    }
    Ok(p)
}

/// Stability check used by property tests: all eigenvalues strictly left.
pub fn is_stable(m: &CMatrix) -> Result<bool> {
    let SchurFactors { t, .. } = schur(m)?;
    Ok((0..t.nrows()).all(|i| t[(i, i)].re < 0.0))
}
