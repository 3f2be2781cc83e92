//! Principal matrix logarithm.
//!
//! Schur-based: `A = Q T Q^*` with T upper triangular, then inverse scaling
//! and squaring on T (repeated principal triangular square roots followed by
//! the log series). This keeps the principal branch — eigenvalue logs with
//! imaginary part in (-pi, pi] — and, unlike the pointwise Parlett recurrence,
//! survives repeated eigenvalues such as Jordan blocks.
//!
//! The branch cut is fixed along arg = pi; eigenvalues within `tol.branch_cut`
//! of the cut are reported as `BranchAmbiguity`, never silently resolved.

use num_complex::Complex64;

use super::{cr, expm, frob, schur, CMatrix, Contraction, FlowGenerator, SchurFactors};
use crate::error::{LckError, Result};
use crate::tol::ToleranceProfile;

/// Distance from z to the ray {arg = pi} (the closed nonpositive real axis).
fn distance_to_cut(z: Complex64) -> f64 {
    if z.re <= 0.0 {
        z.im.abs()
    } else {
        z.norm()
    }
}

/// Principal logarithm of a contraction, packaged as a flow generator.
pub fn principal_log(contraction: &Contraction, tol: &ToleranceProfile) -> Result<FlowGenerator> {
    for &ev in contraction.eigenvalues() {
        let distance = distance_to_cut(ev);
        if distance <= tol.branch_cut {
            return Err(LckError::BranchAmbiguity {
                eigenvalue: ev,
                distance,
            });
        }
    }

    let a = contraction.matrix();
    let SchurFactors { q, t } = schur(a)?;
    let log_t = log_triangular(t)?;
    let l = &q * log_t * q.adjoint();

    // A strict contraction must produce a generator with exp(L) = A.
    let residual = frob(&(expm(&l) - a));
    let bound = tol.exp_residual * frob(a).max(1.0);
    if residual > bound {
        return Err(LckError::NumericalFailure {
            context: "principal_log: exp(log A) residual",
            residual,
            tolerance: bound,
        });
    }
    FlowGenerator::new(l, 1.0)
}

/// Log of an upper-triangular matrix by inverse scaling and squaring.
fn log_triangular(mut t: CMatrix) -> Result<CMatrix> {
    let n = t.nrows();
    let id = CMatrix::identity(n, n);
    let mut square_roots = 0i32;
    while frob(&(&t - &id)) > 0.25 {
        if square_roots >= 64 {
            return Err(LckError::NumericalFailure {
                context: "log_triangular: square-root scaling did not converge",
                residual: frob(&(&t - &id)),
                tolerance: 0.25,
            });
        }
        t = sqrt_triangular(&t)?;
        square_roots += 1;
    }

    // log(I + X) = X - X^2/2 + X^3/3 - ...
    let x = &t - &id;
    let mut acc = x.clone();
    let mut power = x.clone();
    for m in 2..=64u32 {
        power = &power * &x;
        let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
        acc += &power * cr(sign / f64::from(m));
        if frob(&power) / f64::from(m) <= 1e-18 * frob(&acc).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(acc * cr(2f64.powi(square_roots)))
}

/// Principal square root of an upper-triangular matrix (superdiagonal
/// recurrence). Valid whenever the spectrum avoids the closed negative real
/// axis, which the branch-cut guard has already ensured.
fn sqrt_triangular(t: &CMatrix) -> Result<CMatrix> {
    let n = t.nrows();
    let mut u = CMatrix::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = cr(0.0);
            for k in i + 1..j {
                s += u[(i, k)] * u[(k, j)];
            }
            let den = u[(i, i)] + u[(j, j)];
            if den.norm() < 1e-300 {
                return Err(LckError::NumericalFailure {
                    context: "sqrt_triangular: vanishing divisor",
                    residual: den.norm(),
                    tolerance: 1e-300,
                });
            }
            u[(i, j)] = (t[(i, j)] - s) / den;
        }
    }
    Ok(u)
}
