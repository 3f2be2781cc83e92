//! Positivity threshold for pencils `h_u = h1 + u h2`.
//!
//! Setting: W is a codimension-1 subspace on which h1 is positive definite and
//! h2 vanishes (h2 is transversally positive, hence rank one with kernel W).
//! With y normalized by h2(y, y) = 1 and y' the h1-representer of
//! `z -> h1(z, y)` on W, the pencil is positive definite exactly for
//! `u > u0 = h1(y', y') - h1(y, y)`; at u0 it is singular positive
//! semidefinite (Cauchy-Schwarz equality case).

use super::{cr, frob, CMatrix, CVector, HermitianForm};
use crate::error::{LckError, Result};
use crate::tol::ToleranceProfile;

#[derive(Debug, Clone)]
pub struct LemmaLinearInstance {
    pub dim: usize,
    /// Orthonormalized basis of W, n x (n-1).
    pub w_basis: CMatrix,
    pub h1: HermitianForm,
    pub h2: HermitianForm,
    /// Transversal vector with h2(y, y) = 1.
    pub y: CVector,
    /// h1-representer of the functional z -> h1(z, y) on W.
    pub y_prime: CVector,
    /// Positivity threshold: h1 + u h2 is positive definite iff u > u0.
    pub u0: f64,
}

impl LemmaLinearInstance {
    /// The pencil `h1 + u h2`.
    pub fn pencil(&self, u: f64) -> HermitianForm {
        HermitianForm::from_hermitized(self.h1.matrix() + self.h2.matrix() * cr(u))
    }
}

/// Orthonormalize columns (thin QR), rejecting rank-deficient input.
fn orthonormal_columns(w: &CMatrix) -> Result<CMatrix> {
    let qr = w.clone().qr();
    let r = qr.r();
    let scale = frob(w).max(f64::MIN_POSITIVE);
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)].norm() <= 1e-12 * scale {
            return Err(LckError::InvalidInput(
                "W basis is numerically rank deficient".into(),
            ));
        }
    }
    Ok(qr.q())
}

/// Deterministic unit vector spanning the orthogonal complement of the
/// (n-1)-dimensional column span of `b`.
fn complement_vector(b: &CMatrix) -> Result<CVector> {
    let n = b.nrows();
    let mut best: Option<CVector> = None;
    let mut best_norm = 0.0;
    for j in 0..n {
        let mut e = CVector::zeros(n);
        e[j] = cr(1.0);
        let proj = b * (b.adjoint() * &e);
        let residual = e - proj;
        let norm = residual.norm();
        if norm > best_norm {
            best_norm = norm;
            best = Some(residual);
        }
    }
    let v = best.filter(|_| best_norm > 1e-8).ok_or_else(|| {
        LckError::InvalidInput("could not construct a complement direction for W".into())
    })?;
    Ok(&v / cr(v.norm()))
}

/// Compute the Lemma-linear data (y, y', u0) for the pencil `h1 + u h2`.
pub fn lemma_linear_u0(
    h1: &HermitianForm,
    h2: &HermitianForm,
    w: &CMatrix,
    tol: &ToleranceProfile,
) -> Result<LemmaLinearInstance> {
    let n = h1.dim();
    if h2.dim() != n || w.nrows() != n || w.ncols() != n - 1 {
        return Err(LckError::InvalidInput(format!(
            "dimension mismatch: h1 {}x{}, h2 {}x{}, W {}x{}",
            n,
            n,
            h2.dim(),
            h2.dim(),
            w.nrows(),
            w.ncols()
        )));
    }

    let basis = orthonormal_columns(w)?;

    // h1 restricted to W must be positive definite.
    let restricted = HermitianForm::from_hermitized(basis.adjoint() * h1.matrix() * &basis);
    let min_eig = restricted.min_eig();
    if min_eig <= 0.0 {
        return Err(LckError::DegenerateW { min_eig });
    }

    // W must lie in the kernel of h2 (rank-one transversal form).
    let h2w = h2.matrix() * &basis;
    let kernel_residual = frob(&h2w);
    let kernel_bound = tol.hermitian_rel.max(1e-10) * frob(h2.matrix()).max(1.0);
    if kernel_residual > kernel_bound {
        return Err(LckError::InvalidInput(format!(
            "h2 does not vanish on W (residual {kernel_residual:.3e})"
        )));
    }

    let nu = complement_vector(&basis)?;
    let transversal = h2.quad(&nu);
    if transversal <= 0.0 {
        return Err(LckError::InvalidInput(format!(
            "h2 is not positive transversally to W (value {transversal:.3e})"
        )));
    }
    let y = &nu / cr(transversal.sqrt());

    // Representer: (B* H1 B) c = B* H1 y, y' = B c.
    let rhs = basis.adjoint() * h1.matrix() * &y;
    let coeffs = restricted
        .matrix()
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(LckError::DegenerateW { min_eig })?;
    let y_prime = &basis * coeffs;

    let u0 = h1.quad(&y_prime) - h1.quad(&y);

    Ok(LemmaLinearInstance {
        dim: n,
        w_basis: basis,
        h1: h1.clone(),
        h2: h2.clone(),
        y,
        y_prime,
        u0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    fn e2_outer() -> HermitianForm {
        HermitianForm::from_hermitized(CMatrix::from_row_slice(
            2,
            2,
            &[cr(0.0), cr(0.0), cr(0.0), cr(1.0)],
        ))
    }

    fn span_e1() -> CMatrix {
        CMatrix::from_row_slice(2, 1, &[cr(1.0), cr(0.0)])
    }

    #[test]
    fn identity_h1_threshold() {
        let inst = lemma_linear_u0(&HermitianForm::identity(2), &e2_outer(), &span_e1(), &tol())
            .unwrap();
        assert!((inst.u0 - (-1.0)).abs() < 1e-14);
        assert!(inst.y_prime.norm() < 1e-14);
        assert!((inst.y.norm() - 1.0).abs() < 1e-14);
        // eigenvalue sweep over a u grid confirms the threshold
        for (u, expect_pd) in [(-0.999, true), (-0.5, true), (-1.001, false), (-2.0, false)] {
            assert_eq!(inst.pencil(u).is_positive_definite(), expect_pd, "u = {u}");
        }
    }

    #[test]
    fn correlated_h1_threshold_and_kernel() {
        let h1 = HermitianForm::from_hermitized(CMatrix::from_row_slice(
            2,
            2,
            &[cr(1.0), cr(1.0), cr(1.0), cr(3.0)],
        ));
        let inst = lemma_linear_u0(&h1, &e2_outer(), &span_e1(), &tol()).unwrap();
        assert!((inst.u0 - (-2.0)).abs() < 1e-14);
        assert!((&inst.y_prime - CVector::from_vec(vec![cr(1.0), cr(0.0)])).norm() < 1e-14);
        // determinant criterion: det(h1 + u h2) = (3 + u) - 1 > 0 iff u > -2
        let at_threshold = inst.pencil(inst.u0);
        assert!(at_threshold.min_eig().abs() < 1e-12);
        let kernel = CVector::from_vec(vec![cr(1.0), cr(-1.0)]);
        assert!((at_threshold.matrix() * &kernel).norm() < 1e-12);
    }

    #[test]
    fn scaling_h2_rescales_threshold() {
        let h1 = HermitianForm::from_hermitized(CMatrix::from_row_slice(
            2,
            2,
            &[cr(1.0), cr(1.0), cr(1.0), cr(3.0)],
        ));
        let h2_scaled = HermitianForm::from_hermitized(e2_outer().matrix() * cr(4.0));
        let inst = lemma_linear_u0(&h1, &h2_scaled, &span_e1(), &tol()).unwrap();
        // threshold in u is quartered: pd iff u > -1/2
        assert!((inst.u0 - (-0.5)).abs() < 1e-14);
    }

    #[test]
    fn degenerate_w_is_reported() {
        let h1 = HermitianForm::from_hermitized(CMatrix::from_row_slice(
            2,
            2,
            &[cr(-1.0), cr(0.0), cr(0.0), cr(1.0)],
        ));
        assert!(matches!(
            lemma_linear_u0(&h1, &e2_outer(), &span_e1(), &tol()),
            Err(LckError::DegenerateW { .. })
        ));
    }

    #[test]
    fn complex_instance_threshold_is_tight() {
        // h1 with complex cross terms, still pd on W = span(e1, e2) in C^3
        let h1 = HermitianForm::from_hermitized(CMatrix::from_row_slice(
            3,
            3,
            &[
                cr(2.0),
                c(0.3, 0.4),
                c(0.1, -0.2),
                c(0.3, -0.4),
                cr(1.5),
                c(0.0, 0.5),
                c(0.1, 0.2),
                c(0.0, -0.5),
                cr(-0.25),
            ],
        ));
        let mut h2m = CMatrix::zeros(3, 3);
        h2m[(2, 2)] = cr(2.0);
        let h2 = HermitianForm::from_hermitized(h2m);
        let w = CMatrix::from_row_slice(
            3,
            2,
            &[cr(1.0), cr(0.0), cr(0.0), cr(1.0), cr(0.0), cr(0.0)],
        );
        let inst = lemma_linear_u0(&h1, &h2, &w, &tol()).unwrap();
        let at = inst.pencil(inst.u0);
        assert!(at.min_eig().abs() < 1e-12, "min eig {}", at.min_eig());
        assert!(inst.pencil(inst.u0 + 1e-6).is_positive_definite());
        assert!(!inst.pencil(inst.u0 - 1e-6).is_positive_definite());
    }
}
