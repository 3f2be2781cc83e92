//! The Kähler form on the cover, the LCK form, the Lee form, and sampled
//! verification of the LCK identities and deck pullback laws.
//!
//! Dictionary, fixed once: a Hermitian matrix H in the mixed Wirtinger
//! convention `H[j][k] = d^2 phi / dz_j dz̄_k` corresponds to the real 2-form
//!
//! `Omega_H(u, v) = Im(u^* H^T v)`
//!
//! over real tangent vectors written as complex coordinate vectors. With this
//! normalization `i d d̄ phi = 2 Omega_H`, so Omega of a genuine mixed Hessian
//! field is closed, and H = I gives the flat form `sum dx_j ^ dy_j`. The
//! matrix representation (H itself) carries positivity; the component
//! representation below carries the exterior calculus. Real coordinates are
//! interleaved as in the `wirtinger` module.

use nalgebra::DMatrix;

use crate::error::{LckError, Result};
use crate::linalg::{cr, frob, CMatrix, CVector, HermitianForm};
use crate::potential::{worst_sample_of, PotentialField};
use crate::report::CheckReport;
use crate::wirtinger::shifted;

/// Everything the LCK structure attaches to one point.
#[derive(Debug, Clone)]
pub struct FormSample {
    pub point: CVector,
    /// Kähler form of the cover, `omega_tilde = dd^c phi`, as the mixed Hessian.
    pub omega_tilde: HermitianForm,
    /// LCK form `omega = omega_tilde / phi`.
    pub omega: HermitianForm,
    /// Lee form `theta = -d log phi = lambda dt`, real components (2n).
    pub theta: Vec<f64>,
    /// Deck automorphy factor of the potential, `exp(-lambda)`.
    pub automorphy_factor: f64,
}

#[derive(Debug, Clone)]
pub struct ExteriorResidual {
    pub point: CVector,
    pub residual_norm: f64,
    pub tolerance: f64,
    pub form_degree: u8,
    pub passed: bool,
}

/// Assemble `omega_tilde`, `omega` and `theta` at a point.
pub fn form_sample(field: &PotentialField, z: &CVector) -> Result<FormSample> {
    let sample = field.wirtinger_hessian(z)?;
    let lambda = field.lambda();
    let theta: Vec<f64> = sample.time_gradient.real.iter().map(|g| lambda * g).collect();
    let omega = HermitianForm::from_hermitized(sample.hessian.matrix() * cr(1.0 / sample.phi));
    Ok(FormSample {
        point: z.clone(),
        omega_tilde: sample.hessian,
        omega,
        theta,
        automorphy_factor: (-lambda).exp(),
    })
}

/// Real antisymmetric component matrix of the 2-form attached to H:
/// `W[a][b] = Omega_H(e_a, e_b)` over the interleaved real basis.
pub fn two_form_matrix(h: &CMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            // u = e_j, i e_j against v = e_k, i e_k with Omega = Im(u^* H^T v)
            let hkj = h[(k, j)];
            w[(2 * j, 2 * k)] = hkj.im;
            w[(2 * j, 2 * k + 1)] = hkj.re;
            w[(2 * j + 1, 2 * k)] = -hkj.re;
            w[(2 * j + 1, 2 * k + 1)] = hkj.im;
        }
    }
    w
}

/// Lee form components at a point.
fn theta_at(field: &PotentialField, z: &CVector) -> Result<Vec<f64>> {
    let tg = crate::shell::orbit_time_gradient(z, field.flow(), field.shell(), field.tolerances())?;
    Ok(tg.real.iter().map(|g| field.lambda() * g).collect())
}

/// `d theta = 0`: antisymmetrized finite-difference Jacobian of theta.
pub fn check_dtheta_zero(field: &PotentialField, z: &CVector) -> Result<ExteriorResidual> {
    let tol = field.tolerances();
    let n = z.len();
    let step = tol.fd_rel_step * z.norm().max(1.0);
    let dim = 2 * n;

    let mut jac = DMatrix::<f64>::zeros(dim, dim);
    for a in 0..dim {
        let tp = theta_at(field, &shifted(z, a, step))?;
        let tm = theta_at(field, &shifted(z, a, -step))?;
        for b in 0..dim {
            jac[(a, b)] = (tp[b] - tm[b]) / (2.0 * step);
        }
    }
    let antisym = &jac - jac.transpose();
    let residual_norm = antisym.norm();

    let theta0 = theta_at(field, z)?;
    let theta_norm = theta0.iter().map(|t| t * t).sum::<f64>().sqrt();
    // d(theta) carries one more inverse length than theta
    let tolerance = tol.dtheta_rel * theta_norm / z.norm().max(f64::MIN_POSITIVE);
    Ok(ExteriorResidual {
        point: z.clone(),
        residual_norm,
        tolerance,
        form_degree: 2,
        passed: residual_norm <= tolerance,
    })
}

/// `d omega = theta ^ omega`, componentwise over the real 3-form.
///
/// Restricted to n = 2 or 3; the dense 3-form storage is desk scale only.
pub fn check_lck_identity(field: &PotentialField, z: &CVector) -> Result<ExteriorResidual> {
    let n = z.len();
    if !(2..=3).contains(&n) {
        return Err(LckError::DimensionUnsupported { n });
    }
    let tol = field.tolerances();
    let step = tol.fd_rel_step * z.norm().max(1.0);
    let dim = 2 * n;

    let omega_matrix = |w: &CVector| -> Result<DMatrix<f64>> {
        let s = field.wirtinger_hessian(w)?;
        Ok(two_form_matrix(&(s.hessian.matrix() * cr(1.0 / s.phi))))
    };

    // partial_a of the component matrix, by central differences
    let mut domega = Vec::with_capacity(dim);
    for a in 0..dim {
        let wp = omega_matrix(&shifted(z, a, step))?;
        let wm = omega_matrix(&shifted(z, a, -step))?;
        domega.push((wp - wm) / (2.0 * step));
    }

    let center = omega_matrix(z)?;
    let theta = theta_at(field, z)?;

    let mut max_dev: f64 = 0.0;
    let mut max_scale: f64 = 0.0;
    for a in 0..dim {
        for b in a + 1..dim {
            for c in b + 1..dim {
                let d_abc = domega[a][(b, c)] - domega[b][(a, c)] + domega[c][(a, b)];
                let tw_abc =
                    theta[a] * center[(b, c)] - theta[b] * center[(a, c)] + theta[c] * center[(a, b)];
                max_dev = max_dev.max((d_abc - tw_abc).abs());
                max_scale = max_scale.max(tw_abc.abs()).max(d_abc.abs());
            }
        }
    }
    let residual_norm = max_dev / max_scale.max(f64::MIN_POSITIVE);
    Ok(ExteriorResidual {
        point: z.clone(),
        residual_norm,
        tolerance: tol.lck_rel,
        form_degree: 3,
        passed: residual_norm <= tol.lck_rel,
    })
}

/// Deck pullback laws in matrix form.
///
/// Differentiating `phi(A z) = exp(-lambda) phi(z)` twice gives the exact law
/// `A^T H(Az) conj(A) = exp(-lambda) H(z)`; dividing by the potential shows
/// the LCK form itself is deck-invariant. Both are checked in relative
/// Frobenius norm.
pub fn check_gamma_pullback(field: &PotentialField, z: &CVector) -> Result<CheckReport> {
    let tol = field.tolerances();
    let a = field.contraction().matrix();
    let az = a * z;

    let here = field.wirtinger_hessian(z)?;
    let there = field.wirtinger_hessian(&az)?;
    let factor = (-field.lambda()).exp();

    let pulled = a.transpose() * there.hessian.matrix() * a.conjugate();
    let expected = here.hessian.matrix() * cr(factor);
    let r_tilde = frob(&(&pulled - &expected)) / frob(&expected).max(f64::MIN_POSITIVE);

    // the LCK form itself descends: A^T Omega(Az) conj(A) = Omega(z)
    let pulled_omega = &pulled * cr(1.0 / there.phi);
    let omega_here = here.hessian.matrix() * cr(1.0 / here.phi);
    let r_omega =
        frob(&(&pulled_omega - &omega_here)) / frob(&omega_here).max(f64::MIN_POSITIVE);

    let residual = r_tilde.max(r_omega);
    Ok(CheckReport::from_residual(
        "pullback",
        residual <= tol.pullback_rel,
        residual,
        tol.pullback_rel,
        Some(worst_sample_of(z, residual)),
    ))
}

/// Measured homothety factor of the deck pullback (Frobenius ratio); equals
/// `exp(-lambda)` for a genuine automorphic potential.
pub fn pullback_factor(field: &PotentialField, z: &CVector) -> Result<f64> {
    let a = field.contraction().matrix();
    let az = a * z;
    let here = field.wirtinger_hessian(z)?;
    let there = field.wirtinger_hessian(&az)?;
    let pulled = a.transpose() * there.hessian.matrix() * a.conjugate();
    Ok(frob(&pulled) / frob(here.hessian.matrix()).max(f64::MIN_POSITIVE))
}

/// Residual of the gamma-invariance of theta: `theta_{Az} o A = theta_z`.
pub fn theta_invariance_residual(field: &PotentialField, z: &CVector) -> Result<f64> {
    let a = field.contraction().matrix();
    let az = a * z;
    let theta_here = theta_at(field, z)?;
    let theta_there = theta_at(field, &az)?;

    let n = z.len();
    let mut max_dev: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for idx in 0..2 * n {
        let dir = crate::wirtinger::real_basis_vector(n, idx);
        let adir = a * dir;
        let mut pulled = 0.0;
        for (b, coord) in crate::wirtinger::real_coordinates(&adir).iter().enumerate() {
            pulled += theta_there[b] * coord;
        }
        max_dev = max_dev.max((pulled - theta_here[idx]).abs());
        scale = scale.max(theta_here[idx].abs());
    }
    Ok(max_dev / scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, principal_log, spectral_check};
    use crate::potential::PotentialSetup;
    use crate::shell::ShellSpec;
    use crate::tol::ToleranceProfile;
    use num_complex::Complex64;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    fn field_for(a: CMatrix, lambda: f64) -> PotentialField {
        let contraction = spectral_check(&a, &tol()).unwrap();
        let flow = principal_log(&contraction, &tol()).unwrap();
        PotentialSetup::new(contraction, flow, ShellSpec::sphere(2), tol())
            .unwrap()
            .with_lambda(lambda)
            .unwrap()
    }

    fn radial_field() -> PotentialField {
        field_for(CMatrix::identity(2, 2) * cr(0.5), 2.0 * 2f64.ln())
    }

    fn v2(a: Complex64, b: Complex64) -> CVector {
        CVector::from_vec(vec![a, b])
    }

    #[test]
    fn flat_dictionary_components() {
        // H = I corresponds to sum dx_j ^ dy_j
        let w = two_form_matrix(&CMatrix::identity(2, 2));
        let mut expected = DMatrix::<f64>::zeros(4, 4);
        expected[(0, 1)] = 1.0;
        expected[(1, 0)] = -1.0;
        expected[(2, 3)] = 1.0;
        expected[(3, 2)] = -1.0;
        assert!((w - expected).norm() < 1e-15);
    }

    #[test]
    fn radial_form_sample_values() {
        let field = radial_field();
        let s = form_sample(&field, &v2(cr(1.0), cr(0.0))).unwrap();
        // omega_tilde = I, omega = I on the shell, theta = -d log |z|^2
        assert!(frob(&(s.omega_tilde.matrix() - CMatrix::identity(2, 2))) < 1e-6);
        assert!(frob(&(s.omega.matrix() - CMatrix::identity(2, 2))) < 1e-6);
        let expected_theta = [-2.0, 0.0, 0.0, 0.0];
        for (got, want) in s.theta.iter().zip(expected_theta) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!((s.automorphy_factor - 0.25).abs() < 1e-15);

        // z = (2, 0): omega = I/4 (Boothby-type shape)
        let s = form_sample(&field, &v2(cr(2.0), cr(0.0))).unwrap();
        assert!(frob(&(s.omega.matrix() - CMatrix::identity(2, 2) * cr(0.25))) < 1e-6);
    }

    #[test]
    fn omega_equals_omega_tilde_on_shell() {
        let field = field_for(
            CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.5), c(0.3, 0.2)])),
            1.9,
        );
        let z = v2(c(0.6, 0.0), c(0.0, 0.8));
        let s = form_sample(&field, &z).unwrap();
        assert!(frob(&(s.omega.matrix() - s.omega_tilde.matrix())) < 1e-6);
    }

    #[test]
    fn radial_dtheta_is_exact() {
        let field = radial_field();
        let res = check_dtheta_zero(&field, &v2(c(0.8, 0.1), c(-0.3, 0.5))).unwrap();
        assert!(res.passed);
        assert!(res.residual_norm <= 1e-8, "residual {}", res.residual_norm);
    }

    #[test]
    fn radial_lck_identity_holds_tightly() {
        let field = radial_field();
        for z in [
            v2(cr(1.0), cr(0.0)),
            v2(c(0.5, 0.5), c(0.5, -0.5)),
            v2(c(-0.9, 0.2), c(0.4, 1.1)),
        ] {
            let res = check_lck_identity(&field, &z).unwrap();
            assert!(res.passed);
            // pipeline calibration: radial case at least 10x tighter
            assert!(
                res.residual_norm <= res.tolerance / 10.0,
                "residual {} vs tol {}",
                res.residual_norm,
                res.tolerance
            );
        }
    }

    #[test]
    fn radial_theta_wedge_omega_closed_form() {
        // on the shell, d omega = theta ^ omega with theta = -2 r^-1 dr;
        // cross-check one component of theta ^ omega analytically at (1,0):
        // theta = (-2, 0, 0, 0), omega = flat form, so
        // (theta ^ omega)_{0,2,3} = theta_0 omega_{2,3} = -2.
        let field = radial_field();
        let z = v2(cr(1.0), cr(0.0));
        let s = form_sample(&field, &z).unwrap();
        let w = two_form_matrix(s.omega.matrix());
        let twedge = s.theta[0] * w[(2, 3)] - s.theta[2] * w[(0, 3)] + s.theta[3] * w[(0, 2)];
        assert!((twedge - (-2.0)).abs() < 1e-6, "got {twedge}");
    }

    #[test]
    fn pullback_scaling_radial() {
        let field = radial_field();
        let z = v2(c(0.7, -0.1), c(0.2, 0.9));
        let report = check_gamma_pullback(&field, &z).unwrap();
        assert!(report.passed(), "residual {}", report.residual);
        let factor = pullback_factor(&field, &z).unwrap();
        assert!((factor - 0.25).abs() < 1e-8);
    }

    #[test]
    fn iterated_deck_pullback_factor() {
        // pulling back through A^3 multiplies omega_tilde by e^{-3 lambda}
        let field = field_for(
            CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.5), cr(0.4)])),
            2.2,
        );
        let a = field.contraction().matrix().clone();
        let a3 = &a * &a * &a;
        let z = v2(c(0.5, 0.2), c(-0.6, 0.3));
        let z3 = &a3 * &z;
        let here = field.wirtinger_hessian(&z).unwrap();
        let there = field.wirtinger_hessian(&z3).unwrap();
        let pulled = a3.transpose() * there.hessian.matrix() * a3.conjugate();
        let expected = here.hessian.matrix() * cr((-3.0 * field.lambda()).exp());
        let rel = frob(&(&pulled - &expected)) / frob(&expected);
        assert!(rel < 1e-6, "relative deviation {rel}");
    }

    #[test]
    fn theta_is_deck_invariant() {
        let field = field_for(
            CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.5), c(0.3, 0.2)])),
            1.4,
        );
        let res = theta_invariance_residual(&field, &v2(c(0.4, 0.5), c(0.9, -0.3))).unwrap();
        assert!(res < 1e-6, "residual {res}");
    }
}
