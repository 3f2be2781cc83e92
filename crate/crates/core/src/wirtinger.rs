//! Real-coordinate conventions for Wirtinger calculus.
//!
//! A point z in C^n is identified with 2n real coordinates ordered
//! `(Re z_1, Im z_1, Re z_2, Im z_2, ...)`: real index 2j is Re z_j, real
//! index 2j+1 is Im z_j. The real basis vector for index 2j is `e_j`, for
//! index 2j+1 it is `i e_j`.

use num_complex::Complex64;

use crate::linalg::{c, CVector};

/// Complex vector realizing the real coordinate direction `a`.
pub fn real_basis_vector(n: usize, a: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[a / 2] = if a % 2 == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) };
    v
}

/// Interleaved real coordinates of a complex vector.
pub fn real_coordinates(z: &CVector) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * z.len());
    for v in z.iter() {
        out.push(v.re);
        out.push(v.im);
    }
    out
}

pub fn from_real_coordinates(x: &[f64]) -> CVector {
    assert!(x.len() % 2 == 0);
    CVector::from_iterator(x.len() / 2, x.chunks_exact(2).map(|p| c(p[0], p[1])))
}

/// Shift coordinate `a` of `z` by `step`.
pub fn shifted(z: &CVector, a: usize, step: f64) -> CVector {
    let mut out = z.clone();
    if a % 2 == 0 {
        out[a / 2] += c(step, 0.0);
    } else {
        out[a / 2] += c(0.0, step);
    }
    out
}

/// Real gradient (2n entries) of a real-valued function from its Wirtinger
/// gradient: d/dx_j = 2 Re(d/dz_j), d/dy_j = -2 Im(d/dz_j).
pub fn real_gradient_from_wirtinger(dz: &CVector) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * dz.len());
    for v in dz.iter() {
        out.push(2.0 * v.re);
        out.push(-2.0 * v.im);
    }
    out
}

/// Wirtinger derivative d/dz̄_k of a complex-valued quantity from its partial
/// derivatives along x_k and y_k: `(d/dx + i d/dy) / 2`.
pub fn dbar_from_real_parts(dx: Complex64, dy: Complex64) -> Complex64 {
    (dx + Complex64::new(0.0, 1.0) * dy) * 0.5
}
