//! Shared fixtures and independent oracles for the integration suites.
//!
//! Oracles here stay independent of the library paths they cross-check: the
//! matrix exponential is a plain scaled Taylor series (the library uses
//! Padé), and the diagonal orbit-time oracle bisects the scalar equation
//! directly instead of running the flow.

#![allow(dead_code)]

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use lcklab::linalg::{principal_log, spectral_check, CMatrix, CVector, Contraction, FlowGenerator};
use lcklab::potential::{find_min_lambda, PotentialField, PotentialSetup};
use lcklab::sampling::sample_points;
use lcklab::shell::ShellSpec;
use lcklab::ToleranceProfile;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn tol() -> ToleranceProfile {
    ToleranceProfile::default()
}

pub fn v2(a: Complex64, b: Complex64) -> CVector {
    CVector::from_vec(vec![a, b])
}

// ---------------------------------------------------------------------------
// Independent oracles
// ---------------------------------------------------------------------------

/// Matrix exponential by scaling + plain Taylor series (independent of the
/// library's Padé route).
pub fn taylor_expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let norm = m.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m * cr(0.5f64.powi(squarings));
    let mut term = CMatrix::identity(n, n);
    let mut acc = CMatrix::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled * cr(1.0 / k as f64);
        acc += &term;
        if term.norm() < 1e-20 * acc.norm() {
            break;
        }
    }
    let mut out = acc;
    for _ in 0..squarings {
        out = &out * &out;
    }
    out
}

/// Orbit time for diagonal contractions by bisection on the scalar implicit
/// equation `sum_i |alpha_i|^{-2t} |z_i|^2 = 1`.
pub fn diagonal_orbit_time_oracle(alphas: &[Complex64], z: &CVector, tol_f: f64) -> f64 {
    let f = |t: f64| -> f64 {
        alphas
            .iter()
            .zip(z.iter())
            .map(|(a, zi)| a.norm().powf(-2.0 * t) * zi.norm_sqr())
            .sum::<f64>()
            - 1.0
    };
    // f is increasing in t (all |alpha| < 1)
    let (mut lo, mut hi) = (-300.0, 300.0);
    assert!(f(lo) < 0.0 && f(hi) > 0.0, "oracle bracket invalid");
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < tol_f {
            break;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Random generators (seeded, deterministic)
// ---------------------------------------------------------------------------

pub fn random_complex_matrix(rng: &mut ChaCha12Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_complex_vector(rng: &mut ChaCha12Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Random strict contraction: random matrix rescaled to a target spectral
/// radius below 1.
pub fn random_contraction_matrix(rng: &mut ChaCha12Rng, n: usize, radius: f64) -> CMatrix {
    loop {
        let m = random_complex_matrix(rng, n);
        let eigs = match nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 100_000) {
            Some(s) => s.unpack().1,
            None => continue,
        };
        let rho = (0..n).map(|i| eigs[(i, i)].norm()).fold(0.0, f64::max);
        if rho < 1e-6 {
            continue;
        }
        let scaled = m * cr(radius / rho);
        // avoid the branch cut: retry if any eigenvalue hugs the negative axis
        let bad = (0..n).any(|i| {
            let ev = eigs[(i, i)] * cr(radius / rho);
            ev.re <= 0.0 && ev.im.abs() <= 1e-9
        });
        if !bad {
            return scaled;
        }
    }
}

/// Random stable generator (spectrum in the open left half-plane).
pub fn random_stable_generator(rng: &mut ChaCha12Rng, n: usize) -> CMatrix {
    let m = random_complex_matrix(rng, n);
    let herm = (&m + m.adjoint()) * cr(0.5);
    let skew = (&m - m.adjoint()) * cr(0.5);
    // negative-definite Hermitian part guarantees stability
    let spread = herm.norm() + 0.5;
    herm - CMatrix::identity(n, n) * cr(spread) + skew
}

/// Random unitary matrix via QR of a Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha12Rng, n: usize) -> CMatrix {
    let m = random_complex_matrix(rng, n);
    let q = m.qr().q();
    // normalize column phases for determinism of the factorization
    let mut out = q.clone();
    for j in 0..n {
        let d = q[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / cr(d.norm());
            for i in 0..n {
                out[(i, j)] /= phase;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

pub fn radial_matrix() -> CMatrix {
    CMatrix::identity(2, 2) * cr(0.5)
}

pub fn diagonal_matrix() -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_vec(vec![cr(0.5), cr(0.25)]))
}

pub fn diagonal_complex_matrix() -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_vec(vec![cr(0.5), c(0.3, 0.2)]))
}

pub fn jordan_matrix() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(0.5), cr(0.5), cr(0.0), cr(0.5)])
}

pub fn nonnormal_matrix() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(0.5), cr(2.0), cr(0.0), cr(0.5)])
}

pub fn contraction_of(a: &CMatrix) -> Contraction {
    spectral_check(a, &tol()).unwrap()
}

pub fn flow_of(a: &CMatrix) -> FlowGenerator {
    principal_log(&contraction_of(a), &tol()).unwrap()
}

pub fn sphere_setup(a: &CMatrix) -> PotentialSetup {
    let contraction = contraction_of(a);
    let flow = principal_log(&contraction, &tol()).unwrap();
    let n = a.nrows();
    PotentialSetup::new(contraction, flow, ShellSpec::sphere(n), tol()).unwrap()
}

pub fn radial_field() -> PotentialField {
    sphere_setup(&radial_matrix())
        .with_lambda(2.0 * 2f64.ln())
        .unwrap()
}

pub fn diagonal_field(lambda: f64) -> PotentialField {
    sphere_setup(&diagonal_matrix()).with_lambda(lambda).unwrap()
}

/// Jordan fixture at lambda = 2 lambda*, with lambda* bisected once and
/// cached for the whole test binary.
pub fn jordan_lambda_star() -> f64 {
    static LAMBDA: OnceLock<f64> = OnceLock::new();
    *LAMBDA.get_or_init(|| {
        let setup = sphere_setup(&jordan_matrix());
        let samples = sample_points(
            200,
            [-2.0, 2.0],
            11,
            setup.flow(),
            setup.shell(),
            setup.tolerances(),
        )
        .unwrap();
        let min = find_min_lambda(&setup, &samples, (0.25, 48.0)).unwrap();
        assert!(min.threshold_found, "jordan fixture must have a threshold");
        min.lambda_star
    })
}

pub fn jordan_field() -> PotentialField {
    sphere_setup(&jordan_matrix())
        .with_lambda(2.0 * jordan_lambda_star())
        .unwrap()
}

pub fn seeded_samples(
    setup: &PotentialSetup,
    count: usize,
    t_range: [f64; 2],
    seed: u64,
) -> Vec<CVector> {
    sample_points(count, t_range, seed, setup.flow(), setup.shell(), setup.tolerances()).unwrap()
}

/// Frobenius norm of a real matrix difference, for convenience.
pub fn real_norm(m: &DMatrix<f64>) -> f64 {
    m.norm()
}
