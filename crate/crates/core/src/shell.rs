//! Pseudoconvex shells: level sets `F = 1` of defining functions, their
//! admissibility for a contraction flow (one crossing per orbit), strict
//! pseudoconvexity via the Levi form, and the orbit-time solver.
//!
//! Sign conventions, fixed once: the flow is `sigma(t) = exp(tL)` with L the
//! principal log of A, contracting for t > 0, deck map `sigma(1) = A`. The
//! orbit time t(z) is the unique parameter with `F(exp(-tL) z) = 1`; it is
//! positive strictly inside the shell, negative outside and zero on it, and
//! satisfies `t(exp(sL) z) = t(z) + s`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LckError, Result};
use crate::linalg::{
    c, cr, dot_unconj, frob, solve_lyapunov, CMatrix, CVector, FlowGenerator, HermitianForm,
};
use crate::tol::ToleranceProfile;
use crate::wirtinger::{dbar_from_real_parts, shifted};

// ---------------------------------------------------------------------------
// Defining functions and shell specifications
// ---------------------------------------------------------------------------

/// A smooth defining function F on C^n minus the origin, with first
/// derivatives in Wirtinger form. The shell is the level set F = 1.
pub trait DefiningFunction: Send + Sync {
    fn value(&self, z: &CVector) -> f64;

    /// Column of Wirtinger derivatives dF/dz_j.
    fn wirtinger_gradient(&self, z: &CVector) -> CVector;

    /// Mixed complex Hessian d2F/dz_j dz̄_k, when analytically available.
    fn mixed_hessian(&self, _z: &CVector) -> Option<CMatrix> {
        None
    }
}

#[derive(Clone)]
pub enum ShellKind {
    /// Unit sphere, `F(z) = |z|^2`.
    Sphere,
    /// `F(z) = z^* P z` with P Hermitian positive definite.
    Ellipsoid(HermitianForm),
    /// Arbitrary defining function; only empirical admissibility applies.
    Custom(Arc<dyn DefiningFunction>),
}

impl fmt::Debug for ShellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShellKind::Sphere => write!(f, "Sphere"),
            ShellKind::Ellipsoid(p) => write!(f, "Ellipsoid({:?})", p.matrix()),
            ShellKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShellSpec {
    kind: ShellKind,
    dim: usize,
    level: f64,
}

impl ShellSpec {
    pub fn sphere(dim: usize) -> Self {
        Self {
            kind: ShellKind::Sphere,
            dim,
            level: 1.0,
        }
    }

    /// Ellipsoid shell; P must be positive definite so the level set is a
    /// compact hypersurface enclosing the origin.
    pub fn ellipsoid(p: HermitianForm) -> Result<Self> {
        let min = p.min_eig();
        if !(min > 0.0) {
            return Err(LckError::InvalidInput(format!(
                "ellipsoid matrix must be positive definite (min eigenvalue {min:.3e})"
            )));
        }
        let dim = p.dim();
        Ok(Self {
            kind: ShellKind::Ellipsoid(p),
            dim,
            level: 1.0,
        })
    }

    pub fn custom(dim: usize, f: Arc<dyn DefiningFunction>) -> Self {
        Self {
            kind: ShellKind::Custom(f),
            dim,
            level: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn kind(&self) -> &ShellKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ShellKind::Sphere => "sphere",
            ShellKind::Ellipsoid(_) => "ellipsoid",
            ShellKind::Custom(_) => "custom",
        }
    }

    /// Quadratic form matrix when the shell is a sphere or ellipsoid.
    pub fn quadratic_matrix(&self) -> Option<CMatrix> {
        match &self.kind {
            ShellKind::Sphere => Some(CMatrix::identity(self.dim, self.dim)),
            ShellKind::Ellipsoid(p) => Some(p.matrix().clone()),
            ShellKind::Custom(_) => None,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        !matches!(self.kind, ShellKind::Custom(_))
    }

    pub fn value(&self, z: &CVector) -> f64 {
        match &self.kind {
            ShellKind::Sphere => z.norm_squared(),
            ShellKind::Ellipsoid(p) => p.quad(z),
            ShellKind::Custom(f) => f.value(z),
        }
    }

    /// dF/dz_j column; for `F = z^* P z` this is `conj(P z)`.
    pub fn wirtinger_gradient(&self, z: &CVector) -> CVector {
        match &self.kind {
            ShellKind::Sphere => z.map(|v| v.conj()),
            ShellKind::Ellipsoid(p) => (p.matrix() * z).map(|v| v.conj()),
            ShellKind::Custom(f) => f.wirtinger_gradient(z),
        }
    }

    /// Mixed Hessian d2F/dz_j dz̄_k; equals P^T for quadratic shells. Custom
    /// shells fall back to differencing their analytic gradient.
    pub fn mixed_hessian(&self, z: &CVector, tol: &ToleranceProfile) -> CMatrix {
        match &self.kind {
            ShellKind::Sphere => CMatrix::identity(self.dim, self.dim),
            ShellKind::Ellipsoid(p) => p.matrix().transpose(),
            ShellKind::Custom(f) => f.mixed_hessian(z).unwrap_or_else(|| {
                let h = tol.fd_rel_step * z.norm().max(1.0);
                mixed_hessian_fd(|w| f.wirtinger_gradient(w), z, h)
            }),
        }
    }
}

/// Mixed Hessian by central differences of a Wirtinger gradient field:
/// `H[j][k] = d(g_j)/dz̄_k = (d g_j/dx_k + i d g_j/dy_k) / 2`.
pub(crate) fn mixed_hessian_fd<G>(grad: G, z: &CVector, step: f64) -> CMatrix
where
    G: Fn(&CVector) -> CVector,
{
    let n = z.len();
    let mut diffs = Vec::with_capacity(2 * n);
    for a in 0..2 * n {
        let gp = grad(&shifted(z, a, step));
        let gm = grad(&shifted(z, a, -step));
        diffs.push((gp - gm) / cr(2.0 * step));
    }
    let mut h = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            h[(j, k)] = dbar_from_real_parts(diffs[2 * k][j], diffs[2 * k + 1][j]);
        }
    }
    h
}

// ---------------------------------------------------------------------------
// Levi form certification
// ---------------------------------------------------------------------------

/// Strict-pseudoconvexity certificate at a shell point: the mixed Hessian of
/// F restricted to the maximal complex subspace of the tangent space.
#[derive(Debug, Clone)]
pub struct LeviCert {
    pub point: CVector,
    /// Orthonormal basis of the CR space H_p, n x (n-1).
    pub cr_basis: CMatrix,
    pub restricted: HermitianForm,
    pub min_eig: f64,
}

/// Householder completion: orthonormal basis of the orthogonal complement of
/// a nonzero vector.
fn orthogonal_complement(nu: &CVector) -> CMatrix {
    let n = nu.len();
    let norm = nu.norm();
    let phase = if nu[0].norm() > 0.0 {
        nu[0] / cr(nu[0].norm())
    } else {
        cr(1.0)
    };
    let mut u = nu.clone();
    u[0] += phase * cr(norm);
    let denom = u.norm_squared();
    let mut basis = CMatrix::zeros(n, n - 1);
    for col in 1..n {
        // column `col` of H = I - 2 u u^* / (u^* u)
        let factor = cr(2.0 / denom) * u[col].conj();
        for row in 0..n {
            let id = if row == col { cr(1.0) } else { cr(0.0) };
            basis[(row, col - 1)] = id - u[row] * factor;
        }
    }
    basis
}

/// Certify strict pseudoconvexity of the shell at a point on it.
pub fn levi_check(shell: &ShellSpec, p: &CVector, tol: &ToleranceProfile) -> Result<LeviCert> {
    let deviation = (shell.value(p) - shell.level()).abs();
    if deviation > tol.on_shell.max(1e-7 * shell.level().abs()) {
        return Err(LckError::NotOnShell { deviation });
    }
    let grad = shell.wirtinger_gradient(p);
    let nu = grad.map(|v| v.conj());
    let norm = nu.norm();
    if norm <= 1e-12 * p.norm().max(1.0) {
        return Err(LckError::DegenerateGradient { norm });
    }
    let cr_basis = orthogonal_complement(&nu);
    let hessian = shell.mixed_hessian(p, tol);
    let restricted = HermitianForm::from_hermitized(cr_basis.adjoint() * hessian * &cr_basis);
    let min_eig = restricted.min_eig();
    Ok(LeviCert {
        point: p.clone(),
        cr_basis,
        restricted,
        min_eig,
    })
}

// ---------------------------------------------------------------------------
// Admissibility: one crossing per orbit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    /// `(P L + L* P) / 2` negative definite: F is strictly monotone along
    /// every orbit, so each orbit crosses the shell exactly once.
    HermitianPart,
    /// Sampled orbits each cross the level set exactly once.
    Empirical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityCertificate {
    pub mode: CertificateMode,
    /// Largest eigenvalue of the Hermitian part of the P·L pairing; negative
    /// for a passing certificate. Only meaningful in `HermitianPart` mode
    /// (0.0 recorded for empirical certificates).
    pub margin: f64,
    pub samples_checked: usize,
}

/// Fixed seed for the empirical orbit sampler; the check takes no seed input,
/// so determinism requires pinning one here.
const EMPIRICAL_SEED: u64 = 0x4c43_4b41_444d_4953;

/// Certify that each flow orbit crosses the shell exactly once.
///
/// Quadratic shells first try the Hermitian-part certificate; on failure (and
/// always for custom shells) the empirical mode samples orbits and counts
/// crossings. `Inadmissible` means both modes failed.
pub fn admissibility_check(
    shell: &ShellSpec,
    flow: &FlowGenerator,
    tol: &ToleranceProfile,
) -> Result<AdmissibilityCertificate> {
    if let Some(p) = shell.quadratic_matrix() {
        let l = flow.generator();
        let pairing = (&p * l + l.adjoint() * &p) * cr(0.5);
        let herm = HermitianForm::from_hermitized(pairing);
        let margin = herm.max_eig();
        if margin < 0.0 {
            return Ok(AdmissibilityCertificate {
                mode: CertificateMode::HermitianPart,
                margin,
                samples_checked: 0,
            });
        }
    }
    empirical_admissibility(shell, flow, tol)
}

fn empirical_admissibility(
    shell: &ShellSpec,
    flow: &FlowGenerator,
    tol: &ToleranceProfile,
) -> Result<AdmissibilityCertificate> {
    let n = shell.dim();
    let mut rng = ChaCha12Rng::seed_from_u64(EMPIRICAL_SEED);
    // keep exp(tL) finite over the scanned span
    let rate = frob(flow.generator()).max(1e-3);
    let span = tol.empirical_span.min(280.0 / rate);
    let grid = tol.empirical_grid.max(3);

    for orbit in 0..tol.empirical_orbits {
        let mut dir = CVector::zeros(n);
        for j in 0..n {
            dir[j] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let norm = dir.norm();
        if norm < 1e-6 {
            continue;
        }
        dir /= cr(norm);

        let mut crossings = 0usize;
        let mut prev_sign = 0i8;
        for i in 0..grid {
            let t = -span + 2.0 * span * (i as f64) / ((grid - 1) as f64);
            let v = shell.value(&flow.apply(t, &dir)) - shell.level();
            let sign = if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            };
            if sign != 0 && prev_sign != 0 && sign != prev_sign {
                crossings += 1;
            }
            if sign != 0 {
                prev_sign = sign;
            }
        }
        if crossings != 1 {
            return Err(LckError::Inadmissible {
                reason: format!(
                    "sampled orbit {orbit} crosses the shell {crossings} times (expected exactly 1)"
                ),
            });
        }
    }
    Ok(AdmissibilityCertificate {
        mode: CertificateMode::Empirical,
        margin: 0.0,
        samples_checked: tol.empirical_orbits * grid,
    })
}

/// Always-admissible ellipsoid shell from the Lyapunov solve
/// `L* P + P L = -I` (the pairing is then -I/2, margin -1/2 exactly).
pub fn lyapunov_shell(flow: &FlowGenerator, tol: &ToleranceProfile) -> Result<ShellSpec> {
    let p = solve_lyapunov(flow, tol)?;
    ShellSpec::ellipsoid(p)
}

// ---------------------------------------------------------------------------
// Orbit time
// ---------------------------------------------------------------------------

fn check_point(z: &CVector) -> Result<()> {
    if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(LckError::InvalidInput("point has non-finite entries".into()));
    }
    if z.norm() == 0.0 {
        return Err(LckError::InvalidInput(
            "orbit time is undefined at the origin".into(),
        ));
    }
    Ok(())
}

/// `g(t) = F(exp(-tL) z) - level` and its t-derivative.
fn crossing_fn(shell: &ShellSpec, flow: &FlowGenerator, z: &CVector, t: f64) -> f64 {
    shell.value(&flow.apply(-t, z)) - shell.level()
}

fn crossing_derivative(shell: &ShellSpec, flow: &FlowGenerator, z: &CVector, t: f64) -> f64 {
    let w = flow.apply(-t, z);
    let d = shell.wirtinger_gradient(&w);
    let lw = flow.generator() * &w;
    -2.0 * dot_unconj(&d, &lw).re
}

/// Unique flow time with `F(exp(-tL) z) = 1`.
pub fn orbit_time(
    z: &CVector,
    flow: &FlowGenerator,
    shell: &ShellSpec,
    tol: &ToleranceProfile,
) -> Result<f64> {
    orbit_time_with_guess(z, flow, shell, tol, None)
}

/// Orbit time with an optional warm start (used by finite-difference
/// stencils, where the crossing moves only slightly between evaluations).
pub(crate) fn orbit_time_with_guess(
    z: &CVector,
    flow: &FlowGenerator,
    shell: &ShellSpec,
    tol: &ToleranceProfile,
    guess: Option<f64>,
) -> Result<f64> {
    check_point(z)?;

    // warm-started pure Newton; falls back to the bracketed solve
    if let Some(mut t) = guess {
        for _ in 0..12 {
            let g = crossing_fn(shell, flow, z, t);
            if !g.is_finite() {
                break;
            }
            if g.abs() <= tol.root_residual {
                return Ok(t);
            }
            let dg = crossing_derivative(shell, flow, z, t);
            if !dg.is_finite() || dg.abs() < 1e-300 {
                break;
            }
            let next = t - g / dg;
            if !next.is_finite() || (next - t).abs() > 1.0 {
                break;
            }
            t = next;
        }
    }

    // bracket by unit flow steps: g is increasing in t for admissible pairs
    let g0 = crossing_fn(shell, flow, z, 0.0);
    let (mut lo, mut hi) = if g0.abs() <= tol.root_residual {
        return Ok(0.0);
    } else if g0 > 0.0 {
        // outside the shell: crossing at t < 0
        let mut step = 1.0;
        loop {
            let t = -step;
            let g = crossing_fn(shell, flow, z, t);
            if g < 0.0 {
                break (t, t + 1.0);
            }
            step += 1.0;
            if step > tol.bracket_limit {
                return Err(LckError::NoBracket {
                    limit: tol.bracket_limit,
                });
            }
        }
    } else {
        let mut step = 1.0;
        loop {
            let t = step;
            let g = crossing_fn(shell, flow, z, t);
            if g > 0.0 {
                break (t - 1.0, t);
            }
            step += 1.0;
            if step > tol.bracket_limit {
                return Err(LckError::NoBracket {
                    limit: tol.bracket_limit,
                });
            }
        }
    };

    // safeguarded Newton inside [lo, hi] with g(lo) < 0 < g(hi)
    let mut t = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for _ in 0..tol.solver_max_iters {
        let g = crossing_fn(shell, flow, z, t);
        residual = g.abs();
        if residual <= tol.root_residual {
            return Ok(t);
        }
        if g < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let dg = crossing_derivative(shell, flow, z, t);
        let mut next = if dg.is_finite() && dg.abs() > 1e-300 {
            t - g / dg
        } else {
            f64::NAN
        };
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        t = next;
    }
    Err(LckError::MaxIterations {
        limit: tol.solver_max_iters,
        residual,
    })
}

/// Orbit time with its gradient, by implicit differentiation of
/// `G(z, t) = F(exp(-tL) z) - 1 = 0`.
#[derive(Debug, Clone)]
pub struct TimeGradient {
    pub time: f64,
    /// Wirtinger gradient dt/dz_j.
    pub wirtinger: CVector,
    /// Real gradient over the 2n interleaved coordinates.
    pub real: Vec<f64>,
}

pub fn orbit_time_gradient(
    z: &CVector,
    flow: &FlowGenerator,
    shell: &ShellSpec,
    tol: &ToleranceProfile,
) -> Result<TimeGradient> {
    orbit_time_gradient_with_guess(z, flow, shell, tol, None)
}

pub(crate) fn orbit_time_gradient_with_guess(
    z: &CVector,
    flow: &FlowGenerator,
    shell: &ShellSpec,
    tol: &ToleranceProfile,
    guess: Option<f64>,
) -> Result<TimeGradient> {
    let time = orbit_time_with_guess(z, flow, shell, tol, guess)?;
    let m = flow.flow(-time);
    let w = &m * z;
    let d = shell.wirtinger_gradient(&w);
    let lw = flow.generator() * &w;
    let dgdt = -2.0 * dot_unconj(&d, &lw).re;
    let scale = (d.norm() * lw.norm()).max(f64::MIN_POSITIVE);
    if !dgdt.is_finite() || dgdt.abs() <= 1e-12 * scale {
        return Err(LckError::DegenerateCrossing { derivative: dgdt });
    }
    // dG/dz_j = (M^T d)_j; dt/dz = -grad_z G / (dG/dt)
    let wirtinger = (m.transpose() * &d) * cr(-1.0 / dgdt);
    let real = crate::wirtinger::real_gradient_from_wirtinger(&wirtinger);
    Ok(TimeGradient {
        time,
        wirtinger,
        real,
    })
}
