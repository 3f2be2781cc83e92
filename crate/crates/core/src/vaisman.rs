//! Decision procedure for the Vaisman criterion on a Hopf quotient.
//!
//! For diagonalizable A the canonical transversal candidate is the linear
//! field `xi = Q (i diag(ln |alpha_j|)) Q^{-1}` (purely imaginary spectrum).
//! The criterion requires the field to commute with the deck map and the
//! composition of the Lee-flow time-one map with the deck map — realized here
//! as `U = A_abs A^{-1}` — to preserve the shell. For non-diagonalizable A
//! the verdict is "inapplicable": only the canonical candidate is tested, so
//! nothing is proved about other transversal fields.

use crate::error::{LckError, Result};
use crate::linalg::{c, cr, dot_unconj, frob, CMatrix, CVector, Contraction};
use crate::potential::PotentialField;
use crate::report::{CheckReport, WorstSample};
use crate::shell::{ShellKind, ShellSpec};
use crate::tol::ToleranceProfile;
use crate::wirtinger::shifted;

/// Canonical transversal field for a diagonalizable contraction.
pub fn canonical_xi(contraction: &Contraction) -> Result<CMatrix> {
    let (q, qinv) = match (contraction.eigenbasis(), contraction.eigenbasis_inv()) {
        (Some(q), Some(qinv)) => (q, qinv),
        _ => {
            return Err(LckError::NotDiagonalizable {
                condition: contraction.eigenbasis_condition(),
                limit: f64::NAN,
            })
        }
    };
    let n = contraction.dim();
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        contraction.eigenvalues().iter().map(|a| c(0.0, a.norm().ln())),
    ));
    Ok(q * d * qinv)
}

#[derive(Debug, Clone, PartialEq)]
pub enum VaismanVerdict {
    Satisfied,
    Violated(Vec<String>),
    Inapplicable(String),
}

impl VaismanVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            VaismanVerdict::Satisfied => "satisfied",
            VaismanVerdict::Violated(_) => "violated",
            VaismanVerdict::Inapplicable(_) => "inapplicable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VaismanCandidate {
    pub xi: CMatrix,
    /// `A_abs A^{-1}`, the candidate shell-preserving map.
    pub unitary_part: Option<CMatrix>,
    pub commutation_residual: Option<f64>,
    pub unitarity_residual: Option<f64>,
    pub shell_preservation_residual: Option<f64>,
    /// Lee-flow homothety constant of the potential, when measured.
    pub c: Option<f64>,
    /// Deck homothety constant of the potential (-lambda), when measured.
    pub c_prime: Option<f64>,
    pub verdict: VaismanVerdict,
}

/// Test the canonical candidate: deck invariance of xi, unitarity of
/// `U = A_abs A^{-1}`, and shell preservation by U.
pub fn check_vaisman_criterion(
    contraction: &Contraction,
    shell: &ShellSpec,
    xi: &CMatrix,
    tol: &ToleranceProfile,
) -> VaismanCandidate {
    let a = contraction.matrix();
    let mut reasons = Vec::new();

    let commutation = frob(&(a * xi - xi * a));
    if commutation > tol.commutation_residual {
        reasons.push(format!(
            "deck invariance fails: |A xi - xi A| = {commutation:.3e}"
        ));
    }

    let (a_abs, a_inv) = match (contraction.absolute_part(), a.clone().try_inverse()) {
        (Some(ab), Some(ai)) => (ab.clone(), ai),
        _ => {
            return VaismanCandidate {
                xi: xi.clone(),
                unitary_part: None,
                commutation_residual: Some(commutation),
                unitarity_residual: None,
                shell_preservation_residual: None,
                c: None,
                c_prime: None,
                verdict: VaismanVerdict::Inapplicable(
                    "canonical candidate needs a diagonalizable contraction".into(),
                ),
            }
        }
    };
    let u = a_abs * a_inv;
    let n = u.nrows();
    let unitarity = frob(&(u.adjoint() * &u - CMatrix::identity(n, n)));
    if unitarity > tol.unitary_residual {
        reasons.push(format!(
            "candidate map is not unitary: |U*U - I| = {unitarity:.3e}"
        ));
    }

    let shell_preservation = match shell.kind() {
        // for the sphere, unitarity is exactly norm preservation
        ShellKind::Sphere => unitarity,
        ShellKind::Ellipsoid(p) => {
            let res = frob(&(u.adjoint() * p.matrix() * &u - p.matrix()));
            if res > tol.unitary_residual {
                reasons.push(format!(
                    "candidate map does not preserve the ellipsoid: |U*PU - P| = {res:.3e}"
                ));
            }
            res
        }
        ShellKind::Custom(_) => {
            return VaismanCandidate {
                xi: xi.clone(),
                unitary_part: Some(u),
                commutation_residual: Some(commutation),
                unitarity_residual: Some(unitarity),
                shell_preservation_residual: None,
                c: None,
                c_prime: None,
                verdict: VaismanVerdict::Inapplicable(
                    "shell preservation is certified only for quadratic shells".into(),
                ),
            }
        }
    };

    let verdict = if reasons.is_empty() {
        VaismanVerdict::Satisfied
    } else {
        VaismanVerdict::Violated(reasons)
    };
    VaismanCandidate {
        xi: xi.clone(),
        unitary_part: Some(u),
        commutation_residual: Some(commutation),
        unitarity_residual: Some(unitarity),
        shell_preservation_residual: Some(shell_preservation),
        c: None,
        c_prime: None,
        verdict,
    }
}

// ---------------------------------------------------------------------------
// Homothety constants
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomothetyConstants {
    /// Logarithmic derivative of phi along the Lee flow exp(s (-i xi)).
    pub c: f64,
    /// Logarithmic derivative of phi along the deck flow, `-lambda`.
    pub c_prime: f64,
    /// Rescale exponent: replacing lambda by kappa*lambda makes c = 1/c'.
    pub kappa: f64,
    /// Largest deviation of the per-sample measurement from c.
    pub spread: f64,
}

/// Measure the homothety constants of the potential along the Lee flow.
///
/// The flow of `-I xi` is generated by the matrix `R = -i xi` (for the
/// canonical candidate, `Re log A` in the eigenbasis). The measured
/// logarithmic derivative must be constant across samples; both raw
/// constants and the rescale exponent are reported so the normalization
/// convention can be audited.
pub fn homothety_constants(
    field: &PotentialField,
    xi: &CMatrix,
    samples: &[CVector],
) -> Result<HomothetyConstants> {
    if samples.is_empty() {
        return Err(LckError::InvalidInput(
            "homothety_constants needs samples".into(),
        ));
    }
    let tol = field.tolerances();
    let r = xi * c(0.0, -1.0);
    let h = tol.lie_step;
    let forward = crate::linalg::expm(&(&r * cr(h)));
    let backward = crate::linalg::expm(&(&r * cr(-h)));

    let mut values = Vec::with_capacity(samples.len());
    for z in samples {
        let fp = field.eval(&(&forward * z))?;
        let fm = field.eval(&(&backward * z))?;
        values.push((fp.ln() - fm.ln()) / (2.0 * h));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values
        .iter()
        .map(|v| (v - mean).abs())
        .fold(0.0f64, f64::max);
    let bound = tol.constancy_rel * mean.abs().max(1.0);
    if spread > bound {
        return Err(LckError::NonConstantRatio {
            spread,
            tolerance: bound,
        });
    }

    let c_prime = -field.lambda();
    let product = mean * c_prime;
    let kappa = if product > 0.0 {
        1.0 / product.sqrt()
    } else {
        f64::NAN
    };
    Ok(HomothetyConstants {
        c: mean,
        c_prime,
        kappa,
        spread,
    })
}

// ---------------------------------------------------------------------------
// Reeb transversality
// ---------------------------------------------------------------------------

/// Tangency and transversality of the candidate field at a shell point:
/// `dF(xi_z) = 0` (xi is tangent) while `dF(I xi_z)` is bounded away from 0.
pub fn check_reeb_transversal(
    xi: &CMatrix,
    shell: &ShellSpec,
    z: &CVector,
    tol: &ToleranceProfile,
) -> Result<CheckReport> {
    let deviation = (shell.value(z) - shell.level()).abs();
    if deviation > tol.on_shell.max(1e-7) {
        return Err(LckError::NotOnShell { deviation });
    }
    let grad = shell.wirtinger_gradient(z);
    let xi_z = xi * z;
    let i_xi_z = &xi_z * c(0.0, 1.0);
    // dF(v) = 2 Re(sum_j dF/dz_j v_j) for real-valued F
    let tangency = 2.0 * dot_unconj(&grad, &xi_z).re;
    let transversal = 2.0 * dot_unconj(&grad, &i_xi_z).re;

    let scale = (2.0 * grad.norm() * xi_z.norm()).max(f64::MIN_POSITIVE);
    let tangent_ok = tangency.abs() <= tol.transversal_tangency * scale;
    let transversal_ok = transversal.abs() >= tol.transversal_margin * scale && xi_z.norm() > 0.0;

    let report = CheckReport::from_residual(
        "reeb_transversal",
        tangent_ok && transversal_ok,
        tangency.abs(),
        tol.transversal_tangency * scale,
        Some(WorstSample {
            point: z.iter().map(|v| [v.re, v.im]).collect(),
            value: transversal.abs(),
        }),
    );
    Ok(report.with_detail(format!(
        "tangency |dF(xi)| = {:.3e}, transversality |dF(I xi)| = {:.3e}",
        tangency.abs(),
        transversal.abs()
    )))
}

// ---------------------------------------------------------------------------
// Lee-form parallelism (slow, evidence only)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LeeParallelReport {
    /// Max over samples of |grad theta| * |z| / |theta|.
    pub max_ratio: f64,
    /// Worst Hessian asymmetry seen while assembling the metric stencil.
    pub noise_metric: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Real metric components `g(u, v) = Re(u^* M^T v)` for the Hermitian matrix
/// M = H/phi, over the interleaved real basis.
fn metric_matrix(m: &CMatrix) -> nalgebra::DMatrix<f64> {
    let n = m.nrows();
    let mut g = nalgebra::DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let mkj = m[(k, j)];
            g[(2 * j, 2 * k)] = mkj.re;
            g[(2 * j, 2 * k + 1)] = -mkj.im;
            g[(2 * j + 1, 2 * k)] = mkj.im;
            g[(2 * j + 1, 2 * k + 1)] = mkj.re;
        }
    }
    g
}

/// Numerical evidence for parallelism of the Lee form: Christoffel symbols by
/// finite differences of the metric (third derivatives of the potential in
/// total), then `max |nabla theta|` scaled against `|theta|`.
///
/// Two stacked difference layers make this coarse; when the Hessian quality
/// metric exceeds the noise budget the result is withheld rather than
/// reported.
pub fn check_lee_parallel(
    field: &PotentialField,
    samples: &[CVector],
) -> Result<LeeParallelReport> {
    let n = field.shell().dim();
    if n != 2 {
        return Err(LckError::DimensionUnsupported { n });
    }
    if samples.is_empty() {
        return Err(LckError::InvalidInput("check_lee_parallel needs samples".into()));
    }
    let tol = field.tolerances();
    let dim = 2 * n;

    let mut worst_ratio: f64 = 0.0;
    let mut noise: f64 = 0.0;

    for z in samples {
        let step = tol.lee_fd_step * z.norm().max(1.0);

        let mut metric_at = |w: &CVector| -> Result<nalgebra::DMatrix<f64>> {
            let s = field.wirtinger_hessian(w)?;
            noise = noise.max(s.asymmetry);
            Ok(metric_matrix(&(s.hessian.matrix() * cr(1.0 / s.phi))))
        };
        let theta_at = |w: &CVector| -> Result<Vec<f64>> {
            let tg =
                crate::shell::orbit_time_gradient(w, field.flow(), field.shell(), tol)?;
            Ok(tg.real.iter().map(|g| field.lambda() * g).collect())
        };

        let g0 = metric_at(z)?;
        let theta0 = theta_at(z)?;
        let ginv = g0.clone().try_inverse().ok_or(LckError::NumericalFailure {
            context: "check_lee_parallel: metric not invertible",
            residual: 0.0,
            tolerance: 0.0,
        })?;

        // dG[a][(d,b)] = partial_a G_{db}, dTheta[a][b] = partial_a theta_b
        let mut dg = Vec::with_capacity(dim);
        let mut dtheta = Vec::with_capacity(dim);
        for a in 0..dim {
            let gp = metric_at(&shifted(z, a, step))?;
            let gm = metric_at(&shifted(z, a, -step))?;
            dg.push((gp - gm) / (2.0 * step));
            let tp = theta_at(&shifted(z, a, step))?;
            let tm = theta_at(&shifted(z, a, -step))?;
            dtheta.push(
                tp.iter()
                    .zip(tm)
                    .map(|(p, m)| (p - m) / (2.0 * step))
                    .collect::<Vec<f64>>(),
            );
        }

        // Gamma^c_{ab} = 1/2 g^{cd} (d_a g_{db} + d_b g_{da} - d_d g_{ab})
        let mut nabla = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        for a in 0..dim {
            for b in 0..dim {
                let mut correction = 0.0;
                for cc in 0..dim {
                    let mut gamma = 0.0;
                    for d in 0..dim {
                        gamma += ginv[(cc, d)]
                            * (dg[a][(d, b)] + dg[b][(d, a)] - dg[d][(a, b)]);
                    }
                    correction += 0.5 * gamma * theta0[cc];
                }
                nabla[(a, b)] = dtheta[a][b] - correction;
            }
        }

        let theta_norm = theta0.iter().map(|t| t * t).sum::<f64>().sqrt();
        let ratio = nabla.norm() * z.norm() / theta_norm.max(f64::MIN_POSITIVE);
        worst_ratio = worst_ratio.max(ratio);
    }

    if noise > tol.lee_noise_budget {
        return Err(LckError::NoiseDominated {
            metric: noise,
            budget: tol.lee_noise_budget,
        });
    }
    Ok(LeeParallelReport {
        max_ratio: worst_ratio,
        noise_metric: noise,
        tolerance: tol.lee_residual,
        passed: worst_ratio <= tol.lee_residual,
    })
}
