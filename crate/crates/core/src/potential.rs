//! The automorphic potential and its derivative stack.
//!
//! With the conventions of the shell module, `phi_lambda(z) = exp(-lambda
//! t(z))`: it equals 1 on the shell, exceeds 1 outside, scales as
//! `phi(A z) = exp(-lambda) phi(z)` under the deck map, and obeys the flow law
//! `d/ds phi(exp(sL) z) = -lambda phi`. First derivatives are analytic
//! (implicit function theorem through the orbit solve); the mixed Wirtinger
//! Hessian takes one central finite-difference layer over the analytic
//! gradient, so root-solver noise stays far below the difference step.

use rayon::prelude::*;

use crate::error::{LckError, Result};
use crate::linalg::{cr, frob, CMatrix, CVector, Contraction, FlowGenerator, HermitianForm};
use crate::report::{CheckReport, WorstSample};
use crate::shell::{
    admissibility_check, orbit_time_gradient_with_guess, orbit_time_with_guess,
    AdmissibilityCertificate, ShellSpec, TimeGradient,
};
use crate::tol::ToleranceProfile;
use crate::wirtinger::{dbar_from_real_parts, shifted};

/// Contraction + flow + admissible shell, everything but the exponent.
#[derive(Debug, Clone)]
pub struct PotentialSetup {
    contraction: Contraction,
    flow: FlowGenerator,
    shell: ShellSpec,
    certificate: AdmissibilityCertificate,
    tol: ToleranceProfile,
}

impl PotentialSetup {
    pub fn new(
        contraction: Contraction,
        flow: FlowGenerator,
        shell: ShellSpec,
        tol: ToleranceProfile,
    ) -> Result<Self> {
        if contraction.dim() != flow.dim() || flow.dim() != shell.dim() {
            return Err(LckError::InvalidInput(
                "contraction, flow and shell dimensions disagree".into(),
            ));
        }
        let certificate = admissibility_check(&shell, &flow, &tol)?;
        Ok(Self {
            contraction,
            flow,
            shell,
            certificate,
            tol,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<PotentialField> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(LckError::InvalidInput(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(PotentialField {
            setup: self.clone(),
            lambda,
        })
    }

    pub fn contraction(&self) -> &Contraction {
        &self.contraction
    }

    pub fn flow(&self) -> &FlowGenerator {
        &self.flow
    }

    pub fn shell(&self) -> &ShellSpec {
        &self.shell
    }

    pub fn certificate(&self) -> &AdmissibilityCertificate {
        &self.certificate
    }

    pub fn tolerances(&self) -> &ToleranceProfile {
        &self.tol
    }
}

/// The automorphic potential `phi_lambda`.
#[derive(Debug, Clone)]
pub struct PotentialField {
    setup: PotentialSetup,
    lambda: f64,
}

/// Potential value with analytic first derivatives at a point.
#[derive(Debug, Clone)]
pub struct PotentialGradient {
    pub phi: f64,
    /// Wirtinger gradient d(phi)/dz_j.
    pub gradient: CVector,
    pub time_gradient: TimeGradient,
}

/// One sampled mixed Hessian.
#[derive(Debug, Clone)]
pub struct HessianSample {
    pub point: CVector,
    pub phi: f64,
    pub hessian: HermitianForm,
    /// Analytic Wirtinger gradient of phi.
    pub gradient: CVector,
    pub min_eig: f64,
    /// Relative Hermitian asymmetry of the raw finite differences; recorded
    /// as a quality metric before symmetrization.
    pub asymmetry: f64,
    pub time_gradient: TimeGradient,
}

impl PotentialField {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn setup(&self) -> &PotentialSetup {
        &self.setup
    }

    pub fn contraction(&self) -> &Contraction {
        self.setup.contraction()
    }

    pub fn flow(&self) -> &FlowGenerator {
        self.setup.flow()
    }

    pub fn shell(&self) -> &ShellSpec {
        self.setup.shell()
    }

    pub fn tolerances(&self) -> &ToleranceProfile {
        self.setup.tolerances()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        self.setup.with_lambda(lambda)
    }

    pub fn orbit_time(&self, z: &CVector) -> Result<f64> {
        orbit_time_with_guess(z, self.flow(), self.shell(), self.tolerances(), None)
    }

    /// `phi(z) = exp(-lambda t(z))`.
    pub fn eval(&self, z: &CVector) -> Result<f64> {
        Ok((-self.lambda * self.orbit_time(z)?).exp())
    }

    pub fn gradient(&self, z: &CVector) -> Result<PotentialGradient> {
        self.gradient_with_guess(z, None)
    }

    fn gradient_with_guess(&self, z: &CVector, guess: Option<f64>) -> Result<PotentialGradient> {
        let tg = orbit_time_gradient_with_guess(z, self.flow(), self.shell(), self.tolerances(), guess)?;
        let phi = (-self.lambda * tg.time).exp();
        let gradient = &tg.wirtinger * cr(-self.lambda * phi);
        Ok(PotentialGradient {
            phi,
            gradient,
            time_gradient: tg,
        })
    }

    /// Mixed Wirtinger Hessian `H[j][k] = d^2 phi / dz_j dz̄_k` by one central
    /// finite-difference layer over the analytic gradient.
    pub fn wirtinger_hessian(&self, z: &CVector) -> Result<HessianSample> {
        let tol = self.tolerances();
        let n = z.len();
        let step = tol.fd_rel_step * z.norm().max(1.0);
        if z.norm() <= 16.0 * step {
            return Err(LckError::StepUnderflow {
                norm: z.norm(),
                step,
            });
        }

        let center = self.gradient_with_guess(z, None)?;
        let guess = Some(center.time_gradient.time);

        let stencil = |h: f64| -> Result<Vec<CVector>> {
            (0..2 * n)
                .map(|a| {
                    let gp = self.gradient_with_guess(&shifted(z, a, h), guess)?;
                    let gm = self.gradient_with_guess(&shifted(z, a, -h), guess)?;
                    Ok((gp.gradient - gm.gradient) / cr(2.0 * h))
                })
                .collect()
        };

        let diffs = if tol.richardson {
            let coarse = stencil(step)?;
            let fine = stencil(step / 2.0)?;
            coarse
                .into_iter()
                .zip(fine)
                .map(|(d1, d2)| (d2 * cr(4.0) - d1) / cr(3.0))
                .collect()
        } else {
            stencil(step)?
        };

        let mut h = CMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                h[(j, k)] = dbar_from_real_parts(diffs[2 * k][j], diffs[2 * k + 1][j]);
            }
        }
        let asymmetry = frob(&(&h - h.adjoint())) / frob(&h).max(f64::MIN_POSITIVE);
        let hessian = HermitianForm::from_hermitized(h);
        let min_eig = hessian.min_eig();

        Ok(HessianSample {
            point: z.clone(),
            phi: center.phi,
            hessian,
            gradient: center.gradient,
            min_eig,
            asymmetry,
            time_gradient: center.time_gradient,
        })
    }

    /// Hessians over a sample set, in input order (parallel evaluation).
    pub fn hessian_samples(&self, samples: &[CVector]) -> Result<Vec<HessianSample>> {
        samples
            .par_iter()
            .map(|z| self.wirtinger_hessian(z))
            .collect()
    }

    /// Sampled plurisubharmonicity: smallest Hessian eigenvalue over the
    /// samples must exceed the configured margin.
    pub fn check_psh(&self, samples: &[CVector]) -> Result<CheckReport> {
        if samples.is_empty() {
            return Err(LckError::InvalidInput("check_psh needs samples".into()));
        }
        let tol = self.tolerances();
        let hessians = self.hessian_samples(samples)?;
        let worst = hessians
            .iter()
            .min_by(|a, b| a.min_eig.total_cmp(&b.min_eig))
            .expect("nonempty");
        let pass = worst.min_eig > tol.psd_margin;
        Ok(CheckReport::from_residual(
            "psh",
            pass,
            -worst.min_eig,
            -tol.psd_margin,
            Some(worst_sample_of(&worst.point, worst.min_eig)),
        ))
    }

    /// Deck automorphy: `phi(A z) = exp(-lambda) phi(z)`.
    pub fn check_automorphy(&self, z: &CVector) -> Result<CheckReport> {
        let tol = self.tolerances();
        let phi = self.eval(z)?;
        let phi_deck = self.eval(&(self.contraction().matrix() * z))?;
        let residual = (phi_deck - (-self.lambda).exp() * phi).abs() / phi;
        Ok(CheckReport::from_residual(
            "automorphy",
            residual <= tol.automorphy_rel,
            residual,
            tol.automorphy_rel,
            Some(worst_sample_of(z, residual)),
        ))
    }

    /// Power identity for `H(phi^{2a})`, with the left side computed
    /// independently through the `lambda -> 2 a lambda` field:
    /// `H(phi^{2a}) = phi^{2a-2} (2a phi H(phi) + 2a(2a-1) g g^*)`.
    pub fn check_ddc_power_identity(&self, z: &CVector, a: f64) -> Result<CheckReport> {
        if !(a >= 1.0) || !a.is_finite() {
            return Err(LckError::InvalidInput(format!(
                "power identity needs a >= 1, got {a}"
            )));
        }
        let tol = self.tolerances();
        let base = self.wirtinger_hessian(z)?;
        let power_field = self.with_lambda(2.0 * a * self.lambda)?;
        let lhs = power_field.wirtinger_hessian(z)?;

        let phi = base.phi;
        let g = &base.gradient;
        let outer = g * g.adjoint();
        let rhs = (base.hessian.matrix() * cr(2.0 * a * phi) + outer * cr(2.0 * a * (2.0 * a - 1.0)))
            * cr(phi.powf(2.0 * a - 2.0));

        let residual = frob(&(lhs.hessian.matrix() - rhs)) / frob(lhs.hessian.matrix()).max(f64::MIN_POSITIVE);
        let tolerance = if a <= 2.0 {
            tol.ddc_rel
        } else {
            tol.ddc_rel * tol.ddc_deep_factor
        };
        Ok(CheckReport::from_residual(
            "power_identity",
            residual <= tolerance,
            residual,
            tolerance,
            Some(worst_sample_of(z, residual)),
        ))
    }
}

pub(crate) fn worst_sample_of(z: &CVector, value: f64) -> WorstSample {
    WorstSample {
        point: z.iter().map(|v| [v.re, v.im]).collect(),
        value,
    }
}

// ---------------------------------------------------------------------------
// Minimal-lambda search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinLambda {
    pub lambda_star: f64,
    /// False when the predicate already holds at the bracket bottom, i.e. no
    /// threshold was located above it.
    pub threshold_found: bool,
    pub evaluations: usize,
}

fn worst_min_eig(field: &PotentialField, samples: &[CVector]) -> Result<f64> {
    Ok(field
        .hessian_samples(samples)?
        .iter()
        .map(|h| h.min_eig)
        .fold(f64::INFINITY, f64::min))
}

/// Bisect the empirical psh threshold in lambda over a fixed sample set.
///
/// The predicate "sampled Hessian positive" is monotone along lambda scaling
/// (powers of an spsh potential stay spsh for a >= 1), which is what makes
/// bisection valid. The result is an empirical threshold for these samples
/// only, not a global certificate.
pub fn find_min_lambda(
    setup: &PotentialSetup,
    samples: &[CVector],
    bracket: (f64, f64),
) -> Result<MinLambda> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(LckError::InvalidInput(format!(
            "invalid lambda bracket ({lo}, {hi})"
        )));
    }
    if samples.is_empty() {
        return Err(LckError::InvalidInput("find_min_lambda needs samples".into()));
    }
    let margin = setup.tolerances().psd_margin;
    let mut evaluations = 0;
    let mut predicate = |lambda: f64| -> Result<bool> {
        evaluations += 1;
        Ok(worst_min_eig(&setup.with_lambda(lambda)?, samples)? > margin)
    };

    if !predicate(hi)? {
        return Err(LckError::BracketNotPsh { lambda_top: hi });
    }
    if predicate(lo)? {
        return Ok(MinLambda {
            lambda_star: lo,
            threshold_found: false,
            evaluations,
        });
    }

    let rel = setup.tolerances().min_lambda_rel;
    while hi - lo > rel * hi {
        let mid = 0.5 * (lo + hi);
        if predicate(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MinLambda {
        lambda_star: hi,
        threshold_found: true,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, principal_log, spectral_check};
    use num_complex::Complex64;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    pub(crate) fn setup_for(a: CMatrix, shell: ShellSpec) -> PotentialSetup {
        let contraction = spectral_check(&a, &tol()).unwrap();
        let flow = principal_log(&contraction, &tol()).unwrap();
        PotentialSetup::new(contraction, flow, shell, tol()).unwrap()
    }

    fn radial_field(lambda: f64) -> PotentialField {
        setup_for(CMatrix::identity(2, 2) * cr(0.5), ShellSpec::sphere(2))
            .with_lambda(lambda)
            .unwrap()
    }

    fn v2(a: Complex64, b: Complex64) -> CVector {
        CVector::from_vec(vec![a, b])
    }

    #[test]
    fn radial_potential_is_modulus_squared() {
        // A = I/2, sphere, lambda = 2 ln 2: phi = |z|^2
        let field = radial_field(2.0 * 2f64.ln());
        let z = v2(cr(2.0), cr(0.0));
        assert!((field.eval(&z).unwrap() - 4.0).abs() < 1e-12);
        let z = v2(c(0.3, -0.4), c(1.1, 0.7));
        assert!((field.eval(&z).unwrap() - z.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn potential_is_one_on_shell() {
        let field = radial_field(1.7);
        let z = v2(c(0.6, 0.0), c(0.0, 0.8));
        assert!((field.eval(&z).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_lambda_squares_the_potential() {
        // A = diag(1/2, 1/4), z = (0, 2): t = -1/2, phi_lambda = e^{lambda/2}
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.5), cr(0.25)]));
        let setup = setup_for(a, ShellSpec::sphere(2));
        let lambda = 0.9;
        let f1 = setup.with_lambda(lambda).unwrap();
        let f2 = setup.with_lambda(2.0 * lambda).unwrap();
        let z = v2(cr(0.0), cr(2.0));
        let p1 = f1.eval(&z).unwrap();
        let p2 = f2.eval(&z).unwrap();
        assert!((p1 - (lambda / 2.0).exp()).abs() < 1e-12);
        assert!((p2 - p1 * p1).abs() < 1e-12 * p2);
    }

    #[test]
    fn radial_hessian_is_identity() {
        let field = radial_field(2.0 * 2f64.ln());
        for z in [v2(cr(1.0), cr(0.0)), v2(c(0.4, 0.6), c(-0.9, 0.3))] {
            let sample = field.wirtinger_hessian(&z).unwrap();
            let dev = frob(&(sample.hessian.matrix() - CMatrix::identity(2, 2)));
            assert!(dev < 1e-6, "deviation {dev}");
            assert!(sample.asymmetry < 1e-6);
        }
    }

    #[test]
    fn quartic_radial_hessian_matches_symbolic_oracle() {
        // lambda = 4 ln 2 gives phi = |z|^4 = (|z|^2)^2;
        // H[j][k] = m |z|^{2m-2} delta + m(m-1) |z|^{2m-4} conj(z_j) z_k, m = 2
        let field = radial_field(4.0 * 2f64.ln());
        let z = v2(cr(1.0), cr(0.0));
        let sample = field.wirtinger_hessian(&z).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(4.0), cr(2.0)]));
        assert!(frob(&(sample.hessian.matrix() - expected)) < 1e-6);

        let z = v2(c(0.5, 0.3), c(-0.2, 0.9));
        let sample = field.wirtinger_hessian(&z).unwrap();
        let m = 2.0;
        let r2 = z.norm_squared();
        let mut oracle = CMatrix::identity(2, 2) * cr(m * r2.powf(m - 1.0));
        for j in 0..2 {
            for k in 0..2 {
                oracle[(j, k)] += cr(m * (m - 1.0) * r2.powf(m - 2.0)) * z[j].conj() * z[k];
            }
        }
        let rel = frob(&(sample.hessian.matrix() - &oracle)) / frob(&oracle);
        assert!(rel < 1e-6, "relative deviation {rel}");
    }

    #[test]
    fn psh_check_passes_on_radial_field() {
        let field = radial_field(2.0 * 2f64.ln());
        let samples = vec![
            v2(cr(1.0), cr(0.0)),
            v2(c(0.2, 0.7), c(-0.4, 0.1)),
            v2(c(-1.3, 0.2), c(0.5, -0.6)),
        ];
        let report = field.check_psh(&samples).unwrap();
        assert!(report.passed());
        // worst min eigenvalue of the identity Hessian is 1
        assert!((report.residual + 1.0).abs() < 1e-6);

        // a single shell point is already a legal sample set
        let single = field.check_psh(&samples[..1]).unwrap();
        assert!(single.passed());
        assert!((single.worst_sample.unwrap().value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn hessian_step_underflow_near_origin() {
        let field = radial_field(1.0);
        let tiny = v2(cr(1e-6), cr(0.0));
        assert!(matches!(
            field.wirtinger_hessian(&tiny),
            Err(LckError::StepUnderflow { .. })
        ));
    }

    #[test]
    fn richardson_extrapolation_tightens_the_hessian() {
        let mut profile = tol();
        profile.richardson = true;
        let setup = setup_for(CMatrix::identity(2, 2) * cr(0.5), ShellSpec::sphere(2));
        let setup = PotentialSetup::new(
            setup.contraction().clone(),
            setup.flow().clone(),
            setup.shell().clone(),
            profile,
        )
        .unwrap();
        let field = setup.with_lambda(4.0 * 2f64.ln()).unwrap();
        let z = v2(c(0.5, 0.3), c(-0.2, 0.9));
        let sample = field.wirtinger_hessian(&z).unwrap();
        let m = 2.0;
        let r2 = z.norm_squared();
        let mut oracle = CMatrix::identity(2, 2) * cr(m * r2.powf(m - 1.0));
        for j in 0..2 {
            for k in 0..2 {
                oracle[(j, k)] += cr(m * (m - 1.0) * r2.powf(m - 2.0)) * z[j].conj() * z[k];
            }
        }
        let rel = frob(&(sample.hessian.matrix() - &oracle)) / frob(&oracle);
        assert!(rel < 1e-7, "relative deviation {rel}");
    }

    #[test]
    fn automorphy_exact_scaling() {
        let field = radial_field(2.0 * 2f64.ln());
        let z = v2(c(0.9, -0.2), c(0.1, 0.4));
        let report = field.check_automorphy(&z).unwrap();
        assert!(report.passed());

        // iterated deck map: phi(A^k z) = e^{-k lambda} phi(z)
        let a = field.contraction().matrix().clone();
        let phi = field.eval(&z).unwrap();
        let mut w = z.clone();
        for k in 1..=5 {
            w = &a * w;
            let expected = (-(k as f64) * field.lambda()).exp() * phi;
            let got = field.eval(&w).unwrap();
            assert!((got - expected).abs() <= 1e-10 * expected, "k = {k}");
        }
    }

    #[test]
    fn power_identity_reduces_at_a_one() {
        // a = 1: H(phi^2) = 2 phi H + 2 g g^*; phi = |z|^2 at (1,0) gives diag(4,2)
        let field = radial_field(2.0 * 2f64.ln());
        let report = field
            .check_ddc_power_identity(&v2(cr(1.0), cr(0.0)), 1.0)
            .unwrap();
        assert!(report.passed(), "residual {}", report.residual);
    }

    #[test]
    fn min_lambda_radial_has_no_threshold() {
        let setup = setup_for(CMatrix::identity(2, 2) * cr(0.5), ShellSpec::sphere(2));
        let samples = vec![v2(cr(1.0), cr(0.0)), v2(c(0.3, 0.5), c(0.7, -0.2))];
        let res = find_min_lambda(&setup, &samples, (0.25, 16.0)).unwrap();
        assert!(!res.threshold_found);
        assert_eq!(res.lambda_star, 0.25);
    }
}
