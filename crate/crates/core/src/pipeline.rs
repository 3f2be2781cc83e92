//! End-to-end orchestration: contraction analysis, shell construction and
//! certification, lambda resolution, sampled checks, Vaisman decision, and
//! report assembly.
//!
//! Stage failures map to a nonzero exit: mathematical/configuration
//! preconditions exit with 2 and mark later stages inapplicable; a completed
//! run with failing checks exits with 1.

use std::time::Instant;

use crate::config::{LambdaConfig, RunConfig, ShellType, SLOW_CHECKS, STANDARD_CHECKS};
use crate::error::{LckError, Result};
use crate::forms;
use crate::linalg::{frob, principal_log, spectral_check, CMatrix, CVector, Contraction};
use crate::potential::{find_min_lambda, PotentialField, PotentialSetup};
use crate::report::{
    CheckReport, CheckStatus, ContractionSummary, LambdaResolution, RunReport, ShellSummary,
    VaismanSummary, SCHEMA_VERSION,
};
use crate::sampling::sample_points;
use crate::shell::{admissibility_check, levi_check, lyapunov_shell, CertificateMode, ShellSpec};
use crate::vaisman::{
    canonical_xi, check_vaisman_criterion, homothety_constants, VaismanVerdict,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;

#[derive(Debug)]
pub struct PipelineOutcome {
    pub report: RunReport,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Serialize a run report.
pub fn emit_report(report: &RunReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => crate::report::to_json_bytes(report),
        ReportFormat::Csv => Ok(crate::report::to_csv_bytes(report)),
    }
}

fn contraction_summary(ct: &Contraction) -> ContractionSummary {
    ContractionSummary {
        n: ct.dim(),
        eigenvalues: ct.eigenvalues().iter().map(|e| [e.re, e.im]).collect(),
        spectral_radius: ct.spectral_radius(),
        diagonalizable: ct.is_diagonalizable(),
        eigenbasis_condition: ct.eigenbasis_condition(),
    }
}

struct StagedReport {
    config: RunConfig,
    started: Instant,
    contraction: Option<ContractionSummary>,
    shell: Option<ShellSummary>,
    lambda: LambdaResolution,
    vaisman: Option<VaismanSummary>,
    checks: Vec<CheckReport>,
}

impl StagedReport {
    fn new(config: &RunConfig) -> Self {
        Self {
            config: config.clone(),
            started: Instant::now(),
            contraction: None,
            shell: None,
            lambda: LambdaResolution {
                requested: config.lambda.as_str(),
                used: None,
                lambda_star: None,
                threshold_found: None,
            },
            vaisman: None,
            checks: Vec::new(),
        }
    }

    /// Fail at a precondition: mark configured checks inapplicable, exit 2.
    fn precondition_failure(mut self, stage: &str, err: &LckError) -> PipelineOutcome {
        for name in self.config.checks.clone() {
            self.checks.push(CheckReport::inapplicable(
                &name,
                &format!("skipped: {stage} failed"),
            ));
        }
        let report = RunReport {
            schema_version: SCHEMA_VERSION,
            config: self.config,
            precondition_error: Some(format!("{stage}: {err}")),
            contraction: self.contraction,
            shell: self.shell,
            lambda: self.lambda,
            vaisman: self.vaisman,
            checks: self.checks,
            overall: "fail".into(),
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
        };
        PipelineOutcome {
            report,
            exit_code: EXIT_PRECONDITION,
        }
    }

    fn finish(self) -> PipelineOutcome {
        let failed = self
            .checks
            .iter()
            .any(|c| c.status == CheckStatus::Fail);
        let report = RunReport {
            schema_version: SCHEMA_VERSION,
            config: self.config,
            precondition_error: None,
            contraction: self.contraction,
            shell: self.shell,
            lambda: self.lambda,
            vaisman: self.vaisman,
            checks: self.checks,
            overall: if failed { "fail" } else { "pass" }.into(),
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
        };
        PipelineOutcome {
            report,
            exit_code: if failed { EXIT_CHECK_FAILED } else { EXIT_PASS },
        }
    }
}

fn timed(mut report: CheckReport, started: Instant) -> CheckReport {
    report.elapsed_seconds = started.elapsed().as_secs_f64();
    report
}

/// Build the shell for a config, resolving the lyapunov type to the sphere
/// when its Hermitian-part certificate passes and to the Lyapunov ellipsoid
/// otherwise. Returns the shell plus the Lyapunov residual when one was
/// solved.
fn build_shell(
    config: &RunConfig,
    flow: &crate::linalg::FlowGenerator,
) -> Result<(ShellSpec, Option<f64>)> {
    let tol = &config.tolerances;
    if let Some(shell) = config.explicit_shell(tol)? {
        return Ok((shell, None));
    }
    debug_assert!(matches!(config.shell.shell_type, ShellType::Lyapunov));
    let sphere = ShellSpec::sphere(config.n);
    if let Ok(cert) = admissibility_check(&sphere, flow, tol) {
        if cert.mode == CertificateMode::HermitianPart {
            return Ok((sphere, None));
        }
    }
    let shell = lyapunov_shell(flow, tol)?;
    let p = shell.quadratic_matrix().expect("ellipsoid");
    let residual = frob(
        &(flow.generator().adjoint() * &p
            + &p * flow.generator()
            + CMatrix::identity(config.n, config.n)),
    );
    Ok((shell, Some(residual)))
}

/// Run the full pipeline for a configuration.
pub fn run_pipeline(config: &RunConfig) -> PipelineOutcome {
    let mut staged = StagedReport::new(config);
    let tol = config.tolerances.clone();

    if let Err(err) = config.validate() {
        return staged.precondition_failure("config", &err);
    }

    // contraction
    let contraction = match spectral_check(&config.matrix_a(), &tol) {
        Ok(ct) => ct,
        Err(err) => return staged.precondition_failure("spectral_check", &err),
    };
    staged.contraction = Some(contraction_summary(&contraction));

    // flow
    let flow = match principal_log(&contraction, &tol) {
        Ok(f) => f,
        Err(err) => return staged.precondition_failure("principal_log", &err),
    };

    // shell + admissibility
    let (shell, lyapunov_residual) = match build_shell(config, &flow) {
        Ok(pair) => pair,
        Err(err) => return staged.precondition_failure("shell", &err),
    };
    let setup = match PotentialSetup::new(contraction.clone(), flow.clone(), shell.clone(), tol.clone())
    {
        Ok(s) => s,
        Err(err) => return staged.precondition_failure("admissibility", &err),
    };
    let cert = setup.certificate().clone();
    staged.shell = Some(ShellSummary {
        kind: shell.kind_name().into(),
        admissibility_mode: Some(
            match cert.mode {
                CertificateMode::HermitianPart => "hermitian_part",
                CertificateMode::Empirical => "empirical",
            }
            .into(),
        ),
        margin: Some(cert.margin),
        samples_checked: cert.samples_checked,
        quadratic_matrix: shell
            .quadratic_matrix()
            .map(|p| crate::config::matrix_to_pairs(&p)),
        lyapunov_residual,
    });
    {
        let started = Instant::now();
        let pass = match cert.mode {
            CertificateMode::HermitianPart => cert.margin < 0.0,
            CertificateMode::Empirical => true,
        };
        staged.checks.push(timed(
            CheckReport::from_residual("admissibility", pass, cert.margin, 0.0, None),
            started,
        ));
    }

    // samples
    let samples = match sample_points(
        config.sampling.count,
        config.sampling.t_range,
        config.sampling.seed,
        &flow,
        &shell,
        &tol,
    ) {
        Ok(s) => s,
        Err(err) => return staged.precondition_failure("sampling", &err),
    };

    // levi spot checks on shell projections of the leading samples
    {
        let started = Instant::now();
        let spot = spot_check_levi(&shell, &flow, &samples, &tol, 25);
        match spot {
            Ok(report) => staged.checks.push(timed(report, started)),
            Err(err) => return staged.precondition_failure("levi", &err),
        }
    }

    // lambda resolution
    let field: PotentialField = match &config.lambda {
        LambdaConfig::Fixed(v) => match setup.with_lambda(*v) {
            Ok(f) => {
                staged.lambda.used = Some(*v);
                f
            }
            Err(err) => return staged.precondition_failure("lambda", &err),
        },
        LambdaConfig::Keyword(_) => {
            let bracket = (config.lambda_bracket[0], config.lambda_bracket[1]);
            match find_min_lambda(&setup, &samples, bracket) {
                Ok(min) => {
                    // documented policy: run the suite at twice the threshold
                    let used = 2.0 * min.lambda_star;
                    staged.lambda.lambda_star = Some(min.lambda_star);
                    staged.lambda.threshold_found = Some(min.threshold_found);
                    staged.lambda.used = Some(used);
                    match setup.with_lambda(used) {
                        Ok(f) => f,
                        Err(err) => return staged.precondition_failure("lambda", &err),
                    }
                }
                Err(err) => return staged.precondition_failure("find_min_lambda", &err),
            }
        }
    };

    // configured checks, in a fixed order
    let order: Vec<&str> = STANDARD_CHECKS
        .iter()
        .chain(SLOW_CHECKS)
        .copied()
        .filter(|name| config.checks.iter().any(|c| c == name))
        .collect();
    for name in order {
        let started = Instant::now();
        let report = run_check(name, config, &contraction, &field, &samples);
        staged.checks.push(timed(report, started));
        if name == "vaisman" {
            staged.vaisman = vaisman_summary_of(&contraction, &field, &samples);
        }
    }

    staged.finish()
}

fn spot_check_levi(
    shell: &ShellSpec,
    flow: &crate::linalg::FlowGenerator,
    samples: &[CVector],
    tol: &crate::tol::ToleranceProfile,
    limit: usize,
) -> Result<CheckReport> {
    let mut worst: Option<(CVector, f64)> = None;
    for z in samples.iter().take(limit) {
        let t = crate::shell::orbit_time(z, flow, shell, tol)?;
        let on_shell = flow.apply(-t, z);
        let cert = levi_check(shell, &on_shell, tol)?;
        if worst.as_ref().is_none_or(|(_, m)| cert.min_eig < *m) {
            worst = Some((on_shell, cert.min_eig));
        }
    }
    let (point, min_eig) = worst.expect("at least one sample");
    Ok(CheckReport::from_residual(
        "levi",
        min_eig > 0.0,
        -min_eig,
        0.0,
        Some(crate::potential::worst_sample_of(&point, min_eig)),
    ))
}

/// Evaluate one named check over the sample set, mapping errors to statuses.
fn run_check(
    name: &str,
    config: &RunConfig,
    contraction: &Contraction,
    field: &PotentialField,
    samples: &[CVector],
) -> CheckReport {
    match name {
        "psh" => field
            .check_psh(samples)
            .unwrap_or_else(|e| CheckReport::failed_with_error(name, &e)),
        "automorphy" => worst_over_samples(name, samples, |z| field.check_automorphy(z)),
        "power_identity" => {
            let subset: Vec<CVector> = samples.iter().take(50).cloned().collect();
            let mut worst: Option<CheckReport> = None;
            // the three powers are compared normalized against their budgets
            for a in [1.0, 2.0, 3.0] {
                let report = worst_over_samples(name, &subset, |z| {
                    field.check_ddc_power_identity(z, a)
                });
                if report.status == CheckStatus::Fail && report.detail.is_some() {
                    return report;
                }
                let keep = match &worst {
                    None => true,
                    Some(w) => report.residual / report.tolerance > w.residual / w.tolerance,
                };
                if keep {
                    worst = Some(report);
                }
            }
            worst.expect("nonempty sample subset")
        }
        "dtheta" => worst_over_samples(name, samples, |z| {
            forms::check_dtheta_zero(field, z).map(|r| exterior_to_report(name, &r))
        }),
        "lck_identity" => {
            let n = field.shell().dim();
            if !(2..=3).contains(&n) {
                return CheckReport::inapplicable(name, "3-form storage is limited to n = 2 or 3");
            }
            let subset: Vec<CVector> = samples.iter().take(100).cloned().collect();
            worst_over_samples(name, &subset, |z| {
                forms::check_lck_identity(field, z).map(|r| exterior_to_report(name, &r))
            })
        }
        "pullback" => worst_over_samples(name, samples, |z| forms::check_gamma_pullback(field, z)),
        "vaisman" => vaisman_check(contraction, field, samples),
        "lee_parallel" => {
            if !config.slow {
                return CheckReport::inapplicable(name, "enable with --slow");
            }
            if field.shell().dim() != 2 {
                return CheckReport::inapplicable(name, "only implemented for n = 2");
            }
            let subset: Vec<CVector> = samples.iter().take(25).cloned().collect();
            match crate::vaisman::check_lee_parallel(field, &subset) {
                Ok(rep) => CheckReport::from_residual(
                    name,
                    rep.passed,
                    rep.max_ratio,
                    rep.tolerance,
                    None,
                )
                .with_detail(format!("noise metric {:.3e}", rep.noise_metric)),
                Err(e @ LckError::NoiseDominated { .. }) => {
                    CheckReport::withheld(name, &e.to_string())
                }
                Err(e) => CheckReport::failed_with_error(name, &e),
            }
        }
        other => CheckReport::inapplicable(other, "unknown check"),
    }
}

/// Run a per-sample check across the worker pool (order preserved by the
/// parallel collect) and keep the sample with the largest residual/tolerance
/// ratio, reduced sequentially so the result is thread-count independent.
fn worst_over_samples<F>(name: &str, samples: &[CVector], check: F) -> CheckReport
where
    F: Fn(&CVector) -> Result<CheckReport> + Sync,
{
    use rayon::prelude::*;
    let reports: Result<Vec<CheckReport>> = samples.par_iter().map(&check).collect();
    let reports = match reports {
        Ok(r) => r,
        Err(e) => return CheckReport::failed_with_error(name, &e),
    };
    let mut worst: Option<CheckReport> = None;
    for report in reports {
        let keep = match &worst {
            None => true,
            Some(w) => {
                report.residual / report.tolerance.max(f64::MIN_POSITIVE)
                    > w.residual / w.tolerance.max(f64::MIN_POSITIVE)
            }
        };
        if keep {
            worst = Some(report);
        }
    }
    let mut out = worst.expect("nonempty samples");
    out.name = name.to_string();
    out
}

fn exterior_to_report(name: &str, r: &forms::ExteriorResidual) -> CheckReport {
    CheckReport::from_residual(
        name,
        r.passed,
        r.residual_norm,
        r.tolerance,
        Some(crate::potential::worst_sample_of(&r.point, r.residual_norm)),
    )
}

fn vaisman_check(
    contraction: &Contraction,
    field: &PotentialField,
    _samples: &[CVector],
) -> CheckReport {
    let tol = field.tolerances();
    let xi = match canonical_xi(contraction) {
        Ok(xi) => xi,
        Err(LckError::NotDiagonalizable { .. }) => {
            return CheckReport::inapplicable(
                "vaisman",
                "canonical candidate needs a diagonalizable contraction",
            );
        }
        Err(e) => return CheckReport::failed_with_error("vaisman", &e),
    };
    let cand = check_vaisman_criterion(contraction, field.shell(), &xi, tol);
    let residual = [
        cand.commutation_residual,
        cand.unitarity_residual,
        cand.shell_preservation_residual,
    ]
    .iter()
    .flatten()
    .fold(0.0f64, |acc, r| acc.max(*r));
    match &cand.verdict {
        VaismanVerdict::Satisfied => CheckReport::from_residual(
            "vaisman",
            true,
            residual,
            tol.unitary_residual.max(tol.commutation_residual),
            None,
        ),
        VaismanVerdict::Violated(reasons) => CheckReport {
            name: "vaisman".into(),
            status: CheckStatus::Fail,
            residual,
            tolerance: tol.unitary_residual.max(tol.commutation_residual),
            worst_sample: None,
            detail: Some(reasons.join("; ")),
            elapsed_seconds: 0.0,
        },
        VaismanVerdict::Inapplicable(reason) => CheckReport::inapplicable("vaisman", reason),
    }
}

fn vaisman_summary_of(
    contraction: &Contraction,
    field: &PotentialField,
    samples: &[CVector],
) -> Option<VaismanSummary> {
    let tol = field.tolerances();
    match canonical_xi(contraction) {
        Ok(xi) => {
            let cand = check_vaisman_criterion(contraction, field.shell(), &xi, tol);
            let (reasons, verdict) = match &cand.verdict {
                VaismanVerdict::Satisfied => (Vec::new(), "satisfied"),
                VaismanVerdict::Violated(r) => (r.clone(), "violated"),
                VaismanVerdict::Inapplicable(r) => (vec![r.clone()], "inapplicable"),
            };
            let constants = if cand.verdict == VaismanVerdict::Satisfied {
                let subset: Vec<CVector> = samples.iter().take(50).cloned().collect();
                homothety_constants(field, &xi, &subset).ok()
            } else {
                None
            };
            Some(VaismanSummary {
                verdict: verdict.into(),
                reasons,
                commutation_residual: cand.commutation_residual,
                unitarity_residual: cand.unitarity_residual,
                shell_preservation_residual: cand.shell_preservation_residual,
                c: constants.map(|h| h.c),
                c_prime: constants.map(|h| h.c_prime),
                rescale_exponent: constants.map(|h| h.kappa),
            })
        }
        Err(_) => Some(VaismanSummary {
            verdict: "inapplicable".into(),
            reasons: vec!["canonical candidate needs a diagonalizable contraction".into()],
            commutation_residual: None,
            unitarity_residual: None,
            shell_preservation_residual: None,
            c: None,
            c_prime: None,
            rescale_exponent: None,
        }),
    }
}

// ---------------------------------------------------------------------------
// Auxiliary entry points for CLI subcommands
// ---------------------------------------------------------------------------

/// Shared prefix: contraction, flow, shell, admissible setup.
pub fn build_setup(config: &RunConfig) -> Result<PotentialSetup> {
    config.validate()?;
    let tol = config.tolerances.clone();
    let contraction = spectral_check(&config.matrix_a(), &tol)?;
    let flow = principal_log(&contraction, &tol)?;
    let (shell, _) = build_shell(config, &flow)?;
    PotentialSetup::new(contraction, flow, shell, tol)
}

pub fn setup_samples(config: &RunConfig, setup: &PotentialSetup) -> Result<Vec<CVector>> {
    sample_points(
        config.sampling.count,
        config.sampling.t_range,
        config.sampling.seed,
        setup.flow(),
        setup.shell(),
        setup.tolerances(),
    )
}

/// Per-sample CSV dump of the potential and smallest Hessian eigenvalue.
/// Header: `re_z1,im_z1,...,phi,min_eig`.
pub fn potential_dump(config: &RunConfig) -> Result<Vec<u8>> {
    let setup = build_setup(config)?;
    let lambda = match &config.lambda {
        LambdaConfig::Fixed(v) => *v,
        LambdaConfig::Keyword(_) => {
            let samples = setup_samples(config, &setup)?;
            let bracket = (config.lambda_bracket[0], config.lambda_bracket[1]);
            2.0 * find_min_lambda(&setup, &samples, bracket)?.lambda_star
        }
    };
    let field = setup.with_lambda(lambda)?;
    let samples = setup_samples(config, &setup)?;
    let hessians = field.hessian_samples(&samples)?;

    let mut header = String::new();
    for j in 1..=config.n {
        header.push_str(&format!("re_z{j},im_z{j},"));
    }
    header.push_str("phi,min_eig\n");
    let mut out = header;
    for h in &hessians {
        for v in h.point.iter() {
            out.push_str(&format!("{:.16e},{:.16e},", v.re, v.im));
        }
        out.push_str(&format!("{:.16e},{:.16e}\n", h.phi, h.min_eig));
    }
    Ok(out.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn radial_config(count: usize, seed: u64) -> RunConfig {
        RunConfig::from_toml(&format!(
            r#"
n = 2
matrix = [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]]
lambda = 1.3862943611198906

[shell]
type = "sphere"

[sampling]
count = {count}
t_range = [-2.0, 2.0]
seed = {seed}
"#
        ))
        .unwrap()
    }

    #[test]
    fn radial_pipeline_all_pass() {
        let outcome = run_pipeline(&radial_config(24, 7));
        assert_eq!(outcome.exit_code, EXIT_PASS, "report: {:?}", outcome.report);
        assert_eq!(outcome.report.overall, "pass");
        // every configured check appears exactly once
        for name in STANDARD_CHECKS {
            let hits = outcome
                .report
                .checks
                .iter()
                .filter(|c| c.name == *name)
                .count();
            assert_eq!(hits, 1, "check {name}");
        }
    }

    #[test]
    fn non_contraction_exits_with_precondition_code() {
        let mut config = radial_config(4, 1);
        config.matrix[3] = [1.2, 0.0];
        let outcome = run_pipeline(&config);
        assert_eq!(outcome.exit_code, EXIT_PRECONDITION);
        assert!(outcome.report.precondition_error.is_some());
        assert!(outcome
            .report
            .checks
            .iter()
            .all(|c| c.status == CheckStatus::Inapplicable));
    }

    #[test]
    fn report_roundtrips_through_json() {
        let outcome = run_pipeline(&radial_config(8, 3));
        let bytes = emit_report(&outcome.report, ReportFormat::Json).unwrap();
        let parsed = crate::report::run_report_from_json(&bytes).unwrap();
        assert_eq!(parsed, outcome.report);
    }
}
