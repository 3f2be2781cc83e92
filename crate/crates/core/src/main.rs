//! Command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lcklab::config::RunConfig;
use lcklab::pipeline::{
    build_setup, emit_report, potential_dump, run_pipeline, setup_samples, ReportFormat,
    EXIT_CHECK_FAILED, EXIT_PRECONDITION,
};
use lcklab::potential::find_min_lambda;
use lcklab::report::to_json_bytes;
use lcklab::vaisman::{canonical_xi, check_vaisman_criterion, VaismanVerdict};

#[derive(Parser)]
#[command(name = "lcklab", version, about = "LCK metric potentials on Hopf manifolds: construction and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for reports.
    #[arg(long, default_value = "json")]
    format: String,
    /// Enable slow evidence checks (Lee-form parallelism).
    #[arg(long)]
    slow: bool,
    /// Worker threads (overrides LCKLAB_THREADS; default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the sampling seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full verification pipeline.
    Analyze(CommonArgs),
    /// Bisect the empirical plurisubharmonicity threshold in lambda.
    MinLambda(CommonArgs),
    /// Decide the Vaisman criterion for the configured contraction and shell.
    CheckVaisman(CommonArgs),
    /// Construct the Lyapunov ellipsoid shell for the configured contraction.
    ShellSuggest(CommonArgs),
    /// Dump phi and the smallest Hessian eigenvalue per sample as CSV.
    PotentialDump(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Analyze(a)
            | Command::MinLambda(a)
            | Command::CheckVaisman(a)
            | Command::ShellSuggest(a)
            | Command::PotentialDump(a) => a,
        }
    }
}

fn write_output(args: &CommonArgs, bytes: &[u8]) -> lcklab::Result<()> {
    match &args.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

fn load_config(args: &CommonArgs) -> lcklab::Result<RunConfig> {
    let mut config = RunConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        config.sampling.seed = seed;
    }
    if args.slow {
        config.slow = true;
        if !config.checks.iter().any(|c| c == "lee_parallel") {
            config.checks.push("lee_parallel".into());
        }
    }
    config.validate()?;
    Ok(config)
}

fn thread_pool(args: &CommonArgs) -> Option<rayon::ThreadPool> {
    let threads = args.threads.or_else(|| {
        std::env::var("LCKLAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .ok()
}

fn run(cli: Cli) -> i32 {
    let args = cli.command.common().clone();
    let format = match args.format.as_str() {
        "json" => ReportFormat::Json,
        "csv" => ReportFormat::Csv,
        other => {
            eprintln!("unknown format {other:?} (expected json or csv)");
            return EXIT_PRECONDITION;
        }
    };

    let config = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_PRECONDITION;
        }
    };

    let body = || -> (i32, lcklab::Result<Vec<u8>>) {
        match &cli.command {
            Command::Analyze(_) => {
                let outcome = run_pipeline(&config);
                (outcome.exit_code, emit_report(&outcome.report, format))
            }
            Command::MinLambda(_) => min_lambda_cmd(&config),
            Command::CheckVaisman(_) => check_vaisman_cmd(&config),
            Command::ShellSuggest(_) => shell_suggest_cmd(&config),
            Command::PotentialDump(_) => match potential_dump(&config) {
                Ok(bytes) => (0, Ok(bytes)),
                Err(e) => (EXIT_PRECONDITION, Err(e)),
            },
        }
    };

    let (exit, bytes) = match thread_pool(&args) {
        Some(pool) => pool.install(body),
        None => body(),
    };

    match bytes {
        Ok(bytes) => {
            if let Err(e) = write_output(&args, &bytes) {
                eprintln!("{e}");
                return EXIT_PRECONDITION;
            }
            exit
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_PRECONDITION
        }
    }
}

fn min_lambda_cmd(config: &RunConfig) -> (i32, lcklab::Result<Vec<u8>>) {
    let result = (|| {
        let setup = build_setup(config)?;
        let samples = setup_samples(config, &setup)?;
        let bracket = (config.lambda_bracket[0], config.lambda_bracket[1]);
        find_min_lambda(&setup, &samples, bracket)
    })();
    match result {
        Ok(min) => {
            #[derive(serde::Serialize)]
            struct Out {
                lambda_star: f64,
                threshold_found: bool,
                predicate_evaluations: usize,
                suggested_lambda: f64,
            }
            (
                0,
                to_json_bytes(&Out {
                    lambda_star: min.lambda_star,
                    threshold_found: min.threshold_found,
                    predicate_evaluations: min.evaluations,
                    suggested_lambda: 2.0 * min.lambda_star,
                }),
            )
        }
        Err(e) => (EXIT_PRECONDITION, Err(e)),
    }
}

fn check_vaisman_cmd(config: &RunConfig) -> (i32, lcklab::Result<Vec<u8>>) {
    let result = (|| {
        let setup = build_setup(config)?;
        let xi = match canonical_xi(setup.contraction()) {
            Ok(xi) => Some(xi),
            Err(lcklab::LckError::NotDiagonalizable { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok((setup, xi))
    })();

    #[derive(serde::Serialize)]
    struct Out {
        verdict: String,
        reasons: Vec<String>,
        commutation_residual: Option<f64>,
        unitarity_residual: Option<f64>,
        shell_preservation_residual: Option<f64>,
    }

    match result {
        Ok((setup, Some(xi))) => {
            let cand =
                check_vaisman_criterion(setup.contraction(), setup.shell(), &xi, setup.tolerances());
            let (verdict, reasons, exit) = match &cand.verdict {
                VaismanVerdict::Satisfied => ("satisfied".to_string(), Vec::new(), 0),
                VaismanVerdict::Violated(r) => ("violated".to_string(), r.clone(), EXIT_CHECK_FAILED),
                VaismanVerdict::Inapplicable(r) => {
                    ("inapplicable".to_string(), vec![r.clone()], 0)
                }
            };
            (
                exit,
                to_json_bytes(&Out {
                    verdict,
                    reasons,
                    commutation_residual: cand.commutation_residual,
                    unitarity_residual: cand.unitarity_residual,
                    shell_preservation_residual: cand.shell_preservation_residual,
                }),
            )
        }
        Ok((_, None)) => (
            0,
            to_json_bytes(&Out {
                verdict: "inapplicable".into(),
                reasons: vec!["canonical candidate needs a diagonalizable contraction".into()],
                commutation_residual: None,
                unitarity_residual: None,
                shell_preservation_residual: None,
            }),
        ),
        Err(e) => (EXIT_PRECONDITION, Err(e)),
    }
}

fn shell_suggest_cmd(config: &RunConfig) -> (i32, lcklab::Result<Vec<u8>>) {
    use lcklab::linalg::{frob, principal_log, spectral_check, CMatrix};
    use lcklab::shell::{admissibility_check, lyapunov_shell};

    let result = (|| {
        let tol = config.tolerances.clone();
        let contraction = spectral_check(&config.matrix_a(), &tol)?;
        let flow = principal_log(&contraction, &tol)?;
        let shell = lyapunov_shell(&flow, &tol)?;
        let p = shell.quadratic_matrix().expect("ellipsoid");
        let residual = frob(
            &(flow.generator().adjoint() * &p
                + &p * flow.generator()
                + CMatrix::identity(config.n, config.n)),
        );
        let cert = admissibility_check(&shell, &flow, &tol)?;
        Ok((p, residual, cert))
    })();

    match result {
        Ok((p, residual, cert)) => {
            #[derive(serde::Serialize)]
            struct Out {
                p: Vec<[f64; 2]>,
                lyapunov_residual: f64,
                admissibility_margin: f64,
            }
            (
                0,
                to_json_bytes(&Out {
                    p: lcklab::config::matrix_to_pairs(&p),
                    lyapunov_residual: residual,
                    admissibility_margin: cert.margin,
                }),
            )
        }
        Err(e) => (EXIT_PRECONDITION, Err(e)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(u8::try_from(run(cli)).unwrap_or(2))
}
