//! Command-line front end. Reports go to stdout as JSON (or CSV for
//! `bounds --format csv`); human-readable notes go to stderr.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::io::{read_tensor, to_dense_json};
use crate::opnorms::{bound_report, EstimatorConfig, NormBoundReport, Operator};
use crate::spectral::{find_h_pairs, find_z_pairs, verify_bounds, EigenPair, Shift};
use crate::structure::{
    check_semipositive, classify_with_tolerance, generate, GenKind, SemiPositivityMode, Variant,
    Verdict,
};
use crate::tcp::{
    boundedness_probe, residual, solution_lower_bounds, solve, verify_solution_bounds,
    SolverConfig, TcpOutcome,
};
use crate::tensor::NormKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "btensor",
    version,
    about = "B-tensor structure, bounds, eigenpairs and TCP tools"
)]
pub struct Cli {
    /// Write a run manifest (command, input hashes, seed, timing, report) to this path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Random seed; falls back to BTENSOR_SEED, then 7.
    #[arg(long, env = "BTENSOR_SEED", default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a tensor as B, B0 or neither.
    Classify {
        file: PathBuf,
        /// Noise tolerance for the defining inequalities.
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
    /// Grid certificate for (strict) semi-positivity on the simplex.
    Semipositive {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Strict)]
        mode: ModeArg,
        #[arg(long, default_value_t = 8)]
        grid: usize,
    },
    /// Operator-norm bounds for T or F, optionally with an empirical estimate.
    Bounds {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = OpArg::T)]
        op: OpArg,
        #[arg(long, value_enum, default_value_t = NormArg::Inf)]
        norm: NormArg,
        /// Exponent for `--norm p`.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        estimate: bool,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Search for H- or Z-eigenpairs and optionally check the spectral bounds.
    Eigen {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::H)]
        kind: KindArg,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Z-iteration shift: `auto` or a number.
        #[arg(long, default_value = "auto")]
        shift: String,
        #[arg(long)]
        verify_bounds: bool,
    },
    /// Tensor complementarity problems.
    Tcp {
        #[command(subcommand)]
        action: TcpCommand,
    },
    /// Generate a tensor file.
    Gen {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = GenArg::B)]
        kind: GenArg,
        #[command(flatten)]
        seed: SeedArg,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the golden checks on the bundled reference tensors.
    VerifyPaper {
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Debug, Args)]
struct TcpArgs {
    file: PathBuf,
    /// JSON array, e.g. "[-1,-1,-1]".
    #[arg(long, allow_hyphen_values = true)]
    q: String,
}

#[derive(Debug, Subcommand)]
enum TcpCommand {
    Solve {
        #[command(flatten)]
        args: TcpArgs,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Lower bounds on nonzero solutions.
    Bounds {
        #[command(flatten)]
        args: TcpArgs,
    },
    /// Check a candidate solution and its lower bounds.
    Verify {
        #[command(flatten)]
        args: TcpArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Probe boundedness of the solution set over growing start radii.
    Probe {
        #[command(flatten)]
        args: TcpArgs,
        #[arg(long, default_value = "[1,10,100]")]
        radii: String,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Weak,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OpArg {
    #[value(name = "T", alias = "t")]
    T,
    #[value(name = "F", alias = "f")]
    F,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    Inf,
    P,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    H,
    Z,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenArg {
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "B0", alias = "b0")]
    B0,
    Diagonal,
    Random,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: Vec<String>,
    input_hashes: Vec<(String, String)>,
    seed: Option<u64>,
    tool_version: &'static str,
    wall_clock_ms: u128,
    report: &'a Value,
}

/// Command output: the report value plus the exit status it implies.
struct Outcome {
    report: Value,
    text: Option<String>,
    exit: i32,
    summary: String,
}

impl Outcome {
    fn ok(report: impl Serialize, summary: String) -> Result<Self, Error> {
        Self::with_status(report, summary, true)
    }

    fn with_status(report: impl Serialize, summary: String, pass: bool) -> Result<Self, Error> {
        Ok(Self {
            report: serde_json::to_value(report).map_err(|e| Error::Parse(e.to_string()))?,
            text: None,
            exit: if pass { EXIT_OK } else { EXIT_VERIFY_FAILED },
            summary,
        })
    }
}

fn parse_vector(s: &str, what: &str) -> Result<Vec<f64>, Error> {
    serde_json::from_str::<Vec<f64>>(s).map_err(|e| Error::Parse(format!("--{what}: {e}")))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::WrongClass { .. } | Error::ZeroSolution => EXIT_VERIFY_FAILED,
        _ => EXIT_USAGE,
    }
}

fn hash_file(path: &Path) -> Option<String> {
    let bytes = std::fs::read(path).ok()?;
    Some(format!("{:x}", Sha256::digest(&bytes)))
}

fn csv_row(r: &NormBoundReport) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "operator,norm,verdict,general_upper,b_lower,b_upper,b_diagonal_upper,strict,estimate\n{:?},{},{:?},{},{},{},{},{},{}\n",
        r.operator,
        r.norm,
        r.verdict,
        r.general_upper,
        opt(r.b_lower),
        opt(r.b_upper),
        opt(r.b_diagonal_upper),
        r.strict,
        opt(r.empirical_estimate)
    )
}

fn variant_of(verdict: Verdict) -> Option<Variant> {
    match verdict {
        Verdict::B => Some(Variant::B),
        Verdict::B0 => Some(Variant::B0),
        Verdict::Neither => None,
    }
}

fn dispatch(
    command: &Command,
    err: &mut dyn Write,
) -> Result<(Outcome, Vec<PathBuf>, Option<u64>), Error> {
    let mut inputs = Vec::new();
    let mut seed_used = None;
    let outcome = match command {
        Command::Classify { file, tol } => {
            inputs.push(file.clone());
            let t = read_tensor(file)?;
            let report = classify_with_tolerance(&t, *tol);
            let summary = format!("verdict: {}", report.verdict.name());
            Outcome::ok(report, summary)?
        }
        Command::Semipositive { file, mode, grid } => {
            inputs.push(file.clone());
            let t = read_tensor(file)?;
            let mode = match mode {
                ModeArg::Strict => SemiPositivityMode::Strict,
                ModeArg::Weak => SemiPositivityMode::Weak,
            };
            let cert = check_semipositive(&t, mode, *grid)?;
            let summary = format!(
                "{} points, worst value {:e}, violated: {}",
                cert.points_checked, cert.worst_value, cert.violated
            );
            let pass = !cert.violated;
            Outcome::with_status(cert, summary, pass)?
        }
        Command::Bounds {
            file,
            op,
            norm,
            p,
            estimate,
            samples,
            steps,
            seed,
            format,
        } => {
            inputs.push(file.clone());
            let t = read_tensor(file)?;
            let kind = match norm {
                NormArg::Inf => NormKind::Infinity,
                NormArg::P => NormKind::P(*p),
            };
            let op = match op {
                OpArg::T => Operator::T,
                OpArg::F => Operator::F,
            };
            let cfg = EstimatorConfig {
                samples: *samples,
                ascent_steps: *steps,
                seed: seed.seed,
                ..Default::default()
            };
            if *estimate {
                seed_used = Some(seed.seed);
            }
            let report = bound_report(&t, kind, op, estimate.then_some(&cfg))?;
            let pass = report.sandwich_holds != Some(false) && report.gap_holds != Some(false);
            let summary = format!(
                "general {}, structural [{:?}, {:?}], estimate {:?}",
                report.general_upper, report.b_lower, report.b_upper, report.empirical_estimate
            );
            let text = matches!(format, FormatArg::Csv).then(|| csv_row(&report));
            let mut out = Outcome::with_status(&report, summary, pass)?;
            out.text = text;
            out
        }
        Command::Eigen {
            file,
            kind,
            starts,
            seed,
            shift,
            verify_bounds: check,
        } => {
            inputs.push(file.clone());
            seed_used = Some(seed.seed);
            let t = read_tensor(file)?;
            let shift = match shift.as_str() {
                "auto" => Shift::Auto,
                s => Shift::Fixed(s.parse().map_err(|_| {
                    Error::Parse(format!("--shift: expected auto or a number, got {s}"))
                })?),
            };
            let pairs: Vec<EigenPair> = match kind {
                KindArg::H => find_h_pairs(&t, *starts, seed.seed),
                KindArg::Z => find_z_pairs(&t, shift, *starts, seed.seed),
            };
            let bounds = if *check {
                let variant = variant_of(crate::structure::classify(&t).verdict).ok_or(
                    Error::WrongClass {
                        required: "B0 (or B)",
                        actual: "Neither",
                    },
                )?;
                Some(verify_bounds(&t, &pairs, variant)?)
            } else {
                None
            };
            let pass = bounds.as_ref().is_none_or(|b| b.all_within);
            let summary = format!("{} pairs", pairs.len());
            Outcome::with_status(
                serde_json::json!({ "pairs": pairs, "bounds": bounds }),
                summary,
                pass,
            )?
        }
        Command::Tcp { action } => match action {
            TcpCommand::Solve {
                args,
                starts,
                max_iter,
                tol,
                seed,
            } => {
                inputs.push(args.file.clone());
                seed_used = Some(seed.seed);
                let t = read_tensor(&args.file)?;
                let q = parse_vector(&args.q, "q")?;
                let cfg = SolverConfig {
                    starts: *starts,
                    max_iter: *max_iter,
                    tol: *tol,
                    seed: seed.seed,
                };
                let out = solve(&t, &q, &cfg)?;
                let summary = format!("converged: {}, residual {:e}", out.converged, out.residual);
                let pass = out.converged;
                Outcome::with_status(out, summary, pass)?
            }
            TcpCommand::Bounds { args } => {
                inputs.push(args.file.clone());
                let t = read_tensor(&args.file)?;
                let q = parse_vector(&args.q, "q")?;
                let cert = solution_lower_bounds(&t, &q)?;
                let summary = format!("lb_inf {:e}, lb_2 {:e}", cert.lb_inf, cert.lb_2);
                Outcome::ok(cert, summary)?
            }
            TcpCommand::Verify { args, x, tol } => {
                inputs.push(args.file.clone());
                let t = read_tensor(&args.file)?;
                let q = parse_vector(&args.q, "q")?;
                let x = parse_vector(x, "x")?;
                if x.len() != t.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: t.dim(),
                        actual: x.len(),
                    });
                }
                let (res, w) = residual(&t, &q, &x)?;
                let outcome = TcpOutcome {
                    converged: res <= *tol && x.iter().all(|&v| v >= 0.0),
                    x,
                    w,
                    residual: res,
                    starts_used: 0,
                };
                let cert = if outcome.converged && outcome.x.iter().any(|&v| v != 0.0) {
                    Some(verify_solution_bounds(&t, &q, &outcome)?)
                } else {
                    None
                };
                let pass = outcome.converged && cert.as_ref().is_none_or(|c| c.holds == Some(true));
                let summary = format!(
                    "solution: {}, residual {:e}",
                    outcome.converged, outcome.residual
                );
                Outcome::with_status(
                    serde_json::json!({ "outcome": outcome, "certificate": cert }),
                    summary,
                    pass,
                )?
            }
            TcpCommand::Probe {
                args,
                radii,
                starts,
                seed,
            } => {
                inputs.push(args.file.clone());
                seed_used = Some(seed.seed);
                let t = read_tensor(&args.file)?;
                let q = parse_vector(&args.q, "q")?;
                let radii = parse_vector(radii, "radii")?;
                let cfg = SolverConfig {
                    starts: *starts,
                    seed: seed.seed,
                    ..Default::default()
                };
                let report = boundedness_probe(&t, &q, &radii, &cfg)?;
                let summary = format!("bounded: {}", report.bounded);
                let pass = report.bounded;
                Outcome::with_status(report, summary, pass)?
            }
        },
        Command::Gen {
            m,
            n,
            kind,
            seed,
            out,
        } => {
            seed_used = Some(seed.seed);
            let kind = match kind {
                GenArg::B => GenKind::B,
                GenArg::B0 => GenKind::B0,
                GenArg::Diagonal => GenKind::Diagonal,
                GenArg::Random => GenKind::Random,
            };
            let t = generate(kind, *m, *n, seed.seed).map_err(|e| match e {
                Error::InvalidArgument(msg) if msg.starts_with("could not generate") => {
                    Error::WrongClass {
                        required: "generated class",
                        actual: "retry cap exceeded",
                    }
                }
                other => other,
            })?;
            let text = to_dense_json(&t);
            let summary = format!("generated m={m} n={n} {kind:?}");
            let mut outcome = Outcome::ok(Value::Null, summary)?;
            match out {
                Some(path) => {
                    std::fs::write(path, &text)
                        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
                    outcome.report = serde_json::json!({ "written": path.display().to_string() });
                }
                None => outcome.text = Some(text),
            }
            outcome
        }
        Command::VerifyPaper { seed } => {
            seed_used = Some(seed.seed);
            let report = crate::golden::run(seed.seed)?;
            for c in &report.claims {
                let _ = writeln!(
                    err,
                    "[{}] {}: {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.id,
                    c.statement
                );
            }
            let summary = format!("{} passed, {} failed", report.passed, report.failed);
            let pass = report.all_pass();
            Outcome::with_status(report, summary, pass)?
        }
    };
    Ok((outcome, inputs, seed_used))
}

/// Parses `argv` (including the program name), runs the command, and
/// returns the process exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    let (outcome, inputs, seed) = match dispatch(&cli.command, err) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let body = match &outcome.text {
        Some(text) => text.clone(),
        None => {
            let mut s = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
            s.push('\n');
            s
        }
    };
    if out.write_all(body.as_bytes()).is_err() {
        return EXIT_USAGE;
    }
    let _ = writeln!(err, "{}", outcome.summary);
    if let Some(path) = &cli.manifest {
        let manifest = RunManifest {
            command: argv
                .iter()
                .map(|a| a.to_string_lossy().into_owned())
                .collect(),
            input_hashes: inputs
                .iter()
                .map(|p| (p.display().to_string(), hash_file(p).unwrap_or_default()))
                .collect(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            wall_clock_ms: started.elapsed().as_millis(),
            report: &outcome.report,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        if let Err(e) = std::fs::write(path, text) {
            let _ = writeln!(err, "error: cannot write manifest {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    outcome.exit
}
