//! The `evolalg` command line.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use evolalg::corpus::EXAMPLE_NAMES;
use evolalg::decision::describe_refutation;
use evolalg::pencil::DEFAULT_TRIALS;
use evolalg::{
    adversarial_instance, check_certificate, explain, is_evolution_algebra,
    planted_evolution_algebra, AdversarialKind, Algebra, CertificateCheck, DecisionOptions,
    Outcome, Tolerances, Verdict,
};
use thiserror::Error;

use crate::acceptance::{self, Suite};
use crate::format::{format_matrix, format_scalar, parse_matrix, serialise_algebra, FormatError};
use crate::report::{to_json, AnnJson, ReportJson, VerifyJson, VERIFY_SCHEMA};
use crate::source::{self, SourceError, EXAMPLE_SCHEME};

pub const EXIT_EVOLUTION: i32 = 0;
pub const EXIT_NOT_EVOLUTION: i32 = 1;
pub const EXIT_UNDETERMINED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Parser)]
#[command(
    name = "evolalg",
    version,
    about = "Decide whether a commutative algebra given by structure constants is an evolution algebra",
    after_help = "Exit codes: 0 Evolution, 1 NotEvolution, 2 undetermined, 64 usage, 65 bad input, 74 I/O."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Tolerance override such as `verify_rtol=1e-8`; repeat or separate with commas.
    #[arg(
        long = "tol",
        global = true,
        value_name = "NAME=VALUE",
        value_delimiter = ','
    )]
    pub tol: Vec<String>,
    /// Random pencil directions tried after the canonical ones.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Seed for pencil directions and for `random`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Args, Clone, Copy, Default)]
pub struct ExampleArgs {
    /// ε for `example://` inputs.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Accept ε outside the genetic range.
    #[arg(long)]
    pub allow_non_genetic: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide each input and print the verdict.
    Check {
        /// Algebra files, `-` for stdin, or `example://name[?epsilon=x]`.
        #[arg(required = true)]
        inputs: Vec<String>,
        #[command(flatten)]
        example: ExampleArgs,
    },
    /// Print a natural basis as a matrix file, or the refutation.
    Basis {
        input: String,
        #[command(flatten)]
        example: ExampleArgs,
    },
    /// Print a basis of the annihilator, one vector per line.
    Ann {
        input: String,
        #[command(flatten)]
        example: ExampleArgs,
    },
    /// Print a built-in example as an algebra file.
    Example {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(EXAMPLE_NAMES))]
        name: String,
        #[command(flatten)]
        example: ExampleArgs,
    },
    /// Print a random evolution algebra in a scrambled basis, or an adversarial instance.
    Random {
        #[arg(long)]
        dim: usize,
        /// `defective`, `noncommuting` or `ann_mismatch`.
        #[arg(long)]
        adversarial: Option<String>,
        /// Fraction of nonzero squares in the hidden natural basis.
        #[arg(long, default_value_t = 0.6)]
        density: f64,
        /// Also write the hidden natural basis as a matrix file.
        #[arg(long)]
        p_out: Option<PathBuf>,
    },
    /// Check that the columns of a matrix file form a natural basis.
    Verify {
        input: String,
        #[arg(long = "p", value_name = "MATRIX_FILE")]
        p: PathBuf,
        #[command(flatten)]
        example: ExampleArgs,
    },
    /// Run the acceptance suite.
    Acceptance {
        /// Case file; defaults to the built-in suite.
        #[arg(long)]
        cases: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Source(SourceError::BadUri { .. }) => EXIT_USAGE,
            CliError::Source(SourceError::Io { .. }) | CliError::Io { .. } => EXIT_IO,
            CliError::Source(_) | CliError::Data(_) => EXIT_DATA,
        }
    }
}

pub fn exit_code(outcome: &Outcome<f64>) -> i32 {
    match outcome {
        Outcome::Evolution { .. } => EXIT_EVOLUTION,
        Outcome::NotEvolution { .. } => EXIT_NOT_EVOLUTION,
        Outcome::ComplexOnlyUndetermined { .. } | Outcome::Undetermined { .. } => EXIT_UNDETERMINED,
    }
}

/// Tolerances from `name=value` overrides on top of the defaults.
pub fn tolerances(overrides: &[String]) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::default();
    for item in overrides.iter().filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--tol expects NAME=VALUE, got `{item}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--tol {name}: `{value}` is not a number")))?;
        tol = tol
            .with_field(name.trim(), value)
            .map_err(|e| CliError::Usage(format!("--tol: {e}")))?;
    }
    Ok(tol)
}

pub fn options(global: &GlobalArgs) -> Result<DecisionOptions<f64>, CliError> {
    Ok(DecisionOptions {
        tol: tolerances(&global.tol)?,
        trials: global.trials,
        seed: global.seed,
    })
}

/// Decision with its wall time in milliseconds.
pub fn decide(spec: &Algebra, opts: &DecisionOptions<f64>) -> (Verdict<f64>, f64) {
    let start = Instant::now();
    let verdict = is_evolution_algebra(spec, opts);
    (verdict, start.elapsed().as_secs_f64() * 1e3)
}

fn load(input: &str, ex: ExampleArgs) -> Result<Algebra, CliError> {
    Ok(source::load(input, ex.epsilon, ex.allow_non_genetic)?)
}

fn write_err(path: &str, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.into(),
        source: e,
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().ansi().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let g = &cli.global;
    let emit = |out: &mut dyn Write, text: &str| {
        out.write_all(text.as_bytes())
            .map_err(|e| write_err("<stdout>", e))
    };
    match &cli.command {
        Command::Check { inputs, example } => check(inputs, *example, g, out, err),
        Command::Basis { input, example } => {
            let spec = load(input, *example)?;
            let (verdict, ms) = decide(&spec, &options(g)?);
            let text = if g.json {
                to_json(&ReportJson::new(input, &verdict, ms))
            } else {
                basis_text(input, &verdict)
            };
            emit(out, &text)?;
            Ok(exit_code(&verdict.outcome))
        }
        Command::Ann { input, example } => {
            let spec = load(input, *example)?;
            let basis = spec.annihilator_basis(&options(g)?.tol);
            let text = if g.json {
                to_json(&AnnJson::new(input, spec.dim(), &basis))
            } else {
                let mut s = format!("# annihilator of {input}: dimension {}\n", basis.len());
                for v in &basis {
                    let row: Vec<String> = v.iter().map(|&z| format_scalar(z)).collect();
                    let _ = writeln!(s, "{}", row.join(" "));
                }
                s
            };
            emit(out, &text)?;
            Ok(0)
        }
        Command::Example { name, example } => {
            let uri = format!("{EXAMPLE_SCHEME}{name}");
            let (id, fixture) =
                source::load_example(&uri, example.epsilon, example.allow_non_genetic)?;
            if !fixture.genetic {
                if let Some((lo, hi)) = id.genetic_range() {
                    let _ = writeln!(
                        err,
                        "warning: {id} lies outside the genetic range [{lo}, {hi}]"
                    );
                }
            }
            emit(out, &serialise(&fixture.spec)?)?;
            Ok(0)
        }
        Command::Random {
            dim,
            adversarial,
            density,
            p_out,
        } => {
            let spec = match adversarial {
                Some(name) => {
                    let kind = AdversarialKind::parse(name).ok_or_else(|| {
                        let names: Vec<_> = AdversarialKind::ALL.iter().map(|k| k.name()).collect();
                        CliError::Usage(format!(
                            "unknown kind `{name}`; known: {}",
                            names.join(", ")
                        ))
                    })?;
                    if p_out.is_some() {
                        return Err(CliError::Usage("--p-out needs a planted instance".into()));
                    }
                    adversarial_instance::<f64>(kind, *dim, g.seed)
                        .map_err(|e| CliError::Usage(e.to_string()))?
                        .spec
                }
                None => {
                    if !(0.0..=1.0).contains(density) {
                        return Err(CliError::Usage("--density must lie in [0, 1]".into()));
                    }
                    let (spec, p) = planted_evolution_algebra::<f64>(*dim, *density, g.seed)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    if let Some(path) = p_out {
                        std::fs::write(path, format_matrix(&p))
                            .map_err(|e| write_err(&path.display().to_string(), e))?;
                    }
                    spec
                }
            };
            emit(out, &serialise(&spec)?)?;
            Ok(0)
        }
        Command::Verify { input, p, example } => {
            let spec = load(input, *example)?;
            let path = p.display().to_string();
            let text = source::read_text(&path)?;
            let matrix = parse_matrix(&text).map_err(|source| SourceError::Format {
                path: path.clone(),
                source,
            })?;
            let check = check_certificate(&spec, &matrix, &options(g)?.tol)
                .map_err(|e| CliError::Data(format!("{path}: {e}")))?;
            let (status, residual, pair) = match check {
                CertificateCheck::Yes { residual } => ("Yes", Some(residual), None),
                CertificateCheck::No { pair, residual } => {
                    ("No", Some(residual), Some([pair.0 + 1, pair.1 + 1]))
                }
                CertificateCheck::Singular => ("Singular", None, None),
            };
            let text = if g.json {
                to_json(&VerifyJson {
                    schema: VERIFY_SCHEMA.into(),
                    source: input.clone(),
                    status: status.into(),
                    residual,
                    pair,
                })
            } else {
                match (status, residual, pair) {
                    ("Yes", Some(r), _) => {
                        format!("valid natural basis (largest relative product {r:e})\n")
                    }
                    (_, Some(r), Some([i, j])) => {
                        format!("not a natural basis: e*_{i} e*_{j} has relative norm {r:e}\n")
                    }
                    _ => "not a natural basis: the matrix is singular\n".into(),
                }
            };
            emit(out, &text)?;
            Ok(if status == "Yes" {
                0
            } else {
                EXIT_NOT_EVOLUTION
            })
        }
        Command::Acceptance { cases } => {
            let suite = match cases {
                Some(path) => {
                    let path = path.display().to_string();
                    let text = source::read_text(&path)?;
                    Suite::from_toml(&text).map_err(|e| CliError::Data(format!("{path}: {e}")))?
                }
                None => Suite::builtin(),
            };
            let summary = acceptance::run_acceptance_suite(&suite, &options(g)?);
            let text = if g.json {
                to_json(&summary)
            } else {
                summary.render()
            };
            emit(out, &text)?;
            Ok(if summary.passed { 0 } else { 1 })
        }
    }
}

fn serialise(spec: &Algebra) -> Result<String, CliError> {
    serialise_algebra(spec).map_err(|e: FormatError| CliError::Data(e.to_string()))
}

fn check(
    inputs: &[String],
    example: ExampleArgs,
    g: &GlobalArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let opts = options(g)?;
    let results: Vec<Result<(Verdict<f64>, f64), CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = inputs
            .iter()
            .map(|input| {
                let opts = &opts;
                s.spawn(move || load(input, example).map(|spec| decide(&spec, opts)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("decision threads do not panic"))
            .collect()
    });
    let mut code = 0;
    let mut reports = Vec::new();
    let mut text = String::new();
    for (input, result) in inputs.iter().zip(results) {
        match result {
            Ok((verdict, ms)) => {
                code = code.max(exit_code(&verdict.outcome));
                if g.json {
                    reports.push(ReportJson::new(input, &verdict, ms));
                } else {
                    if inputs.len() > 1 {
                        let _ = writeln!(text, "== {input}");
                    }
                    text.push_str(&explain(&verdict));
                }
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                code = code.max(e.exit_code());
            }
        }
    }
    if g.json {
        text = match reports.as_slice() {
            [single] if inputs.len() == 1 => to_json(single),
            _ => to_json(&reports),
        };
    }
    out.write_all(text.as_bytes())
        .map_err(|e| write_err("<stdout>", e))?;
    Ok(code)
}

fn basis_text(input: &str, verdict: &Verdict<f64>) -> String {
    let mut s = String::new();
    match &verdict.outcome {
        Outcome::Evolution { certificate }
        | Outcome::ComplexOnlyUndetermined { certificate, .. } => {
            if let Outcome::ComplexOnlyUndetermined { note, .. } = &verdict.outcome {
                let _ = writeln!(s, "# {note}");
            }
            let _ = writeln!(s, "# natural basis of {input}: column i holds e*_i");
            for (i, sq) in certificate.squares.iter().enumerate() {
                let terms: Vec<String> = sq
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| z.norm() > 0.0)
                    .map(|(k, &z)| format!("({}) e*_{}", format_scalar(z), k + 1))
                    .collect();
                let rhs = if terms.is_empty() {
                    "0".into()
                } else {
                    terms.join(" + ")
                };
                let _ = writeln!(s, "# e*_{}^2 = {rhs}", i + 1);
            }
            s.push_str(&format_matrix(&certificate.p));
        }
        Outcome::NotEvolution { refutation } => {
            let _ = writeln!(s, "# {input} is not an evolution algebra");
            let _ = writeln!(s, "# {}", describe_refutation(refutation));
        }
        Outcome::Undetermined { reason } => {
            let _ = writeln!(s, "# undetermined: {reason}");
        }
    }
    s
}
