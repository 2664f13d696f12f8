//! Command-line interface: structural info, signature sets, realisation,
//! metric sampling and the orbit flow, with deterministic scriptable output.
//!
//! Exit codes: 0 success, 1 usage error (unknown algebra, bad flags),
//! 2 computation error, 3 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nilric::catalog::Report;
use nilric::{
    act, attainable_set, builtin, builtin_names, conjectured_set, load, minimize, profile, realize,
    ricci, sample_metrics_with_tol, signature, standard_decomposition, verify_kernel, Error,
    FlowOptions, RealizeOptions, Signature, StructureTensor,
};

const EXIT_USAGE: u8 = 1;
const EXIT_COMPUTATION: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nilric",
    version,
    about = "Ricci curvature signatures of left-invariant metrics on nilpotent Lie groups",
    after_help = "Algebras are referenced by built-in name, file path, or a name resolved in \
                  the directory given by NILRIC_CATALOG."
)]
struct Cli {
    /// Relative eigenvalue tolerance for signatures (for `flow`: the
    /// residual tolerance of the descent).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed for randomised operations.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Also write the report to this path.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Emit the machine-readable key-value report format.
    #[arg(long, global = true)]
    kv: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural invariants of an algebra.
    Info(AlgebraArg),
    /// The attainable signature set (optionally with the weaker historical set).
    Signatures {
        #[command(flatten)]
        algebra: AlgebraArg,
        /// Also print the historical (weaker) set and the difference.
        #[arg(long)]
        conjecture: bool,
    },
    /// Construct a metric frame realising a target signature.
    Realize {
        #[command(flatten)]
        algebra: AlgebraArg,
        /// Target signature as `neg,zero,pos`.
        #[arg(long)]
        target: String,
        /// Initial perturbation scale relative to the Ricci norm.
        #[arg(long)]
        delta_init: Option<f64>,
        /// Newton residual tolerance.
        #[arg(long)]
        newton_tol: Option<f64>,
    },
    /// Sample seeded random metrics and report the observed signatures.
    Sample {
        #[command(flatten)]
        algebra: AlgebraArg,
        /// Number of metrics to draw.
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Minimise the orbit norm over the structure-preserving subgroup.
    Flow {
        #[command(flatten)]
        algebra: AlgebraArg,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Initial Armijo step.
        #[arg(long)]
        armijo_init: Option<f64>,
    },
}

#[derive(Args)]
struct AlgebraArg {
    /// Built-in name, file path, or name under NILRIC_CATALOG.
    algebra: String,
}

struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_USAGE,
        }
    }

    fn computation(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_COMPUTATION,
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_VERIFICATION,
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match &err {
            Error::UnknownAlgebra { .. } => Failure::usage(err.to_string()),
            Error::SignatureMismatch { .. } => Failure::verification(err.to_string()),
            _ => Failure::computation(err.to_string()),
        }
    }
}

fn resolve_algebra(reference: &str) -> Result<(String, StructureTensor), Failure> {
    let from_file = |path: &Path| -> Result<(String, StructureTensor), Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::computation(format!("cannot read {}: {e}", path.display())))?;
        let mu = load(&text)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| reference.to_string());
        Ok((name, mu))
    };
    let path = Path::new(reference);
    if path.is_file() {
        return from_file(path);
    }
    match builtin(reference) {
        Ok(entry) => {
            let mu = entry.tensor()?;
            return Ok((entry.name, mu));
        }
        Err(Error::UnknownAlgebra { .. }) => {}
        Err(other) => return Err(other.into()),
    }
    if let Ok(dir) = std::env::var("NILRIC_CATALOG") {
        for candidate in [
            PathBuf::from(&dir).join(reference),
            PathBuf::from(&dir).join(format!("{reference}.txt")),
        ] {
            if candidate.is_file() {
                return from_file(&candidate);
            }
        }
    }
    Err(Failure::usage(format!(
        "unknown algebra {reference:?}; available built-ins: {}",
        builtin_names().join(", ")
    )))
}

fn parse_target(text: &str) -> Result<Signature, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Failure::usage(format!(
            "target must be `neg,zero,pos`, got {text:?}"
        )));
    }
    let mut vals = [0usize; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| Failure::usage(format!("target component {part:?} is not an integer")))?;
    }
    Ok(Signature::new(vals[0], vals[1], vals[2]))
}

fn fmt_f(v: f64) -> String {
    format!("{v:.12e}")
}

fn signature_list(set: &std::collections::BTreeSet<Signature>) -> String {
    set.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let sig_tol = cli.tol.unwrap_or(nilric::invariants::SIGNATURE_REL_TOL);
    match &cli.command {
        Command::Info(arg) => {
            let (name, mu) = resolve_algebra(&arg.algebra)?;
            let p = profile(&mu)?;
            let series = mu.central_series()?;
            let mut report = Report::new();
            report.push("report", "info");
            report.push("algebra", &name);
            report.push("dim", mu.dim());
            report.push("profile.u", p.u);
            report.push("profile.a", p.a);
            report.push("profile.z", p.z);
            report.push("profile.m", p.m);
            report.push(
                "central_series.dims",
                series
                    .iter()
                    .map(|s| s.dim().to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            report.push("derivations.dim", mu.derivations().len());
            Ok(report)
        }
        Command::Signatures {
            algebra,
            conjecture,
        } => {
            let (name, mu) = resolve_algebra(&algebra.algebra)?;
            let p = profile(&mu)?;
            let strong = attainable_set(&p);
            let mut report = Report::new();
            report.push("report", "signatures");
            report.push("algebra", &name);
            report.push("dim", mu.dim());
            report.push("attainable.count", strong.len());
            report.push("attainable", signature_list(&strong));
            if *conjecture {
                let weak = conjectured_set(&p);
                let diff: std::collections::BTreeSet<Signature> =
                    weak.difference(&strong).copied().collect();
                report.push("conjectured.count", weak.len());
                report.push("conjectured", signature_list(&weak));
                report.push("difference.count", diff.len());
                report.push("difference", signature_list(&diff));
            }
            Ok(report)
        }
        Command::Realize {
            algebra,
            target,
            delta_init,
            newton_tol,
        } => {
            let (name, mu) = resolve_algebra(&algebra.algebra)?;
            let target = parse_target(target)?;
            let mut opts = RealizeOptions {
                sig_tol,
                ..RealizeOptions::default()
            };
            if let Some(d) = delta_init {
                opts.delta_init_rel = *d;
            }
            if let Some(t) = newton_tol {
                opts.newton_tol = *t;
            }
            opts.flow.seed = cli.seed;
            let out = realize(&mu, &target, &opts)?;
            let ric = ricci(&act(&out.frame, &mu)?);
            let mut report = Report::new();
            report.push("report", "realize");
            report.push("algebra", &name);
            report.push("dim", mu.dim());
            report.push("target", target);
            report.push("achieved", out.achieved);
            report.push("eigen_gap", format!("{:.3e}", out.eigen_gap));
            report.push("delta", fmt_f(out.delta));
            report.push("delta_retries", out.delta_retries);
            report.push("newton_residual", fmt_f(out.newton_residual));
            report.push("flow.iterations", out.flow.iterations);
            report.push("flow.residual", fmt_f(out.flow.residual));
            report.push(
                "eigenvalues",
                ric.eigenvalues()
                    .iter()
                    .map(|v| fmt_f(*v))
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            for (i, row) in out.frame.matrix().row_iter().enumerate() {
                report.push(
                    &format!("frame.row.{i}"),
                    row.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(" "),
                );
            }
            Ok(report)
        }
        Command::Sample { algebra, n } => {
            let (name, mu) = resolve_algebra(&algebra.algebra)?;
            let sample = sample_metrics_with_tol(&mu, &name, *n, cli.seed, sig_tol)?;
            let mut report = Report::new();
            report.push("report", "sample");
            report.push("algebra", &name);
            report.push("dim", mu.dim());
            report.push("n", sample.n_samples);
            report.push("seed", sample.seed);
            report.push("signatures.count", sample.counts.len());
            for (sig, count) in &sample.counts {
                report.push(&format!("count.{sig}"), count);
            }
            report.push("violations.count", sample.violations.len());
            for (idx, sig) in sample.violations.iter().take(10) {
                report.push(&format!("violation.{idx}"), sig);
            }
            if !sample.violations.is_empty() {
                return Err(Failure {
                    message: format!(
                        "{report}error: {} sampled signature(s) outside the attainable set",
                        sample.violations.len()
                    ),
                    code: EXIT_VERIFICATION,
                });
            }
            Ok(report)
        }
        Command::Flow {
            algebra,
            max_iter,
            armijo_init,
        } => {
            let (name, mu) = resolve_algebra(&algebra.algebra)?;
            let spec = standard_decomposition(&mu)?;
            let mut opts = FlowOptions {
                tol: cli.tol,
                seed: cli.seed,
                ..FlowOptions::default()
            };
            if let Some(m) = max_iter {
                opts.max_iter = *m;
            }
            if let Some(a) = armijo_init {
                opts.armijo_init = *a;
            }
            let flow = minimize(&mu, &spec, &opts)?;
            let kernel_ok = verify_kernel(&flow, &spec);
            let sig = signature(
                ricci(&flow.final_mu).matrix(),
                nilric::invariants::SIGNATURE_REL_TOL,
            )?;
            let mut report = Report::new();
            report.push("report", "flow");
            report.push("algebra", &name);
            report.push("dim", mu.dim());
            report.push("v1.dim", spec.v1().dim());
            report.push("v2.dim", spec.v2().dim());
            report.push("v3.dim", spec.v3().dim());
            report.push("subalgebra.dim", spec.subalgebra_dim());
            report.push("converged", flow.converged);
            report.push("iterations", flow.iterations);
            report.push("residual", fmt_f(flow.residual));
            report.push(
                "norm_sq.initial",
                fmt_f(*flow.norm_history.first().unwrap()),
            );
            report.push("norm_sq.final", fmt_f(*flow.norm_history.last().unwrap()));
            report.push("kernel_verified", kernel_ok);
            report.push("signature", sig);
            if !kernel_ok {
                return Err(Failure {
                    message: format!("{report}error: kernel verification failed"),
                    code: EXIT_VERIFICATION,
                });
            }
            Ok(report)
        }
    }
}

/// Renders the report: key-value lines in `--kv` mode, aligned plain text
/// otherwise. Both are byte-deterministic for fixed inputs and flags.
fn render(report: &Report, kv: bool) -> String {
    if kv {
        return report.to_string();
    }
    let width = report
        .fields()
        .iter()
        .map(|(k, _)| k.len())
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for (k, v) in report.fields() {
        out.push_str(&format!("{k:<width$}  {v}\n"));
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests exit 0; genuine usage errors exit 1.
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(report) => {
            let text = render(&report, cli.kv);
            print!("{text}");
            if let Some(path) = &cli.output {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(EXIT_COMPUTATION);
                }
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("{}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
