use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use egalg::einstein::{catalog, RESIDUAL_TOL};
use egalg::grassmann::GrassmannElement;
use egalg::stage::Category;
use egalg::suite::{self, Report, DEFAULT_SEED};
use egalg::supercurve::{resolve_curve, CurveGrading};
use egalg::symalg::{parse_expr, Expr};

/// Default directory searched for metric and curve files.
const CATALOG_ENV: &str = "EGALG_CATALOG_DIR";

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "egalg",
    version,
    about = "Verification harness for Grassmann-valued Einstein algebras"
)]
struct Cli {
    /// Seed for every randomized check.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Where to write the JSON report; `-` writes it to standard output
    /// in place of the summary.
    #[arg(long, short, global = true, default_value = "egalg-report.json")]
    output: PathBuf,
    /// Leave the timestamp out of the report.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Directory searched for metric and curve files.
    #[arg(long, global = true, env = CATALOG_ENV)]
    catalog_dir: Option<PathBuf>,
    /// Residual tolerance for `einstein-check`.
    #[arg(long, global = true, default_value_t = RESIDUAL_TOL)]
    tolerance: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grassmann algebra laws, nilpotency indices and idempotents.
    Grassmann {
        #[arg(value_enum)]
        action: GrassmannAction,
    },
    /// Einstein equation check for a metric.
    EinsteinCheck {
        /// Built-in name or JSON file.
        #[arg(long)]
        metric: String,
        /// `i` (with Λ and T) or `ii` (vacuum).
        #[arg(long)]
        mode: Option<String>,
        /// Cosmological constant.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
    },
    /// Lifted Einstein check over Grassmann stages.
    LiftCheck {
        #[arg(long)]
        metric: String,
    },
    /// Prolongation, point classification and topology of M*.
    Singularity {
        #[arg(value_enum)]
        action: SingularityAction,
        /// Extra function of x, y for the prolongation table.
        #[arg(long = "function")]
        functions: Vec<String>,
        /// Extra ρ(1) to classify, as `{"n":..,"terms":[{"blade":[..],"coeff":".."}]}`.
        #[arg(long = "rho1")]
        rho1: Vec<String>,
    },
    /// Lift of a curve to a supercurve.
    Supercurve {
        #[arg(long)]
        curve: String,
        #[arg(long, default_value = "11")]
        grading: String,
        #[arg(long, default_value = "smooth")]
        category: String,
    },
    /// Section algebra, supermaps and the singular super structure.
    Supersheaf {
        #[arg(value_enum)]
        action: SupersheafAction,
    },
    /// Every command over the built-in catalog.
    Suite,
}

#[derive(ValueEnum, Clone, Debug)]
enum GrassmannAction {
    Selftest,
}

#[derive(ValueEnum, Clone, Debug)]
enum SingularityAction {
    Demo,
}

#[derive(ValueEnum, Clone, Debug)]
enum SupersheafAction {
    Check,
}

fn parse_lambda(src: &str) -> Result<Expr, String> {
    parse_expr(src).map_err(|e| format!("--lambda: {e}"))
}

fn build_report(cli: &Cli) -> Result<Report, String> {
    if !(cli.tolerance > 0.0 && cli.tolerance.is_finite()) {
        return Err("--tolerance must be positive".to_string());
    }
    let dir = cli.catalog_dir.as_deref();
    let report = match &cli.command {
        Command::Grassmann {
            action: GrassmannAction::Selftest,
        } => suite::grassmann_selftest(cli.seed),
        Command::EinsteinCheck {
            metric,
            mode,
            lambda,
        } => {
            let entry = catalog::resolve(metric, dir).map_err(|e| e.to_string())?;
            let mode = match mode {
                Some(m) => Some(
                    catalog::parse_mode(m)
                        .ok_or_else(|| format!("--mode: expected i or ii, got `{m}`"))?,
                ),
                None => None,
            };
            let lambda = lambda.as_deref().map(parse_lambda).transpose()?;
            suite::einstein_report(&entry, lambda.as_ref(), mode, cli.tolerance)
                .map_err(|e| e.to_string())?
        }
        Command::LiftCheck { metric } => {
            let entry = catalog::resolve(metric, dir).map_err(|e| e.to_string())?;
            suite::lift_report(&entry, cli.seed).map_err(|e| e.to_string())?
        }
        Command::Singularity {
            action: SingularityAction::Demo,
            functions,
            rho1,
        } => {
            let functions: Vec<Expr> = functions
                .iter()
                .map(|f| parse_expr(f).map_err(|e| format!("--function: {e}")))
                .collect::<Result<_, _>>()?;
            let rho1: Vec<GrassmannElement> = rho1
                .iter()
                .map(|r| {
                    let v: serde_json::Value =
                        serde_json::from_str(r).map_err(|e| format!("--rho1: {e}"))?;
                    GrassmannElement::from_json_value(&v).map_err(|e| format!("--rho1: {e}"))
                })
                .collect::<Result<_, _>>()?;
            suite::singularity_report(cli.seed, &functions, &rho1)
        }
        Command::Supercurve {
            curve,
            grading,
            category,
        } => {
            let curve = resolve_curve(curve, dir).map_err(|e| e.to_string())?;
            let grading = CurveGrading::parse(grading)
                .ok_or_else(|| format!("--grading: expected 10, 01 or 11, got `{grading}`"))?;
            let category = Category::parse(category).ok_or_else(|| {
                format!("--category: expected smooth or linear, got `{category}`")
            })?;
            suite::supercurve_report(&curve, grading, category, cli.seed)
        }
        Command::Supersheaf {
            action: SupersheafAction::Check,
        } => suite::supersheaf_report(cli.seed),
        Command::Suite => suite::full_suite(cli.seed),
    };
    Ok(report)
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let mut report = match build_report(&cli) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if !cli.no_timestamp {
        report.timestamp = Some(timestamp());
    }
    let json = report.to_json_string();
    let mut text = String::new();
    if cli.output.as_os_str() == "-" {
        text = format!("{json}\n");
    } else {
        if let Err(e) = std::fs::write(&cli.output, format!("{json}\n")) {
            eprintln!("error: cannot write {}: {e}", cli.output.display());
            return ExitCode::from(EXIT_USAGE);
        }
        text.push_str(&report.summary());
        if !report.passed {
            text.push_str("failing items:\n");
            for f in &report.failures {
                text.push_str(&format!("  {f}\n"));
            }
        }
    }
    // A closed pipe on stdout is not an error of the run.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}
