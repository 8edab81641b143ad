use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use inls::exponents::{
    alpha_thresholds, lemma_local_pairs, lemma_scattering_pairs, lemma_weighted_pairs, lwp_regime, mass_critical,
    parse_rational, strauss_exponent, Lemma, ProblemParams, Sign,
};
use inls::runner::{self, ReportKind, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "inls",
    version,
    about = "Simulate and analyse the inhomogeneous NLS i u_t + Δu + μ|x|^{-b}|u|^α u = 0"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and write series.csv, checkpoints and manifest.json.
    Simulate { config: PathBuf },
    /// Exponent thresholds, or one lemma's feasibility report with --lemma.
    Exponents {
        #[arg(long)]
        d: u32,
        /// Rational, e.g. 1/2.
        #[arg(long)]
        b: String,
        #[arg(long)]
        alpha: String,
        /// local, scattering or weighted.
        #[arg(long)]
        lemma: Option<Lemma>,
        #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
        mu: i32,
    },
    /// Judge a finished run directory.
    Report {
        run_dir: PathBuf,
        #[arg(long)]
        kind: ReportKind,
    },
    /// Run every *.json config in a directory.
    Sweep {
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("plain data serializes"));
}

fn simulate(path: &Path) -> Result<i32> {
    let config = runner::load_config(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    let run_dir = runner::resolve_run_dir(&config, &name, runner::output_root_from_env().as_deref());
    let manifest = runner::simulate(&config, &run_dir).with_context(|| format!("simulating {}", path.display()))?;
    print_json(&json!({ "run_dir": run_dir, "outcome": manifest.outcome, "samples": manifest.samples }));
    Ok(manifest.exit_code())
}

fn exponents(d: u32, b: &str, alpha: &str, lemma: Option<Lemma>, mu: i32) -> Result<i32> {
    let mu = match mu {
        -1 => Sign::Minus,
        1 => Sign::Plus,
        other => anyhow::bail!("--mu must be 1 or -1, got {other}"),
    };
    let params = ProblemParams::new(d, parse_rational(b)?, parse_rational(alpha)?, mu)?;
    match lemma {
        Some(Lemma::Local) => print_json(&lemma_local_pairs(&params)),
        Some(Lemma::Scattering) => print_json(&lemma_scattering_pairs(&params)),
        Some(Lemma::Weighted) => print_json(&lemma_weighted_pairs(&params)),
        None => {
            let (lower, upper) = alpha_thresholds(&params);
            print_json(&json!({
                "params": params,
                "mass_critical": inls::exponents::format_rational(&lower),
                "energy_critical": upper.to_string(),
                "regime": lwp_regime(&params),
                "strauss_exponent": strauss_exponent(d, params.b_f64()),
                "above_strauss": params.alpha_f64() > strauss_exponent(d, params.b_f64()),
                "below_mass_critical": params.alpha < mass_critical(d, &params.b),
            }));
        }
    }
    Ok(EXIT_OK)
}

fn report(run_dir: &Path, kind: ReportKind) -> Result<i32> {
    let verdict =
        runner::run_report(run_dir, kind).with_context(|| format!("{kind} report for {}", run_dir.display()))?;
    print_json(&verdict);
    Ok(if verdict.pass { EXIT_OK } else { EXIT_NUMERICAL })
}

fn sweep(dir: &Path, jobs: usize) -> Result<i32> {
    let entries = runner::sweep(dir, jobs, runner::output_root_from_env().as_deref())?;
    print_json(&entries);
    Ok(entries.iter().map(|e| e.exit_code).max().unwrap_or(EXIT_OK))
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for numerical
    // failures here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { EXIT_OK as u8 });
        }
    };
    let result = match &cli.command {
        Command::Simulate { config } => simulate(config),
        Command::Exponents { d, b, alpha, lemma, mu } => exponents(*d, b, alpha, *lemma, *mu),
        Command::Report { run_dir, kind } => report(run_dir, *kind),
        Command::Sweep { dir, jobs } => sweep(dir, *jobs),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<runner::RunError>().map_or(EXIT_INPUT, |r| r.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
