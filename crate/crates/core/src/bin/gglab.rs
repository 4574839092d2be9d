use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gglab::gaussian::variance_formula_suite;
use gglab::report::ConvergenceTable;
use gglab::{run_experiment, CheckKind, Error, ExperimentConfig, ExperimentReport};

/// Exit code for malformed configs, unknown names and runtime errors.
const USAGE_ERROR: u8 = 2;
const CONTRACT_FAILED: u8 = 1;

#[derive(Parser)]
#[command(name = "gglab", version, about = "Finite-N checks of Ghirlanda-Guerra identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check of a config and write report.csv and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output`, then `./out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 or absent uses all cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Merge reports from runs at different N into a long-format CSV.
    ConvergenceTable {
        /// report.json files, or directories containing one.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Hermite variance formula on closed-form cases and a tiny psi_N.
    CheckVarianceFormula {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List check names usable in a config.
    ListChecks,
}

fn set_workers(workers: Option<usize>) {
    if let Some(n) = workers.filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
}

fn run(config: &Path, out: Option<PathBuf>, workers: Option<usize>, seed: Option<u64>) -> Result<ExitCode, Error> {
    let mut config = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        config = config.with_seed(seed);
    }
    set_workers(workers.or(config.workers));
    let out = out.or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let report = run_experiment(&config)?;
    report.write_to(&out)?;
    for row in &report.rows {
        println!(
            "{:<22} {:<5} N={:<4} {:<44} {:>14.6e} +- {:<11.3e} {}",
            row.check,
            row.model,
            row.size.map_or_else(|| "-".into(), |n| n.to_string()),
            row.functional,
            row.estimate,
            row.std_error,
            row.pass
        );
    }
    let failed = report.failures().count();
    println!("{} rows, {failed} failed; wrote {}", report.rows.len(), out.display());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(CONTRACT_FAILED) })
}

fn convergence(reports: &[PathBuf], out: Option<PathBuf>) -> Result<ExitCode, Error> {
    let loaded = reports
        .iter()
        .map(|p| ExperimentReport::read_json(if p.is_dir() { p.join("report.json") } else { p.clone() }))
        .collect::<Result<Vec<_>, _>>()?;
    let table = ConvergenceTable::from_reports(&loaded)?;
    match out {
        Some(path) => table.write_csv(std::fs::File::create(path)?)?,
        None => table.write_csv(std::io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn variance_formula(seed: u64, workers: Option<usize>) -> Result<ExitCode, Error> {
    set_workers(workers);
    let rows = variance_formula_suite(seed)?;
    println!("{:<28} {:>16} {:>16} {:>10} {:>10}  reference", "case", "hermite", "reference", "error", "tolerance");
    for r in &rows {
        println!(
            "{:<28} {:>16.10} {:>16.10} {:>10.2e} {:>10.2e}  {} {}",
            r.case,
            r.hermite,
            r.reference,
            r.error,
            r.tolerance,
            r.reference_kind,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(if rows.iter().all(|r| r.pass) { ExitCode::SUCCESS } else { ExitCode::from(CONTRACT_FAILED) })
}

fn list_checks() -> ExitCode {
    for k in CheckKind::ALL {
        println!("{}", k.name());
        println!("    {}", k.description());
        let contract = k.contract();
        println!("    contract: {}", if contract.is_empty() { "none (reported only)" } else { contract });
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, workers, seed } => run(&config, out, workers, seed),
        Command::ConvergenceTable { reports, out } => convergence(&reports, out),
        Command::CheckVarianceFormula { seed, workers } => variance_formula(seed, workers),
        Command::ListChecks => Ok(list_checks()),
    };
    result.unwrap_or_else(|e| {
        eprintln!("gglab: {e}");
        ExitCode::from(USAGE_ERROR)
    })
}
