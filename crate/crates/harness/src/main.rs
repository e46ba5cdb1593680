use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sbb_core::search::{Algorithm, SearchConfig};
use sbb_core::tree::DEFAULT_MAX_NODES;
use sbb_harness::dump::format_audit;
use sbb_harness::error::{HarnessError, Result};
use sbb_harness::problem::{generate_problem, ProblemSpec};
use sbb_harness::regret::oracle_values;
use sbb_harness::sweep::{plan, rows_to_csv, run_sweep, SweepRow, SweepSpec};
use sbb_harness::verify::{verify_lemma, Lemma};

/// Exit code for a check whose bound did not hold.
const VERIFY_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sbb",
    version,
    about = "Belief-tree planning with stochastic branch and bound"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one planner on a problem file and write a one-row CSV.
    Plan {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        algo: Algorithm,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        /// CSV output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Depth of the exhaustive oracle used for the regret column.
        #[arg(long)]
        oracle_depth: Option<usize>,
        /// Write the draw and expansion log here.
        #[arg(long)]
        audit: Option<PathBuf>,
    },
    /// Check a bound by simulation and write paired empirical/bound columns.
    Verify {
        #[arg(long)]
        lemma: Lemma,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every algorithm, budget and seed of a sweep file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the sweep file's `out`; stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one planner and write the final tree, one node per line.
    DumpTree {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        algo: Algorithm,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| HarnessError::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HarnessError::io("<stdout>", e)),
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Plan {
            problem,
            algo,
            budget,
            seed,
            epsilon,
            out,
            oracle_depth,
            audit,
        } => {
            let problem = generate_problem(&ProblemSpec::load(&problem)?)?;
            let oracle = oracle_depth
                .map(|d| oracle_values(&problem, d, DEFAULT_MAX_NODES))
                .transpose()?;
            let config = SearchConfig::new(algo, epsilon)
                .with_budget(budget)
                .with_seed(seed)
                .with_audit(audit.is_some());
            let planned = plan(&problem, &config, oracle.as_ref(), false)?;
            if let Some(path) = &audit {
                emit(&format_audit(&planned.audit), Some(path))?;
            }
            let row = SweepRow::from_report(0, seed, budget, &planned.report);
            emit(&rows_to_csv(&[row])?, out.as_deref())?;
            Ok(0)
        }
        Command::Verify {
            lemma,
            trials,
            seed,
            out,
        } => {
            let report = verify_lemma(lemma, trials, seed)?;
            if let Some(path) = &out {
                report.write_csv(path)?;
            }
            for row in &report.rows {
                let verdict = if row.pass { "ok" } else { "FAIL" };
                eprintln!(
                    "{lemma} {:<28} empirical {:<12.6} bound {:<12.6} {verdict}",
                    row.point, row.empirical, row.bound
                );
            }
            Ok(if report.passed() { 0 } else { VERIFY_FAILED })
        }
        Command::Sweep { config, out } => {
            let spec = SweepSpec::load(&config)?;
            let rows = run_sweep(&spec)?;
            emit(&rows_to_csv(&rows)?, out.as_deref().or(spec.out.as_deref()))?;
            Ok(0)
        }
        Command::DumpTree {
            problem,
            algo,
            budget,
            seed,
            epsilon,
            out,
        } => {
            let problem = generate_problem(&ProblemSpec::load(&problem)?)?;
            let config = SearchConfig::new(algo, epsilon).with_budget(budget).with_seed(seed);
            let planned = plan(&problem, &config, None, true)?;
            emit(planned.tree_dump.as_deref().unwrap_or_default(), out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
