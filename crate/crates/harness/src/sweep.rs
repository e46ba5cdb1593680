//! Single planning runs and seeded sweeps over algorithms and budgets.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sbb_core::search::{run_search, Algorithm, AuditRecord, RunReport, SearchConfig};
use sbb_core::tree::{BranchValues, DEFAULT_MAX_NODES};
use sbb_core::Error;

use crate::dump::dump_tree;
use crate::error::{HarnessError, Result};
use crate::problem::{generate_problem, Problem, ProblemSpec};
use crate::regret::{oracle_values, regret_from};
use crate::with_instance;

pub const CSV_HEADER: &str =
    "run_id,algo,seed,budget,leaf_evals,node_expansions,max_depth,chosen_action,regret,bracket_width,error,wallclock_ms";

/// One CSV row. Empty cells stand for values a failed run never produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub run_id: u64,
    pub algo: String,
    pub seed: u64,
    pub budget: u64,
    pub leaf_evals: Option<u64>,
    pub node_expansions: Option<u64>,
    pub max_depth: Option<usize>,
    pub chosen_action: Option<usize>,
    pub regret: Option<f64>,
    pub bracket_width: Option<f64>,
    pub error: String,
    pub wallclock_ms: f64,
}

impl SweepRow {
    pub fn from_report(run_id: u64, seed: u64, budget: u64, report: &RunReport) -> Self {
        Self {
            run_id,
            algo: report.algorithm.name().to_string(),
            seed,
            budget,
            leaf_evals: Some(report.leaf_evaluations),
            node_expansions: Some(report.node_expansions),
            max_depth: Some(report.max_depth_reached),
            chosen_action: Some(report.chosen_branch),
            regret: report.regret,
            bracket_width: report.bracket_width,
            error: String::new(),
            wallclock_ms: report.wallclock_ms,
        }
    }

    pub fn failed(run_id: u64, algorithm: Algorithm, seed: u64, budget: u64, err: &HarnessError) -> Self {
        Self {
            run_id,
            algo: algorithm.name().to_string(),
            seed,
            budget,
            leaf_evals: None,
            node_expansions: None,
            max_depth: None,
            chosen_action: None,
            regret: None,
            bracket_width: None,
            error: err.to_string(),
            wallclock_ms: 0.0,
        }
    }

    /// The report fields the row carries; `None` for a failed run.
    pub fn to_report(&self) -> Result<Option<RunReport>> {
        if !self.error.is_empty() {
            return Ok(None);
        }
        let missing = || Error::Validation(format!("run {} is missing a result column", self.run_id));
        Ok(Some(RunReport {
            algorithm: self.algo.parse()?,
            chosen_branch: self.chosen_action.ok_or_else(missing)?,
            leaf_evaluations: self.leaf_evals.ok_or_else(missing)?,
            node_expansions: self.node_expansions.ok_or_else(missing)?,
            max_depth_reached: self.max_depth.ok_or_else(missing)?,
            branch_depths: Vec::new(),
            branch_values: Vec::new(),
            depth: None,
            samples_per_leaf: None,
            regret: self.regret,
            bracket_width: self.bracket_width,
            wallclock_ms: self.wallclock_ms,
        }))
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let body = w.into_inner().map_err(|e| HarnessError::Parse(e.to_string()))?;
    Ok(format!(
        "{CSV_HEADER}\n{}",
        String::from_utf8(body).expect("csv output is UTF-8")
    ))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(HarnessError::Parse(format!(
            "unexpected CSV header {:?}",
            header.join(",")
        )));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_rows(rows: &[SweepRow], path: &Path) -> Result<()> {
    std::fs::write(path, rows_to_csv(rows)?).map_err(|e| HarnessError::io(path, e))
}

pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    rows_from_csv(&text)
}

/// Result of one planning run.
#[derive(Debug, Clone)]
pub struct Planned {
    pub report: RunReport,
    pub audit: Vec<AuditRecord>,
    pub tree_dump: Option<String>,
    pub window_violations: u64,
}

/// Runs one planner on `problem`. With an oracle, fills in regret and
/// bracket width.
pub fn plan(problem: &Problem, config: &SearchConfig, oracle: Option<&BranchValues>, dump: bool) -> Result<Planned> {
    let start = Instant::now();
    let (mut report, audit, tree_dump, window_violations) = with_instance!(&problem.instance, |space, root| {
        let out = run_search(space, root.clone(), config)?;
        let tree_dump = dump.then(|| dump_tree(&out.tree));
        (out.report, out.audit, tree_dump, out.window_violations)
    });
    report.wallclock_ms = start.elapsed().as_secs_f64() * 1e3;
    if let Some(values) = oracle {
        let r = regret_from(values, report.chosen_branch)?;
        report.regret = Some(r.regret);
        report.bracket_width = Some(r.bracket_width);
    }
    Ok(Planned {
        report,
        audit,
        tree_dump,
        window_violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub problem: ProblemSpec,
    pub algorithms: Vec<String>,
    pub budgets: Vec<u64>,
    /// Seeds `0..seeds` are run for every algorithm and budget.
    pub seeds: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Depth of the exhaustive regret oracle; no regret column without it.
    #[serde(default)]
    pub oracle_depth: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_epsilon() -> f64 {
    0.5
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(format!("sweep file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn algorithms(&self) -> Result<Vec<Algorithm>> {
        Ok(self.algorithms.iter().map(|a| a.parse()).collect::<Result<_, _>>()?)
    }

    fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() || self.budgets.is_empty() || self.seeds == 0 {
            return Err(Error::Validation("sweep needs algorithms, budgets and at least one seed".into()).into());
        }
        Ok(())
    }
}

/// Runs every (algorithm, budget, seed) cell. Cells run in parallel; rows
/// come back ordered by run id, which enumerates algorithms, then budgets,
/// then seeds. A failing cell records its error and the sweep continues.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let algorithms = spec.algorithms()?;
    let problem = generate_problem(&spec.problem)?;
    let oracle = spec
        .oracle_depth
        .map(|d| oracle_values(&problem, d, DEFAULT_MAX_NODES))
        .transpose()?;
    let mut cells = Vec::new();
    for &algorithm in &algorithms {
        for &budget in &spec.budgets {
            for seed in 0..spec.seeds {
                cells.push((cells.len() as u64, algorithm, budget, seed));
            }
        }
    }
    let mut rows: Vec<SweepRow> = cells
        .into_par_iter()
        .map(|(run_id, algorithm, budget, seed)| {
            let config = SearchConfig::new(algorithm, spec.epsilon)
                .with_budget(budget)
                .with_seed(seed);
            match plan(&problem, &config, oracle.as_ref(), false) {
                Ok(p) => SweepRow::from_report(run_id, seed, budget, &p.report),
                Err(e) => SweepRow::failed(run_id, algorithm, seed, budget, &e),
            }
        })
        .collect();
    rows.sort_by_key(|r| r.run_id);
    Ok(rows)
}

/// Drops the wallclock column so runs can be compared byte for byte.
pub fn strip_wallclock(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
