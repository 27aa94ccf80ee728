//! Benchmark sweeps over a corpus of problem files, written as CSV.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::cegis::{cegis_loop, CegisConfig, Failure, IoExample, SearchMode};
use crate::grammar::LevelName;
use crate::overfit::{OmegaAnalyzer, OverfitError};
use crate::plearn::{plearn, Execution, LevelStatus};
use crate::problem::SynthesisProblem;
use crate::problem_file::parse_problem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReportMode {
    Single,
    Hybrid,
    PLearn,
}

impl ReportMode {
    pub const ALL: [ReportMode; 3] = [ReportMode::Single, ReportMode::Hybrid, ReportMode::PLearn];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportMode::Single => "single",
            ReportMode::Hybrid => "hybrid",
            ReportMode::PLearn => "plearn",
        }
    }
}

impl fmt::Display for ReportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReportMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (expected single, hybrid or plearn)"))
    }
}

/// Outcome of one run as written in the `status` column.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Solved,
    Failed(Failure),
    Error(String),
}

impl RunStatus {
    pub fn is_solved(&self) -> bool {
        matches!(self, RunStatus::Solved)
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Solved => f.write_str("solved"),
            RunStatus::Failed(Failure::ExhaustedRounds) => f.write_str("exhausted_rounds"),
            RunStatus::Failed(Failure::ExhaustedSpace) => f.write_str("exhausted_space"),
            RunStatus::Failed(Failure::Cancelled) => f.write_str("cancelled"),
            RunStatus::Error(msg) => write!(f, "error: {msg}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub levels: Vec<usize>,
    pub modes: Vec<ReportMode>,
    pub max_rounds: usize,
    pub max_size: usize,
    pub execution: Execution,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            levels: (1..=LevelName::ALL.len()).collect(),
            modes: ReportMode::ALL.to_vec(),
            max_rounds: 64,
            max_size: crate::enumerate::DEFAULT_MAX_SIZE,
            execution: Execution::Lockstep,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReportRow {
    pub problem: String,
    pub level: usize,
    pub mode: ReportMode,
    pub status: RunStatus,
    pub rounds: Option<usize>,
    pub solution: Option<String>,
    pub wall: Duration,
    pub total_cost: Duration,
}

/// A corpus entry: the problem, or the reason its file could not be used.
pub type CorpusEntry = (String, Result<SynthesisProblem, String>);

/// Loads every `.sexp` file of `dir` in file-name order.
pub fn load_corpus(dir: &Path) -> std::io::Result<Vec<CorpusEntry>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "sexp"))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|path| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let parsed = std::fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|text| parse_problem(&text).map_err(|e| e.to_string()));
            match parsed {
                Ok(p) => (p.name().to_owned(), Ok(p)),
                Err(e) => (stem, Err(e)),
            }
        })
        .collect())
}

fn run_one(p: &SynthesisProblem, level: usize, mode: ReportMode, config: &SweepConfig) -> ReportRow {
    let mut row = ReportRow {
        problem: p.name().to_owned(),
        level,
        mode,
        status: RunStatus::Error(String::new()),
        rounds: None,
        solution: None,
        wall: Duration::ZERO,
        total_cost: Duration::ZERO,
    };
    if level == 0 || level > p.ladder().len() {
        row.status = RunStatus::Error(format!("level {level} is not in the ladder"));
        return row;
    }
    match mode {
        ReportMode::Single | ReportMode::Hybrid => {
            let cegis = CegisConfig {
                max_rounds: config.max_rounds,
                max_size: config.max_size,
                mode: if mode == ReportMode::Single {
                    SearchMode::Single
                } else {
                    SearchMode::Hybrid
                },
            };
            let q = p.with_level(level).expect("level checked");
            match cegis_loop(&q, cegis) {
                Ok(out) => {
                    row.status = match &out.result {
                        Ok(_) => RunStatus::Solved,
                        Err(f) => RunStatus::Failed(*f),
                    };
                    row.rounds = Some(out.trace.len());
                    row.solution = out.result.ok().map(|e| e.to_string());
                    row.wall = out.elapsed;
                    row.total_cost = out.elapsed;
                }
                Err(e) => row.status = RunStatus::Error(e.to_string()),
            }
        }
        ReportMode::PLearn => match plearn(p, level, config.max_rounds, config.max_size, config.execution) {
            Ok(out) => {
                let run = out.winning_run().unwrap_or(&out.runs[level - 1]);
                row.status = match run.status {
                    LevelStatus::Solved => RunStatus::Solved,
                    LevelStatus::Failed(f) => RunStatus::Failed(f),
                    LevelStatus::Cancelled => RunStatus::Failed(Failure::Cancelled),
                };
                row.rounds = Some(run.rounds());
                row.solution = out.solution.map(|e| e.to_string());
                row.wall = out.wall;
                row.total_cost = out.total_time_cost;
            }
            Err(e) => row.status = RunStatus::Error(e.to_string()),
        },
    }
    row
}

/// One row per problem, level and mode, in that nesting order. Problems
/// that failed to load produce error rows instead of aborting.
pub fn sweep(corpus: &[CorpusEntry], config: &SweepConfig) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for (name, entry) in corpus {
        for &level in &config.levels {
            for &mode in &config.modes {
                rows.push(match entry {
                    Ok(p) => run_one(p, level, mode, config),
                    Err(e) => ReportRow {
                        problem: name.clone(),
                        level,
                        mode,
                        status: RunStatus::Error(e.clone()),
                        rounds: None,
                        solution: None,
                        wall: Duration::ZERO,
                        total_cost: Duration::ZERO,
                    },
                });
            }
        }
    }
    rows
}

fn level_label(level: usize) -> String {
    LevelName::from_index(level).map_or_else(|| level.to_string(), |n| n.to_string())
}

fn millis(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1000.0)
}

/// Writes the run table. Without timing the `wall_ms` and `total_cost_ms`
/// columns are left out, which makes lockstep sweeps reproducible byte for
/// byte.
pub fn write_runs_csv(rows: &[ReportRow], timing: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["problem", "level", "mode", "status", "rounds"];
    if timing {
        header.extend(["wall_ms", "total_cost_ms"]);
    }
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut record = vec![
            r.problem.clone(),
            level_label(r.level),
            r.mode.to_string(),
            r.status.to_string(),
            r.rounds.map(|n| n.to_string()).unwrap_or_default(),
        ];
        if timing {
            record.push(millis(r.wall));
            record.push(millis(r.total_cost));
        }
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Number of unsolved rows and total rows per level and mode.
pub fn failure_counts(rows: &[ReportRow]) -> BTreeMap<(usize, ReportMode), (usize, usize)> {
    let mut counts: BTreeMap<(usize, ReportMode), (usize, usize)> = BTreeMap::new();
    for r in rows {
        let entry = counts.entry((r.level, r.mode)).or_default();
        if !r.status.is_solved() {
            entry.0 += 1;
        }
        entry.1 += 1;
    }
    counts
}

pub fn write_failures_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["level", "mode", "failures", "runs"])
        .expect("in-memory write");
    for ((level, mode), (failures, runs)) in failure_counts(rows) {
        w.write_record([
            level_label(level),
            mode.to_string(),
            failures.to_string(),
            runs.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaRow {
    pub problem: String,
    pub level: usize,
    pub size_cap: usize,
    /// `None` when the example set is invalid for the problem.
    pub omega: Option<u64>,
}

/// Ω at each requested level for one example set.
pub fn omega_rows(p: &SynthesisProblem, examples: &[IoExample], size_cap: usize, levels: &[usize]) -> Vec<OmegaRow> {
    let analyzer = OmegaAnalyzer::new(p, size_cap);
    levels
        .iter()
        .map(|&level| OmegaRow {
            problem: p.name().to_owned(),
            level,
            size_cap,
            omega: match analyzer.omega(level, examples) {
                Ok(r) => Some(r.omega),
                Err(OverfitError::UndefinedOmega { .. }) => None,
            },
        })
        .collect()
}

pub fn write_omega_csv(rows: &[OmegaRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["problem", "level", "size_cap", "omega", "undefined"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.problem.clone(),
            level_label(r.level),
            r.size_cap.to_string(),
            r.omega.map(|n| n.to_string()).unwrap_or_default(),
            r.omega.is_none().to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}
