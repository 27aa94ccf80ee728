use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use sygus_core::cegis::{bounded_oracle, cegis_loop, CegisConfig, Failure, SearchMode, Trace, Verdict};
use sygus_core::enumerate::DEFAULT_MAX_SIZE;
use sygus_core::grammar::LevelName;
use sygus_core::plearn::{plearn, Execution, LevelStatus};
use sygus_core::problem::SynthesisProblem;
use sygus_core::problem_file::{parse_examples, parse_expression, parse_problem};
use sygus_core::report::{
    load_corpus, omega_rows, sweep, write_failures_csv, write_omega_csv, write_runs_csv, ReportMode, SweepConfig,
};

#[derive(Parser)]
#[command(
    name = "sygus",
    version,
    about = "Enumerative SyGuS over a ladder of integer grammars"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a solution for one problem file.
    Synth(SynthArgs),
    /// Run a corpus over several levels and modes and print a CSV table.
    Report(ReportArgs),
    /// Count spurious expressions consistent with an example set, per level.
    Omega(OmegaArgs),
    /// Verify a candidate expression against a problem over its box.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Hybrid,
    Plearn,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecutionArg {
    Parallel,
    Lockstep,
}

impl From<ExecutionArg> for Execution {
    fn from(e: ExecutionArg) -> Self {
        match e {
            ExecutionArg::Parallel => Execution::Parallel,
            ExecutionArg::Lockstep => Execution::Lockstep,
        }
    }
}

#[derive(clap::Args)]
struct SynthArgs {
    problem: PathBuf,
    /// Grammar level by name (equalities .. peano) or index; defaults to
    /// the level in the problem file.
    #[arg(long, value_parser = parse_level)]
    grammar: Option<usize>,
    #[arg(long, value_enum, default_value = "single")]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_MAX_SIZE)]
    max_size: usize,
    #[arg(long, default_value_t = 64)]
    max_rounds: usize,
    #[arg(long, value_enum, default_value = "parallel")]
    execution: ExecutionArg,
    /// Print a JSON object including the full trace.
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct ReportArgs {
    corpus: PathBuf,
    /// Comma-separated levels; all six by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_level)]
    levels: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
    modes: Vec<ReportMode>,
    #[arg(long, default_value_t = DEFAULT_MAX_SIZE)]
    max_size: usize,
    #[arg(long, default_value_t = 64)]
    max_rounds: usize,
    #[arg(long, value_enum, default_value = "lockstep")]
    execution: ExecutionArg,
    /// Leave out the timing columns.
    #[arg(long)]
    no_timing: bool,
    /// Also write failure counts per level and mode to this file.
    #[arg(long)]
    failures: Option<PathBuf>,
}

#[derive(clap::Args)]
struct OmegaArgs {
    problem: PathBuf,
    examples: PathBuf,
    #[arg(long, default_value_t = 5)]
    size_cap: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_level)]
    levels: Vec<usize>,
}

#[derive(clap::Args)]
struct CheckArgs {
    problem: PathBuf,
    /// Candidate in problem-file syntax, e.g. "(>= n x)".
    candidate: String,
}

fn parse_level(s: &str) -> Result<usize, String> {
    if let Ok(name) = s.parse::<LevelName>() {
        return Ok(name.index());
    }
    match s.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i),
        _ => Err(format!(
            "unknown grammar `{s}` (expected one of {} or a positive index)",
            LevelName::ALL.map(|l| l.as_str()).join(", ")
        )),
    }
}

fn parse_mode(s: &str) -> Result<ReportMode, String> {
    s.parse()
}

/// Errors that should exit with status 2 rather than 1.
#[derive(Debug)]
struct UsageError(anyhow::Error);

fn usage<T>(r: Result<T>) -> Result<T, UsageError> {
    r.map_err(UsageError)
}

fn load_problem(path: &Path) -> Result<SynthesisProblem> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_problem(&text).with_context(|| format!("{}", path.display()))
}

fn level_label(level: usize) -> String {
    LevelName::from_index(level).map_or_else(|| level.to_string(), |n| n.to_string())
}

fn failure_label(f: Failure) -> &'static str {
    match f {
        Failure::ExhaustedRounds => "exhausted_rounds",
        Failure::ExhaustedSpace => "exhausted_space",
        Failure::Cancelled => "cancelled",
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

struct SynthResult {
    level: usize,
    solution: Option<String>,
    failure: Option<Failure>,
    trace: Trace,
    wall: Duration,
    extra: serde_json::Value,
}

fn synth(args: &SynthArgs) -> Result<bool, UsageError> {
    let problem = usage(load_problem(&args.problem))?;
    let problem = match args.grammar {
        Some(level) => usage(problem.with_level(level).context("--grammar"))?,
        None => problem,
    };
    let level = problem.level();
    let mode_name;
    let result = match args.mode {
        ModeArg::Single | ModeArg::Hybrid => {
            let mode = if matches!(args.mode, ModeArg::Single) {
                SearchMode::Single
            } else {
                SearchMode::Hybrid
            };
            mode_name = if mode == SearchMode::Single { "single" } else { "hybrid" };
            let config = CegisConfig {
                max_rounds: args.max_rounds,
                max_size: args.max_size,
                mode,
            };
            let out = usage(cegis_loop(&problem, config).map_err(Into::into))?;
            SynthResult {
                level,
                solution: out.result.as_ref().ok().map(ToString::to_string),
                failure: out.result.err(),
                trace: out.trace,
                wall: out.elapsed,
                extra: json!({}),
            }
        }
        ModeArg::Plearn => {
            mode_name = "plearn";
            let out = usage(
                plearn(&problem, level, args.max_rounds, args.max_size, args.execution.into()).map_err(Into::into),
            )?;
            let runs: Vec<serde_json::Value> = out
                .runs
                .iter()
                .map(|r| {
                    let status = match r.status {
                        LevelStatus::Solved => "solved",
                        LevelStatus::Failed(f) => failure_label(f),
                        LevelStatus::Cancelled => "cancelled",
                    };
                    json!({
                        "level": level_label(r.level),
                        "status": status,
                        "rounds": r.rounds(),
                        "wall_ms": ms(r.wall),
                    })
                })
                .collect();
            let run = out.winning_run().unwrap_or(&out.runs[level - 1]);
            let failure = match run.status {
                LevelStatus::Solved => None,
                LevelStatus::Failed(f) => Some(f),
                LevelStatus::Cancelled => Some(Failure::Cancelled),
            };
            SynthResult {
                level: run.level,
                solution: out.solution.as_ref().map(ToString::to_string),
                failure,
                trace: run.trace.clone(),
                wall: out.wall,
                extra: json!({
                    "winner": out.winner.map(level_label),
                    "total_cost_ms": ms(out.total_time_cost),
                    "runs": runs,
                }),
            }
        }
    };
    let status = result.failure.map_or("solved", failure_label);
    if args.json {
        let mut doc = json!({
            "problem": problem.name(),
            "level": level_label(result.level),
            "mode": mode_name,
            "status": status,
            "solution": result.solution,
            "rounds": result.trace.len(),
            "wall_ms": ms(result.wall),
            "trace": result.trace,
        });
        if let (Some(doc), Some(extra)) = (doc.as_object_mut(), result.extra.as_object()) {
            doc.extend(extra.clone());
        }
        println!("{}", serde_json::to_string_pretty(&doc).expect("json values serialize"));
    } else {
        match &result.solution {
            Some(s) => println!("{s}"),
            None => println!("failed: {status}"),
        }
        eprintln!(
            "{}: level {}, {} rounds, {:.3} ms",
            problem.name(),
            level_label(result.level),
            result.trace.len(),
            ms(result.wall)
        );
    }
    Ok(result.solution.is_some())
}

fn report(args: &ReportArgs) -> Result<bool, UsageError> {
    let corpus = usage(load_corpus(&args.corpus).with_context(|| format!("cannot read {}", args.corpus.display())))?;
    if corpus.is_empty() {
        return Err(UsageError(anyhow::anyhow!(
            "no .sexp files in {}",
            args.corpus.display()
        )));
    }
    let defaults = SweepConfig::default();
    let config = SweepConfig {
        levels: if args.levels.is_empty() {
            defaults.levels
        } else {
            args.levels.clone()
        },
        modes: if args.modes.is_empty() {
            defaults.modes
        } else {
            args.modes.clone()
        },
        max_rounds: args.max_rounds,
        max_size: args.max_size,
        execution: args.execution.into(),
    };
    let rows = sweep(&corpus, &config);
    print!("{}", write_runs_csv(&rows, !args.no_timing));
    if let Some(path) = &args.failures {
        std::fs::write(path, write_failures_csv(&rows))
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(UsageError)?;
    }
    Ok(true)
}

fn omega(args: &OmegaArgs) -> Result<bool, UsageError> {
    let problem = usage(load_problem(&args.problem))?;
    let text = usage(
        std::fs::read_to_string(&args.examples).with_context(|| format!("cannot read {}", args.examples.display())),
    )?;
    let examples = usage(parse_examples(&text, &problem).with_context(|| format!("{}", args.examples.display())))?;
    let levels: Vec<usize> = if args.levels.is_empty() {
        (1..=problem.ladder().len()).collect()
    } else {
        args.levels.clone()
    };
    if let Some(&bad) = levels.iter().find(|&&l| l > problem.ladder().len()) {
        return Err(UsageError(anyhow::anyhow!("level {bad} is not in the ladder")));
    }
    print!(
        "{}",
        write_omega_csv(&omega_rows(&problem, &examples, args.size_cap, &levels))
    );
    Ok(true)
}

fn check(args: &CheckArgs) -> Result<bool, UsageError> {
    let problem = usage(load_problem(&args.problem))?;
    let candidate = usage(parse_expression(&args.candidate, problem.vars()).context("candidate"))?;
    if candidate.ty() != problem.return_type() {
        return Err(UsageError(anyhow::anyhow!(
            "candidate has type {}, expected {}",
            candidate.ty(),
            problem.return_type()
        )));
    }
    match bounded_oracle(&problem, &candidate) {
        Verdict::Verified => {
            println!("verified");
            Ok(true)
        }
        Verdict::Counterexample(cex) => {
            println!("counterexample: {} -> {}", cex.input, cex.output);
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Synth(args) => synth(args),
        Command::Report(args) => report(args),
        Command::Omega(args) => omega(args),
        Command::Check(args) => check(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(UsageError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
