//! Running one problem over every grammar in a ladder prefix at once.
//!
//! Each level `i` gets its own CEGIS run restricted to `G_i`. Since every
//! `G_i` is contained in the problem's grammar, whichever run succeeds
//! first has solved the original problem.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cegis::{CegisConfig, CegisError, CegisOutcome, CegisSession, Failure, SearchMode, Trace};
use crate::expr::Expr;
use crate::problem::SynthesisProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Execution {
    /// One thread per level; the first solution cancels the others.
    Parallel,
    /// Levels take turns one round at a time, in level order.
    Lockstep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LevelStatus {
    Solved,
    Failed(Failure),
    Cancelled,
}

impl LevelStatus {
    fn of(result: &Result<Expr, Failure>) -> Self {
        match result {
            Ok(_) => LevelStatus::Solved,
            Err(Failure::Cancelled) => LevelStatus::Cancelled,
            Err(f) => LevelStatus::Failed(*f),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LevelRun {
    pub level: usize,
    pub status: LevelStatus,
    pub solution: Option<Expr>,
    pub trace: Trace,
    pub wall: Duration,
}

impl LevelRun {
    pub fn rounds(&self) -> usize {
        self.trace.len()
    }

    fn from_outcome(level: usize, out: CegisOutcome, wall: Duration) -> Self {
        LevelRun {
            level,
            status: LevelStatus::of(&out.result),
            solution: out.result.ok(),
            trace: out.trace,
            wall,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PLearnOutcome {
    pub winner: Option<usize>,
    pub solution: Option<Expr>,
    /// One entry per level, lowest first.
    pub runs: Vec<LevelRun>,
    pub wall: Duration,
    /// Parallel runs charge every level for the whole wall-clock time;
    /// lockstep runs charge the time each level actually spent.
    pub total_time_cost: Duration,
}

impl PLearnOutcome {
    pub fn winning_run(&self) -> Option<&LevelRun> {
        self.winner.map(|w| &self.runs[w - 1])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PLearnError {
    #[error("ladder prefix of length {requested} is not within 1..={available}")]
    Prefix { requested: usize, available: usize },
    #[error(transparent)]
    Cegis(#[from] CegisError),
}

/// Runs CEGIS on levels `1..=levels` of the problem's ladder.
pub fn plearn(
    p: &SynthesisProblem,
    levels: usize,
    max_rounds: usize,
    max_size: usize,
    execution: Execution,
) -> Result<PLearnOutcome, PLearnError> {
    if levels == 0 || levels > p.ladder().len() {
        return Err(PLearnError::Prefix {
            requested: levels,
            available: p.ladder().len(),
        });
    }
    let config = CegisConfig {
        max_rounds,
        max_size,
        mode: SearchMode::Single,
    };
    let problems: Vec<SynthesisProblem> = (1..=levels)
        .map(|i| p.with_level(i).expect("level is within the ladder"))
        .collect();
    match execution {
        Execution::Lockstep => lockstep(&problems, config),
        Execution::Parallel => parallel(&problems, config),
    }
}

fn lockstep(problems: &[SynthesisProblem], config: CegisConfig) -> Result<PLearnOutcome, PLearnError> {
    let start = Instant::now();
    let mut sessions = problems
        .iter()
        .map(|q| CegisSession::new(q, config))
        .collect::<Result<Vec<_>, _>>()?;
    let mut winner = None;
    while sessions.iter().any(|s| s.result().is_none()) {
        for (i, session) in sessions.iter_mut().enumerate() {
            if session.result().is_none() && matches!(session.step(), Some(Ok(_))) && winner.is_none() {
                winner = Some(i + 1);
            }
        }
        if winner.is_some() {
            sessions.iter_mut().for_each(CegisSession::cancel);
        }
    }
    let wall = start.elapsed();
    let mut total = Duration::ZERO;
    let runs: Vec<LevelRun> = sessions
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let spent = s.elapsed();
            total += spent;
            LevelRun::from_outcome(i + 1, s.finish(), spent)
        })
        .collect();
    Ok(finish(winner, runs, wall, total))
}

fn parallel(problems: &[SynthesisProblem], config: CegisConfig) -> Result<PLearnOutcome, PLearnError> {
    let sessions = problems
        .iter()
        .map(|q| CegisSession::new(q, config))
        .collect::<Result<Vec<_>, _>>()?;
    let start = Instant::now();
    let flags: Vec<AtomicBool> = sessions.iter().map(|_| AtomicBool::new(false)).collect();
    let (tx, rx) = mpsc::channel::<(usize, CegisOutcome, Duration)>();
    let mut slots: Vec<Option<LevelRun>> = vec![None; sessions.len()];
    let mut winner = None;
    thread::scope(|scope| {
        for (i, session) in sessions.into_iter().enumerate() {
            let tx = tx.clone();
            let flag = &flags[i];
            scope.spawn(move || {
                let began = Instant::now();
                let out = session.run_until(|| flag.load(Ordering::Relaxed));
                let _ = tx.send((i, out, began.elapsed()));
            });
        }
        drop(tx);
        for (i, out, wall) in rx {
            if out.result.is_ok() && winner.is_none() {
                winner = Some(i + 1);
                flags.iter().for_each(|f| f.store(true, Ordering::Relaxed));
            }
            slots[i] = Some(LevelRun::from_outcome(i + 1, out, wall));
        }
    });
    let wall = start.elapsed();
    let runs: Vec<LevelRun> = slots.into_iter().map(|r| r.expect("every worker reports")).collect();
    let total = wall * runs.len() as u32;
    Ok(finish(winner, runs, wall, total))
}

fn finish(winner: Option<usize>, runs: Vec<LevelRun>, wall: Duration, total_time_cost: Duration) -> PLearnOutcome {
    let solution = winner.and_then(|w| runs[w - 1].solution.clone());
    PLearnOutcome {
        winner,
        solution,
        runs,
        wall,
        total_time_cost,
    }
}
