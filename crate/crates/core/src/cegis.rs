//! Counterexample-guided inductive synthesis.
//!
//! The learner proposes the first enumerated expression consistent with the
//! examples gathered so far; [`bounded_oracle`] either verifies it over the
//! problem's box or returns a labelled counterexample, which joins the
//! example set for the next round.

use std::time::{Duration, Instant};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::Serialize;
use thiserror::Error;

use crate::enumerate::{HybridEnumerator, StarOrder};
use crate::expr::{Environment, Expr, Value};
use crate::grammar::GrammarLadder;
use crate::problem::{Analysis, FunctionalSpec, ProblemKind, SynthesisProblem};

/// An input state paired with the output the specification requires.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IoExample {
    pub input: Environment,
    pub output: Value,
}

impl IoExample {
    pub fn new(input: Environment, output: Value) -> Self {
        IoExample { input, output }
    }
}

struct InputMap<'a>(&'a Environment);

impl Serialize for InputMap<'_> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (name, value) in self.0.iter() {
            map.serialize_entry(name, &value)?;
        }
        map.end()
    }
}

impl Serialize for IoExample {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("input", &InputMap(&self.input))?;
        map.serialize_entry("output", &self.output)?;
        map.end()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    Counterexample(IoExample),
}

/// True when `e` evaluates without error to the expected output on every
/// example.
pub fn consistent(e: &Expr, examples: &[IoExample]) -> bool {
    examples.iter().all(|z| e.eval(&z.input) == Ok(z.output))
}

/// Exhaustive verification over the problem's box.
///
/// Functional problems are scanned point by point; the first failing point
/// is returned with the output the specification demands. Invariant
/// problems are checked for the precondition, then the postcondition, then
/// inductiveness over in-box transitions. An inductiveness violation
/// `(s, t)` becomes `(t, true)` when `s` is reachable and `(s, false)`
/// otherwise. Evaluation errors count as failures at that point.
pub fn bounded_oracle(p: &SynthesisProblem, candidate: &Expr) -> Verdict {
    let points = p.points();
    match (p.kind(), p.analysis()) {
        (ProblemKind::Functional(spec), Analysis::Functional { expected }) => {
            for (i, point) in points.iter().enumerate() {
                let Some(want) = expected[i] else { continue };
                let got = candidate.eval(point);
                let ok = match spec {
                    FunctionalSpec::Reference(_) => got == Ok(want),
                    FunctionalSpec::Relation { .. } => got.ok().and_then(|v| p.spec_accepts(point, v)) == Some(true),
                };
                if !ok {
                    return Verdict::Counterexample(IoExample::new(point.clone(), want));
                }
            }
            Verdict::Verified
        }
        (
            ProblemKind::Invariant { .. },
            Analysis::Invariant {
                pre,
                post_fail,
                pairs,
                reachable,
            },
        ) => {
            let mut memo: Vec<Option<Option<bool>>> = vec![None; points.len()];
            let mut value_at =
                |i: usize| -> Option<bool> { *memo[i].get_or_insert_with(|| candidate.holds(&points[i]).ok()) };
            let cex =
                |i: usize, label: bool| Verdict::Counterexample(IoExample::new(points[i].clone(), Value::Bool(label)));
            for &i in pre {
                if value_at(i) != Some(true) {
                    return cex(i, true);
                }
            }
            for &i in post_fail {
                if value_at(i) != Some(false) {
                    return cex(i, false);
                }
            }
            for &(from, to) in pairs {
                let (from, to) = (from as usize, to as usize);
                if value_at(from) != Some(false) && value_at(to) != Some(true) {
                    return if reachable[from] {
                        cex(to, true)
                    } else {
                        cex(from, false)
                    };
                }
            }
            Verdict::Verified
        }
        _ => unreachable!("analysis always matches the problem kind"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CegisError {
    #[error("max_rounds must be at least 1")]
    NoRounds,
    #[error("problem `{0}` is not an invariant problem")]
    NotInvariant(String),
}

/// Least fixpoint of the transition relation from the precondition
/// states, restricted to the box, in scan order.
pub fn reachable_states(p: &SynthesisProblem) -> Result<Vec<Environment>, CegisError> {
    match p.analysis() {
        Analysis::Invariant { reachable, .. } => Ok(p
            .points()
            .iter()
            .zip(reachable)
            .filter(|(_, &r)| r)
            .map(|(e, _)| e.clone())
            .collect()),
        Analysis::Functional { .. } => Err(CegisError::NotInvariant(p.name().to_owned())),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub candidate: Expr,
    pub counterexample: Option<IoExample>,
}

/// The candidates proposed in a run and the counterexample each received.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub rounds: Vec<Round>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn examples(&self) -> Vec<IoExample> {
        self.rounds.iter().filter_map(|r| r.counterexample.clone()).collect()
    }

    /// Checks that every candidate agrees with all earlier counterexamples,
    /// that each counterexample refutes its own candidate, and that only the
    /// last round may lack a counterexample.
    pub fn check(&self) -> Result<(), String> {
        let mut seen: Vec<IoExample> = Vec::new();
        for (i, round) in self.rounds.iter().enumerate() {
            if !consistent(&round.candidate, &seen) {
                return Err(format!(
                    "round {}: candidate {} contradicts an earlier example",
                    i + 1,
                    round.candidate
                ));
            }
            match &round.counterexample {
                Some(cex) => {
                    if consistent(&round.candidate, std::slice::from_ref(cex)) {
                        return Err(format!(
                            "round {}: counterexample does not refute {}",
                            i + 1,
                            round.candidate
                        ));
                    }
                    seen.push(cex.clone());
                }
                None if i + 1 != self.rounds.len() => {
                    return Err(format!("round {}: verified candidate is not the last round", i + 1));
                }
                None => {}
            }
        }
        Ok(())
    }
}

impl Serialize for Trace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            round: usize,
            candidate: &'a Expr,
            counterexample: &'a Option<IoExample>,
        }
        let mut seq = serializer.serialize_seq(Some(self.rounds.len()))?;
        for (i, r) in self.rounds.iter().enumerate() {
            seq.serialize_element(&Entry {
                round: i + 1,
                candidate: &r.candidate,
                counterexample: &r.counterexample,
            })?;
        }
        seq.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchMode {
    /// Enumerate only the problem's grammar level.
    Single,
    /// Enumerate all levels up to the problem's level in hybrid order.
    Hybrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CegisConfig {
    pub max_rounds: usize,
    pub max_size: usize,
    pub mode: SearchMode,
}

impl Default for CegisConfig {
    fn default() -> Self {
        CegisConfig {
            max_rounds: 64,
            max_size: crate::enumerate::DEFAULT_MAX_SIZE,
            mode: SearchMode::Single,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Error)]
pub enum Failure {
    #[error("round limit reached")]
    ExhaustedRounds,
    #[error("no consistent expression within the size bound")]
    ExhaustedSpace,
    #[error("cancelled")]
    Cancelled,
}

#[derive(Clone, Debug)]
pub struct CegisOutcome {
    pub result: Result<Expr, Failure>,
    pub trace: Trace,
    /// Expressions enumerated over the whole run.
    pub visited: u64,
    pub elapsed: Duration,
}

/// A CEGIS run that can be advanced one round at a time.
///
/// The enumerator is kept across rounds: every expression skipped before
/// the previous candidate was inconsistent with a subset of the current
/// examples, so resuming yields the same candidate a restart would.
pub struct CegisSession<'p> {
    problem: &'p SynthesisProblem,
    config: CegisConfig,
    enumerator: HybridEnumerator,
    examples: Vec<IoExample>,
    trace: Trace,
    result: Option<Result<Expr, Failure>>,
    elapsed: Duration,
}

impl<'p> CegisSession<'p> {
    pub fn new(problem: &'p SynthesisProblem, config: CegisConfig) -> Result<Self, CegisError> {
        if config.max_rounds == 0 {
            return Err(CegisError::NoRounds);
        }
        let ladder = match config.mode {
            SearchMode::Single => GrammarLadder::single(problem.grammar()),
            SearchMode::Hybrid => problem.ladder().prefix(problem.level()),
        };
        Ok(CegisSession {
            problem,
            config,
            enumerator: HybridEnumerator::new(ladder, &StarOrder, config.max_size),
            examples: Vec::new(),
            trace: Trace::default(),
            result: None,
            elapsed: Duration::ZERO,
        })
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn rounds(&self) -> usize {
        self.trace.len()
    }

    pub fn result(&self) -> Option<&Result<Expr, Failure>> {
        self.result.as_ref()
    }

    pub fn elapsed(&self) -> Duration {
        self.elapsed
    }

    /// Runs one round; returns the final result once the session is over.
    pub fn step(&mut self) -> Option<&Result<Expr, Failure>> {
        if self.result.is_some() {
            return self.result.as_ref();
        }
        let start = Instant::now();
        self.result = self.round();
        self.elapsed += start.elapsed();
        self.result.as_ref()
    }

    fn round(&mut self) -> Option<Result<Expr, Failure>> {
        if self.trace.len() >= self.config.max_rounds {
            return Some(Err(Failure::ExhaustedRounds));
        }
        let want = self.problem.return_type();
        let examples = &self.examples;
        let Some(candidate) = self.enumerator.find(|e| e.ty() == want && consistent(e, examples)) else {
            return Some(Err(Failure::ExhaustedSpace));
        };
        match bounded_oracle(self.problem, &candidate) {
            Verdict::Verified => {
                self.trace.rounds.push(Round {
                    candidate: candidate.clone(),
                    counterexample: None,
                });
                Some(Ok(candidate))
            }
            Verdict::Counterexample(cex) => {
                self.examples.push(cex.clone());
                self.trace.rounds.push(Round {
                    candidate,
                    counterexample: Some(cex),
                });
                None
            }
        }
    }

    /// Marks an unfinished session as cancelled.
    pub fn cancel(&mut self) {
        if self.result.is_none() {
            self.result = Some(Err(Failure::Cancelled));
        }
    }

    /// Steps until the session finishes or `stop` returns true between
    /// rounds.
    pub fn run_until(mut self, stop: impl Fn() -> bool) -> CegisOutcome {
        loop {
            if self.step().is_some() {
                break;
            }
            if stop() {
                self.cancel();
                break;
            }
        }
        self.finish()
    }

    pub fn run(self) -> CegisOutcome {
        self.run_until(|| false)
    }

    pub fn finish(self) -> CegisOutcome {
        CegisOutcome {
            result: self.result.unwrap_or(Err(Failure::Cancelled)),
            trace: self.trace,
            visited: self.enumerator.visited(),
            elapsed: self.elapsed,
        }
    }
}

pub fn cegis_loop(p: &SynthesisProblem, config: CegisConfig) -> Result<CegisOutcome, CegisError> {
    Ok(CegisSession::new(p, config)?.run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem_file::parse_problem;

    fn identity() -> SynthesisProblem {
        parse_problem("(name id) (vars (x Int)) (kind functional) (spec x) (bounds (x 0 3)) (level equalities)")
            .unwrap()
    }

    #[test]
    fn consistency() {
        let p = identity();
        let x = p.grammar().find("x").unwrap().clone();
        let zero = p.grammar().find("0").unwrap().clone();
        let x = Expr::leaf(x).unwrap();
        let zero = Expr::leaf(zero).unwrap();
        let z = [IoExample::new(
            Environment::from_pairs([("x", Value::Int(1))]),
            Value::Int(1),
        )];
        assert!(consistent(&zero, &[]));
        assert!(consistent(&x, &z));
        assert!(!consistent(&zero, &z));
    }

    #[test]
    fn functional_counterexample_is_first_failing_point() {
        let p = identity();
        let zero = Expr::leaf(p.grammar().find("0").unwrap().clone()).unwrap();
        assert_eq!(
            bounded_oracle(&p, &zero),
            Verdict::Counterexample(IoExample::new(
                Environment::from_pairs([("x", Value::Int(1))]),
                Value::Int(1)
            ))
        );
        let x = Expr::leaf(p.grammar().find("x").unwrap().clone()).unwrap();
        assert_eq!(bounded_oracle(&p, &x), Verdict::Verified);
    }

    #[test]
    fn identity_converges_in_three_rounds() {
        let p = identity();
        let out = cegis_loop(&p, CegisConfig::default()).unwrap();
        assert_eq!(out.result.as_ref().unwrap().to_string(), "x");
        let shown: Vec<String> = out.trace.rounds.iter().map(|r| r.candidate.to_string()).collect();
        assert_eq!(shown, ["0", "1", "x"]);
        let outputs: Vec<Value> = out.trace.examples().iter().map(|z| z.output).collect();
        assert_eq!(outputs, [Value::Int(1), Value::Int(0)]);
        out.trace.check().unwrap();
    }

    #[test]
    fn immediate_success_is_one_round() {
        let p = parse_problem("(name z) (vars (x Int)) (kind functional) (spec 0)").unwrap();
        let out = cegis_loop(&p, CegisConfig::default()).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert!(out.result.is_ok());
    }

    #[test]
    fn zero_rounds_is_rejected() {
        let p = identity();
        let config = CegisConfig {
            max_rounds: 0,
            ..CegisConfig::default()
        };
        assert_eq!(cegis_loop(&p, config).unwrap_err(), CegisError::NoRounds);
    }

    #[test]
    fn failures_are_distinguished() {
        let p = parse_problem(
            "(name s) (vars (x Int)) (kind functional) (spec (+ x 1)) (bounds (x 0 3)) (level equalities)",
        )
        .unwrap();
        let out = cegis_loop(
            &p,
            CegisConfig {
                max_rounds: 100,
                max_size: 3,
                mode: SearchMode::Single,
            },
        )
        .unwrap();
        assert_eq!(out.result.unwrap_err(), Failure::ExhaustedSpace);
        let out = cegis_loop(
            &p,
            CegisConfig {
                max_rounds: 1,
                max_size: 3,
                mode: SearchMode::Single,
            },
        )
        .unwrap();
        assert_eq!(out.result.unwrap_err(), Failure::ExhaustedRounds);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn reachable_states_edge_cases() {
        let none = parse_problem(
            "(name n) (vars (x Int)) (kind invariant) (pre false) (trans true) (post true) (bounds (x 0 3))",
        )
        .unwrap();
        assert!(reachable_states(&none).unwrap().is_empty());
        let all = parse_problem(
            "(name a) (vars (x Int)) (kind invariant) (pre true) (trans (= x' x)) (post true) (bounds (x 0 3))",
        )
        .unwrap();
        assert_eq!(reachable_states(&all).unwrap().len(), 4);
        assert!(matches!(
            reachable_states(&identity()),
            Err(CegisError::NotInvariant(_))
        ));
    }

    #[test]
    fn trace_json_shape() {
        let out = cegis_loop(&identity(), CegisConfig::default()).unwrap();
        let json = serde_json::to_value(&out.trace).unwrap();
        assert_eq!(json[0]["round"], 1);
        assert_eq!(json[0]["candidate"], "0");
        assert_eq!(json[0]["counterexample"]["input"]["x"], 1);
        assert_eq!(json[0]["counterexample"]["output"], 1);
        assert!(json[2]["counterexample"].is_null());
    }
}
