//! Potential for overfitting and the trace and example-set counts.
//!
//! Ω for a problem and example set `Z` is the number of expressions that
//! are consistent with `Z` yet fail the specification. Since a grammar is
//! infinite, the count here ranges over expressions up to a size cap.

use std::collections::HashMap;

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::cegis::{bounded_oracle, consistent, IoExample, Verdict};
use crate::enumerate::naive::enumerate_by_size;
use crate::expr::{Expr, Value};
use crate::problem::SynthesisProblem;

/// Witness lists in reports are cut to this many expressions.
pub const WITNESS_LIMIT: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OverfitError {
    /// Some example is not produced by any interpretation satisfying the
    /// specification, so Ω is undefined.
    #[error("example {index} ({example:?}) is not a valid example for `{problem}`")]
    UndefinedOmega {
        problem: String,
        index: usize,
        example: IoExample,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OverfitReport {
    pub problem: String,
    pub level: usize,
    pub examples: Vec<IoExample>,
    pub size_cap: usize,
    pub omega: u64,
    /// The first [`WITNESS_LIMIT`] spurious expressions in enumeration
    /// order.
    pub witnesses: Vec<Expr>,
}

impl OverfitReport {
    pub fn is_truncated(&self) -> bool {
        (self.witnesses.len() as u64) < self.omega
    }
}

fn candidates(p: &SynthesisProblem, level: usize, size_cap: usize) -> impl Iterator<Item = Expr> {
    let want = p.return_type();
    enumerate_by_size(p.ladder().level(level).components(), size_cap)
        .into_iter()
        .flatten()
        .filter(move |e| e.ty() == want)
}

fn verified(p: &SynthesisProblem, e: &Expr) -> bool {
    bounded_oracle(p, e) == Verdict::Verified
}

/// Fallback validity of one example when no satisfying expression is
/// known: the specification accepts the output at that input, or, for
/// invariants, the label agrees with reachability.
fn valid_by_spec(p: &SynthesisProblem, z: &IoExample) -> bool {
    if p.is_invariant() {
        z.output.as_bool().is_some() && p.is_reachable(&z.input) == z.output.as_bool()
    } else {
        z.output.ty() == p.return_type() && p.spec_accepts(&z.input, z.output) == Some(true)
    }
}

fn check_examples(p: &SynthesisProblem, examples: &[IoExample], satisfying: &[Expr]) -> Result<(), OverfitError> {
    for (index, z) in examples.iter().enumerate() {
        let ok = if satisfying.is_empty() {
            valid_by_spec(p, z)
        } else {
            satisfying.iter().any(|s| s.eval(&z.input) == Ok(z.output))
        };
        if !ok {
            return Err(OverfitError::UndefinedOmega {
                problem: p.name().to_owned(),
                index,
                example: z.clone(),
            });
        }
    }
    Ok(())
}

/// Ω over expressions of the problem's own grammar with size at most
/// `size_cap`.
///
/// Examples are validated against the satisfying expressions of the
/// ladder's top grammar up to the same cap, so validity does not depend on
/// the problem's level.
pub fn omega_bounded(
    p: &SynthesisProblem,
    examples: &[IoExample],
    size_cap: usize,
) -> Result<OverfitReport, OverfitError> {
    let top = p.ladder().len();
    let satisfying: Vec<Expr> = candidates(p, top, size_cap).filter(|e| verified(p, e)).collect();
    check_examples(p, examples, &satisfying)?;
    let mut omega = 0u64;
    let mut witnesses = Vec::new();
    for e in candidates(p, p.level(), size_cap) {
        if consistent(&e, examples) && !verified(p, &e) {
            omega += 1;
            if witnesses.len() < WITNESS_LIMIT {
                witnesses.push(e);
            }
        }
    }
    Ok(OverfitReport {
        problem: p.name().to_owned(),
        level: p.level(),
        examples: examples.to_vec(),
        size_cap,
        omega,
        witnesses,
    })
}

/// Computes Ω for every level of a problem's ladder from one enumeration
/// of the top grammar.
///
/// An expression belongs to level `i` exactly when all its components do,
/// so each candidate is verified once and attributed to the least level
/// containing it.
pub struct OmegaAnalyzer<'p> {
    problem: &'p SynthesisProblem,
    size_cap: usize,
    /// Top-grammar candidates in enumeration order with their least level
    /// and verdict.
    table: Vec<(Expr, usize, bool)>,
    satisfying: Vec<Expr>,
}

impl<'p> OmegaAnalyzer<'p> {
    pub fn new(problem: &'p SynthesisProblem, size_cap: usize) -> Self {
        let ladder = problem.ladder();
        let mut least: HashMap<&str, usize> = HashMap::new();
        for level in (1..=ladder.len()).rev() {
            for c in ladder.level(level).components() {
                least.insert(c.name(), level);
            }
        }
        let table: Vec<(Expr, usize, bool)> = candidates(problem, ladder.len(), size_cap)
            .map(|e| {
                let level = e.components().iter().map(|c| least[c.name()]).max().unwrap_or(1);
                let ok = verified(problem, &e);
                (e, level, ok)
            })
            .collect();
        let satisfying = table
            .iter()
            .filter(|(_, _, ok)| *ok)
            .map(|(e, _, _)| e.clone())
            .collect();
        OmegaAnalyzer {
            problem,
            size_cap,
            table,
            satisfying,
        }
    }

    pub fn size_cap(&self) -> usize {
        self.size_cap
    }

    /// Satisfying expressions of the top grammar up to the cap.
    pub fn satisfying(&self) -> &[Expr] {
        &self.satisfying
    }

    pub fn validate(&self, examples: &[IoExample]) -> Result<(), OverfitError> {
        check_examples(self.problem, examples, &self.satisfying)
    }

    pub fn omega(&self, level: usize, examples: &[IoExample]) -> Result<OverfitReport, OverfitError> {
        self.validate(examples)?;
        let mut omega = 0u64;
        let mut witnesses = Vec::new();
        for (e, least, ok) in &self.table {
            if *least <= level && !ok && consistent(e, examples) {
                omega += 1;
                if witnesses.len() < WITNESS_LIMIT {
                    witnesses.push(e.clone());
                }
            }
        }
        Ok(OverfitReport {
            problem: self.problem.name().to_owned(),
            level,
            examples: examples.to_vec(),
            size_cap: self.size_cap,
            omega,
            witnesses,
        })
    }

    /// One report per ladder level, lowest first.
    pub fn omega_per_level(&self, examples: &[IoExample]) -> Result<Vec<OverfitReport>, OverfitError> {
        (1..=self.problem.ladder().len())
            .map(|level| self.omega(level, examples))
            .collect()
    }
}

/// Labels `input` the way a satisfying interpretation would, when the
/// problem determines a unique output there.
pub fn label_for(p: &SynthesisProblem, input: &crate::expr::Environment) -> Option<Value> {
    if p.is_invariant() {
        p.is_reachable(input).map(Value::Bool)
    } else {
        p.point_index(input).and_then(|i| p.expected_output(i))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("precondition violated: {0}")]
pub struct CountError(pub String);

fn falling_factorial(n: u64, k: u64) -> BigUint {
    (n - k + 1..=n).fold(BigUint::from(1u32), |acc, f| acc * f)
}

/// Number of distinct counterexample sequences of length at most `m` with
/// pairwise distinct inputs: Σ_{i=0}^{m} nX!/(nX−i)! · nY^i.
pub fn trace_count(n_x: u64, n_y: u64, m: u64) -> Result<BigUint, CountError> {
    if m >= n_x {
        return Err(CountError(format!("trace length {m} must be below |X| = {n_x}")));
    }
    let y = BigUint::from(n_y);
    Ok((0..=m).map(|i| falling_factorial(n_x, i) * y.pow(i as u32)).sum())
}

/// Number of sets of `m` examples with distinct inputs:
/// nX!/(m!·(nX−m)!) · nY^m.
pub fn example_set_count(n_x: u64, n_y: u64, m: u64) -> Result<BigUint, CountError> {
    if m > n_x {
        return Err(CountError(format!("set size {m} exceeds |X| = {n_x}")));
    }
    let choose = falling_factorial(n_x, m) / falling_factorial(m, m);
    Ok(choose * BigUint::from(n_y).pow(m as u32))
}
