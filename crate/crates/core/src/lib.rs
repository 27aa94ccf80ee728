//! Syntax-guided synthesis over grammar ladders.
//!
//! The crate provides typed component-based expressions ([`expr`]), the
//! six-level integer grammar ladder ([`grammar`]), hybrid enumeration that
//! interleaves the ladder's grammars in one search ([`enumerate`]), a CEGIS
//! loop with a bounded-exhaustive verifier ([`cegis`]), the parallel
//! multi-grammar driver ([`plearn`]), overfitting measures ([`overfit`]),
//! the problem file format ([`problem_file`]) and the benchmark sweep
//! ([`report`]).

pub mod cegis;
pub mod enumerate;
pub mod expr;
pub mod grammar;
pub mod overfit;
pub mod plearn;
pub mod problem;
pub mod problem_file;
pub mod report;
pub mod sexpr;

pub use expr::{Component, Environment, EvalError, Expr, Op, Ty, Value};
pub use grammar::{standard_ladder, GrammarLadder, GrammarLevel, LevelName};
