//! Synthesis problems over a bounded box of integer states.
//!
//! A problem fixes the variables, the specification (a reference function,
//! an input/output relation, or an invariant triple of precondition,
//! transition relation and postcondition), the per-variable box the
//! verifier scans, and the grammar level candidates are drawn from.
//!
//! Construction precomputes everything the verifier needs about the box:
//! the scan order of states, expected outputs for functional problems, and
//! for invariant problems the precondition states, postcondition-violating
//! states, in-box transition pairs and the reachable set.

use std::collections::VecDeque;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Environment, Expr, Op, Semantics, Ty, Value};
use crate::grammar::{standard_ladder_for, GrammarError, GrammarLadder, GrammarLevel, LevelName};

/// Upper bound on the number of states in a box.
pub const MAX_BOX_POINTS: usize = 1 << 20;

/// Default box for invariant problems.
pub const DEFAULT_INVARIANT_BOUNDS: Interval = Interval { lo: 0, hi: 8 };
/// Default box for functional problems.
pub const DEFAULT_FUNCTIONAL_BOUNDS: Interval = Interval { lo: -4, hi: 4 };

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("empty box for `{0}`")]
    EmptyBox(String),
    #[error("box has more than {MAX_BOX_POINTS} states")]
    BoxTooLarge,
    #[error("{what} must have type {expected}, found {found}")]
    IllTyped { what: String, expected: Ty, found: Ty },
    #[error("grammar level {0} is outside the ladder")]
    LevelOutOfRange(usize),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("no output in range satisfies the specification at {0}")]
    NoWitness(Environment),
    #[error("ladder and problem variables disagree: {0}")]
    LadderMismatch(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub ty: Ty,
}

impl Variable {
    pub fn new(name: impl Into<String>, ty: Ty) -> Self {
        Variable { name: name.into(), ty }
    }

    pub fn int(name: impl Into<String>) -> Self {
        Variable::new(name, Ty::Int)
    }
}

/// Inclusive integer range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, n: i64) -> bool {
        self.lo <= n && n <= self.hi
    }

    fn width(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }
}

#[derive(Clone, Debug)]
pub enum FunctionalSpec {
    /// The target function, given as an expression over the variables.
    Reference(Expr),
    /// A Boolean predicate over the variables and an output variable.
    Relation {
        output: String,
        output_ty: Ty,
        predicate: Expr,
    },
}

#[derive(Clone, Debug)]
pub enum ProblemKind {
    Functional(FunctionalSpec),
    /// `trans` ranges over the variables and their primed successors; the
    /// primed copy of variable `i` occupies environment slot `n + i`.
    Invariant {
        pre: Expr,
        trans: Expr,
        post: Expr,
    },
}

pub(crate) enum Analysis {
    Functional {
        expected: Vec<Option<Value>>,
    },
    Invariant {
        pre: Vec<usize>,
        post_fail: Vec<usize>,
        /// In-box transitions `(from, to)` in scan order of `from`, then `to`.
        pairs: Vec<(u32, u32)>,
        reachable: Vec<bool>,
    },
}

#[derive(Clone)]
pub struct SynthesisProblem {
    name: String,
    vars: Vec<Variable>,
    kind: ProblemKind,
    bounds: Vec<Interval>,
    consts: Vec<i64>,
    level: usize,
    ladder: GrammarLadder,
    points: Arc<Vec<Environment>>,
    analysis: Arc<Analysis>,
}

impl std::fmt::Debug for SynthesisProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SynthesisProblem")
            .field("name", &self.name)
            .field("vars", &self.vars)
            .field("kind", &self.kind)
            .field("bounds", &self.bounds)
            .field("consts", &self.consts)
            .field("level", &self.level)
            .finish_non_exhaustive()
    }
}

impl PartialEq for SynthesisProblem {
    fn eq(&self, other: &Self) -> bool {
        let kinds_equal = match (&self.kind, &other.kind) {
            (
                ProblemKind::Functional(FunctionalSpec::Reference(a)),
                ProblemKind::Functional(FunctionalSpec::Reference(b)),
            ) => a == b,
            (
                ProblemKind::Functional(FunctionalSpec::Relation {
                    output: o1,
                    output_ty: t1,
                    predicate: p1,
                }),
                ProblemKind::Functional(FunctionalSpec::Relation {
                    output: o2,
                    output_ty: t2,
                    predicate: p2,
                }),
            ) => o1 == o2 && t1 == t2 && p1 == p2,
            (
                ProblemKind::Invariant {
                    pre: a1,
                    trans: b1,
                    post: c1,
                },
                ProblemKind::Invariant {
                    pre: a2,
                    trans: b2,
                    post: c2,
                },
            ) => a1 == a2 && b1 == b2 && c1 == c2,
            _ => false,
        };
        kinds_equal
            && self.name == other.name
            && self.vars == other.vars
            && self.bounds == other.bounds
            && self.consts == other.consts
            && self.level == other.level
    }
}

fn expect_ty(what: &str, e: &Expr, expected: Ty) -> Result<(), ProblemError> {
    if e.ty() != expected {
        return Err(ProblemError::IllTyped {
            what: what.to_owned(),
            expected,
            found: e.ty(),
        });
    }
    Ok(())
}

impl SynthesisProblem {
    /// Builds a problem over the standard ladder. `bounds` holds one
    /// interval per variable; Boolean variables ignore theirs.
    pub fn new(
        name: impl Into<String>,
        vars: Vec<Variable>,
        kind: ProblemKind,
        bounds: Vec<Interval>,
        consts: Vec<i64>,
        level: usize,
    ) -> Result<Self, ProblemError> {
        let pairs: Vec<(String, Ty)> = vars.iter().map(|v| (v.name.clone(), v.ty)).collect();
        let ladder = standard_ladder_for(&pairs, &consts)?;
        SynthesisProblem::with_ladder(name, vars, kind, bounds, consts, ladder, level)
    }

    /// Builds a problem whose candidates come from an arbitrary ladder.
    pub fn with_ladder(
        name: impl Into<String>,
        vars: Vec<Variable>,
        kind: ProblemKind,
        bounds: Vec<Interval>,
        consts: Vec<i64>,
        ladder: GrammarLadder,
        level: usize,
    ) -> Result<Self, ProblemError> {
        if level < 1 || level > ladder.len() {
            return Err(ProblemError::LevelOutOfRange(level));
        }
        if bounds.len() != vars.len() {
            return Err(ProblemError::LadderMismatch(format!(
                "{} variables but {} bounds",
                vars.len(),
                bounds.len()
            )));
        }
        for c in ladder.top().components() {
            if let Semantics::Var { index } = c.semantics() {
                let ok = vars
                    .get(*index)
                    .is_some_and(|v| v.name == c.name() && v.ty == c.ret_type());
                if !ok {
                    return Err(ProblemError::LadderMismatch(format!("variable `{}`", c.name())));
                }
            }
        }
        for (v, b) in vars.iter().zip(&bounds) {
            if v.ty == Ty::Int && b.lo > b.hi {
                return Err(ProblemError::EmptyBox(v.name.clone()));
            }
        }
        match &kind {
            ProblemKind::Functional(FunctionalSpec::Relation { predicate, .. }) => {
                expect_ty("relation", predicate, Ty::Bool)?
            }
            ProblemKind::Functional(FunctionalSpec::Reference(_)) => {}
            ProblemKind::Invariant { pre, trans, post } => {
                expect_ty("pre", pre, Ty::Bool)?;
                expect_ty("trans", trans, Ty::Bool)?;
                expect_ty("post", post, Ty::Bool)?;
            }
        }
        let points = box_points(&vars, &bounds)?;
        let analysis = match &kind {
            ProblemKind::Functional(spec) => analyze_functional(spec, &vars, &bounds, &points)?,
            ProblemKind::Invariant { pre, trans, post } => analyze_invariant(pre, trans, post, &vars, &bounds, &points),
        };
        Ok(SynthesisProblem {
            name: name.into(),
            vars,
            kind,
            bounds,
            consts,
            level,
            ladder,
            points: Arc::new(points),
            analysis: Arc::new(analysis),
        })
    }

    /// Same problem with candidates drawn from another level.
    pub fn with_level(&self, level: usize) -> Result<Self, ProblemError> {
        if level < 1 || level > self.ladder.len() {
            return Err(ProblemError::LevelOutOfRange(level));
        }
        let mut p = self.clone();
        p.level = level;
        Ok(p)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn consts(&self) -> &[i64] {
        &self.consts
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn level_name(&self) -> Option<LevelName> {
        LevelName::from_index(self.level)
    }

    pub fn ladder(&self) -> &GrammarLadder {
        &self.ladder
    }

    pub fn grammar(&self) -> &GrammarLevel {
        self.ladder.level(self.level)
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self.kind, ProblemKind::Invariant { .. })
    }

    /// Sort of the synthesized function's result.
    pub fn return_type(&self) -> Ty {
        match &self.kind {
            ProblemKind::Functional(FunctionalSpec::Reference(e)) => e.ty(),
            ProblemKind::Functional(FunctionalSpec::Relation { output_ty, .. }) => *output_ty,
            ProblemKind::Invariant { .. } => Ty::Bool,
        }
    }

    /// Box states in scan order: declaration order, first variable most
    /// significant, values ascending.
    pub fn points(&self) -> &[Environment] {
        &self.points
    }

    pub(crate) fn analysis(&self) -> &Analysis {
        &self.analysis
    }

    /// Scan index of a state, if it lies in the box.
    pub fn point_index(&self, env: &Environment) -> Option<usize> {
        let mut index = 0usize;
        for (v, b) in self.vars.iter().zip(&self.bounds) {
            let value = env.get(&v.name)?;
            let (offset, width) = match (v.ty, value) {
                (Ty::Int, Value::Int(n)) if b.contains(n) => ((n - b.lo) as usize, b.width()),
                (Ty::Bool, Value::Bool(flag)) => (flag as usize, 2),
                _ => return None,
            };
            index = index * width + offset;
        }
        Some(index)
    }

    /// Output the specification demands at a box state, for functional
    /// problems; `None` where the reference is undefined.
    pub fn expected_output(&self, point: usize) -> Option<Value> {
        match &*self.analysis {
            Analysis::Functional { expected } => expected[point],
            Analysis::Invariant { .. } => None,
        }
    }

    /// Whether `output` is acceptable for `input` according to the
    /// functional specification alone.
    pub fn spec_accepts(&self, input: &Environment, output: Value) -> Option<bool> {
        match &self.kind {
            ProblemKind::Functional(FunctionalSpec::Reference(r)) => r.eval(input).ok().map(|v| v == output),
            ProblemKind::Functional(FunctionalSpec::Relation {
                output: name,
                predicate,
                ..
            }) => {
                let mut env = input.clone();
                env.bind(name, output);
                predicate.holds(&env).ok()
            }
            ProblemKind::Invariant { .. } => None,
        }
    }

    /// Whether the state lies in the reachable set computed over the box.
    pub fn is_reachable(&self, env: &Environment) -> Option<bool> {
        match &*self.analysis {
            Analysis::Invariant { reachable, .. } => Some(self.point_index(env).is_some_and(|i| reachable[i])),
            Analysis::Functional { .. } => None,
        }
    }
}

fn domain(v: &Variable, b: &Interval) -> Vec<Value> {
    match v.ty {
        Ty::Int => (b.lo..=b.hi).map(Value::Int).collect(),
        Ty::Bool => vec![Value::Bool(false), Value::Bool(true)],
    }
}

fn box_points(vars: &[Variable], bounds: &[Interval]) -> Result<Vec<Environment>, ProblemError> {
    let domains: Vec<Vec<Value>> = vars.iter().zip(bounds).map(|(v, b)| domain(v, b)).collect();
    let mut total = 1usize;
    for d in &domains {
        total = total
            .checked_mul(d.len())
            .filter(|&t| t <= MAX_BOX_POINTS)
            .ok_or(ProblemError::BoxTooLarge)?;
    }
    let mut points = Vec::with_capacity(total);
    let mut odometer = vec![0usize; vars.len()];
    for _ in 0..total {
        points.push(Environment::from_pairs(
            vars.iter()
                .zip(&odometer)
                .zip(&domains)
                .map(|((v, &i), d)| (v.name.as_str(), d[i])),
        ));
        for i in (0..odometer.len()).rev() {
            odometer[i] += 1;
            if odometer[i] < domains[i].len() {
                break;
            }
            odometer[i] = 0;
        }
    }
    Ok(points)
}

fn output_range(vars: &[Variable], bounds: &[Interval]) -> Interval {
    let ints: Vec<&Interval> = vars
        .iter()
        .zip(bounds)
        .filter(|(v, _)| v.ty == Ty::Int)
        .map(|(_, b)| b)
        .collect();
    if ints.is_empty() {
        return DEFAULT_FUNCTIONAL_BOUNDS;
    }
    Interval::new(
        ints.iter().map(|b| b.lo).min().unwrap(),
        ints.iter().map(|b| b.hi).max().unwrap(),
    )
}

fn analyze_functional(
    spec: &FunctionalSpec,
    vars: &[Variable],
    bounds: &[Interval],
    points: &[Environment],
) -> Result<Analysis, ProblemError> {
    let expected = match spec {
        FunctionalSpec::Reference(r) => points.iter().map(|p| r.eval(p).ok()).collect(),
        FunctionalSpec::Relation {
            output,
            output_ty,
            predicate,
        } => {
            let range = output_range(vars, bounds);
            let candidates = domain(&Variable::new(output.clone(), *output_ty), &range);
            let mut expected = Vec::with_capacity(points.len());
            for p in points {
                let witness = candidates.iter().copied().find(|&y| {
                    let mut env = p.clone();
                    env.bind(output, y);
                    predicate.holds(&env) == Ok(true)
                });
                match witness {
                    Some(y) => expected.push(Some(y)),
                    None => return Err(ProblemError::NoWitness(p.clone())),
                }
            }
            expected
        }
    };
    Ok(Analysis::Functional { expected })
}

fn conjuncts(e: &Expr, out: &mut Vec<Expr>) {
    if matches!(e.component().semantics(), Semantics::Op(Op::And)) {
        for c in e.children() {
            conjuncts(c, out);
        }
    } else {
        out.push(e.clone());
    }
}

fn mentions_primed(e: &Expr, n: usize) -> bool {
    e.components()
        .iter()
        .any(|c| matches!(c.semantics(), Semantics::Var { index } if *index >= n))
}

fn primed_slot(e: &Expr, n: usize) -> Option<usize> {
    match e.component().semantics() {
        Semantics::Var { index } if *index >= n => Some(index - n),
        _ => None,
    }
}

fn analyze_invariant(
    pre: &Expr,
    trans: &Expr,
    post: &Expr,
    vars: &[Variable],
    bounds: &[Interval],
    points: &[Environment],
) -> Analysis {
    let n = vars.len();
    let pre_points: Vec<usize> = (0..points.len())
        .filter(|&i| pre.holds(&points[i]) == Ok(true))
        .collect();
    let post_fail: Vec<usize> = (0..points.len())
        .filter(|&i| post.holds(&points[i]) != Ok(true))
        .collect();

    let mut parts = Vec::new();
    conjuncts(trans, &mut parts);
    let guards: Vec<&Expr> = parts.iter().filter(|c| !mentions_primed(c, n)).collect();
    // successor variables fixed by a conjunct `x' = e` with `e` unprimed
    let mut determined: Vec<Option<&Expr>> = vec![None; n];
    for c in &parts {
        if !matches!(c.component().semantics(), Semantics::Op(Op::Eq)) {
            continue;
        }
        let (l, r) = (&c.children()[0], &c.children()[1]);
        for (lhs, rhs) in [(l, r), (r, l)] {
            if let Some(slot) = primed_slot(lhs, n) {
                if !mentions_primed(rhs, n) && determined[slot].is_none() {
                    determined[slot] = Some(rhs);
                }
            }
        }
    }
    let domains: Vec<Vec<Value>> = vars.iter().zip(bounds).map(|(v, b)| domain(v, b)).collect();
    let strides: Vec<usize> = (0..n)
        .map(|i| domains[i + 1..].iter().map(Vec::len).product())
        .collect();
    let offset_of = |slot: usize, value: Value| -> Option<usize> {
        match value {
            Value::Int(x) if vars[slot].ty == Ty::Int && bounds[slot].contains(x) => {
                Some((x - bounds[slot].lo) as usize)
            }
            Value::Bool(flag) if vars[slot].ty == Ty::Bool => Some(flag as usize),
            _ => None,
        }
    };

    let mut pairs = Vec::new();
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for (from, state) in points.iter().enumerate() {
        if !guards.iter().all(|g| g.holds(state) == Ok(true)) {
            continue;
        }
        // per slot: the offsets the successor may take
        let mut choices: Vec<Vec<usize>> = Vec::with_capacity(n);
        for slot in 0..n {
            match determined[slot] {
                Some(rhs) => match rhs.eval(state).ok().and_then(|v| offset_of(slot, v)) {
                    Some(off) => choices.push(vec![off]),
                    None => break,
                },
                None => choices.push((0..domains[slot].len()).collect()),
            }
        }
        if choices.len() < n {
            continue;
        }
        let mut tos: Vec<usize> = vec![0];
        for (slot, opts) in choices.iter().enumerate() {
            let stride = strides[slot];
            tos = tos
                .iter()
                .flat_map(|&base| opts.iter().map(move |&o| base + o * stride))
                .collect();
        }
        tos.sort_unstable();
        for to in tos {
            let mut env = state.clone();
            for (v, (name, value)) in vars.iter().zip(points[to].iter()) {
                debug_assert_eq!(v.name, name);
                env.bind(format!("{name}'"), value);
            }
            if trans.holds(&env) == Ok(true) {
                pairs.push((from as u32, to as u32));
                successors[from].push(to);
            }
        }
    }

    let mut reachable = vec![false; points.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &p in &pre_points {
        if !reachable[p] {
            reachable[p] = true;
            queue.push_back(p);
        }
    }
    while let Some(s) = queue.pop_front() {
        for &t in &successors[s] {
            if !reachable[t] {
                reachable[t] = true;
                queue.push_back(t);
            }
        }
    }

    Analysis::Invariant {
        pre: pre_points,
        post_fail,
        pairs,
        reachable,
    }
}
