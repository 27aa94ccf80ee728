//! Component-based grammar levels and grammar ladders.
//!
//! A grammar level is a finite set of typed components; the grammar it
//! induces is every well-typed application over that set. A ladder is a
//! strictly increasing chain of such sets, and [`standard_ladder`] builds
//! the six-level chain of integer predicate grammars from equalities up to
//! full Peano arithmetic.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

use crate::expr::{Component, Op, Ty, Value};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("duplicate component name `{0}`")]
    DuplicateName(String),
    #[error("a ladder needs at least one level")]
    EmptyLadder,
    #[error("level {lower} is not a strict component subset of level {upper}")]
    NotStrictlyIncreasing { lower: usize, upper: usize },
    #[error("unknown grammar level `{0}`")]
    UnknownLevel(String),
}

/// One grammar of a ladder, identified by its 1-based position.
#[derive(Clone, Debug)]
pub struct GrammarLevel {
    index: usize,
    components: Vec<Arc<Component>>,
}

impl GrammarLevel {
    pub fn new(index: usize, components: Vec<Arc<Component>>) -> Result<Self, GrammarError> {
        let mut seen = HashSet::new();
        for c in &components {
            if !seen.insert(c.name()) {
                return Err(GrammarError::DuplicateName(c.name().to_owned()));
            }
        }
        Ok(GrammarLevel { index, components })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn components(&self) -> &[Arc<Component>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Nullary components: constants and variables.
    pub fn values(&self) -> impl Iterator<Item = &Arc<Component>> {
        self.components.iter().filter(|c| c.is_value())
    }

    /// Components of positive arity.
    pub fn operators(&self) -> impl Iterator<Item = &Arc<Component>> {
        self.components.iter().filter(|c| !c.is_value())
    }

    pub fn contains(&self, component: &Component) -> bool {
        self.components.iter().any(|c| **c == *component)
    }

    pub fn find(&self, name: &str) -> Option<&Arc<Component>> {
        self.components.iter().find(|c| c.name() == name)
    }

    /// Does every component of `self` (by name and signature) occur in `other`?
    pub fn is_component_subset(&self, other: &GrammarLevel) -> bool {
        self.components.iter().all(|c| other.contains(c))
    }

    /// `|C|^k` as an exact natural number, the syntactic size proxy used to
    /// compare the expressiveness of (grammar, size) pairs.
    pub fn expressiveness_proxy(&self, k: u32) -> BigUint {
        BigUint::from(self.components.len()).pow(k)
    }

    fn reindexed(&self, index: usize) -> GrammarLevel {
        GrammarLevel {
            index,
            components: self.components.clone(),
        }
    }
}

pub fn values_of(g: &GrammarLevel) -> Vec<Arc<Component>> {
    g.values().cloned().collect()
}

pub fn operators_of(g: &GrammarLevel) -> Vec<Arc<Component>> {
    g.operators().cloned().collect()
}

pub fn is_component_subset(a: &GrammarLevel, b: &GrammarLevel) -> bool {
    a.is_component_subset(b)
}

pub fn expressiveness_proxy(g: &GrammarLevel, k: u32) -> BigUint {
    g.expressiveness_proxy(k)
}

/// A chain `G1 ⊂ … ⊂ Gp` of component sets, strict at every step.
#[derive(Clone, Debug)]
pub struct GrammarLadder {
    levels: Vec<GrammarLevel>,
}

impl GrammarLadder {
    /// Builds a ladder from component sets given lowest first.
    pub fn new(sets: Vec<Vec<Arc<Component>>>) -> Result<Self, GrammarError> {
        if sets.is_empty() {
            return Err(GrammarError::EmptyLadder);
        }
        let levels = sets
            .into_iter()
            .enumerate()
            .map(|(i, comps)| GrammarLevel::new(i + 1, comps))
            .collect::<Result<Vec<_>, _>>()?;
        for pair in levels.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            if !lo.is_component_subset(hi) || hi.is_component_subset(lo) {
                return Err(GrammarError::NotStrictlyIncreasing {
                    lower: lo.index,
                    upper: hi.index,
                });
            }
        }
        Ok(GrammarLadder { levels })
    }

    /// One-level ladder holding a single grammar, re-indexed as level 1.
    pub fn single(level: &GrammarLevel) -> Self {
        GrammarLadder {
            levels: vec![level.reindexed(1)],
        }
    }

    /// The first `p` levels.
    pub fn prefix(&self, p: usize) -> Self {
        assert!(p >= 1 && p <= self.levels.len(), "prefix length {p} out of range");
        GrammarLadder {
            levels: self.levels[..p].to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Level by 1-based index.
    pub fn level(&self, index: usize) -> &GrammarLevel {
        &self.levels[index - 1]
    }

    pub fn levels(&self) -> &[GrammarLevel] {
        &self.levels
    }

    pub fn top(&self) -> &GrammarLevel {
        self.levels.last().expect("ladders are nonempty")
    }

    /// Components introduced at `index`, i.e. those of level `index` absent
    /// from level `index - 1`, in level order.
    pub fn new_components(&self, index: usize) -> Vec<Arc<Component>> {
        let level = self.level(index);
        if index == 1 {
            return level.components.clone();
        }
        let below = self.level(index - 1);
        level
            .components
            .iter()
            .filter(|c| !below.contains(c))
            .cloned()
            .collect()
    }

    /// Least level whose component set covers `components`, if any.
    pub fn least_level_of<'a>(
        &self,
        components: impl IntoIterator<Item = &'a Arc<Component>> + Clone,
    ) -> Option<usize> {
        self.levels
            .iter()
            .find(|l| components.clone().into_iter().all(|c| l.contains(c)))
            .map(|l| l.index)
    }
}

/// Names of the six standard levels, least expressive first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LevelName {
    Equalities,
    Intervals,
    Octagons,
    Polyhedra,
    Polynomials,
    Peano,
}

impl LevelName {
    pub const ALL: [LevelName; 6] = [
        LevelName::Equalities,
        LevelName::Intervals,
        LevelName::Octagons,
        LevelName::Polyhedra,
        LevelName::Polynomials,
        LevelName::Peano,
    ];

    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn from_index(index: usize) -> Option<LevelName> {
        LevelName::ALL.get(index.checked_sub(1)?).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LevelName::Equalities => "equalities",
            LevelName::Intervals => "intervals",
            LevelName::Octagons => "octagons",
            LevelName::Polyhedra => "polyhedra",
            LevelName::Polynomials => "polynomials",
            LevelName::Peano => "peano",
        }
    }
}

impl fmt::Display for LevelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LevelName {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LevelName::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| GrammarError::UnknownLevel(s.to_owned()))
    }
}

/// Default constant pool before problem-declared constants are added.
pub const BASE_CONSTANTS: [i64; 2] = [0, 1];

fn binop(name: &str, arg: Ty, ret: Ty, op: Op) -> Arc<Component> {
    Arc::new(Component::operator(name, vec![arg, arg], ret, op))
}

/// The constant pool `{0, 1} ∪ extra`, in first-occurrence order.
pub fn constant_pool(extra: &[i64]) -> Vec<i64> {
    let mut pool = BASE_CONSTANTS.to_vec();
    for &c in extra {
        if !pool.contains(&c) {
            pool.push(c);
        }
    }
    pool
}

/// Six-level integer predicate ladder over the given integer variables.
pub fn standard_ladder(int_vars: &[&str], extra_consts: &[i64]) -> Result<GrammarLadder, GrammarError> {
    let vars: Vec<(String, Ty)> = int_vars.iter().map(|v| (v.to_string(), Ty::Int)).collect();
    standard_ladder_for(&vars, extra_consts)
}

/// Like [`standard_ladder`], for an ordered variable list that may include
/// Boolean variables. Each variable's position is its environment slot.
pub fn standard_ladder_for(vars: &[(String, Ty)], extra_consts: &[i64]) -> Result<GrammarLadder, GrammarError> {
    let pool = constant_pool(extra_consts);

    let var = |ty: Ty| -> Vec<Arc<Component>> {
        vars.iter()
            .enumerate()
            .filter(|(_, (_, t))| *t == ty)
            .map(|(i, (n, t))| Arc::new(Component::variable(n.clone(), *t, i)))
            .collect()
    };

    let mut equalities = vec![
        Arc::new(Component::constant(Value::Bool(true))),
        Arc::new(Component::constant(Value::Bool(false))),
    ];
    equalities.extend(var(Ty::Bool));
    equalities.push(Arc::new(Component::operator("not", vec![Ty::Bool], Ty::Bool, Op::Not)));
    equalities.push(binop("or", Ty::Bool, Ty::Bool, Op::Or));
    equalities.push(binop("and", Ty::Bool, Ty::Bool, Op::And));
    equalities.extend(pool.iter().map(|&c| Arc::new(Component::constant(Value::Int(c)))));
    equalities.extend(var(Ty::Int));
    equalities.push(binop("=", Ty::Int, Ty::Bool, Op::Eq));

    let mut intervals = equalities.clone();
    intervals.push(binop(">", Ty::Int, Ty::Bool, Op::Gt));
    intervals.push(binop(">=", Ty::Int, Ty::Bool, Op::Ge));
    intervals.push(binop("<", Ty::Int, Ty::Bool, Op::Lt));
    intervals.push(binop("<=", Ty::Int, Ty::Bool, Op::Le));

    let mut octagons = intervals.clone();
    octagons.push(binop("+", Ty::Int, Ty::Int, Op::Add));
    octagons.push(binop("-", Ty::Int, Ty::Int, Op::Sub));

    let mut polyhedra = octagons.clone();
    polyhedra.extend(pool.iter().map(|&c| {
        Arc::new(Component::operator(
            format!("*{c}"),
            vec![Ty::Int],
            Ty::Int,
            Op::Scale(c),
        ))
    }));

    let mut polynomials = polyhedra.clone();
    polynomials.push(binop("*", Ty::Int, Ty::Int, Op::Mul));

    let mut peano = polynomials.clone();
    peano.push(binop("div", Ty::Int, Ty::Int, Op::Div));
    peano.push(binop("mod", Ty::Int, Ty::Int, Op::Mod));

    GrammarLadder::new(vec![equalities, intervals, octagons, polyhedra, polynomials, peano])
}
