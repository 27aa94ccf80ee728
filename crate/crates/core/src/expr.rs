//! Typed expression trees over components.
//!
//! An [`Expr`] is an immutable, reference-counted tree whose nodes are
//! applications of [`Component`]s. Identity is structural: two expressions
//! are equal when their root components agree by name and signature and
//! their children are equal recursively.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The two sorts of the expression language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ty {
    Int,
    Bool,
}

impl Ty {
    pub(crate) fn slot(self) -> usize {
        match self {
            Ty::Int => 0,
            Ty::Bool => 1,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => f.write_str("Int"),
            Ty::Bool => f.write_str("Bool"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn ty(self) -> Ty {
        match self {
            Value::Int(_) => Ty::Int,
            Value::Bool(_) => Ty::Bool,
        }
    }

    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(n),
            Value::Bool(_) => None,
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Int(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(n) => serializer.serialize_i64(*n),
            Value::Bool(b) => serializer.serialize_bool(*b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("component `{0}` received arguments of the wrong sort")]
    BadArguments(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("`{component}` expects {expected} arguments, got {found}")]
    Arity {
        component: String,
        expected: usize,
        found: usize,
    },
    #[error("argument {position} of `{component}` must be {expected}, found {found}")]
    Mismatch {
        component: String,
        position: usize,
        expected: Ty,
        found: Ty,
    },
}

/// Built-in operators of the integer/Boolean theory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Not,
    And,
    Or,
    Implies,
    Eq,
    Gt,
    Ge,
    Lt,
    Le,
    Add,
    Sub,
    /// Nonlinear multiplication of two terms.
    Mul,
    /// Multiplication of a term by a fixed literal.
    Scale(i64),
    Div,
    Mod,
}

impl Op {
    fn apply(self, args: &[Value]) -> Option<Result<Value, EvalError>> {
        use Value::{Bool as B, Int as I};
        let v = match (self, args) {
            (Op::Not, [B(a)]) => Ok(B(!a)),
            (Op::And, [B(a), B(b)]) => Ok(B(*a && *b)),
            (Op::Or, [B(a), B(b)]) => Ok(B(*a || *b)),
            (Op::Implies, [B(a), B(b)]) => Ok(B(!a || *b)),
            (Op::Eq, [I(a), I(b)]) => Ok(B(a == b)),
            (Op::Eq, [B(a), B(b)]) => Ok(B(a == b)),
            (Op::Gt, [I(a), I(b)]) => Ok(B(a > b)),
            (Op::Ge, [I(a), I(b)]) => Ok(B(a >= b)),
            (Op::Lt, [I(a), I(b)]) => Ok(B(a < b)),
            (Op::Le, [I(a), I(b)]) => Ok(B(a <= b)),
            (Op::Add, [I(a), I(b)]) => a.checked_add(*b).map(I).ok_or(EvalError::Overflow),
            (Op::Sub, [I(a), I(b)]) => a.checked_sub(*b).map(I).ok_or(EvalError::Overflow),
            (Op::Mul, [I(a), I(b)]) => a.checked_mul(*b).map(I).ok_or(EvalError::Overflow),
            (Op::Scale(c), [I(a)]) => c.checked_mul(*a).map(I).ok_or(EvalError::Overflow),
            (Op::Div, [I(_), I(0)]) | (Op::Mod, [I(_), I(0)]) => Err(EvalError::DivByZero),
            // Euclidean: the remainder always lies in [0, |divisor|).
            (Op::Div, [I(a), I(b)]) => a.checked_div_euclid(*b).map(I).ok_or(EvalError::Overflow),
            (Op::Mod, [I(a), I(b)]) => a.checked_rem_euclid(*b).map(I).ok_or(EvalError::Overflow),
            _ => return None,
        };
        Some(v)
    }
}

pub type CustomSemantics = Arc<dyn Fn(&[Value]) -> Result<Value, EvalError> + Send + Sync>;

#[derive(Clone)]
pub enum Semantics {
    Const(Value),
    /// Variable reference; `index` is the expected slot in an [`Environment`].
    Var {
        index: usize,
    },
    Op(Op),
    Custom(CustomSemantics),
}

impl fmt::Debug for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Semantics::Const(v) => write!(f, "Const({v})"),
            Semantics::Var { index } => write!(f, "Var({index})"),
            Semantics::Op(op) => write!(f, "Op({op:?})"),
            Semantics::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A typed operator of fixed arity. Nullary components are constants or
/// variable references.
///
/// Equality and hashing consider only the name and the signature.
#[derive(Clone, Debug)]
pub struct Component {
    name: String,
    arg_types: Vec<Ty>,
    ret_type: Ty,
    semantics: Semantics,
}

impl Component {
    pub fn new(name: impl Into<String>, arg_types: Vec<Ty>, ret_type: Ty, semantics: Semantics) -> Self {
        Component {
            name: name.into(),
            arg_types,
            ret_type,
            semantics,
        }
    }

    pub fn constant(value: Value) -> Self {
        Component::new(value.to_string(), Vec::new(), value.ty(), Semantics::Const(value))
    }

    pub fn variable(name: impl Into<String>, ty: Ty, index: usize) -> Self {
        Component::new(name, Vec::new(), ty, Semantics::Var { index })
    }

    pub fn operator(name: impl Into<String>, arg_types: Vec<Ty>, ret_type: Ty, op: Op) -> Self {
        Component::new(name, arg_types, ret_type, Semantics::Op(op))
    }

    pub fn custom<F>(name: impl Into<String>, arg_types: Vec<Ty>, ret_type: Ty, f: F) -> Self
    where
        F: Fn(&[Value]) -> Result<Value, EvalError> + Send + Sync + 'static,
    {
        Component::new(name, arg_types, ret_type, Semantics::Custom(Arc::new(f)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arg_types.len()
    }

    pub fn arg_types(&self) -> &[Ty] {
        &self.arg_types
    }

    pub fn ret_type(&self) -> Ty {
        self.ret_type
    }

    pub fn semantics(&self) -> &Semantics {
        &self.semantics
    }

    pub fn is_value(&self) -> bool {
        self.arg_types.is_empty()
    }

    /// Name and signature, the part of a component that identifies it.
    pub fn same_signature(&self, other: &Component) -> bool {
        self == other
    }

    fn apply(&self, args: &[Value]) -> Result<Value, EvalError> {
        match &self.semantics {
            Semantics::Const(v) => Ok(*v),
            Semantics::Var { .. } => Err(EvalError::BadArguments(self.name.clone())),
            Semantics::Op(op) => op
                .apply(args)
                .unwrap_or_else(|| Err(EvalError::BadArguments(self.name.clone()))),
            Semantics::Custom(f) => f(args),
        }
    }
}

impl PartialEq for Component {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.arg_types == other.arg_types && self.ret_type == other.ret_type
    }
}

impl Eq for Component {}

impl Hash for Component {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        self.arg_types.hash(state);
        self.ret_type.hash(state);
    }
}

/// Variable bindings. Lookups try the variable's declared slot first and
/// fall back to a search by name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Environment {
    bindings: Vec<(Arc<str>, Value)>,
}

impl Environment {
    pub fn new() -> Self {
        Environment::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Value)>,
        S: AsRef<str>,
    {
        Environment {
            bindings: pairs.into_iter().map(|(n, v)| (Arc::from(n.as_ref()), v)).collect(),
        }
    }

    pub fn bind(&mut self, name: impl AsRef<str>, value: Value) {
        match self.bindings.iter_mut().find(|(n, _)| &**n == name.as_ref()) {
            Some(slot) => slot.1 = value,
            None => self.bindings.push((Arc::from(name.as_ref()), value)),
        }
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.bindings.iter().find(|(n, _)| &**n == name).map(|(_, v)| *v)
    }

    fn lookup(&self, index: usize, name: &str) -> Option<Value> {
        match self.bindings.get(index) {
            Some((n, v)) if &**n == name => Some(*v),
            _ => self.get(name),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Value)> {
        self.bindings.iter().map(|(n, v)| (&**n, *v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Concatenation of two environments, used to evaluate formulas over
    /// a state and its successor.
    pub fn concat(&self, other: &Environment) -> Environment {
        let mut bindings = self.bindings.clone();
        bindings.extend(other.bindings.iter().cloned());
        Environment { bindings }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (n, v)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        f.write_str("}")
    }
}

struct Node {
    component: Arc<Component>,
    children: Box<[Expr]>,
    size: usize,
    hash: u64,
}

/// A well-typed component application.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    /// Leaf expression for a nullary component.
    pub fn leaf(component: Arc<Component>) -> Result<Expr, TypeError> {
        Expr::apply(component, Vec::new())
    }

    pub fn apply(component: Arc<Component>, children: Vec<Expr>) -> Result<Expr, TypeError> {
        if children.len() != component.arity() {
            return Err(TypeError::Arity {
                component: component.name().to_owned(),
                expected: component.arity(),
                found: children.len(),
            });
        }
        for (position, (child, &expected)) in children.iter().zip(component.arg_types()).enumerate() {
            if child.ty() != expected {
                return Err(TypeError::Mismatch {
                    component: component.name().to_owned(),
                    position,
                    expected,
                    found: child.ty(),
                });
            }
        }
        Ok(Expr::build(component, children))
    }

    /// Construction without the type check; callers guarantee well-typedness.
    pub(crate) fn apply_unchecked(component: Arc<Component>, children: Vec<Expr>) -> Expr {
        debug_assert!(children.len() == component.arity());
        debug_assert!(children.iter().zip(component.arg_types()).all(|(c, t)| c.ty() == *t));
        Expr::build(component, children)
    }

    fn build(component: Arc<Component>, children: Vec<Expr>) -> Expr {
        let size = 1 + children.iter().map(Expr::size).sum::<usize>();
        let mut hasher = DefaultHasher::new();
        component.hash(&mut hasher);
        for child in &children {
            hasher.write_u64(child.0.hash);
        }
        Expr(Arc::new(Node {
            component,
            children: children.into_boxed_slice(),
            size,
            hash: hasher.finish(),
        }))
    }

    pub fn component(&self) -> &Arc<Component> {
        &self.0.component
    }

    pub fn children(&self) -> &[Expr] {
        &self.0.children
    }

    /// Node count; leaves have size 1.
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn ty(&self) -> Ty {
        self.0.component.ret_type()
    }

    pub fn eval(&self, env: &Environment) -> Result<Value, EvalError> {
        let component = &self.0.component;
        match component.semantics() {
            Semantics::Const(v) => Ok(*v),
            Semantics::Var { index } => env
                .lookup(*index, component.name())
                .ok_or_else(|| EvalError::UnboundVariable(component.name().to_owned())),
            _ => {
                let mut args = [Value::Bool(false); 3];
                let n = self.0.children.len();
                if n <= args.len() {
                    for (slot, child) in args.iter_mut().zip(self.0.children.iter()) {
                        *slot = child.eval(env)?;
                    }
                    component.apply(&args[..n])
                } else {
                    let args = self
                        .0
                        .children
                        .iter()
                        .map(|c| c.eval(env))
                        .collect::<Result<Vec<_>, _>>()?;
                    component.apply(&args)
                }
            }
        }
    }

    /// Evaluation of a Boolean expression.
    pub fn holds(&self, env: &Environment) -> Result<bool, EvalError> {
        match self.eval(env)? {
            Value::Bool(b) => Ok(b),
            Value::Int(_) => Err(EvalError::BadArguments(self.0.component.name().to_owned())),
        }
    }

    /// Every component occurring in the tree, in preorder.
    pub fn components(&self) -> Vec<&Arc<Component>> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            out.push(&e.0.component);
            stack.extend(e.0.children.iter().rev());
        }
        out
    }

    /// True when every component of the tree satisfies `pred`.
    pub fn uses_only(&self, mut pred: impl FnMut(&Component) -> bool) -> bool {
        self.components().into_iter().all(|c| pred(c))
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        self.0.hash == other.0.hash
            && self.0.size == other.0.size
            && *self.0.component == *other.0.component
            && self.0.children == other.0.children
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let component = &self.0.component;
        if self.0.children.is_empty() {
            return f.write_str(component.name());
        }
        match component.semantics() {
            Semantics::Op(Op::Scale(c)) => write!(f, "(* {c} {})", self.0.children[0]),
            _ => {
                write!(f, "({}", component.name())?;
                for child in self.0.children.iter() {
                    write!(f, " {child}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
