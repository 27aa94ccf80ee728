//! Problem files and example files.
//!
//! A problem file is a sequence of keyed forms using SMT-LIB operator
//! names:
//!
//! ```text
//! (name fib_19)
//! (vars (m Int) (n Int) (x Int) (y Int))
//! (kind invariant)
//! (pre (and (<= 0 n) (<= 0 m) (<= m n) (= x 0) (= y m)))
//! (trans (and (< x n) (= x' (+ x 1)) ...))
//! (post (=> (>= x n) (= y n)))
//! (bounds (m 0 8) (n 0 8) (x 0 8) (y 0 8))
//! (consts)
//! (level intervals)
//! ```
//!
//! Functional problems use `(kind functional)` and a `spec` form holding
//! either a reference expression or `(relation (r Int) <predicate>)`.
//! `bounds`, `consts` and `level` are optional. Primed variables may only
//! appear in `trans`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::cegis::IoExample;
use crate::expr::{Component, Environment, Expr, Op, Ty, Value};
use crate::grammar::LevelName;
use crate::problem::{
    FunctionalSpec, Interval, ProblemError, ProblemKind, SynthesisProblem, Variable, DEFAULT_FUNCTIONAL_BOUNDS,
    DEFAULT_INVARIANT_BOUNDS,
};
use crate::sexpr::{parse_all, Pos, SExpr, SyntaxError};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProblemFileError {
    #[error("parse error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("parse error at {pos}: {message}")]
    Parse { pos: Pos, message: String },
    #[error("type error at {pos}: {message}")]
    Type { pos: Pos, message: String },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

fn parse_err<T>(pos: Pos, message: impl Into<String>) -> Result<T, ProblemFileError> {
    Err(ProblemFileError::Parse {
        pos,
        message: message.into(),
    })
}

const KEYS: [&str; 10] = [
    "name", "vars", "kind", "spec", "pre", "trans", "post", "bounds", "consts", "level",
];

/// Names a formula may bind, each with its sort and environment slot.
struct Scope {
    vars: Vec<(String, Ty, usize)>,
}

impl Scope {
    fn lookup(&self, name: &str) -> Option<&(String, Ty, usize)> {
        self.vars.iter().find(|(n, _, _)| n == name)
    }
}

fn parse_ty(sx: &SExpr) -> Result<Ty, ProblemFileError> {
    match sx.atom() {
        Some("Int") => Ok(Ty::Int),
        Some("Bool") => Ok(Ty::Bool),
        _ => parse_err(sx.pos(), format!("expected a sort (Int or Bool), found `{sx}`")),
    }
}

fn parse_int(sx: &SExpr) -> Result<i64, ProblemFileError> {
    let Some(text) = sx.atom() else {
        return parse_err(sx.pos(), format!("expected an integer, found `{sx}`"));
    };
    text.parse::<i64>()
        .or_else(|_| parse_err(sx.pos(), format!("expected an integer, found `{text}`")))
}

fn parse_value(sx: &SExpr) -> Result<Value, ProblemFileError> {
    match sx.atom() {
        Some("true") => Ok(Value::Bool(true)),
        Some("false") => Ok(Value::Bool(false)),
        _ => parse_int(sx).map(Value::Int),
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "true" | "false" | "and" | "or" | "not" | "div" | "mod" | "relation")
}

fn component(name: &str, args: Vec<Ty>, ret: Ty, op: Op) -> Arc<Component> {
    Arc::new(Component::operator(name, args, ret, op))
}

fn apply(pos: Pos, c: Arc<Component>, args: Vec<Expr>) -> Result<Expr, ProblemFileError> {
    Expr::apply(c, args).map_err(|e| ProblemFileError::Type {
        pos,
        message: e.to_string(),
    })
}

fn literal(v: Value) -> Expr {
    Expr::leaf(Arc::new(Component::constant(v))).expect("nullary")
}

fn parse_expr(sx: &SExpr, scope: &Scope) -> Result<Expr, ProblemFileError> {
    use Ty::{Bool, Int};
    let items = match sx {
        SExpr::Atom(text, pos) => {
            if let Ok(v) = parse_value(sx) {
                return Ok(literal(v));
            }
            return match scope.lookup(text) {
                Some((name, ty, index)) => {
                    Ok(Expr::leaf(Arc::new(Component::variable(name.clone(), *ty, *index))).expect("nullary"))
                }
                None => parse_err(*pos, format!("unknown symbol `{text}`")),
            };
        }
        SExpr::List(items, _) => items,
    };
    let pos = sx.pos();
    let Some((head, rest)) = items.split_first() else {
        return parse_err(pos, "empty application");
    };
    let Some(op) = head.atom() else {
        return parse_err(head.pos(), "operator must be a symbol");
    };
    let args = rest
        .iter()
        .map(|a| parse_expr(a, scope))
        .collect::<Result<Vec<_>, _>>()?;
    let arity_err = |want: &str| parse_err(pos, format!("`{op}` expects {want} arguments, got {}", args.len()));

    // n-ary connectives fold to the left
    let fold = |name: &str, ty: Ty, o: Op, args: Vec<Expr>| -> Result<Expr, ProblemFileError> {
        let mut it = args.into_iter();
        let first = it.next().expect("checked nonempty");
        it.try_fold(first, |acc, e| {
            apply(pos, component(name, vec![ty, ty], ty, o), vec![acc, e])
        })
    };

    match op {
        "and" | "or" | "+" => {
            if args.is_empty() {
                return arity_err("at least 1");
            }
            let (ty, o) = match op {
                "and" => (Bool, Op::And),
                "or" => (Bool, Op::Or),
                _ => (Int, Op::Add),
            };
            fold(op, ty, o, args)
        }
        "not" => match <[Expr; 1]>::try_from(args) {
            Ok(args) => apply(pos, component("not", vec![Bool], Bool, Op::Not), args.into()),
            Err(args) => parse_err(pos, format!("`not` expects 1 argument, got {}", args.len())),
        },
        "-" if args.len() == 1 => {
            if let Some(Value::Int(n)) = rest[0].atom().and(parse_value(&rest[0]).ok()) {
                return n
                    .checked_neg()
                    .map(|m| literal(Value::Int(m)))
                    .map_or_else(|| parse_err(pos, "literal out of range"), Ok);
            }
            apply(
                pos,
                component("-", vec![Int, Int], Int, Op::Sub),
                vec![literal(Value::Int(0)), args[0].clone()],
            )
        }
        _ => {
            let (args_ty, ret, o) = match op {
                "=>" => (Bool, Bool, Op::Implies),
                "=" => (args.first().map_or(Int, Expr::ty), Bool, Op::Eq),
                ">" => (Int, Bool, Op::Gt),
                ">=" => (Int, Bool, Op::Ge),
                "<" => (Int, Bool, Op::Lt),
                "<=" => (Int, Bool, Op::Le),
                "-" => (Int, Int, Op::Sub),
                "*" => (Int, Int, Op::Mul),
                "div" => (Int, Int, Op::Div),
                "mod" => (Int, Int, Op::Mod),
                _ => return parse_err(head.pos(), format!("unknown operator `{op}`")),
            };
            if op == "=" && args.len() > 2 {
                // chained equality: (= a b c) is (and (= a b) (= b c))
                let links = args
                    .windows(2)
                    .map(|w| apply(pos, component("=", vec![args_ty, args_ty], Bool, Op::Eq), w.to_vec()))
                    .collect::<Result<Vec<_>, _>>()?;
                return fold("and", Bool, Op::And, links);
            }
            if args.len() != 2 {
                return arity_err("2");
            }
            apply(pos, component(op, vec![args_ty, args_ty], ret, o), args)
        }
    }
}

/// Parses an expression over the given variables, e.g. a synthesized
/// solution printed by the engine.
pub fn parse_expression(text: &str, vars: &[Variable]) -> Result<Expr, ProblemFileError> {
    let forms = parse_all(text)?;
    let [form] = forms.as_slice() else {
        return parse_err(Pos { line: 1, col: 1 }, "expected exactly one expression");
    };
    parse_expr(form, &plain_scope(vars))
}

fn plain_scope(vars: &[Variable]) -> Scope {
    Scope {
        vars: vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), v.ty, i))
            .collect(),
    }
}

fn primed_scope(vars: &[Variable]) -> Scope {
    let n = vars.len();
    let mut scope = plain_scope(vars);
    scope.vars.extend(
        vars.iter()
            .enumerate()
            .map(|(i, v)| (format!("{}'", v.name), v.ty, n + i)),
    );
    scope
}

fn expect_bool(e: Expr, pos: Pos, what: &str) -> Result<Expr, ProblemFileError> {
    if e.ty() != Ty::Bool {
        return Err(ProblemFileError::Type {
            pos,
            message: format!("{what} must be Bool, found {}", e.ty()),
        });
    }
    Ok(e)
}

fn single_arg<'a>(form: &'a SExpr, key: &str) -> Result<&'a SExpr, ProblemFileError> {
    match form.list() {
        Some([_, arg]) => Ok(arg),
        _ => parse_err(form.pos(), format!("`{key}` takes exactly one argument")),
    }
}

/// Parses a problem file.
pub fn parse_problem(text: &str) -> Result<SynthesisProblem, ProblemFileError> {
    let forms = parse_all(text)?;
    if forms.is_empty() {
        return parse_err(Pos { line: 1, col: 1 }, "empty problem file");
    }
    let mut by_key: BTreeMap<&str, &SExpr> = BTreeMap::new();
    for form in &forms {
        let key = match form.list().and_then(|items| items.first()).and_then(SExpr::atom) {
            Some(k) => k,
            None => return parse_err(form.pos(), "expected a `(key ...)` form"),
        };
        if !KEYS.contains(&key) {
            return parse_err(form.pos(), format!("unknown key `{key}`"));
        }
        if by_key.insert(key, form).is_some() {
            return parse_err(form.pos(), format!("duplicate key `{key}`"));
        }
    }
    let require = |key: &str| -> Result<&SExpr, ProblemFileError> {
        by_key
            .get(key)
            .copied()
            .map_or_else(|| parse_err(forms[0].pos(), format!("missing `{key}`")), Ok)
    };

    let name_form = single_arg(require("name")?, "name")?;
    let Some(name) = name_form.atom() else {
        return parse_err(name_form.pos(), "problem name must be a symbol");
    };

    let mut vars: Vec<Variable> = Vec::new();
    for decl in &require("vars")?.list().expect("keyed form")[1..] {
        match decl.list() {
            Some([n, t]) => {
                let Some(var) = n.atom().filter(|s| is_identifier(s)) else {
                    return parse_err(n.pos(), format!("invalid variable name `{n}`"));
                };
                if vars.iter().any(|v| v.name == var) {
                    return parse_err(n.pos(), format!("duplicate variable `{var}`"));
                }
                vars.push(Variable::new(var, parse_ty(t)?));
            }
            _ => return parse_err(decl.pos(), "expected `(name Sort)`"),
        }
    }

    let kind_form = single_arg(require("kind")?, "kind")?;
    let invariant = match kind_form.atom() {
        Some("invariant") => true,
        Some("functional") => false,
        _ => return parse_err(kind_form.pos(), "kind must be `functional` or `invariant`"),
    };

    let scope = plain_scope(&vars);
    let kind = if invariant {
        if let Some(f) = by_key.get("spec") {
            return parse_err(f.pos(), "`spec` is not allowed for invariant problems");
        }
        let formula = |key: &str, scope: &Scope| -> Result<Expr, ProblemFileError> {
            let arg = single_arg(require(key)?, key)?;
            expect_bool(parse_expr(arg, scope)?, arg.pos(), key)
        };
        ProblemKind::Invariant {
            pre: formula("pre", &scope)?,
            trans: formula("trans", &primed_scope(&vars))?,
            post: formula("post", &scope)?,
        }
    } else {
        for key in ["pre", "trans", "post"] {
            if let Some(f) = by_key.get(key) {
                return parse_err(f.pos(), format!("`{key}` is only allowed for invariant problems"));
            }
        }
        let spec = single_arg(require("spec")?, "spec")?;
        match spec.list() {
            Some([head, decl, pred]) if head.atom() == Some("relation") => {
                let Some([out, ty]) = decl.list() else {
                    return parse_err(decl.pos(), "expected `(output Sort)`");
                };
                let Some(out) = out.atom().filter(|s| is_identifier(s) && scope.lookup(s).is_none()) else {
                    return parse_err(out.pos(), format!("invalid output name `{out}`"));
                };
                let output_ty = parse_ty(ty)?;
                let mut rel_scope = plain_scope(&vars);
                rel_scope.vars.push((out.to_owned(), output_ty, vars.len()));
                let predicate = expect_bool(parse_expr(pred, &rel_scope)?, pred.pos(), "relation")?;
                ProblemKind::Functional(FunctionalSpec::Relation {
                    output: out.to_owned(),
                    output_ty,
                    predicate,
                })
            }
            _ => ProblemKind::Functional(FunctionalSpec::Reference(parse_expr(spec, &scope)?)),
        }
    };

    let default = if invariant {
        DEFAULT_INVARIANT_BOUNDS
    } else {
        DEFAULT_FUNCTIONAL_BOUNDS
    };
    let mut bounds = vec![default; vars.len()];
    if let Some(form) = by_key.get("bounds") {
        let mut seen = Vec::new();
        for entry in &form.list().expect("keyed form")[1..] {
            let Some([v, lo, hi]) = entry.list() else {
                return parse_err(entry.pos(), "expected `(var lo hi)`");
            };
            let name = v.atom().unwrap_or_default();
            let Some(slot) = vars.iter().position(|var| var.name == name && var.ty == Ty::Int) else {
                return parse_err(v.pos(), format!("`{v}` is not an Int variable"));
            };
            if seen.contains(&slot) {
                return parse_err(v.pos(), format!("duplicate bounds for `{name}`"));
            }
            seen.push(slot);
            bounds[slot] = Interval::new(parse_int(lo)?, parse_int(hi)?);
        }
    }

    let consts = match by_key.get("consts") {
        Some(form) => form.list().expect("keyed form")[1..]
            .iter()
            .map(parse_int)
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };

    let level = match by_key.get("level") {
        Some(form) => {
            let arg = single_arg(form, "level")?;
            let text = arg.atom().unwrap_or_default();
            match text.parse::<LevelName>() {
                Ok(l) => l.index(),
                Err(_) => match text.parse::<usize>().ok().and_then(LevelName::from_index) {
                    Some(l) => l.index(),
                    None => return parse_err(arg.pos(), format!("unknown grammar level `{arg}`")),
                },
            }
        }
        None => LevelName::Peano.index(),
    };

    Ok(SynthesisProblem::new(name, vars, kind, bounds, consts, level)?)
}

/// Prints a problem in the file format accepted by [`parse_problem`].
pub fn print_problem(p: &SynthesisProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(name {})", p.name());
    let vars: Vec<String> = p.vars().iter().map(|v| format!("({} {})", v.name, v.ty)).collect();
    let _ = writeln!(out, "(vars {})", vars.join(" "));
    match p.kind() {
        ProblemKind::Functional(spec) => {
            let _ = writeln!(out, "(kind functional)");
            match spec {
                FunctionalSpec::Reference(e) => {
                    let _ = writeln!(out, "(spec {e})");
                }
                FunctionalSpec::Relation {
                    output,
                    output_ty,
                    predicate,
                } => {
                    let _ = writeln!(out, "(spec (relation ({output} {output_ty}) {predicate}))");
                }
            }
        }
        ProblemKind::Invariant { pre, trans, post } => {
            let _ = writeln!(out, "(kind invariant)");
            let _ = writeln!(out, "(pre {pre})");
            let _ = writeln!(out, "(trans {trans})");
            let _ = writeln!(out, "(post {post})");
        }
    }
    let bounds: Vec<String> = p
        .vars()
        .iter()
        .zip(p.bounds())
        .filter(|(v, _)| v.ty == Ty::Int)
        .map(|(v, b)| format!("({} {} {})", v.name, b.lo, b.hi))
        .collect();
    let _ = writeln!(out, "(bounds {})", bounds.join(" "));
    let consts: Vec<String> = p.consts().iter().map(i64::to_string).collect();
    if consts.is_empty() {
        let _ = writeln!(out, "(consts)");
    } else {
        let _ = writeln!(out, "(consts {})", consts.join(" "));
    }
    match p.level_name() {
        Some(l) => {
            let _ = writeln!(out, "(level {l})");
        }
        None => {
            let _ = writeln!(out, "(level {})", p.level());
        }
    }
    out
}

/// Parses an example file: `(examples ((x 1) (y 2) out) ...)` where each
/// entry lists bindings followed by the output value.
pub fn parse_examples(text: &str, problem: &SynthesisProblem) -> Result<Vec<IoExample>, ProblemFileError> {
    let forms = parse_all(text)?;
    let [form] = forms.as_slice() else {
        return parse_err(Pos { line: 1, col: 1 }, "expected a single `(examples ...)` form");
    };
    let items = match form.list() {
        Some([head, rest @ ..]) if head.atom() == Some("examples") => rest,
        _ => return parse_err(form.pos(), "expected `(examples ...)`"),
    };
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let Some([bindings @ .., output]) = item.list() else {
            return parse_err(item.pos(), "expected `((var value) ... output)`");
        };
        let mut input = Environment::new();
        for var in problem.vars() {
            let entry = bindings
                .iter()
                .find(|b| b.list().and_then(|l| l.first()).and_then(SExpr::atom) == Some(&var.name));
            let Some(Some([_, value])) = entry.map(SExpr::list) else {
                return parse_err(item.pos(), format!("missing binding for `{}`", var.name));
            };
            let value = parse_value(value)?;
            if value.ty() != var.ty {
                return Err(ProblemFileError::Type {
                    pos: item.pos(),
                    message: format!("`{}` must be {}", var.name, var.ty),
                });
            }
            input.bind(&var.name, value);
        }
        if bindings.len() != problem.vars().len() {
            return parse_err(item.pos(), "unexpected extra bindings");
        }
        let output = parse_value(output)?;
        out.push(IoExample { input, output });
    }
    Ok(out)
}

/// Prints examples in the format read by [`parse_examples`].
pub fn print_examples(examples: &[IoExample]) -> String {
    let mut out = String::from("(examples");
    for ex in examples {
        out.push_str("\n  (");
        for (name, value) in ex.input.iter() {
            let _ = write!(out, "({name} {value}) ");
        }
        let _ = write!(out, "{})", ex.output);
    }
    out.push_str(")\n");
    out
}
