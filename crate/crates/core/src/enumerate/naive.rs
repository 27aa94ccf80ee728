//! Brute-force enumeration of a single component-based grammar, used as a
//! reference for the hybrid enumerator.

use std::collections::HashSet;
use std::sync::Arc;

use crate::expr::{Component, Expr};
use crate::grammar::GrammarLadder;

/// Every expression over `components` with size `1..=max_size`, grouped by
/// size: `result[k - 1]` holds the size-`k` expressions.
pub fn enumerate_by_size(components: &[Arc<Component>], max_size: usize) -> Vec<Vec<Expr>> {
    let mut by_size: Vec<Vec<Expr>> = Vec::with_capacity(max_size);
    for size in 1..=max_size {
        let mut out = Vec::new();
        for c in components {
            if c.is_value() {
                if size == 1 {
                    out.push(Expr::leaf(c.clone()).expect("nullary"));
                }
                continue;
            }
            if size <= c.arity() {
                continue;
            }
            for parts in compositions(size - 1, c.arity()) {
                let mut partial: Vec<Vec<Expr>> = vec![Vec::new()];
                for (slot, part) in parts.iter().enumerate() {
                    let want = c.arg_types()[slot];
                    let candidates: Vec<&Expr> = by_size[part - 1].iter().filter(|e| e.ty() == want).collect();
                    partial = partial
                        .into_iter()
                        .flat_map(|prefix| {
                            candidates.iter().map(move |e| {
                                let mut next = prefix.clone();
                                next.push((*e).clone());
                                next
                            })
                        })
                        .collect();
                }
                out.extend(
                    partial
                        .into_iter()
                        .map(|args| Expr::apply(c.clone(), args).expect("typed by construction")),
                );
            }
        }
        by_size.push(out);
    }
    by_size
}

/// Ordered ways to write `n` as a sum of `parts` positive integers.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(parts - 1) {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All expressions of a grammar with size at most `max_size`.
pub fn naive_up_to(components: &[Arc<Component>], max_size: usize) -> HashSet<Expr> {
    enumerate_by_size(components, max_size).into_iter().flatten().collect()
}

/// Size-`k` expressions of level `j` that are not expressions of level
/// `j - 1`, by enumerating both grammars.
pub fn naive_unique_set(ladder: &GrammarLadder, j: usize, k: usize) -> HashSet<Expr> {
    let current: HashSet<Expr> = enumerate_by_size(ladder.level(j).components(), k)
        .pop()
        .unwrap_or_default()
        .into_iter()
        .collect();
    if j == 1 {
        return current;
    }
    let below: HashSet<Expr> = enumerate_by_size(ladder.level(j - 1).components(), k)
        .pop()
        .unwrap_or_default()
        .into_iter()
        .collect();
    current.difference(&below).cloned().collect()
}
