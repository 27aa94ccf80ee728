//! Size-bounded enumeration over grammar ladders.
//!
//! [`HybridEnumerator`] walks every expression of a ladder's top grammar up
//! to a size bound, interleaving the levels so that simpler (grammar, size)
//! pairs come first, enumerating each expression once and building larger
//! expressions from cached smaller ones.

mod cache;
mod hybrid;
pub mod naive;

use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::grammar::GrammarLadder;

pub use cache::ExpressionCache;
pub use hybrid::{henum, HybridEnumerator};
pub use naive::naive_unique_set;

/// Default maximum expression size.
pub const DEFAULT_MAX_SIZE: usize = 7;

/// A cache cell address: grammar level and expression size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub level: usize,
    pub size: usize,
}

impl Location {
    pub fn new(level: usize, size: usize) -> Self {
        Location { level, size }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.level, self.size)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("divide precondition violated: {0}")]
    PreconditionViolated(String),
}

/// A strict partial order on (level, size) pairs. Implementations must
/// place `(a, k1)` before `(b, k2)` whenever level `a`'s components are a
/// subset of level `b`'s and `k1 < k2`.
pub trait WellOrder {
    fn precedes(&self, ladder: &GrammarLadder, a: Location, b: Location) -> bool;
}

/// Orders pairs by `|C|^k`, the number of component sequences of length
/// `k`, compared exactly. Equal powers are incomparable.
#[derive(Clone, Copy, Debug, Default)]
pub struct StarOrder;

impl WellOrder for StarOrder {
    fn precedes(&self, ladder: &GrammarLadder, a: Location, b: Location) -> bool {
        star_order_less(a, b, ladder)
    }
}

fn proxy(ladder: &GrammarLadder, loc: Location) -> BigUint {
    let k = u32::try_from(loc.size).expect("sizes fit in u32");
    ladder.level(loc.level).expressiveness_proxy(k)
}

pub fn star_order_less(a: Location, b: Location, ladder: &GrammarLadder) -> bool {
    proxy(ladder, a) < proxy(ladder, b)
}

/// All pairs `{1..p} × {2..q}` in a total order extending `order`. Among
/// pairs that are mutually unordered, smaller size goes first, then lower
/// level.
pub fn sort_pairs(order: &dyn WellOrder, ladder: &GrammarLadder, q: usize) -> Vec<Location> {
    let mut pending: Vec<Location> = (2..=q)
        .flat_map(|size| (1..=ladder.len()).map(move |level| Location::new(level, size)))
        .collect();
    let mut sorted = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        // pending is kept in (size, level) order, so the first minimal
        // element is the tie-break winner
        let pos = (0..pending.len())
            .find(|&i| !pending.iter().any(|&other| order.precedes(ladder, other, pending[i])))
            .expect("a strict partial order has a minimal element");
        sorted.push(pending.remove(pos));
    }
    sorted
}

/// Argument locations for an operator of arity `a` whose arguments have
/// total size `q`, such that applying an operator introduced at level `l`
/// yields an expression that first appears at level `j`.
///
/// Each result lists one location per argument, followed by `acc`.
pub fn divide(a: usize, q: usize, l: usize, j: usize, acc: &[Location]) -> Result<Vec<Vec<Location>>, EnumError> {
    if a < 1 || a > q {
        return Err(EnumError::PreconditionViolated(format!(
            "need 1 <= a <= q, got a={a}, q={q}"
        )));
    }
    if l < 1 || l > j {
        return Err(EnumError::PreconditionViolated(format!(
            "need 1 <= l <= j, got l={l}, j={j}"
        )));
    }
    if let Some(bad) = acc.iter().find(|loc| loc.level < 1 || loc.level > j || loc.size < 1) {
        return Err(EnumError::PreconditionViolated(format!(
            "accumulated location {bad} invalid for level {j}"
        )));
    }
    let mut out = Vec::new();
    let mut acc = acc.to_vec();
    divide_into(a, q, l, j, &mut acc, &mut out);
    Ok(out)
}

/// `acc` holds the already chosen locations for arguments `a+1..`, first
/// argument first.
fn divide_into(a: usize, q: usize, l: usize, j: usize, acc: &mut Vec<Location>, out: &mut Vec<Vec<Location>>) {
    if a == 1 {
        let unrestricted = l == j || acc.iter().any(|loc| loc.level == j);
        let levels = if unrestricted { 1..=j } else { j..=j };
        for level in levels {
            let mut locs = Vec::with_capacity(acc.len() + 1);
            locs.push(Location::new(level, q));
            locs.extend_from_slice(acc);
            out.push(locs);
        }
        return;
    }
    for u in 1..=j {
        for v in 1..=(q - a + 1) {
            acc.insert(0, Location::new(u, v));
            divide_into(a - 1, q - v, l, j, acc, out);
            acc.remove(0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Component, Value};
    use crate::grammar::standard_ladder;
    use std::collections::HashSet;
    use std::sync::Arc;

    /// Ladder whose level sizes are exactly the given counts.
    fn ladder_with_sizes(sizes: &[usize]) -> GrammarLadder {
        let all: Vec<Arc<Component>> = (0..*sizes.last().unwrap())
            .map(|i| Arc::new(Component::constant(Value::Int(i as i64))))
            .collect();
        GrammarLadder::new(sizes.iter().map(|&n| all[..n].to_vec()).collect()).unwrap()
    }

    fn set(v: Vec<Vec<Location>>) -> HashSet<Vec<Location>> {
        v.into_iter().collect()
    }

    #[test]
    fn star_order_exact_comparisons() {
        let l = ladder_with_sizes(&[2, 3, 4]);
        // 2^3 = 8 < 9 = 3^2
        assert!(star_order_less(Location::new(1, 3), Location::new(2, 2), &l));
        assert!(!star_order_less(Location::new(2, 2), Location::new(1, 3), &l));
        // 4^2 = 16 = 2^4: incomparable
        assert!(!star_order_less(Location::new(3, 2), Location::new(1, 4), &l));
        assert!(!star_order_less(Location::new(1, 4), Location::new(3, 2), &l));
        assert!(star_order_less(Location::new(2, 2), Location::new(2, 3), &l));
    }

    #[test]
    fn sort_single_chain() {
        let l = ladder_with_sizes(&[3]);
        let sorted = sort_pairs(&StarOrder, &l, 5);
        assert_eq!(sorted, (2..=5).map(|k| Location::new(1, k)).collect::<Vec<_>>());
    }

    #[test]
    fn sort_two_levels_by_power() {
        let l = ladder_with_sizes(&[5, 7]);
        let sorted = sort_pairs(&StarOrder, &l, 3);
        // 25, 49, 125, 343
        assert_eq!(
            sorted,
            [
                Location::new(1, 2),
                Location::new(2, 2),
                Location::new(1, 3),
                Location::new(2, 3)
            ]
        );
    }

    #[test]
    fn sort_standard_prefix_keeps_chains() {
        let l = standard_ladder(&["x"], &[]).unwrap().prefix(2);
        let sorted = sort_pairs(&StarOrder, &l, 3);
        assert_eq!(sorted.len(), 4);
        assert_eq!(sorted.iter().collect::<HashSet<_>>().len(), 4);
        let pos = |loc: Location| sorted.iter().position(|&s| s == loc).unwrap();
        assert!(pos(Location::new(1, 2)) < pos(Location::new(1, 3)));
        assert!(pos(Location::new(2, 2)) < pos(Location::new(2, 3)));
    }

    #[test]
    fn sort_ties_go_by_size_then_level() {
        // 4^2 = 2^4 tie between (2,2) and (1,4)
        let l = ladder_with_sizes(&[2, 4]);
        let sorted = sort_pairs(&StarOrder, &l, 4);
        let expected = [(1, 2), (1, 3), (2, 2), (1, 4), (2, 3), (2, 4)].map(|(a, b)| Location::new(a, b));
        assert_eq!(sorted, expected);
    }

    #[test]
    fn divide_examples() {
        assert_eq!(
            set(divide(1, 3, 2, 2, &[]).unwrap()),
            set(vec![vec![Location::new(1, 3)], vec![Location::new(2, 3)]])
        );
        assert_eq!(divide(1, 3, 1, 2, &[]).unwrap(), vec![vec![Location::new(2, 3)]]);
        assert_eq!(
            divide(2, 2, 1, 1, &[]).unwrap(),
            vec![vec![Location::new(1, 1), Location::new(1, 1)]]
        );
    }

    #[test]
    fn divide_pins_first_argument_only_when_needed() {
        let acc = [Location::new(2, 1)];
        let out = set(divide(1, 2, 1, 2, &acc).unwrap());
        assert_eq!(
            out,
            set(vec![
                vec![Location::new(1, 2), Location::new(2, 1)],
                vec![Location::new(2, 2), Location::new(2, 1)],
            ])
        );
    }

    #[test]
    fn divide_preconditions() {
        assert!(divide(0, 3, 1, 1, &[]).is_err());
        assert!(divide(3, 2, 1, 1, &[]).is_err());
        assert!(divide(1, 2, 3, 2, &[]).is_err());
        assert!(divide(1, 2, 1, 2, &[Location::new(3, 1)]).is_err());
    }

    #[test]
    fn divide_outputs_are_distinct_and_sum_to_budget() {
        for a in 1..=3 {
            for q in a..=6 {
                for j in 1..=3 {
                    for l in 1..=j {
                        let out = divide(a, q, l, j, &[]).unwrap();
                        let n = out.len();
                        assert_eq!(set(out.clone()).len(), n);
                        for locs in out {
                            assert_eq!(locs.len(), a);
                            assert_eq!(locs.iter().map(|l| l.size).sum::<usize>(), q);
                            assert!(locs.iter().all(|loc| loc.level <= j));
                            assert!(l == j || locs.iter().any(|loc| loc.level == j));
                        }
                    }
                }
            }
        }
    }
}
