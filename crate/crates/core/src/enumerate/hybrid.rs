use std::sync::Arc;

use crate::expr::{Component, Expr};
use crate::grammar::GrammarLadder;

use super::{divide, sort_pairs, ExpressionCache, Location, StarOrder, WellOrder};

struct Job {
    op: Arc<Component>,
    locs: Vec<Location>,
}

/// Resumable hybrid enumeration over a grammar ladder.
///
/// Values come first, level by level; then every (level, size) pair in a
/// total order extending the well order. For pair `(j, k)` each operator
/// introduced at some level `l <= j` is applied to cached arguments drawn
/// from the locations produced by [`divide`], so the results are exactly the
/// size-`k` expressions of level `j` that are absent from level `j - 1`.
/// Each expression is cached before it is yielded.
pub struct HybridEnumerator {
    ladder: GrammarLadder,
    max_size: usize,
    cache: ExpressionCache,
    values: Vec<(usize, Arc<Component>)>,
    value_pos: usize,
    ops_by_level: Vec<Vec<Arc<Component>>>,
    pairs: Vec<Location>,
    pair_pos: usize,
    current: Option<Location>,
    jobs: Vec<Job>,
    job_pos: usize,
    odometer: Vec<usize>,
    lens: Vec<usize>,
    in_job: bool,
    visited: u64,
}

impl HybridEnumerator {
    pub fn new(ladder: GrammarLadder, order: &dyn WellOrder, max_size: usize) -> Self {
        let mut values = Vec::new();
        let mut ops_by_level = Vec::with_capacity(ladder.len());
        for i in 1..=ladder.len() {
            let fresh = ladder.new_components(i);
            values.extend(fresh.iter().filter(|c| c.is_value()).map(|c| (i, c.clone())));
            ops_by_level.push(fresh.into_iter().filter(|c| !c.is_value()).collect());
        }
        if max_size == 0 {
            values.clear();
        }
        let pairs = sort_pairs(order, &ladder, max_size);
        let cache = ExpressionCache::new(ladder.len());
        HybridEnumerator {
            ladder,
            max_size,
            cache,
            values,
            value_pos: 0,
            ops_by_level,
            pairs,
            pair_pos: 0,
            current: None,
            jobs: Vec::new(),
            job_pos: 0,
            odometer: Vec::new(),
            lens: Vec::new(),
            in_job: false,
            visited: 0,
        }
    }

    /// Enumerator using the `|C|^k` order.
    pub fn with_star_order(ladder: GrammarLadder, max_size: usize) -> Self {
        HybridEnumerator::new(ladder, &StarOrder, max_size)
    }

    pub fn ladder(&self) -> &GrammarLadder {
        &self.ladder
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn cache(&self) -> &ExpressionCache {
        &self.cache
    }

    pub fn into_cache(self) -> ExpressionCache {
        self.cache
    }

    /// Number of expressions yielded so far.
    pub fn visited(&self) -> u64 {
        self.visited
    }

    /// Drains the enumerator and returns the full cache.
    pub fn exhaust(mut self) -> ExpressionCache {
        while self.next().is_some() {}
        self.cache
    }

    fn load_pair(&mut self, loc: Location) {
        self.jobs.clear();
        self.job_pos = 0;
        let (j, k) = (loc.level, loc.size);
        for l in 1..=j {
            for op in &self.ops_by_level[l - 1] {
                let a = op.arity();
                if a > k - 1 {
                    continue;
                }
                let locations = divide(a, k - 1, l, j, &[]).expect("preconditions hold by construction");
                self.jobs
                    .extend(locations.into_iter().map(|locs| Job { op: op.clone(), locs }));
            }
        }
        self.current = Some(loc);
    }

    /// Prepares the cross product for the current job; false when some
    /// argument cell is empty.
    fn start_job(&mut self) -> bool {
        let job = &self.jobs[self.job_pos];
        self.lens.clear();
        for (loc, ty) in job.locs.iter().zip(job.op.arg_types()) {
            self.lens.push(self.cache.cell(*loc, *ty).len());
        }
        self.odometer.clear();
        self.odometer.resize(self.lens.len(), 0);
        self.lens.iter().all(|&n| n > 0)
    }

    fn build_current(&self) -> Expr {
        let job = &self.jobs[self.job_pos];
        let children = job
            .locs
            .iter()
            .zip(job.op.arg_types())
            .zip(&self.odometer)
            .map(|((loc, ty), &i)| self.cache.cell(*loc, *ty)[i].clone())
            .collect();
        Expr::apply_unchecked(job.op.clone(), children)
    }

    /// Advances the odometer, last argument fastest; false on wrap-around.
    fn advance(&mut self) -> bool {
        for i in (0..self.odometer.len()).rev() {
            self.odometer[i] += 1;
            if self.odometer[i] < self.lens[i] {
                return true;
            }
            self.odometer[i] = 0;
        }
        false
    }

    fn emit(&mut self, loc: Location, expr: Expr) -> Expr {
        self.cache.push(loc, expr.clone());
        self.visited += 1;
        expr
    }
}

impl Iterator for HybridEnumerator {
    type Item = Expr;

    fn next(&mut self) -> Option<Expr> {
        if let Some((level, component)) = self.values.get(self.value_pos).cloned() {
            self.value_pos += 1;
            let expr = Expr::apply_unchecked(component, Vec::new());
            return Some(self.emit(Location::new(level, 1), expr));
        }
        loop {
            let Some(loc) = self.current else {
                let loc = *self.pairs.get(self.pair_pos)?;
                self.pair_pos += 1;
                self.load_pair(loc);
                continue;
            };
            if self.in_job {
                let expr = self.build_current();
                if !self.advance() {
                    self.in_job = false;
                    self.job_pos += 1;
                }
                return Some(self.emit(loc, expr));
            }
            if self.job_pos >= self.jobs.len() {
                self.current = None;
                continue;
            }
            if self.start_job() {
                self.in_job = true;
            } else {
                self.job_pos += 1;
            }
        }
    }
}

/// First expression accepted by `check`, enumerating the ladder up to
/// `max_size` in hybrid order.
pub fn henum(
    mut check: impl FnMut(&Expr) -> bool,
    ladder: &GrammarLadder,
    order: &dyn WellOrder,
    max_size: usize,
) -> Option<Expr> {
    HybridEnumerator::new(ladder.clone(), order, max_size).find(|e| check(e))
}
