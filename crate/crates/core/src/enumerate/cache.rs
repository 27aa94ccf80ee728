use crate::expr::{Expr, Ty};

use super::Location;

/// Expressions grouped by the level that introduces them, their size and
/// their type. Cells preserve insertion order.
#[derive(Clone, Debug, Default)]
pub struct ExpressionCache {
    // [level - 1][size - 1][type slot]
    cells: Vec<Vec<[Vec<Expr>; 2]>>,
}

impl ExpressionCache {
    pub fn new(levels: usize) -> Self {
        ExpressionCache {
            cells: vec![Vec::new(); levels],
        }
    }

    pub fn cell(&self, loc: Location, ty: Ty) -> &[Expr] {
        self.cells
            .get(loc.level - 1)
            .and_then(|sizes| sizes.get(loc.size - 1))
            .map_or(&[], |slots| &slots[ty.slot()])
    }

    pub(crate) fn push(&mut self, loc: Location, expr: Expr) {
        let sizes = &mut self.cells[loc.level - 1];
        if sizes.len() < loc.size {
            sizes.resize_with(loc.size, Default::default);
        }
        sizes[loc.size - 1][expr.ty().slot()].push(expr);
    }

    /// Both types of one (level, size) cell.
    pub fn cell_all(&self, loc: Location) -> impl Iterator<Item = &Expr> {
        self.cell(loc, Ty::Int).iter().chain(self.cell(loc, Ty::Bool))
    }

    pub fn levels(&self) -> usize {
        self.cells.len()
    }

    /// Largest size with a populated row for any level.
    pub fn max_size(&self) -> usize {
        self.cells.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.iter().next().is_none()
    }

    /// Every cached expression with its location.
    pub fn iter(&self) -> impl Iterator<Item = (Location, &Expr)> {
        self.cells.iter().enumerate().flat_map(|(li, sizes)| {
            sizes
                .iter()
                .enumerate()
                .flat_map(move |(si, slots)| slots.iter().flatten().map(move |e| (Location::new(li + 1, si + 1), e)))
        })
    }
}
