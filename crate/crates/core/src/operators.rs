//! Alignment modification operators.
//!
//! Every operator maps an alignment to a new alignment over the same source
//! texts; no operator ever reorders or drops a row's tokens. Column indices
//! here are 0-based.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Alignment, Cell, ConstraintSet, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EditOp {
    /// Moves the cells of column `col` in `rows` by `distance`, pushing any
    /// non-empty cells in the way.
    Shift {
        col: usize,
        rows: Vec<usize>,
        direction: Direction,
        distance: usize,
    },
    /// Inserts an empty column so that `position` columns lie to its left.
    ColumnInsert { position: usize },
    ColumnDelete { col: usize },
    /// Concatenates column `col` with column `col + 1`, row by row.
    ColumnMerge { col: usize },
    /// Moves a cell's tokens into its neighbor in `direction`.
    CellMerge { row: usize, col: usize, direction: Direction },
    SingleTokenSplit { col: usize, side: Direction },
    TrieSplit { col: usize, side: Direction },
    NoOp,
}

impl EditOp {
    pub fn shift(col: usize, rows: impl IntoIterator<Item = usize>, direction: Direction, distance: usize) -> Self {
        let mut rows: Vec<usize> = rows.into_iter().collect();
        rows.sort_unstable();
        rows.dedup();
        EditOp::Shift {
            col,
            rows,
            direction,
            distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OpError {
    #[error("column {col} is out of range for {cols} columns")]
    BadColumn { col: usize, cols: usize },
    #[error("row {row} is out of range for {rows} rows")]
    BadRow { row: usize, rows: usize },
    #[error("insert position {position} is out of range for {cols} columns")]
    BadPosition { position: usize, cols: usize },
    #[error("cell in row {row}, column {col} is empty")]
    InvalidShift { row: usize, col: usize },
    #[error("shift names no rows or has zero distance")]
    EmptyShift,
    #[error("column {col} contains text")]
    NonEmptyColumn { col: usize },
    #[error("cannot delete the only column")]
    LastColumn,
    #[error("column {col} is the rightmost column")]
    RightmostColumn { col: usize },
    #[error("cell in row {row}, column {col} has no neighbor on that side")]
    NoNeighbor { row: usize, col: usize },
    #[error("cell in row {row}, column {col} is empty")]
    EmptyCell { row: usize, col: usize },
    #[error("column {col} has no text with more than one token")]
    NoMultiTokenText { col: usize },
    #[error("column {col} has no text")]
    EmptyColumn { col: usize },
    #[error("operation conflicts with locked column {col}")]
    LockConflict { col: usize },
}

impl OpError {
    /// Stable machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            OpError::BadColumn { .. } => "BadColumn",
            OpError::BadRow { .. } => "BadRow",
            OpError::BadPosition { .. } => "BadPosition",
            OpError::InvalidShift { .. } => "InvalidShift",
            OpError::EmptyShift => "EmptyShift",
            OpError::NonEmptyColumn { .. } => "NonEmptyColumn",
            OpError::LastColumn => "LastColumn",
            OpError::RightmostColumn { .. } => "RightmostColumn",
            OpError::NoNeighbor { .. } => "NoNeighbor",
            OpError::EmptyCell { .. } => "EmptyCell",
            OpError::NoMultiTokenText { .. } => "NoMultiTokenText",
            OpError::EmptyColumn { .. } => "EmptyColumn",
            OpError::LockConflict { .. } => "LockConflict",
        }
    }
}

/// How column indices of the input map onto the output of an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRemap {
    Identity,
    /// Every column moves by `offset`; columns mapped below zero are gone.
    Offset(isize),
    Insert(usize),
    Delete(usize),
    Merge(usize),
    Split(usize),
}

impl ColumnRemap {
    /// New indices of old column `col` (empty when it no longer exists).
    pub fn map(self, col: usize) -> Vec<usize> {
        match self {
            ColumnRemap::Identity => vec![col],
            ColumnRemap::Offset(offset) => {
                let new = col as isize + offset;
                if new >= 0 {
                    vec![new as usize]
                } else {
                    vec![]
                }
            }
            ColumnRemap::Insert(p) => vec![if col >= p { col + 1 } else { col }],
            ColumnRemap::Delete(c) => match col.cmp(&c) {
                core::cmp::Ordering::Less => vec![col],
                core::cmp::Ordering::Equal => vec![],
                core::cmp::Ordering::Greater => vec![col - 1],
            },
            ColumnRemap::Merge(c) => vec![if col > c { col - 1 } else { col }],
            ColumnRemap::Split(c) => match col.cmp(&c) {
                core::cmp::Ordering::Less => vec![col],
                core::cmp::Ordering::Equal => vec![c, c + 1],
                core::cmp::Ordering::Greater => vec![col + 1],
            },
        }
    }

    /// Carries locks over to the output, dropping any beyond `new_cols`.
    pub fn map_constraints(self, locks: &ConstraintSet, new_cols: usize) -> ConstraintSet {
        locks.iter().flat_map(|c| self.map(c)).filter(|&c| c < new_cols).collect()
    }

    /// Composition: `self` then `next`.
    pub fn then_offset(self, next: isize) -> Option<ColumnRemap> {
        match self {
            ColumnRemap::Identity => Some(ColumnRemap::Offset(next)),
            ColumnRemap::Offset(o) => Some(ColumnRemap::Offset(o + next)),
            _ => None,
        }
    }
}

/// Applies `op`, ignoring column locks.
pub fn apply(a: &Alignment, op: &EditOp) -> Result<Alignment, OpError> {
    apply_tracked(a, op).map(|(out, _)| out)
}

/// Applies `op` and reports how column indices moved.
pub fn apply_tracked(a: &Alignment, op: &EditOp) -> Result<(Alignment, ColumnRemap), OpError> {
    match op {
        EditOp::Shift {
            col,
            rows,
            direction,
            distance,
        } => shift(a, *col, rows, *direction, *distance).map(|(out, prepended)| (out, ColumnRemap::Offset(prepended as isize))),
        EditOp::ColumnInsert { position } => column_insert(a, *position).map(|o| (o, ColumnRemap::Insert(*position))),
        EditOp::ColumnDelete { col } => column_delete(a, *col).map(|o| (o, ColumnRemap::Delete(*col))),
        EditOp::ColumnMerge { col } => column_merge(a, *col).map(|o| (o, ColumnRemap::Merge(*col))),
        EditOp::CellMerge { row, col, direction } => cell_merge(a, *row, *col, *direction).map(|o| (o, ColumnRemap::Identity)),
        EditOp::SingleTokenSplit { col, side } => single_token_split(a, *col, *side).map(|o| (o, ColumnRemap::Split(*col))),
        EditOp::TrieSplit { col, side } => trie_split(a, *col, *side).map(|o| (o, ColumnRemap::Split(*col))),
        EditOp::NoOp => Ok((a.clone(), ColumnRemap::Identity)),
    }
}

fn check_col(a: &Alignment, col: usize) -> Result<(), OpError> {
    if col < a.cols() {
        Ok(())
    } else {
        Err(OpError::BadColumn { col, cols: a.cols() })
    }
}

fn check_row(a: &Alignment, row: usize) -> Result<(), OpError> {
    if row < a.rows() {
        Ok(())
    } else {
        Err(OpError::BadRow { row, rows: a.rows() })
    }
}

/// New positions of a row's non-empty cells after moving cell `moved` by
/// `distance`, pushing neighbors so that order is kept and no two cells
/// share a column. Positions may leave the grid on either side.
pub(crate) fn push_row(positions: &[isize], moved: usize, direction: Direction, distance: usize) -> Vec<isize> {
    let mut out = positions.to_vec();
    let d = distance as isize;
    match direction {
        Direction::Right => {
            out[moved] += d;
            for i in moved + 1..out.len() {
                out[i] = out[i].max(out[i - 1] + 1);
            }
        }
        Direction::Left => {
            out[moved] -= d;
            for i in (0..moved).rev() {
                out[i] = out[i].min(out[i + 1] - 1);
            }
        }
    }
    out
}

/// Checks a shift's moved cells against the locks: no cell may leave,
/// enter, or cross a locked column.
pub(crate) fn shift_crosses_lock(before: &[isize], after: &[isize], locks: &ConstraintSet) -> Option<usize> {
    for (&p, &q) in before.iter().zip(after) {
        if p == q {
            continue;
        }
        let (lo, hi) = (p.min(q), p.max(q));
        if let Some(col) = locks.iter().find(|&l| (lo..=hi).contains(&(l as isize))) {
            return Some(col);
        }
    }
    None
}

fn row_positions(a: &Alignment, row: usize) -> Vec<isize> {
    a.row(row)
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_empty())
        .map(|(i, _)| i as isize)
        .collect()
}

struct ShiftPlan {
    /// Per moved row: (row, positions before, positions after).
    moved: Vec<(usize, Vec<isize>, Vec<isize>)>,
    prepend: usize,
    width: usize,
}

fn plan_shift(a: &Alignment, col: usize, rows: &[usize], direction: Direction, distance: usize) -> Result<ShiftPlan, OpError> {
    check_col(a, col)?;
    if rows.is_empty() || distance == 0 {
        return Err(OpError::EmptyShift);
    }
    let mut moved = Vec::with_capacity(rows.len());
    for &row in rows {
        check_row(a, row)?;
        if a.cell(row, col).is_empty() {
            return Err(OpError::InvalidShift { row, col });
        }
        let before = row_positions(a, row);
        let idx = before.iter().position(|&p| p == col as isize).expect("non-empty cell has a position");
        let after = push_row(&before, idx, direction, distance);
        moved.push((row, before, after));
    }
    let min_pos = moved.iter().flat_map(|(_, _, after)| after.iter().copied()).min().unwrap_or(0);
    let max_pos = moved.iter().flat_map(|(_, _, after)| after.iter().copied()).max().unwrap_or(0);
    let prepend = (-min_pos).max(0) as usize;
    let width = (a.cols() as isize).max(max_pos + 1) as usize + prepend;
    Ok(ShiftPlan { moved, prepend, width })
}

/// Returns the shifted alignment and the number of columns prepended.
pub fn shift(a: &Alignment, col: usize, rows: &[usize], direction: Direction, distance: usize) -> Result<(Alignment, usize), OpError> {
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let plan = plan_shift(a, col, &sorted, direction, distance)?;
    let mut grid: Vec<Vec<Cell>> = Vec::with_capacity(a.rows());
    let mut moved = plan.moved.iter().peekable();
    for (r, cells) in a.grid().iter().enumerate() {
        let mut row = vec![Cell::empty(); plan.width];
        match moved.peek() {
            Some((mr, _, after)) if *mr == r => {
                let filled = cells.iter().filter(|c| !c.is_empty());
                for (cell, &pos) in filled.zip(after) {
                    row[(pos + plan.prepend as isize) as usize] = cell.clone();
                }
                moved.next();
            }
            _ => {
                for (i, cell) in cells.iter().enumerate() {
                    row[i + plan.prepend] = cell.clone();
                }
            }
        }
        grid.push(row);
    }
    Ok((Alignment::from_parts(a.source_texts().to_vec(), grid), plan.prepend))
}

pub fn column_insert(a: &Alignment, position: usize) -> Result<Alignment, OpError> {
    if position > a.cols() {
        return Err(OpError::BadPosition { position, cols: a.cols() });
    }
    let grid = a
        .grid()
        .iter()
        .map(|row| {
            let mut row = row.clone();
            row.insert(position, Cell::empty());
            row
        })
        .collect();
    Ok(Alignment::from_parts(a.source_texts().to_vec(), grid))
}

pub fn column_delete(a: &Alignment, col: usize) -> Result<Alignment, OpError> {
    check_col(a, col)?;
    if !a.is_column_empty(col) {
        return Err(OpError::NonEmptyColumn { col });
    }
    if a.cols() == 1 {
        return Err(OpError::LastColumn);
    }
    let grid = a
        .grid()
        .iter()
        .map(|row| {
            let mut row = row.clone();
            row.remove(col);
            row
        })
        .collect();
    Ok(Alignment::from_parts(a.source_texts().to_vec(), grid))
}

fn concat(left: &Cell, right: &Cell) -> Cell {
    let mut tokens = left.tokens().to_vec();
    tokens.extend_from_slice(right.tokens());
    Cell::new(tokens)
}

pub fn column_merge(a: &Alignment, col: usize) -> Result<Alignment, OpError> {
    check_col(a, col)?;
    if col + 1 >= a.cols() {
        return Err(OpError::RightmostColumn { col });
    }
    let grid = a
        .grid()
        .iter()
        .map(|row| {
            let mut out = Vec::with_capacity(row.len() - 1);
            out.extend_from_slice(&row[..col]);
            out.push(concat(&row[col], &row[col + 1]));
            out.extend_from_slice(&row[col + 2..]);
            out
        })
        .collect();
    Ok(Alignment::from_parts(a.source_texts().to_vec(), grid))
}

fn neighbor(a: &Alignment, row: usize, col: usize, direction: Direction) -> Result<usize, OpError> {
    match direction {
        Direction::Left if col > 0 => Ok(col - 1),
        Direction::Right if col + 1 < a.cols() => Ok(col + 1),
        _ => Err(OpError::NoNeighbor { row, col }),
    }
}

/// Merging into an empty neighbor is the same as a shift by one.
pub fn cell_merge(a: &Alignment, row: usize, col: usize, direction: Direction) -> Result<Alignment, OpError> {
    check_row(a, row)?;
    check_col(a, col)?;
    if a.cell(row, col).is_empty() {
        return Err(OpError::EmptyCell { row, col });
    }
    let target = neighbor(a, row, col, direction)?;
    let mut grid = a.grid().to_vec();
    let (left, right) = if target < col { (target, col) } else { (col, target) };
    grid[row][target] = concat(&a.grid()[row][left], &a.grid()[row][right]);
    grid[row][col] = Cell::empty();
    Ok(Alignment::from_parts(a.source_texts().to_vec(), grid))
}

fn has_multi_token(a: &Alignment, col: usize) -> bool {
    a.column(col).any(|c| c.len() >= 2)
}

/// Replaces column `col` by two columns, using `near_len(row, cell)` to
/// pick how many tokens go to the column on `side`.
fn split_column(a: &Alignment, col: usize, side: Direction, near_len: impl Fn(usize, &Cell) -> usize) -> Alignment {
    let grid = a
        .grid()
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let cell = &row[col];
            let tokens = cell.tokens();
            let k = if cell.is_empty() { 0 } else { near_len(r, cell).min(tokens.len()) };
            let (left, right) = match side {
                Direction::Left => (&tokens[..k], &tokens[k..]),
                Direction::Right => (&tokens[..tokens.len() - k], &tokens[tokens.len() - k..]),
            };
            let mut out = Vec::with_capacity(row.len() + 1);
            out.extend_from_slice(&row[..col]);
            out.push(Cell::new(left.to_vec()));
            out.push(Cell::new(right.to_vec()));
            out.extend_from_slice(&row[col + 1..]);
            out
        })
        .collect();
    Alignment::from_parts(a.source_texts().to_vec(), grid)
}

/// Splits off each cell's leftmost (or rightmost) token into its own column.
pub fn single_token_split(a: &Alignment, col: usize, side: Direction) -> Result<Alignment, OpError> {
    check_col(a, col)?;
    if !has_multi_token(a, col) {
        return Err(OpError::NoMultiTokenText { col });
    }
    Ok(split_column(a, col, side, |_, _| 1))
}

/// Splits a column at the first level of its phrase trie.
pub fn trie_split(a: &Alignment, col: usize, side: Direction) -> Result<Alignment, OpError> {
    check_col(a, col)?;
    if !has_multi_token(a, col) {
        return Err(OpError::NoMultiTokenText { col });
    }
    let cells: Vec<(usize, &[Token])> = a
        .column(col)
        .enumerate()
        .filter(|(_, c)| !c.is_empty())
        .map(|(r, c)| (r, c.tokens()))
        .collect();
    let trie = PhraseTrie::build(&cells, side).map_err(|_| OpError::EmptyColumn { col })?;
    Ok(split_column(a, col, side, |r, _| trie.first_level_phrase(r).map_or(0, <[Token]>::len)))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrieNode {
    /// Rows whose text ends at this node.
    pub rows: Vec<usize>,
    pub children: Vec<TrieEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrieEdge {
    /// The phrase on this edge, in reading order.
    pub label: Vec<Token>,
    pub child: TrieNode,
}

impl TrieNode {
    fn all_rows(&self, out: &mut Vec<usize>) {
        out.extend_from_slice(&self.rows);
        for e in &self.children {
            e.child.all_rows(out);
        }
    }
}

/// A word trie over a column's phrases with non-branching chains merged
/// into multi-token edges. Only nodes where a phrase ends may keep a single
/// child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseTrie {
    pub side: Direction,
    pub root: TrieNode,
}

impl PhraseTrie {
    /// Builds from `(row, tokens)` pairs; keys are read from the left for
    /// `Direction::Left` and from the right for `Direction::Right`.
    pub fn build(cells: &[(usize, &[Token])], side: Direction) -> Result<Self, OpError> {
        let cells: Vec<&(usize, &[Token])> = cells.iter().filter(|(_, t)| !t.is_empty()).collect();
        if cells.is_empty() {
            return Err(OpError::EmptyColumn { col: 0 });
        }
        let mut root = TrieNode::default();
        for (row, tokens) in cells {
            let mut node = &mut root;
            let keys: Vec<&Token> = match side {
                Direction::Left => tokens.iter().collect(),
                Direction::Right => tokens.iter().rev().collect(),
            };
            for key in keys {
                let idx = match node.children.iter().position(|e| &e.label[0] == key) {
                    Some(i) => i,
                    None => {
                        node.children.push(TrieEdge {
                            label: vec![key.clone()],
                            child: TrieNode::default(),
                        });
                        node.children.len() - 1
                    }
                };
                node = &mut node.children[idx].child;
            }
            node.rows.push(*row);
        }
        compress(&mut root);
        if side == Direction::Right {
            unreverse(&mut root);
        }
        Ok(Self { side, root })
    }

    /// Labels of the root's edges.
    pub fn first_level(&self) -> Vec<&[Token]> {
        self.root.children.iter().map(|e| e.label.as_slice()).collect()
    }

    /// The first-level phrase on the path to `row`.
    pub fn first_level_phrase(&self, row: usize) -> Option<&[Token]> {
        self.root
            .children
            .iter()
            .find(|e| {
                let mut rows = Vec::new();
                e.child.all_rows(&mut rows);
                rows.contains(&row)
            })
            .map(|e| e.label.as_slice())
    }
}

fn compress(node: &mut TrieNode) {
    for edge in &mut node.children {
        while edge.child.rows.is_empty() && edge.child.children.len() == 1 {
            let next = edge.child.children.pop().expect("one child");
            edge.label.extend(next.label);
            edge.child = next.child;
        }
        compress(&mut edge.child);
    }
}

fn unreverse(node: &mut TrieNode) {
    for edge in &mut node.children {
        edge.label.reverse();
        unreverse(&mut edge.child);
    }
}

/// Checks the operator's own preconditions, then the column locks.
///
/// A lock forbids changing any cell of that column, moving a cell across
/// it, and changing which columns sit directly beside it.
pub fn is_valid(a: &Alignment, op: &EditOp, locks: &ConstraintSet) -> Result<(), OpError> {
    let conflict = |cols: &[usize]| match cols.iter().find(|&&c| locks.is_locked(c)) {
        Some(&col) => Err(OpError::LockConflict { col }),
        None => Ok(()),
    };
    match op {
        EditOp::NoOp => Ok(()),
        EditOp::Shift {
            col,
            rows,
            direction,
            distance,
        } => {
            let plan = plan_shift(a, *col, rows, *direction, *distance)?;
            for (_, before, after) in &plan.moved {
                if let Some(col) = shift_crosses_lock(before, after, locks) {
                    return Err(OpError::LockConflict { col });
                }
            }
            Ok(())
        }
        EditOp::ColumnInsert { position } => {
            column_insert(a, *position)?;
            conflict(&[position.wrapping_sub(1), *position])
        }
        EditOp::ColumnDelete { col } => {
            column_delete(a, *col)?;
            conflict(&[col.wrapping_sub(1), *col, col + 1])
        }
        EditOp::ColumnMerge { col } => {
            column_merge(a, *col)?;
            conflict(&[*col, col + 1])
        }
        EditOp::CellMerge { row, col, direction } => {
            check_row(a, *row)?;
            check_col(a, *col)?;
            if a.cell(*row, *col).is_empty() {
                return Err(OpError::EmptyCell { row: *row, col: *col });
            }
            let target = neighbor(a, *row, *col, *direction)?;
            conflict(&[*col, target])
        }
        EditOp::SingleTokenSplit { col, .. } | EditOp::TrieSplit { col, .. } => {
            check_col(a, *col)?;
            if !has_multi_token(a, *col) {
                return Err(OpError::NoMultiTokenText { col: *col });
            }
            conflict(&[*col])
        }
    }
}
