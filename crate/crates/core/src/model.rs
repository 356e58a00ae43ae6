//! Alignment grid, tokens and column locks.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("text {index} contains no tokens")]
    EmptyText { index: usize },
    #[error("no input texts")]
    EmptyInput,
    #[error("invalid token {0:?}: tokens are non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("alignment has no rows")]
    NoRows,
    #[error("alignment has no columns")]
    NoColumns,
    #[error("row {row} has {found} cells, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("grid has {grid} rows but {texts} source texts")]
    RowCount { grid: usize, texts: usize },
    #[error("row {row} does not reproduce its source text")]
    RowMismatch { row: usize },
    #[error("column {col} is out of range for {cols} columns")]
    BadColumn { col: usize, cols: usize },
}

/// A whitespace-free, non-empty piece of text.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "String", into = "String"))]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(ModelError::InvalidToken(text));
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Token {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Token::new(value)
    }
}

impl From<Token> for String {
    fn from(value: Token) -> Self {
        value.0
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Splits on runs of whitespace. Empty input yields no tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .map(|t| Token(t.to_string()))
        .collect()
}

/// One grid slot: zero or more tokens, rendered joined by single spaces.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Cell {
    tokens: Vec<Token>,
}

impl Cell {
    pub fn new(tokens: Vec<Token>) -> Self {
        Self { tokens }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(t.as_str());
        }
        out
    }
}

impl fmt::Debug for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("∅")
        } else {
            write!(f, "{:?}", self.text())
        }
    }
}

impl From<&str> for Cell {
    /// Tokenizes `text`; convenient for building fixtures.
    fn from(text: &str) -> Self {
        Cell::new(tokenize(text))
    }
}

/// A rectangular R×C grid of cells over R source texts.
///
/// Every constructed value is rectangular and each row's tokens, read left
/// to right, equal the tokenization of its source text.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alignment {
    grid: Vec<Vec<Cell>>,
    source_texts: Vec<String>,
}

impl Alignment {
    /// Builds an alignment, checking shape and row preservation.
    pub fn new(source_texts: Vec<String>, grid: Vec<Vec<Cell>>) -> Result<Self, ModelError> {
        if grid.is_empty() {
            return Err(ModelError::NoRows);
        }
        if grid.len() != source_texts.len() {
            return Err(ModelError::RowCount {
                grid: grid.len(),
                texts: source_texts.len(),
            });
        }
        let cols = grid[0].len();
        if cols == 0 {
            return Err(ModelError::NoColumns);
        }
        for (row, cells) in grid.iter().enumerate() {
            if cells.len() != cols {
                return Err(ModelError::Ragged {
                    row,
                    found: cells.len(),
                    expected: cols,
                });
            }
        }
        for (row, text) in source_texts.iter().enumerate() {
            let expected = tokenize(text);
            if expected.is_empty() {
                return Err(ModelError::EmptyText { index: row });
            }
            let mut actual = grid[row].iter().flat_map(|c| c.tokens.iter());
            let matches = expected.iter().all(|t| actual.next() == Some(t)) && actual.next().is_none();
            if !matches {
                return Err(ModelError::RowMismatch { row });
            }
        }
        Ok(Self { grid, source_texts })
    }

    /// Builds an alignment whose source texts are read back from the grid.
    pub fn from_grid(grid: Vec<Vec<Cell>>) -> Result<Self, ModelError> {
        let texts = grid
            .iter()
            .map(|row| {
                let mut s = String::new();
                for cell in row.iter().filter(|c| !c.is_empty()) {
                    if !s.is_empty() {
                        s.push(' ');
                    }
                    s.push_str(&cell.text());
                }
                s
            })
            .collect();
        Self::new(texts, grid)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts(source_texts: Vec<String>, grid: Vec<Vec<Cell>>) -> Self {
        debug_assert!(Self::new(source_texts.clone(), grid.clone()).is_ok());
        Self { grid, source_texts }
    }

    /// One row, one token per cell.
    pub fn degenerate(text: &str) -> Result<Self, ModelError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(ModelError::EmptyText { index: 0 });
        }
        let row = tokens.into_iter().map(|t| Cell::new(alloc::vec![t])).collect();
        Ok(Self {
            grid: alloc::vec![row],
            source_texts: alloc::vec![text.to_string()],
        })
    }

    pub fn rows(&self) -> usize {
        self.grid.len()
    }

    pub fn cols(&self) -> usize {
        self.grid[0].len()
    }

    pub fn grid(&self) -> &[Vec<Cell>] {
        &self.grid
    }

    pub fn into_grid(self) -> Vec<Vec<Cell>> {
        self.grid
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        &self.grid[row]
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.grid[row][col]
    }

    pub fn source_texts(&self) -> &[String] {
        &self.source_texts
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.grid.iter().map(move |row| &row[col])
    }

    pub fn is_column_empty(&self, col: usize) -> bool {
        self.column(col).all(Cell::is_empty)
    }

    pub fn filled_in_row(&self, row: usize) -> usize {
        self.grid[row].iter().filter(|c| !c.is_empty()).count()
    }

    pub fn check_column(&self, col: usize) -> Result<(), ModelError> {
        if col < self.cols() {
            Ok(())
        } else {
            Err(ModelError::BadColumn {
                col,
                cols: self.cols(),
            })
        }
    }
}

impl fmt::Debug for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Alignment {}x{} [", self.rows(), self.cols())?;
        for row in &self.grid {
            write!(f, "  ")?;
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    write!(f, " | ")?;
                }
                write!(f, "{cell:?}")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Column indices that the search may not disturb.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ConstraintSet {
    locked: BTreeSet<usize>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lock(&mut self, col: usize) {
        self.locked.insert(col);
    }

    pub fn unlock(&mut self, col: usize) {
        self.locked.remove(&col);
    }

    pub fn is_locked(&self, col: usize) -> bool {
        self.locked.contains(&col)
    }

    pub fn is_empty(&self) -> bool {
        self.locked.is_empty()
    }

    pub fn len(&self) -> usize {
        self.locked.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.locked.iter().copied()
    }

    /// Every locked index must be a column of `a`.
    pub fn validate(&self, a: &Alignment) -> Result<(), ModelError> {
        match self.locked.iter().find(|&&c| c >= a.cols()) {
            Some(&col) => Err(ModelError::BadColumn { col, cols: a.cols() }),
            None => Ok(()),
        }
    }
}

impl FromIterator<usize> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self {
            locked: iter.into_iter().collect(),
        }
    }
}

/// Parses a compact fixture notation: rows separated by `/`, cells by `|`,
/// an empty or `_` cell is empty. `"23|diabetics / six|diabetic"`.
pub fn grid_from_notation(spec: &str) -> Result<Alignment, ModelError> {
    let grid = spec
        .split('/')
        .map(|row| {
            row.split('|')
                .map(|cell| {
                    let cell = cell.trim();
                    if cell == "_" {
                        Cell::empty()
                    } else {
                        Cell::from(cell)
                    }
                })
                .collect()
        })
        .collect();
    Alignment::from_grid(grid)
}
