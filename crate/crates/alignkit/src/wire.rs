//! JSON encodings used by the service and the CLI.
//!
//! Rows and columns are numbered from 1 on the wire. A column insert
//! `position` counts the columns left of the new column, which reads the
//! same in either numbering.

use alignkit_core::{Direction, EditOp, ScoreBreakdown, SearchReport, StopReason};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireOp {
    Shift {
        col: usize,
        rows: Vec<usize>,
        direction: Direction,
        #[serde(default = "one")]
        distance: usize,
    },
    ColumnInsert {
        position: usize,
    },
    ColumnDelete {
        col: usize,
    },
    ColumnMerge {
        col: usize,
    },
    CellMerge {
        row: usize,
        col: usize,
        direction: Direction,
    },
    SingleTokenSplit {
        col: usize,
        side: Direction,
    },
    TrieSplit {
        col: usize,
        side: Direction,
    },
    NoOp,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("columns are numbered from 1")]
    ZeroColumn,
    #[error("rows are numbered from 1")]
    ZeroRow,
}

impl WireError {
    pub fn code(&self) -> &'static str {
        match self {
            WireError::ZeroColumn => "BadColumn",
            WireError::ZeroRow => "BadRow",
        }
    }
}

fn col0(col: usize) -> Result<usize, WireError> {
    col.checked_sub(1).ok_or(WireError::ZeroColumn)
}

fn row0(row: usize) -> Result<usize, WireError> {
    row.checked_sub(1).ok_or(WireError::ZeroRow)
}

impl WireOp {
    pub fn to_op(&self) -> Result<EditOp, WireError> {
        Ok(match self {
            WireOp::Shift {
                col,
                rows,
                direction,
                distance,
            } => EditOp::shift(col0(*col)?, rows.iter().map(|&r| row0(r)).collect::<Result<Vec<_>, _>>()?, *direction, *distance),
            WireOp::ColumnInsert { position } => EditOp::ColumnInsert { position: *position },
            WireOp::ColumnDelete { col } => EditOp::ColumnDelete { col: col0(*col)? },
            WireOp::ColumnMerge { col } => EditOp::ColumnMerge { col: col0(*col)? },
            WireOp::CellMerge { row, col, direction } => EditOp::CellMerge {
                row: row0(*row)?,
                col: col0(*col)?,
                direction: *direction,
            },
            WireOp::SingleTokenSplit { col, side } => EditOp::SingleTokenSplit {
                col: col0(*col)?,
                side: *side,
            },
            WireOp::TrieSplit { col, side } => EditOp::TrieSplit {
                col: col0(*col)?,
                side: *side,
            },
            WireOp::NoOp => EditOp::NoOp,
        })
    }
}

impl From<&EditOp> for WireOp {
    fn from(op: &EditOp) -> Self {
        match op {
            EditOp::Shift {
                col,
                rows,
                direction,
                distance,
            } => WireOp::Shift {
                col: col + 1,
                rows: rows.iter().map(|r| r + 1).collect(),
                direction: *direction,
                distance: *distance,
            },
            EditOp::ColumnInsert { position } => WireOp::ColumnInsert { position: *position },
            EditOp::ColumnDelete { col } => WireOp::ColumnDelete { col: col + 1 },
            EditOp::ColumnMerge { col } => WireOp::ColumnMerge { col: col + 1 },
            EditOp::CellMerge { row, col, direction } => WireOp::CellMerge {
                row: row + 1,
                col: col + 1,
                direction: *direction,
            },
            EditOp::SingleTokenSplit { col, side } => WireOp::SingleTokenSplit { col: col + 1, side: *side },
            EditOp::TrieSplit { col, side } => WireOp::TrieSplit { col: col + 1, side: *side },
            EditOp::NoOp => WireOp::NoOp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WireReport {
    pub steps_taken: usize,
    pub ops: Vec<WireOp>,
    pub trajectory: Vec<ScoreBreakdown>,
    pub stop_reason: StopReason,
    pub grid: serde_json::Value,
    pub locked_columns: Vec<usize>,
}

impl From<&SearchReport> for WireReport {
    fn from(r: &SearchReport) -> Self {
        Self {
            steps_taken: r.steps_taken,
            ops: r.ops.iter().map(WireOp::from).collect(),
            trajectory: r.trajectory.clone(),
            stop_reason: r.stop_reason,
            grid: crate::export::grid_json(&r.alignment),
            locked_columns: r.constraints.iter().map(|c| c + 1).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn shift_is_one_based() {
        let wire: WireOp = serde_json::from_value(json!({"op": "shift", "col": 2, "rows": [3], "direction": "right"})).unwrap();
        assert_eq!(wire.to_op().unwrap(), EditOp::shift(1, [2], Direction::Right, 1));
        assert_eq!(WireOp::from(&wire.to_op().unwrap()), wire);
    }

    #[test]
    fn zero_indices_are_rejected() {
        let wire: WireOp = serde_json::from_value(json!({"op": "column_delete", "col": 0})).unwrap();
        assert_eq!(wire.to_op(), Err(WireError::ZeroColumn));
        let wire: WireOp = serde_json::from_value(json!({"op": "cell_merge", "row": 0, "col": 1, "direction": "left"})).unwrap();
        assert_eq!(wire.to_op().unwrap_err().code(), "BadRow");
    }

    #[test]
    fn every_variant_round_trips() {
        let ops = [
            EditOp::shift(0, [0, 2], Direction::Left, 3),
            EditOp::ColumnInsert { position: 0 },
            EditOp::ColumnDelete { col: 4 },
            EditOp::ColumnMerge { col: 1 },
            EditOp::CellMerge {
                row: 1,
                col: 2,
                direction: Direction::Right,
            },
            EditOp::SingleTokenSplit { col: 0, side: Direction::Left },
            EditOp::TrieSplit { col: 3, side: Direction::Right },
            EditOp::NoOp,
        ];
        for op in ops {
            let text = serde_json::to_string(&WireOp::from(&op)).unwrap();
            let back: WireOp = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_op().unwrap(), op, "{text}");
        }
        assert_eq!(serde_json::to_value(WireOp::NoOp).unwrap(), json!({"op": "no_op"}));
    }
}
