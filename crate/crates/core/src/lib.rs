//! Interactive multiple text alignment.
//!
//! Arranges N parallel text excerpts into a table where comparable tokens
//! share a column. The crate provides the alignment grid, the initial
//! progressive aligner, the editing operators, the quality heuristic and a
//! stochastic hill-climbing search that refines alignments under column
//! locks.
//!
//! Everything here is pure and allocation-only (`no_std` + `alloc`); file
//! formats, sessions, the HTTP service and the CLI live in the `alignkit`
//! crate.

#![no_std]

extern crate alloc;

pub mod embeddings;
pub mod heuristic;
pub mod initial;
pub mod model;
pub mod operators;
pub mod search;

pub use embeddings::{EmbeddingProvider, HashedProvider, VocabProvider};
pub use heuristic::{total_score, ScoreBreakdown, Weights};
pub use initial::{pairwise_align, progressive_align};
pub use model::{tokenize, Alignment, Cell, ConstraintSet, ModelError, Token};
pub use operators::{apply, is_valid, Direction, EditOp, OpError};
pub use search::{hill_climb, SearchConfig, SearchReport, StopReason};
