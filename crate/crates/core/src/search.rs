//! Stochastic hill climbing over cell shifts.
//!
//! Each step enumerates shift candidates, drops those that conflict with
//! the column locks or change nothing, scores the distinct results and then
//! takes either the best candidate (with probability `greedy_prob`) or a
//! uniformly random one. The search stops once no candidate has improved on
//! the current score for `stall_window` consecutive steps, or after
//! `max_steps` steps.
//!
//! Shifts only move cells, so a cell's contents (and its phrase vector) stay
//! fixed for the whole run. Internally the search tracks per-row cell
//! positions and memoizes column variances by the set of cells a column
//! holds; results are bit-identical to scoring the materialized alignment
//! with [`crate::heuristic::total_score`].

use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use hashbrown::{HashMap, HashSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{phrase_vector, EmbeddingProvider};
use crate::heuristic::{covariance_trace, ScoreBreakdown, Weights};
use crate::model::{Alignment, Cell, ConstraintSet, ModelError};
use crate::operators::{push_row, shift_crosses_lock, Direction, EditOp};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SearchConfig {
    pub greedy_prob: f64,
    pub stall_window: usize,
    pub max_steps: usize,
    pub max_shift_distance: usize,
    pub seed: u64,
}

impl SearchConfig {
    /// Step cap of the automatic search and the standard re-align.
    pub const STANDARD_STEPS: usize = 50;
    /// Step cap of the deep re-align.
    pub const DEEP_STEPS: usize = 200;

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.greedy_prob) {
            return Err(ConfigError::GreedyProb(self.greedy_prob));
        }
        if self.stall_window == 0 {
            return Err(ConfigError::StallWindow);
        }
        if self.max_steps == 0 {
            return Err(ConfigError::MaxSteps);
        }
        if self.max_shift_distance == 0 {
            return Err(ConfigError::MaxShiftDistance);
        }
        Ok(())
    }

    pub fn with_steps(self, max_steps: usize) -> Self {
        Self { max_steps, ..self }
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            greedy_prob: 0.5,
            stall_window: 2,
            max_steps: Self::STANDARD_STEPS,
            max_shift_distance: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("greedy_prob must lie in [0, 1], got {0}")]
    GreedyProb(f64),
    #[error("stall_window must be at least 1")]
    StallWindow,
    #[error("max_steps must be at least 1")]
    MaxSteps,
    #[error("max_shift_distance must be at least 1")]
    MaxShiftDistance,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    Stalled,
    StepLimit,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub steps_taken: usize,
    /// Operator applied at each step, in the coordinates of that step's input.
    pub ops: Vec<EditOp>,
    /// Score before the first step, then after every step.
    pub trajectory: Vec<ScoreBreakdown>,
    pub stop_reason: StopReason,
    pub alignment: Alignment,
    /// The input locks, carried along with their columns.
    pub constraints: ConstraintSet,
}

/// Hooks for progress reporting and cancellation.
pub trait SearchObserver {
    fn on_step(&mut self, _done: usize, _limit: usize, _score: &ScoreBreakdown) {}

    /// Checked before every step.
    fn cancelled(&self) -> bool {
        false
    }
}

impl SearchObserver for () {}

/// A shift candidate with its (trimmed) result.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub op: EditOp,
    pub alignment: Alignment,
    pub constraints: ConstraintSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub op: EditOp,
    pub greedy: bool,
    /// Whether the best candidate beat the score before the step.
    pub improved: bool,
    pub score: ScoreBreakdown,
}

/// Cell positions per row; `pos[r]` is sorted and lies in `0..width`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Layout {
    pos: Vec<Vec<isize>>,
    width: usize,
}

struct LayoutCandidate {
    op: EditOp,
    layout: Layout,
    offset: isize,
}

/// Fixed per-run data: the cells of every row and their phrase vectors.
struct Context {
    source_texts: Vec<alloc::string::String>,
    cells: Vec<Vec<Cell>>,
    vectors: Vec<Option<Vec<f64>>>,
    /// Global id of `cells[r][k]` is `first_id[r] + k`.
    first_id: Vec<u32>,
    min_columns: usize,
    weights: Weights,
    variance_memo: RefCell<HashMap<Vec<u32>, f64>>,
}

impl Context {
    fn new<P: EmbeddingProvider + ?Sized>(a: &Alignment, provider: &P, weights: Weights) -> (Self, Layout) {
        let mut cells = Vec::with_capacity(a.rows());
        let mut pos = Vec::with_capacity(a.rows());
        let mut vectors = Vec::new();
        let mut first_id = Vec::with_capacity(a.rows());
        for row in a.grid() {
            first_id.push(vectors.len() as u32);
            let mut row_cells = Vec::new();
            let mut row_pos = Vec::new();
            for (c, cell) in row.iter().enumerate() {
                if !cell.is_empty() {
                    vectors.push(phrase_vector(cell.tokens(), provider, false));
                    row_cells.push(cell.clone());
                    row_pos.push(c as isize);
                }
            }
            cells.push(row_cells);
            pos.push(row_pos);
        }
        let min_columns = cells.iter().map(Vec::len).max().unwrap_or(0);
        let ctx = Self {
            source_texts: a.source_texts().to_vec(),
            cells,
            vectors,
            first_id,
            min_columns,
            weights,
            variance_memo: RefCell::new(HashMap::new()),
        };
        (ctx, Layout { pos, width: a.cols() })
    }

    fn rows(&self) -> usize {
        self.cells.len()
    }

    fn score(&self, layout: &Layout) -> ScoreBreakdown {
        let mut columns: Vec<Vec<u32>> = vec![Vec::new(); layout.width];
        for (r, row) in layout.pos.iter().enumerate() {
            for (k, &p) in row.iter().enumerate() {
                columns[p as usize].push(self.first_id[r] + k as u32);
            }
        }
        let rows = self.rows() as f64;
        let mut memo = self.variance_memo.borrow_mut();
        let s_embed: f64 = columns
            .iter()
            .map(|ids| {
                let relevance = ids.len() as f64 / rows;
                let variance = match memo.get(ids) {
                    Some(&v) => v,
                    None => {
                        let vs: Vec<&[f64]> = ids.iter().filter_map(|&id| self.vectors[id as usize].as_deref()).collect();
                        let v = covariance_trace(&vs);
                        memo.insert(ids.clone(), v);
                        v
                    }
                };
                relevance * variance
            })
            .sum();
        let filled = columns.iter().filter(|ids| !ids.is_empty()).count();
        let min = self.min_columns as f64;
        ScoreBreakdown::combine(&self.weights, layout.width as f64 / min, filled as f64 / min, s_embed)
    }

    fn materialize(&self, layout: &Layout) -> Alignment {
        let grid = layout
            .pos
            .iter()
            .zip(&self.cells)
            .map(|(pos, cells)| {
                let mut row = vec![Cell::empty(); layout.width];
                for (&p, cell) in pos.iter().zip(cells) {
                    row[p as usize] = cell.clone();
                }
                row
            })
            .collect();
        Alignment::from_parts(self.source_texts.clone(), grid)
    }
}

/// Removes empty leading and trailing columns, never a locked one.
/// Returns the trimmed layout and how many columns were cut on the left.
fn trim_layout(layout: &mut Layout, locks: &ConstraintSet) -> usize {
    let mut occupied = vec![false; layout.width];
    for row in &layout.pos {
        for &p in row {
            occupied[p as usize] = true;
        }
    }
    let keep = |c: usize| occupied[c] || locks.is_locked(c);
    let lead = (0..layout.width).take_while(|&c| !keep(c)).count();
    let trail = (0..layout.width).rev().take_while(|&c| !keep(c)).count();
    if lead > 0 {
        for row in &mut layout.pos {
            row.iter_mut().for_each(|p| *p -= lead as isize);
        }
    }
    layout.width -= lead + trail;
    lead
}

fn shift_locks(locks: &ConstraintSet, offset: isize) -> ConstraintSet {
    locks.iter().map(|c| (c as isize + offset) as usize).collect()
}

fn canonical_key(op: &EditOp) -> (u8, usize, &[usize], Direction, usize) {
    match op {
        EditOp::Shift {
            col,
            rows,
            direction,
            distance,
        } => (0, *col, rows.as_slice(), *direction, *distance),
        _ => (1, 0, &[], Direction::Left, 0),
    }
}

/// Every row window of each column's filled cells, both directions, every
/// distance up to `max_distance`; lock conflicts and no-ops removed, and
/// only the first (canonical order) operator kept per distinct result.
fn enumerate(layout: &Layout, locks: &ConstraintSet, max_distance: usize) -> Vec<LayoutCandidate> {
    let mut by_column: Vec<Vec<(usize, usize)>> = vec![Vec::new(); layout.width];
    for (r, row) in layout.pos.iter().enumerate() {
        for (k, &p) in row.iter().enumerate() {
            by_column[p as usize].push((r, k));
        }
    }

    let mut out = Vec::new();
    for (col, filled) in by_column.iter().enumerate() {
        for start in 0..filled.len() {
            for end in start..filled.len() {
                let group = &filled[start..=end];
                for direction in [Direction::Left, Direction::Right] {
                    'distance: for distance in 1..=max_distance {
                        let mut pos = layout.pos.clone();
                        for &(r, k) in group {
                            let after = push_row(&layout.pos[r], k, direction, distance);
                            if shift_crosses_lock(&layout.pos[r], &after, locks).is_some() {
                                continue 'distance;
                            }
                            pos[r] = after;
                        }
                        let lo = group.iter().map(|&(r, _)| pos[r][0]).min().unwrap_or(0);
                        let hi = group.iter().map(|&(r, _)| *pos[r].last().unwrap()).max().unwrap_or(0);
                        let prepend = (-lo).max(0);
                        if prepend > 0 {
                            pos.iter_mut().flatten().for_each(|p| *p += prepend);
                        }
                        let width = (layout.width as isize).max(hi + 1) as usize + prepend as usize;
                        let mut candidate = Layout { pos, width };
                        let cut = trim_layout(&mut candidate, &shift_locks(locks, prepend));
                        if candidate == *layout {
                            continue;
                        }
                        out.push(LayoutCandidate {
                            op: EditOp::Shift {
                                col,
                                rows: group.iter().map(|&(r, _)| r).collect(),
                                direction,
                                distance,
                            },
                            layout: candidate,
                            offset: prepend - cut as isize,
                        });
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| canonical_key(&a.op).cmp(&canonical_key(&b.op)));
    let mut seen = HashSet::new();
    out.retain(|c| seen.insert(c.layout.clone()));
    out.push(LayoutCandidate {
        op: EditOp::NoOp,
        layout: layout.clone(),
        offset: 0,
    });
    out
}

/// Removes empty edge columns that are not locked. Returns the result and
/// the change in column index (non-positive).
pub fn trim_edges(a: &Alignment, locks: &ConstraintSet) -> (Alignment, isize) {
    let (ctx, mut layout) = Context::new(a, &crate::embeddings::VocabProvider::new(0), Weights::default());
    let cut = trim_layout(&mut layout, locks);
    (ctx.materialize(&layout), -(cut as isize))
}

/// Candidate shifts of `a` under `locks`, with their trimmed results, in
/// canonical order and ending with `NoOp`.
pub fn candidate_ops(a: &Alignment, locks: &ConstraintSet, cfg: &SearchConfig) -> Result<Vec<Candidate>, SearchError> {
    cfg.validate()?;
    locks.validate(a)?;
    let (ctx, layout) = Context::new(a, &crate::embeddings::VocabProvider::new(0), Weights::default());
    Ok(enumerate(&layout, locks, cfg.max_shift_distance)
        .into_iter()
        .map(|c| Candidate {
            alignment: ctx.materialize(&c.layout),
            constraints: shift_locks(locks, c.offset),
            op: c.op,
        })
        .collect())
}

/// Incremental hill climber; [`hill_climb`] drives it to completion.
pub struct Searcher {
    ctx: Context,
    layout: Layout,
    locks: ConstraintSet,
    score: ScoreBreakdown,
    cfg: SearchConfig,
}

impl Searcher {
    pub fn new<P: EmbeddingProvider + ?Sized>(
        a: &Alignment,
        locks: &ConstraintSet,
        cfg: &SearchConfig,
        provider: &P,
        weights: &Weights,
    ) -> Result<Self, SearchError> {
        cfg.validate()?;
        locks.validate(a)?;
        let (ctx, layout) = Context::new(a, provider, *weights);
        let score = ctx.score(&layout);
        Ok(Self {
            ctx,
            layout,
            locks: locks.clone(),
            score,
            cfg: *cfg,
        })
    }

    pub fn score(&self) -> ScoreBreakdown {
        self.score
    }

    pub fn alignment(&self) -> Alignment {
        self.ctx.materialize(&self.layout)
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.locks
    }

    /// Takes one greedy or random step.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        let candidates = enumerate(&self.layout, &self.locks, self.cfg.max_shift_distance);
        let scores: Vec<ScoreBreakdown> = candidates.iter().map(|c| self.ctx.score(&c.layout)).collect();
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if s.total > scores[best].total {
                best = i;
            }
        }
        let improved = scores[best].total > self.score.total;
        let greedy = rng.random_bool(self.cfg.greedy_prob);
        let chosen = if greedy { best } else { rng.random_range(0..candidates.len()) };
        let score = scores[chosen];
        let LayoutCandidate { op, layout, offset } = candidates.into_iter().nth(chosen).expect("index in range");
        self.locks = shift_locks(&self.locks, offset);
        self.layout = layout;
        self.score = score;
        StepOutcome { op, greedy, improved, score }
    }
}

pub fn hill_climb<P: EmbeddingProvider + ?Sized>(
    a: &Alignment,
    locks: &ConstraintSet,
    cfg: &SearchConfig,
    provider: &P,
    weights: &Weights,
) -> Result<SearchReport, SearchError> {
    hill_climb_with(a, locks, cfg, provider, weights, &mut ())
}

pub fn hill_climb_with<P: EmbeddingProvider + ?Sized, O: SearchObserver + ?Sized>(
    a: &Alignment,
    locks: &ConstraintSet,
    cfg: &SearchConfig,
    provider: &P,
    weights: &Weights,
    observer: &mut O,
) -> Result<SearchReport, SearchError> {
    let mut searcher = Searcher::new(a, locks, cfg, provider, weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trajectory = vec![searcher.score()];
    let mut ops = Vec::new();
    let mut stall = 0;
    let stop_reason = loop {
        if observer.cancelled() {
            break StopReason::Cancelled;
        }
        let outcome = searcher.step(&mut rng);
        ops.push(outcome.op);
        trajectory.push(outcome.score);
        observer.on_step(ops.len(), cfg.max_steps, &outcome.score);
        stall = if outcome.improved { 0 } else { stall + 1 };
        if stall >= cfg.stall_window {
            break StopReason::Stalled;
        }
        if ops.len() >= cfg.max_steps {
            break StopReason::StepLimit;
        }
    };
    Ok(SearchReport {
        steps_taken: ops.len(),
        ops,
        trajectory,
        stop_reason,
        alignment: searcher.alignment(),
        constraints: searcher.constraints().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::HashedProvider;
    use crate::heuristic::total_score;
    use crate::model::grid_from_notation;
    use crate::operators::apply_tracked;

    fn g(spec: &str) -> Alignment {
        grid_from_notation(spec).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig {
            max_steps: 0,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::MaxSteps));
        let bad = SearchConfig {
            greedy_prob: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn layout_score_matches_alignment_score() {
        let p = HashedProvider::new(4, 8).unwrap();
        let a = g("23|diabetics|with|_|flu infection / six|diabetic patients|_|_|_ / _|patients|with|_|flu");
        let (ctx, layout) = Context::new(&a, &p, Weights::default());
        assert_eq!(ctx.score(&layout), total_score(&a, &p, &Weights::default()));
        assert_eq!(ctx.materialize(&layout), a);
    }

    #[test]
    fn candidates_replay_through_operators() {
        let a = g("a|b|_|c / _|d|e|_ / f|_|g|h");
        let locks: ConstraintSet = [2].into_iter().collect();
        let cands = candidate_ops(&a, &locks, &SearchConfig::default()).unwrap();
        assert_eq!(cands.last().unwrap().op, EditOp::NoOp);
        for c in &cands {
            crate::operators::is_valid(&a, &c.op, &locks).unwrap();
            let (applied, remap) = apply_tracked(&a, &c.op).unwrap();
            let moved = remap.map_constraints(&locks, applied.cols());
            let (trimmed, _) = trim_edges(&applied, &moved);
            assert_eq!(trimmed, c.alignment, "{:?}", c.op);
        }
    }

    #[test]
    fn noop_only_when_nothing_can_move() {
        let a = g("a");
        let cands = candidate_ops(&a, &ConstraintSet::new(), &SearchConfig::default()).unwrap();
        assert_eq!(cands.len(), 1);
        let p = HashedProvider::new(0, 4).unwrap();
        let mut s = Searcher::new(&a, &ConstraintSet::new(), &SearchConfig::default(), &p, &Weights::default()).unwrap();
        let out = s.step(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(out.op, EditOp::NoOp);
        assert!(!out.improved);
    }

    #[test]
    fn minimal_row_stalls_after_window() {
        let a = g("a|b|c");
        let p = HashedProvider::new(0, 4).unwrap();
        let cfg = SearchConfig {
            greedy_prob: 1.0,
            ..Default::default()
        };
        let report = hill_climb(&a, &ConstraintSet::new(), &cfg, &p, &Weights::default()).unwrap();
        assert_eq!(report.stop_reason, StopReason::Stalled);
        assert_eq!(report.steps_taken, cfg.stall_window);
        assert_eq!(report.alignment, a);
        assert_eq!(report.trajectory.len(), report.steps_taken + 1);
    }

    #[test]
    fn one_step_limit() {
        let a = g("a|b / c|_ / _|d");
        let p = HashedProvider::new(0, 4).unwrap();
        let cfg = SearchConfig {
            max_steps: 1,
            ..Default::default()
        };
        let report = hill_climb(&a, &ConstraintSet::new(), &cfg, &p, &Weights::default()).unwrap();
        assert_eq!(report.steps_taken, 1);
        assert!(matches!(report.stop_reason, StopReason::Stalled | StopReason::StepLimit));
    }

    struct CancelAfter(usize, usize);

    impl SearchObserver for CancelAfter {
        fn on_step(&mut self, done: usize, _: usize, _: &ScoreBreakdown) {
            self.1 = done;
        }

        fn cancelled(&self) -> bool {
            self.1 >= self.0
        }
    }

    #[test]
    fn cancellation_stops_between_steps() {
        let a = g("a|b|_|c / _|d|e|_ / f|_|g|h");
        let p = HashedProvider::new(0, 4).unwrap();
        let cfg = SearchConfig {
            greedy_prob: 0.0,
            stall_window: 100,
            max_steps: 100,
            ..Default::default()
        };
        let report = hill_climb_with(&a, &ConstraintSet::new(), &cfg, &p, &Weights::default(), &mut CancelAfter(3, 0)).unwrap();
        assert_eq!(report.stop_reason, StopReason::Cancelled);
        assert_eq!(report.steps_taken, 3);
    }
}
