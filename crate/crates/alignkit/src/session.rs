//! Editing sessions: the current alignment with its locks and settings,
//! snapshot undo/redo, re-alignment runs and save documents.

use std::collections::{BTreeSet, VecDeque};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use alignkit_core::operators::apply_tracked;
use alignkit_core::search::{hill_climb_with, ConfigError, SearchError, SearchObserver};
use alignkit_core::{
    is_valid, progressive_align, total_score, Alignment, Cell, ConstraintSet, EditOp, EmbeddingProvider, ModelError, OpError, ScoreBreakdown,
    SearchConfig, SearchReport, Weights,
};
use serde::{Deserialize, Serialize};

pub type SharedProvider = Arc<dyn EmbeddingProvider + Send + Sync>;

pub const SAVE_VERSION: u32 = 1;
pub const DEFAULT_HISTORY: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("empty input")]
    EmptyInput,
    #[error("a search is already running")]
    Busy,
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("nothing to redo")]
    NothingToRedo,
    #[error("unsupported save document version {found} (expected {SAVE_VERSION})")]
    SchemaMismatch { found: u64 },
    #[error("save document grid is inconsistent: {0}")]
    CorruptGrid(ModelError),
    #[error("malformed save document: {0}")]
    BadDocument(String),
    #[error("weights must be finite")]
    BadWeights,
    #[error("step count must be at least 1")]
    BadSteps,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::EmptyInput => "EmptyInput",
            SessionError::Busy => "Busy",
            SessionError::NothingToUndo => "NothingToUndo",
            SessionError::NothingToRedo => "NothingToRedo",
            SessionError::SchemaMismatch { .. } => "SchemaMismatch",
            SessionError::CorruptGrid(_) => "CorruptGrid",
            SessionError::BadDocument(_) => "BadDocument",
            SessionError::BadWeights => "BadWeights",
            SessionError::BadSteps => "BadSteps",
            SessionError::Model(e) => model_code(e),
            SessionError::Op(e) => e.code(),
            SessionError::Config(_) => "BadConfig",
        }
    }
}

fn model_code(e: &ModelError) -> &'static str {
    match e {
        ModelError::EmptyText { .. } => "EmptyText",
        ModelError::EmptyInput => "EmptyInput",
        ModelError::InvalidToken(_) => "InvalidToken",
        ModelError::NoRows => "NoRows",
        ModelError::NoColumns => "NoColumns",
        ModelError::Ragged { .. } => "Ragged",
        ModelError::RowCount { .. } => "RowCount",
        ModelError::RowMismatch { .. } => "RowMismatch",
        ModelError::BadColumn { .. } => "BadColumn",
    }
}

impl From<SearchError> for SessionError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Config(e) => SessionError::Config(e),
            SearchError::Model(e) => SessionError::Model(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Snapshot {
    alignment: Alignment,
    constraints: ConstraintSet,
}

/// Progress of a running search, shared with whoever polls the session.
#[derive(Debug, Default)]
pub struct SearchProgress {
    done: AtomicUsize,
    limit: usize,
    cancel: AtomicBool,
}

impl SearchProgress {
    pub fn done(&self) -> usize {
        self.done.load(Ordering::Relaxed)
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn cancel(&self) {
        self.cancel.store(true, Ordering::Relaxed);
    }
}

impl SearchObserver for &SearchProgress {
    fn on_step(&mut self, done: usize, _limit: usize, _score: &ScoreBreakdown) {
        self.done.store(done, Ordering::Relaxed);
    }

    fn cancelled(&self) -> bool {
        self.cancel.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Idle,
    Searching { done: usize, limit: usize },
}

/// A search started by [`Session::begin_realign`]. Run it without holding
/// the session, then hand the result to [`Session::finish_realign`].
#[derive(Debug)]
pub struct RealignJob {
    before: Snapshot,
    cfg: SearchConfig,
    weights: Weights,
    progress: Arc<SearchProgress>,
}

impl RealignJob {
    pub fn run(&self, provider: &(dyn EmbeddingProvider + Send + Sync)) -> Result<SearchReport, SearchError> {
        hill_climb_with(
            &self.before.alignment,
            &self.before.constraints,
            &self.cfg,
            provider,
            &self.weights,
            &mut &*self.progress,
        )
    }

    pub fn progress(&self) -> &Arc<SearchProgress> {
        &self.progress
    }
}

#[derive(Debug)]
pub struct Session {
    alignment: Alignment,
    constraints: ConstraintSet,
    weights: Weights,
    search_cfg: SearchConfig,
    undo: VecDeque<Snapshot>,
    redo: Vec<Snapshot>,
    history_limit: usize,
    changed_cells: BTreeSet<(usize, usize)>,
    search: Option<Arc<SearchProgress>>,
}

/// Persistent form of a session. Locked columns are numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaveDocument {
    pub version: u32,
    pub source_texts: Vec<String>,
    pub grid: Vec<Vec<Cell>>,
    pub locked_columns: Vec<usize>,
    pub weights: Weights,
    pub search_cfg: SearchConfig,
}

/// Texts from pasted input: one per line, blank lines dropped.
pub fn texts_from_lines(input: &str) -> Vec<String> {
    input.lines().filter(|l| !l.trim().is_empty()).map(str::to_owned).collect()
}

/// Cells that differ once both grids are padded to the same width.
pub fn changed_cells(before: &Alignment, after: &Alignment) -> BTreeSet<(usize, usize)> {
    let empty = Cell::empty();
    let width = before.cols().max(after.cols());
    let mut out = BTreeSet::new();
    for (r, (b, a)) in before.grid().iter().zip(after.grid()).enumerate() {
        for c in 0..width {
            if b.get(c).unwrap_or(&empty) != a.get(c).unwrap_or(&empty) {
                out.insert((r, c));
            }
        }
    }
    out
}

impl Session {
    /// Aligns `texts` and refines the result with a search capped at the
    /// configured step count. Blank texts are skipped.
    pub fn create<S: AsRef<str>>(
        texts: &[S],
        provider: &(dyn EmbeddingProvider + Send + Sync),
        weights: Weights,
        search_cfg: SearchConfig,
    ) -> Result<Self, SessionError> {
        let texts: Vec<&str> = texts.iter().map(AsRef::as_ref).filter(|t| !t.trim().is_empty()).collect();
        if texts.is_empty() {
            return Err(SessionError::EmptyInput);
        }
        check_settings(&weights, &search_cfg)?;
        let initial = progressive_align(&texts, provider)?;
        let report = hill_climb_with(&initial, &ConstraintSet::new(), &search_cfg, provider, &weights, &mut ())?;
        Ok(Self::from_state(report.alignment, report.constraints, weights, search_cfg))
    }

    fn from_state(alignment: Alignment, constraints: ConstraintSet, weights: Weights, search_cfg: SearchConfig) -> Self {
        Self {
            alignment,
            constraints,
            weights,
            search_cfg,
            undo: VecDeque::new(),
            redo: Vec::new(),
            history_limit: DEFAULT_HISTORY,
            changed_cells: BTreeSet::new(),
            search: None,
        }
    }

    pub fn with_history_limit(mut self, limit: usize) -> Self {
        self.history_limit = limit;
        while self.undo.len() > limit {
            self.undo.pop_front();
        }
        self
    }

    pub fn alignment(&self) -> &Alignment {
        &self.alignment
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn search_cfg(&self) -> &SearchConfig {
        &self.search_cfg
    }

    pub fn changed_cells(&self) -> &BTreeSet<(usize, usize)> {
        &self.changed_cells
    }

    pub fn can_undo(&self) -> bool {
        !self.undo.is_empty()
    }

    pub fn can_redo(&self) -> bool {
        !self.redo.is_empty()
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    pub fn status(&self) -> Status {
        match &self.search {
            Some(p) => Status::Searching {
                done: p.done(),
                limit: p.limit(),
            },
            None => Status::Idle,
        }
    }

    /// The running search, if any.
    pub fn search_progress(&self) -> Option<&Arc<SearchProgress>> {
        self.search.as_ref()
    }

    pub fn score(&self, provider: &(dyn EmbeddingProvider + Send + Sync)) -> ScoreBreakdown {
        total_score(&self.alignment, provider, &self.weights)
    }

    fn ensure_idle(&self) -> Result<(), SessionError> {
        match self.search {
            Some(_) => Err(SessionError::Busy),
            None => Ok(()),
        }
    }

    fn current(&self) -> Snapshot {
        Snapshot {
            alignment: self.alignment.clone(),
            constraints: self.constraints.clone(),
        }
    }

    fn push_undo(&mut self, snapshot: Snapshot) {
        if self.history_limit == 0 {
            return;
        }
        if self.undo.len() == self.history_limit {
            self.undo.pop_front();
        }
        self.undo.push_back(snapshot);
        self.redo.clear();
    }

    fn restore(&mut self, snapshot: Snapshot) {
        self.alignment = snapshot.alignment;
        self.constraints = snapshot.constraints;
        self.changed_cells.clear();
    }

    /// A manual edit. Locks only restrain the search, so they are not
    /// checked here; they follow their columns through the edit.
    pub fn apply_user_op(&mut self, op: &EditOp) -> Result<(), SessionError> {
        self.ensure_idle()?;
        is_valid(&self.alignment, op, &ConstraintSet::new())?;
        let (alignment, remap) = apply_tracked(&self.alignment, op)?;
        let constraints = remap.map_constraints(&self.constraints, alignment.cols());
        let before = self.current();
        self.push_undo(before);
        self.restore(Snapshot { alignment, constraints });
        Ok(())
    }

    pub fn set_lock(&mut self, col: usize, locked: bool) -> Result<(), SessionError> {
        self.ensure_idle()?;
        self.alignment.check_column(col)?;
        if locked {
            self.constraints.lock(col);
        } else {
            self.constraints.unlock(col);
        }
        Ok(())
    }

    pub fn set_locks(&mut self, locks: ConstraintSet) -> Result<(), SessionError> {
        self.ensure_idle()?;
        locks.validate(&self.alignment)?;
        self.constraints = locks;
        Ok(())
    }

    pub fn set_config(&mut self, weights: Option<Weights>, search_cfg: Option<SearchConfig>) -> Result<(), SessionError> {
        self.ensure_idle()?;
        let weights = weights.unwrap_or(self.weights);
        let search_cfg = search_cfg.unwrap_or(self.search_cfg);
        check_settings(&weights, &search_cfg)?;
        self.weights = weights;
        self.search_cfg = search_cfg;
        Ok(())
    }

    pub fn undo(&mut self) -> Result<(), SessionError> {
        self.ensure_idle()?;
        let snapshot = self.undo.pop_back().ok_or(SessionError::NothingToUndo)?;
        self.redo.push(self.current());
        self.restore(snapshot);
        Ok(())
    }

    pub fn redo(&mut self) -> Result<(), SessionError> {
        self.ensure_idle()?;
        let snapshot = self.redo.pop().ok_or(SessionError::NothingToRedo)?;
        self.undo.push_back(self.current());
        self.restore(snapshot);
        Ok(())
    }

    /// Marks the session as searching and returns the work to run.
    pub fn begin_realign(&mut self, steps: usize) -> Result<RealignJob, SessionError> {
        self.ensure_idle()?;
        if steps == 0 {
            return Err(SessionError::BadSteps);
        }
        let progress = Arc::new(SearchProgress {
            limit: steps,
            ..Default::default()
        });
        self.search = Some(progress.clone());
        Ok(RealignJob {
            before: self.current(),
            cfg: self.search_cfg.with_steps(steps),
            weights: self.weights,
            progress,
        })
    }

    /// Installs the outcome of a job. A cancelled search still keeps the
    /// steps it completed.
    pub fn finish_realign(&mut self, job: RealignJob, result: Result<SearchReport, SearchError>) -> Result<(), SessionError> {
        self.search = None;
        let report = result?;
        self.changed_cells = changed_cells(&job.before.alignment, &report.alignment);
        self.push_undo(job.before);
        self.alignment = report.alignment;
        self.constraints = report.constraints;
        Ok(())
    }

    /// Runs a re-alignment to completion on the calling thread.
    pub fn realign(&mut self, steps: usize, provider: &(dyn EmbeddingProvider + Send + Sync)) -> Result<(), SessionError> {
        let job = self.begin_realign(steps)?;
        let result = job.run(provider);
        self.finish_realign(job, result)
    }

    pub fn save(&self) -> SaveDocument {
        SaveDocument {
            version: SAVE_VERSION,
            source_texts: self.alignment.source_texts().to_vec(),
            grid: self.alignment.grid().to_vec(),
            locked_columns: self.constraints.iter().map(|c| c + 1).collect(),
            weights: self.weights,
            search_cfg: self.search_cfg,
        }
    }

    pub fn save_json(&self) -> String {
        serde_json::to_string_pretty(&self.save()).expect("save documents serialize")
    }

    pub fn load(doc: SaveDocument) -> Result<Self, SessionError> {
        if doc.version != SAVE_VERSION {
            return Err(SessionError::SchemaMismatch {
                found: doc.version.into(),
            });
        }
        check_settings(&doc.weights, &doc.search_cfg)?;
        let alignment = Alignment::new(doc.source_texts, doc.grid).map_err(SessionError::CorruptGrid)?;
        let mut constraints = ConstraintSet::new();
        for &col in &doc.locked_columns {
            match col.checked_sub(1) {
                Some(c) if c < alignment.cols() => constraints.lock(c),
                _ => {
                    return Err(SessionError::CorruptGrid(ModelError::BadColumn {
                        col,
                        cols: alignment.cols(),
                    }))
                }
            }
        }
        Ok(Self::from_state(alignment, constraints, doc.weights, doc.search_cfg))
    }

    /// Parses and loads a save document, checking its version first.
    pub fn load_json(text: &str) -> Result<Self, SessionError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| SessionError::BadDocument(e.to_string()))?;
        Self::load_value(value)
    }

    pub fn load_value(value: serde_json::Value) -> Result<Self, SessionError> {
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(SAVE_VERSION) => {}
            Some(found) => return Err(SessionError::SchemaMismatch { found }),
            None => return Err(SessionError::BadDocument("missing version".into())),
        }
        let doc: SaveDocument = serde_json::from_value(value).map_err(|e| SessionError::BadDocument(e.to_string()))?;
        Self::load(doc)
    }
}

fn check_settings(weights: &Weights, cfg: &SearchConfig) -> Result<(), SessionError> {
    if !weights.is_finite() {
        return Err(SessionError::BadWeights);
    }
    cfg.validate()?;
    Ok(())
}
