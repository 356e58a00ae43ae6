//! Command-line front end.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use alignkit_core::{HashedProvider, SearchConfig, Weights};
use clap::{Args, Parser, Subcommand};

use crate::api::{self, AppState};
use crate::export::{render_table, Format};
use crate::session::{texts_from_lines, Session, SharedProvider};
use crate::vectors::load_vectors;

pub const TEST_EMBEDDING_DIMENSION: usize = 32;

#[derive(Debug, Parser)]
#[command(name = "alignkit", version, about = "Align parallel texts into a table")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Align one text per input line, then refine with a search.
    Align(AlignArgs),
    /// Print the score of a save document.
    Score(ScoreArgs),
    /// Continue the search on a save document.
    Realign(RealignArgs),
    /// Render a save document as a table.
    Export(ExportArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct EmbeddingArgs {
    /// Word-vector file.
    #[arg(long, env = "ALIGNKIT_EMBEDDINGS")]
    embeddings: Option<PathBuf>,
    /// Use seeded pseudo-random vectors instead of a file.
    #[arg(long, value_name = "SEED")]
    test_embeddings: Option<u64>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    greedy_prob: Option<f64>,
    #[arg(long)]
    stall_window: Option<usize>,
    #[arg(long)]
    max_shift_distance: Option<usize>,
    /// w_col,w_fcol,w_embed,w_bias
    #[arg(long, value_parser = parse_weights)]
    weights: Option<Weights>,
}

#[derive(Debug, Args)]
struct Output {
    /// tsv, json, html or save.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AlignArgs {
    /// Input file; standard input when absent or "-".
    input: Option<PathBuf>,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    input: Option<PathBuf>,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// w_col,w_fcol,w_embed,w_bias; defaults to the document's weights.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<Weights>,
}

#[derive(Debug, Args)]
struct RealignArgs {
    input: Option<PathBuf>,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ExportArgs {
    input: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    #[command(flatten)]
    search: SearchArgs,
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    let parts = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<Vec<_>, _>>()?;
    match parts[..] {
        [w_col, w_fcol, w_embed, w_bias] => {
            let w = Weights { w_col, w_fcol, w_embed, w_bias };
            if w.is_finite() {
                Ok(w)
            } else {
                Err("weights must be finite".into())
            }
        }
        _ => Err(format!("expected 4 comma-separated weights, got {}", parts.len())),
    }
}

/// Failure of a command, with its exit status.
#[derive(Debug)]
enum Failure {
    Input(String),
    Internal(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

impl EmbeddingArgs {
    fn provider(&self) -> Result<SharedProvider, Failure> {
        match (&self.embeddings, self.test_embeddings) {
            (Some(path), None) => {
                let p = load_vectors(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                Ok(Arc::new(p))
            }
            (None, Some(seed)) => Ok(Arc::new(HashedProvider::new(seed, TEST_EMBEDDING_DIMENSION)?)),
            (Some(_), Some(_)) => Err(Failure::Input("choose one of --embeddings (or ALIGNKIT_EMBEDDINGS) and --test-embeddings".into())),
            (None, None) => Err(Failure::Input("an embedding source is required: --embeddings <file> or --test-embeddings <seed>".into())),
        }
    }
}

impl SearchArgs {
    fn apply(&self, mut cfg: SearchConfig) -> Result<SearchConfig, Failure> {
        cfg.max_steps = self.steps.unwrap_or(cfg.max_steps);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.greedy_prob = self.greedy_prob.unwrap_or(cfg.greedy_prob);
        cfg.stall_window = self.stall_window.unwrap_or(cfg.stall_window);
        cfg.max_shift_distance = self.max_shift_distance.unwrap_or(cfg.max_shift_distance);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_input(path: &Option<PathBuf>, stdin: &mut dyn Read) -> Result<String, Failure> {
    let mut text = String::new();
    match path {
        Some(p) if p.as_os_str() != "-" => {
            text = std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
        }
        _ => {
            stdin.read_to_string(&mut text).map_err(|e| Failure::Input(format!("standard input: {e}")))?;
        }
    }
    Ok(text)
}

fn render(session: &Session, format: &str) -> Result<String, Failure> {
    if format == "save" {
        return Ok(session.save_json());
    }
    let f: Format = format.parse().map_err(Failure::Input)?;
    Ok(render_table(session.alignment(), f))
}

fn write_output(output: &Output, default_format: &str, session: &Session, stdout: &mut dyn Write) -> CliResult {
    let mut text = render(session, output.format.as_deref().unwrap_or(default_format))?;
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Internal(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Failure::Internal(e.to_string())),
    }
}

fn load_session(input: &Option<PathBuf>, stdin: &mut dyn Read) -> Result<Session, Failure> {
    Ok(Session::load_json(&read_input(input, stdin)?)?)
}

fn score_line(session: &Session, provider: &SharedProvider) -> String {
    serde_json::to_string(&session.score(provider.as_ref())).expect("scores serialize")
}

fn align(args: AlignArgs, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let format = args.output.format.as_deref().unwrap_or("tsv");
    render_check(format)?;
    let texts = texts_from_lines(&read_input(&args.input, stdin)?);
    let provider = args.embeddings.provider()?;
    let cfg = args.search.apply(SearchConfig::default())?;
    let weights = args.search.weights.unwrap_or_default();
    let session = Session::create(&texts, provider.as_ref(), weights, cfg)?;
    writeln!(stderr, "score {}", score_line(&session, &provider)).map_err(|e| Failure::Internal(e.to_string()))?;
    write_output(&args.output, "tsv", &session, stdout)
}

fn render_check(format: &str) -> CliResult {
    if format != "save" {
        format.parse::<Format>().map_err(Failure::Input)?;
    }
    Ok(())
}

fn score(args: ScoreArgs, stdin: &mut dyn Read, stdout: &mut dyn Write) -> CliResult {
    let mut session = load_session(&args.input, stdin)?;
    let provider = args.embeddings.provider()?;
    if let Some(w) = args.weights {
        session.set_config(Some(w), None)?;
    }
    writeln!(stdout, "{}", score_line(&session, &provider)).map_err(|e| Failure::Internal(e.to_string()))
}

fn realign(args: RealignArgs, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    render_check(args.output.format.as_deref().unwrap_or("save"))?;
    let mut session = load_session(&args.input, stdin)?;
    let provider = args.embeddings.provider()?;
    let cfg = args.search.apply(*session.search_cfg())?;
    session.set_config(args.search.weights, Some(cfg))?;
    session.realign(cfg.max_steps, provider.as_ref())?;
    writeln!(stderr, "score {}", score_line(&session, &provider)).map_err(|e| Failure::Internal(e.to_string()))?;
    write_output(&args.output, "save", &session, stdout)
}

fn export(args: ExportArgs, stdin: &mut dyn Read, stdout: &mut dyn Write) -> CliResult {
    render_check(args.output.format.as_deref().unwrap_or("tsv"))?;
    let session = load_session(&args.input, stdin)?;
    write_output(&args.output, "tsv", &session, stdout)
}

fn serve(args: ServeArgs, stderr: &mut dyn Write) -> CliResult {
    let provider = args.embeddings.provider()?;
    let cfg = args.search.apply(SearchConfig::default())?;
    let state = AppState::new(provider, args.search.weights.unwrap_or_default(), cfg);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.to_string()))?;
    writeln!(stderr, "listening on http://127.0.0.1:{}", args.port).map_err(|e| Failure::Internal(e.to_string()))?;
    runtime.block_on(api::serve(state, args.port)).map_err(|e| Failure::Internal(e.to_string()))
}

/// Runs one invocation and returns the process exit status: 0 on
/// success, 1 for bad input or flags, 2 for internal failures.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Align(a) => align(a, stdin, stdout, stderr),
        Command::Score(a) => score(a, stdin, stdout),
        Command::Realign(a) => realign(a, stdin, stdout, stderr),
        Command::Export(a) => export(a, stdin, stdout),
        Command::Serve(a) => serve(a, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Input(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            1
        }
        Err(Failure::Internal(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            2
        }
    }
}
