#![allow(dead_code)]

use std::path::PathBuf;

use alignkit::engine::model::grid_from_notation;
use alignkit::engine::{tokenize, Alignment, Token, VocabProvider};
use alignkit::vectors::load_vectors;

pub const DIABETICS: [&str; 3] = ["23 diabetics with flu", "six diabetic patients", "patients with flu"];

pub const TWO_TEXTS: &str = "23|diabetics|with|flu / six|diabetic|patients|_";
pub const THREE_TEXTS: &str = "23|diabetics|with|flu / six|diabetic|patients|_ / _|patients|with|flu";
pub const ROW3_SHIFTED: &str = "23|diabetics|with|flu|_ / six|diabetic|patients|_|_ / _|_|patients|with|flu";
pub const BOTH_SHIFTED: &str = "23|diabetics|_|with|flu / six|diabetic|patients|_|_ / _|_|patients|with|flu";
pub const GROUP_SHIFTED: &str = "23|diabetics|_|with|flu / six|diabetic|patients|_|_ / _|patients|_|with|flu";
pub const MERGED: &str = "23|diabetics|with|flu / six|diabetic patients|_|_ / _|patients|with|flu";
pub const CELL_MERGED: &str = "23|diabetics|_|with flu / six|diabetic patients|_|_ / _|patients|with|flu";
pub const SPLIT_LEFT: &str = "23|diabetics|_|with|flu / six|diabetic|patients|_|_ / _|patients|_|with|flu";
pub const SPLIT_RIGHT: &str = "23|_|diabetics|with|flu / six|diabetic|patients|_|_ / _|_|patients|with|flu";
pub const TRIE_SOURCE: &str = "2 young cancer patients / 15 adult cancer patients / 16 adult cancer patients / 2 young participants";
pub const TRIE_RIGHT: &str = "2 young|cancer patients / 15 adult|cancer patients / 16 adult|cancer patients / _|2 young participants";
pub const TRIE_LEFT: &str = "2 young|cancer patients / 15 adult cancer patients|_ / 16 adult cancer patients|_ / 2 young|participants";
pub const SEARCH_START: &str = "23|diabetics|with|_|flu / six|diabetic|patients|_|_ / _|_|patients|with|flu";
pub const SCORED: &str = "23|diabetics|with|_|flu infection / six|diabetic patients|_|_|_ / _|patients|with|_|flu";

pub const USAGE_TEXTS: [&str; 7] = [
    "Autism Spectrum Disorders in Toddlers .",
    "children with Asperger syndrome ( AS ) :",
    "high - functioning autism spectrum disorders ( ASD ) and clinically significant anxiety",
    "Fifty children with high - functioning ASD and anxiety",
    "92 outpatients affected by generalized anxiety disorders",
    "children and adolescents with both ASD and attention - deficit / hyperactivity disorder ( ADHD ) .",
    "patients diagnosed with autism and previously undetected anxiety",
];

pub fn grid(notation: &str) -> Alignment {
    grid_from_notation(notation).unwrap()
}

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/diabetics.vec")
}

pub fn fixture_provider() -> VocabProvider {
    load_vectors(fixture_path()).unwrap()
}

/// Independent check that every row is a rectangular, order-preserving
/// partition of its source text.
pub fn rows_preserved(a: &Alignment) -> Result<(), String> {
    let width = a.cols();
    for (r, row) in a.grid().iter().enumerate() {
        if row.len() != width {
            return Err(format!("row {r} has {} cells, expected {width}", row.len()));
        }
        let joined: Vec<Token> = row.iter().flat_map(|c| c.tokens().iter().cloned()).collect();
        if joined != tokenize(&a.source_texts()[r]) {
            return Err(format!("row {r} no longer reads {:?}", a.source_texts()[r]));
        }
    }
    Ok(())
}
