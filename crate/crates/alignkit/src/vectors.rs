//! Plain-text word-vector files.
//!
//! An optional header line `count dim` is followed by one `token c1 ... cd`
//! line per word. Blank lines are ignored and a repeated token keeps its
//! first vector.

use std::io::BufRead;
use std::path::Path;

use alignkit_core::VocabProvider;

#[derive(Debug, thiserror::Error)]
pub enum VectorFileError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("vector file contains no vectors")]
    EmptyVocabulary,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn is_header(fields: &[&str]) -> bool {
    fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok())
}

pub fn parse_vectors<R: BufRead>(reader: R) -> Result<VocabProvider, VectorFileError> {
    let mut provider: Option<VocabProvider> = None;
    let mut dimension = None;
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let number = index + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if index == 0 && is_header(&fields) {
            dimension = Some(fields[1].parse::<usize>().expect("checked by is_header"));
            continue;
        }
        let malformed = |reason: String| VectorFileError::MalformedLine { line: number, reason };
        let (token, components) = fields.split_first().expect("fields is non-empty");
        let vector = components
            .iter()
            .map(|c| c.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| malformed(format!("bad component {c:?}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        let d = *dimension.get_or_insert(vector.len());
        if d == 0 || vector.len() != d {
            return Err(malformed(format!("expected {d} components, found {}", vector.len())));
        }
        provider
            .get_or_insert_with(|| VocabProvider::new(d))
            .insert(*token, vector)
            .map_err(|e| malformed(e.to_string()))?;
    }
    provider.ok_or(VectorFileError::EmptyVocabulary)
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<VocabProvider, VectorFileError> {
    let file = std::fs::File::open(path)?;
    parse_vectors(std::io::BufReader::new(file))
}
