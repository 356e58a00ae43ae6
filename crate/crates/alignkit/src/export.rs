//! Table renderings of an alignment.

use std::fmt::Write;
use std::str::FromStr;

use alignkit_core::{Alignment, Cell, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Json,
    Html,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "json" => Ok(Format::Json),
            "html" => Ok(Format::Html),
            other => Err(format!("unknown format {other:?} (expected tsv, json or html)")),
        }
    }
}

/// Grid as rows of cells, each cell a token list.
pub fn grid_json(a: &Alignment) -> serde_json::Value {
    serde_json::to_value(a.grid()).expect("cells serialize")
}

pub fn render_table(a: &Alignment, format: Format) -> String {
    match format {
        Format::Tsv => a.grid().iter().map(|row| row.iter().map(Cell::text).collect::<Vec<_>>().join("\t")).collect::<Vec<_>>().join("\n"),
        Format::Json => serde_json::json!({ "grid": grid_json(a) }).to_string(),
        Format::Html => render_html(a),
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn render_html(a: &Alignment) -> String {
    let mut out = String::from("<table class=\"alignment\">\n");
    for row in a.grid() {
        out.push_str("<tr>");
        for cell in row {
            write!(out, "<td>{}</td>", escape(&cell.text())).expect("writing to a String");
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>\n");
    out
}

/// Reads back the output of `render_table(_, Format::Tsv)`.
pub fn parse_tsv(text: &str) -> Result<Alignment, ModelError> {
    let grid = text.split('\n').map(|line| line.split('\t').map(Cell::from).collect()).collect();
    Alignment::from_grid(grid)
}
