//! Two-column CoNLL-style file I/O: `token<TAB>label`, one token per line,
//! a blank line between sentences, UTF-8 throughout.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tagger::BioTag;

use super::RawSentence;

/// Parse a two-column file into raw sentences.
///
/// An empty file yields an empty list. Any line that is not blank and does
/// not consist of exactly `token<TAB>label` with a label in {B, I, O} is a
/// parse error carrying its 1-based line number.
pub fn read_conll(path: &Path) -> Result<Vec<RawSentence>> {
    let text = fs::read_to_string(path)?;
    parse_conll(&text)
}

pub fn parse_conll(text: &str) -> Result<Vec<RawSentence>> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut labels: Vec<BioTag> = Vec::new();

    let mut flush = |tokens: &mut Vec<String>, labels: &mut Vec<BioTag>| {
        if !tokens.is_empty() {
            sentences.push(RawSentence {
                tokens: std::mem::take(tokens),
                labels: std::mem::take(labels),
            });
        }
    };

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            flush(&mut tokens, &mut labels);
            continue;
        }
        let mut fields = line.split('\t');
        let token = fields.next().unwrap_or_default();
        let label = fields.next().ok_or_else(|| Error::Parse {
            line: lineno,
            message: "expected token<TAB>label".to_string(),
        })?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                message: "more than two tab-separated columns".to_string(),
            });
        }
        if token.is_empty() {
            return Err(Error::Parse { line: lineno, message: "empty token".to_string() });
        }
        let tag: BioTag = label.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("label {label:?} is not one of B, I, O"),
        })?;
        tokens.push(token.to_string());
        labels.push(tag);
    }
    flush(&mut tokens, &mut labels);
    Ok(sentences)
}

/// Serialize sentences in the canonical form `write_conll` always emits:
/// token lines, one blank separator line between sentences, trailing newline
/// after the final token line. `read` then `write` reproduces a canonical
/// file byte for byte.
pub fn format_conll(sentences: &[RawSentence]) -> String {
    let mut out = String::new();
    for (i, sentence) in sentences.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (token, label) in sentence.tokens.iter().zip(&sentence.labels) {
            out.push_str(token);
            out.push('\t');
            out.push_str(label.as_str());
            out.push('\n');
        }
    }
    out
}

pub fn write_conll(sentences: &[RawSentence], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, format_conll(sentences))?;
    Ok(())
}
