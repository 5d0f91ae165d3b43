//! FASTA and plain-text sequence files.
//!
//! FASTA records are written with 80-column lines. Plain text holds one
//! sequence per line. [`parse_records`] accepts either.

use std::fmt::Write as _;

use thiserror::Error;

use crate::nucleotide::{NucleotideSequence, ParseError};

pub const LINE_WIDTH: usize = 80;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FastaError {
    #[error("line {line}: {source}")]
    Sequence { line: usize, source: ParseError },
    #[error("line {0}: sequence data before the first '>' header")]
    Orphan(usize),
    #[error("no sequence records")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub seq: NucleotideSequence,
}

impl Record {
    pub fn new(id: impl Into<String>, seq: NucleotideSequence) -> Self {
        Self { id: id.into(), seq }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Fasta,
    Text,
}

pub fn write_fasta(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        writeln!(out, ">{}", r.id).unwrap();
        let text = r.seq.to_string();
        for chunk in text.as_bytes().chunks(LINE_WIDTH) {
            out.push_str(std::str::from_utf8(chunk).unwrap());
            out.push('\n');
        }
    }
    out
}

pub fn write_text(records: &[Record]) -> String {
    records.iter().map(|r| format!("{}\n", r.seq)).collect()
}

pub fn write_records(records: &[Record], format: Format) -> String {
    match format {
        Format::Fasta => write_fasta(records),
        Format::Text => write_text(records),
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<NucleotideSequence, FastaError> {
    NucleotideSequence::parse_text(line).map_err(|source| FastaError::Sequence {
        line: lineno,
        source,
    })
}

/// Parses FASTA if the first non-blank line starts with `>`, otherwise one
/// sequence per non-blank line with ids `seq_<n>`. Line numbers are 1-based.
pub fn parse_records(text: &str) -> Result<Vec<Record>, FastaError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with(';'))
        .peekable();
    let fasta = lines.peek().is_some_and(|(_, l)| l.starts_with('>'));
    let mut out: Vec<Record> = Vec::new();
    for (lineno, line) in lines {
        if let Some(id) = line.strip_prefix('>') {
            let id = id.split_whitespace().next().unwrap_or("").to_string();
            out.push(Record::new(id, NucleotideSequence::default()));
        } else if fasta {
            let seq = parse_line(line, lineno)?;
            out.last_mut()
                .ok_or(FastaError::Orphan(lineno))?
                .seq
                .append(&seq);
        } else {
            let seq = parse_line(line, lineno)?;
            out.push(Record::new(format!("seq_{}", out.len()), seq));
        }
    }
    if out.is_empty() {
        return Err(FastaError::Empty);
    }
    Ok(out)
}
