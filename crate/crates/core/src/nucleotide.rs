//! Nucleotide alphabet, sequences and the two sequencing constraints
//! (homopolymer runs and G/C balance).

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use thiserror::Error;

/// One DNA symbol. The derived order `A < C < G < T` is the single
/// tie-break and enumeration order used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Nucleotide {
    A,
    C,
    G,
    T,
}

impl Nucleotide {
    pub const ALL: [Nucleotide; 4] = [Nucleotide::A, Nucleotide::C, Nucleotide::G, Nucleotide::T];

    /// Position in the `A, C, G, T` order.
    #[inline]
    pub fn rank(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn from_rank(rank: u8) -> Nucleotide {
        Self::ALL[(rank & 3) as usize]
    }

    pub fn from_char(c: char) -> Option<Nucleotide> {
        match c {
            'A' | 'a' => Some(Nucleotide::A),
            'C' | 'c' => Some(Nucleotide::C),
            'G' | 'g' => Some(Nucleotide::G),
            'T' | 't' => Some(Nucleotide::T),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Nucleotide::A => 'A',
            Nucleotide::C => 'C',
            Nucleotide::G => 'G',
            Nucleotide::T => 'T',
        }
    }

    #[inline]
    pub fn is_gc(self) -> bool {
        matches!(self, Nucleotide::C | Nucleotide::G)
    }
}

impl fmt::Display for Nucleotide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid nucleotide {found:?} at index {index}")]
pub struct ParseError {
    /// Character offset in the input text.
    pub index: usize,
    pub found: char,
}

/// An ordered string over `{A, C, G, T}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NucleotideSequence(Vec<Nucleotide>);

impl NucleotideSequence {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn with_capacity(n: usize) -> Self {
        Self(Vec::with_capacity(n))
    }

    /// Parses A/C/G/T (any case), skipping whitespace.
    pub fn parse_text(text: &str) -> Result<Self, ParseError> {
        let mut out = Vec::with_capacity(text.len());
        for (index, c) in text.chars().enumerate() {
            if c.is_whitespace() {
                continue;
            }
            match Nucleotide::from_char(c) {
                Some(n) => out.push(n),
                None => return Err(ParseError { index, found: c }),
            }
        }
        Ok(Self(out))
    }

    pub fn as_slice(&self) -> &[Nucleotide] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Nucleotide> {
        self.0
    }

    pub fn push(&mut self, n: Nucleotide) {
        self.0.push(n);
    }

    pub fn extend_from_slice(&mut self, other: &[Nucleotide]) {
        self.0.extend_from_slice(other);
    }

    pub fn append(&mut self, other: &NucleotideSequence) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn concat(&self, other: &NucleotideSequence) -> NucleotideSequence {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Self(v)
    }

    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    pub fn gc_count(&self) -> usize {
        self.0.iter().filter(|n| n.is_gc()).count()
    }

    pub fn at_count(&self) -> usize {
        self.len() - self.gc_count()
    }

    /// Fraction of G/C symbols; 0 for the empty sequence.
    pub fn gc_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.gc_count() as f64 / self.len() as f64
        }
    }

    /// Longest run of one repeated symbol; 0 for the empty sequence.
    pub fn max_run(&self) -> usize {
        runs(&self.0).map(|(_, len)| len).max().unwrap_or(0)
    }

    pub fn validate(&self, max_run: usize) -> ConstraintReport {
        validate(&self.0, max_run)
    }
}

impl Deref for NucleotideSequence {
    type Target = [Nucleotide];

    fn deref(&self) -> &[Nucleotide] {
        &self.0
    }
}

impl AsRef<[Nucleotide]> for NucleotideSequence {
    fn as_ref(&self) -> &[Nucleotide] {
        &self.0
    }
}

impl From<Vec<Nucleotide>> for NucleotideSequence {
    fn from(v: Vec<Nucleotide>) -> Self {
        Self(v)
    }
}

impl From<&[Nucleotide]> for NucleotideSequence {
    fn from(v: &[Nucleotide]) -> Self {
        Self(v.to_vec())
    }
}

impl FromIterator<Nucleotide> for NucleotideSequence {
    fn from_iter<I: IntoIterator<Item = Nucleotide>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl Extend<Nucleotide> for NucleotideSequence {
    fn extend<I: IntoIterator<Item = Nucleotide>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

impl IntoIterator for NucleotideSequence {
    type Item = Nucleotide;
    type IntoIter = std::vec::IntoIter<Nucleotide>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a NucleotideSequence {
    type Item = &'a Nucleotide;
    type IntoIter = std::slice::Iter<'a, Nucleotide>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl FromStr for NucleotideSequence {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        Self::parse_text(s)
    }
}

impl fmt::Display for NucleotideSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|n| n.as_char()).collect();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// A maximal run longer than the allowed bound.
    Homopolymer { length: usize },
    /// More G/C than A/T over the validated unit. Reported at position 0.
    GcExcess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub position: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintReport {
    pub max_homopolymer_run: usize,
    pub gc_count: usize,
    pub at_count: usize,
    pub violations: Vec<Violation>,
}

impl ConstraintReport {
    pub fn homopolymer_violations(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| matches!(v.kind, ViolationKind::Homopolymer { .. }))
            .count()
    }

    pub fn gc_violation(&self) -> bool {
        self.violations
            .iter()
            .any(|v| v.kind == ViolationKind::GcExcess)
    }

    /// No homopolymer violations (the G/C balance is reported separately).
    pub fn runs_ok(&self) -> bool {
        self.homopolymer_violations() == 0
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Maximal runs as `(start, length)`.
fn runs(seq: &[Nucleotide]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let mut start = 0;
    std::iter::from_fn(move || {
        if start >= seq.len() {
            return None;
        }
        let sym = seq[start];
        let len = seq[start..].iter().take_while(|&&n| n == sym).count();
        let run = (start, len);
        start += len;
        Some(run)
    })
}

/// Checks `seq` against the homopolymer bound `max_run` and the G/C rule
/// (`gc_count <= at_count`).
///
/// # Panics
/// If `max_run` is 0.
pub fn validate(seq: &[Nucleotide], max_run: usize) -> ConstraintReport {
    assert!(max_run >= 1, "max_run must be at least 1");
    let mut violations = Vec::new();
    let mut longest = 0;
    for (position, length) in runs(seq) {
        longest = longest.max(length);
        if length > max_run {
            violations.push(Violation {
                position,
                kind: ViolationKind::Homopolymer { length },
            });
        }
    }
    let gc_count = seq.iter().filter(|n| n.is_gc()).count();
    let at_count = seq.len() - gc_count;
    if gc_count > at_count {
        violations.push(Violation {
            position: 0,
            kind: ViolationKind::GcExcess,
        });
    }
    ConstraintReport {
        max_homopolymer_run: longest,
        gc_count,
        at_count,
        violations,
    }
}
