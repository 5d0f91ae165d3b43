//! Ternary Huffman coding and the rotation map from trits to nucleotides.
//!
//! Each trit selects one of the three nucleotides that differ from the
//! previously emitted one, taken in cyclic order `A -> C -> G -> T -> A`
//! starting after the previous symbol:
//!
//! | previous | trit 0 | trit 1 | trit 2 |
//! |----------|--------|--------|--------|
//! | A        | C      | G      | T      |
//! | C        | G      | T      | A      |
//! | G        | T      | A      | C      |
//! | T        | A      | C      | G      |
//!
//! A stream with nothing before it uses `A` as the virtual previous
//! symbol ([`STREAM_START`]).

use std::ops::Deref;

use thiserror::Error;

use crate::huffman::PrefixCode;
pub use crate::huffman::{HuffmanError, Step, SymbolFrequencyTable, SymbolId, Walker};
use crate::nucleotide::{Nucleotide, NucleotideSequence};

pub const STREAM_START: Nucleotide = Nucleotide::A;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TritError {
    #[error(transparent)]
    Huffman(#[from] HuffmanError),
    #[error("repeated nucleotide at offset {position}")]
    AdjacentRepeat { position: usize },
    #[error("trit value {0} out of range")]
    BadTrit(u8),
}

/// Digits in `{0, 1, 2}`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TritStream(Vec<u8>);

impl TritStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: u8) -> Result<(), TritError> {
        if t > 2 {
            return Err(TritError::BadTrit(t));
        }
        self.0.push(t);
        Ok(())
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }
}

impl TryFrom<Vec<u8>> for TritStream {
    type Error = TritError;

    fn try_from(v: Vec<u8>) -> Result<Self, TritError> {
        match v.iter().find(|&&t| t > 2) {
            Some(&t) => Err(TritError::BadTrit(t)),
            None => Ok(Self(v)),
        }
    }
}

impl Deref for TritStream {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

/// A canonical ternary Huffman code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TernaryCode(PrefixCode);

impl TernaryCode {
    pub fn code(&self, id: SymbolId) -> Option<&[u8]> {
        self.0.code(id)
    }

    /// Real symbols and their lengths, ascending id.
    pub fn lengths(&self) -> Vec<(SymbolId, usize)> {
        self.0.lengths()
    }

    /// `(id, length)` in canonical order, padding symbols included.
    pub fn canonical(&self) -> &[(SymbolId, usize)] {
        self.0.canonical()
    }

    pub fn dummy_count(&self) -> usize {
        self.0.dummy_count()
    }

    pub fn kraft_sum(&self) -> f64 {
        self.0.kraft_sum()
    }

    pub fn walker(&self) -> Walker<'_> {
        self.0.walker()
    }

    /// `sum count * length` for the given frequencies.
    pub fn weighted_length(&self, freqs: &SymbolFrequencyTable) -> u64 {
        freqs
            .iter()
            .map(|(id, c)| c * self.0.len_of(id).unwrap_or(0) as u64)
            .sum()
    }

    pub fn serialize(&self, out: &mut Vec<u8>) -> Result<(), TritError> {
        Ok(self.0.serialize(out)?)
    }

    pub fn deserialize(input: &mut &[u8]) -> Result<Self, TritError> {
        Ok(Self(PrefixCode::deserialize(input, 3)?))
    }
}

pub fn build_code(freqs: &SymbolFrequencyTable) -> Result<TernaryCode, TritError> {
    Ok(TernaryCode(PrefixCode::build(freqs, 3)?))
}

pub fn encode_symbols(stream: &[SymbolId], code: &TernaryCode) -> Result<TritStream, TritError> {
    let mut out = Vec::new();
    code.0.encode_into(stream, &mut out)?;
    Ok(TritStream(out))
}

/// Decodes exactly `count` symbols; also returns the trits consumed.
pub fn decode_symbols(
    trits: &[u8],
    code: &TernaryCode,
    count: usize,
) -> Result<(Vec<SymbolId>, usize), TritError> {
    Ok(code.0.decode(trits, count)?)
}

#[inline]
pub fn trit_to_nt(trit: u8, previous: Nucleotide) -> Nucleotide {
    debug_assert!(trit < 3);
    Nucleotide::from_rank(previous.rank() + trit + 1)
}

/// `None` when `nt` repeats `previous`.
#[inline]
pub fn nt_to_trit(nt: Nucleotide, previous: Nucleotide) -> Option<u8> {
    match (nt.rank() + 4 - previous.rank()) % 4 {
        0 => None,
        d => Some(d - 1),
    }
}

pub fn trits_to_nt(trits: &[u8], previous: Nucleotide) -> NucleotideSequence {
    let mut prev = previous;
    trits
        .iter()
        .map(|&t| {
            prev = trit_to_nt(t, prev);
            prev
        })
        .collect()
}

pub fn nt_to_trits(seq: &[Nucleotide], previous: Nucleotide) -> Result<TritStream, TritError> {
    let mut prev = previous;
    let mut out = Vec::with_capacity(seq.len());
    for (position, &n) in seq.iter().enumerate() {
        out.push(nt_to_trit(n, prev).ok_or(TritError::AdjacentRepeat { position })?);
        prev = n;
    }
    Ok(TritStream(out))
}
