//! PAIRCODE: fixed-length constrained quaternary codewords, and the
//! nucleotide category table used to code quantized values.
//!
//! A codeword of even length `2k` is a concatenation of `k` pairs from
//! [`PAIRS`]; an odd length `2k + 1` appends one symbol from [`TAILS`].
//! No pair repeats a symbol and every pair carries at most one G/C, so
//! any concatenation of codewords keeps homopolymer runs at or below 3.
//!
//! Enumeration is positional: the pair part of index `i` is the base-10
//! expansion of `i` (or `i / 4` for odd lengths), most significant digit
//! first, and the tail symbol is `TAILS[i % 4]`.

use thiserror::Error;

use crate::nucleotide::{Nucleotide, NucleotideSequence};

use Nucleotide::{A, C, G, T};

/// The ten two-symbol building blocks, in enumeration order.
pub const PAIRS: [[Nucleotide; 2]; 10] = [
    [A, T],
    [A, C],
    [A, G],
    [T, A],
    [T, C],
    [T, G],
    [C, A],
    [C, T],
    [G, A],
    [G, T],
];

/// Tail symbols for odd-length words, in enumeration order.
pub const TAILS: [Nucleotide; 4] = [A, T, C, G];

/// Longest word whose capacity fits in a `u64`.
pub const MAX_LENGTH: usize = 38;

/// Largest magnitude covered by the category table.
pub const MAX_VALUE: i32 = 7775;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PaircodeError {
    #[error("codeword length {0} unsupported (must be 2..={MAX_LENGTH})")]
    BadLength(usize),
    #[error("index {index} out of range for length {length} (capacity {capacity})")]
    IndexOutOfRange {
        length: usize,
        index: u64,
        capacity: u64,
    },
    #[error("malformed codeword at offset {offset}")]
    Malformed { offset: usize },
    #[error("value {0} outside the category table (|v| <= {MAX_VALUE})")]
    ValueOutOfRange(i64),
    #[error("category {0} is not in the table")]
    BadCategory(u8),
}

/// Number of distinct codewords of `length` nucleotides.
pub fn capacity(length: usize) -> Result<u64, PaircodeError> {
    if !(2..=MAX_LENGTH).contains(&length) {
        return Err(PaircodeError::BadLength(length));
    }
    let pairs = 10u64.pow((length / 2) as u32);
    Ok(if length.is_multiple_of(2) {
        pairs
    } else {
        4 * pairs
    })
}

/// Smallest codeword length whose capacity is at least `count`.
pub fn length_for(count: u64) -> Result<usize, PaircodeError> {
    (2..=MAX_LENGTH)
        .find(|&l| capacity(l).is_ok_and(|c| c >= count))
        .ok_or(PaircodeError::BadLength(MAX_LENGTH + 1))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PaircodeWord {
    pub index: u64,
    pub symbols: NucleotideSequence,
}

impl PaircodeWord {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Appends codeword `(length, index)` to `out`.
pub fn write_codeword(
    length: usize,
    index: u64,
    out: &mut Vec<Nucleotide>,
) -> Result<(), PaircodeError> {
    let cap = capacity(length)?;
    if index >= cap {
        return Err(PaircodeError::IndexOutOfRange {
            length,
            index,
            capacity: cap,
        });
    }
    let (mut digits, tail) = if length % 2 == 1 {
        (index / 4, Some(TAILS[(index % 4) as usize]))
    } else {
        (index, None)
    };
    let npairs = length / 2;
    let start = out.len();
    out.resize(start + 2 * npairs, A);
    for k in (0..npairs).rev() {
        let pair = PAIRS[(digits % 10) as usize];
        out[start + 2 * k] = pair[0];
        out[start + 2 * k + 1] = pair[1];
        digits /= 10;
    }
    out.extend(tail);
    Ok(())
}

pub fn codeword(length: usize, index: u64) -> Result<PaircodeWord, PaircodeError> {
    let mut v = Vec::with_capacity(length);
    write_codeword(length, index, &mut v)?;
    Ok(PaircodeWord {
        index,
        symbols: v.into(),
    })
}

fn pair_digit(a: Nucleotide, b: Nucleotide) -> Option<u64> {
    PAIRS
        .iter()
        .position(|p| p[0] == a && p[1] == b)
        .map(|d| d as u64)
}

/// Inverse of [`write_codeword`]; the codeword length is `symbols.len()`.
pub fn read_codeword(symbols: &[Nucleotide]) -> Result<u64, PaircodeError> {
    let length = symbols.len();
    capacity(length)?;
    let mut index = 0u64;
    for (k, pair) in symbols.chunks_exact(2).enumerate() {
        let d = pair_digit(pair[0], pair[1]).ok_or(PaircodeError::Malformed { offset: 2 * k })?;
        index = index * 10 + d;
    }
    if length % 2 == 1 {
        let last = symbols[length - 1];
        let t = TAILS.iter().position(|&n| n == last).unwrap() as u64;
        index = index * 4 + t;
    }
    Ok(index)
}

pub fn index_of(word: &[Nucleotide]) -> Result<u64, PaircodeError> {
    read_codeword(word)
}

/// One row of the category table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CategoryEntry {
    /// Also the codeword length in nucleotides.
    pub category: u8,
    pub lo: i32,
    pub hi: i32,
}

impl CategoryEntry {
    /// Count of representable values, `2 (hi - lo + 1)` for non-zero rows.
    pub fn size(&self) -> u64 {
        if self.category == 0 {
            1
        } else {
            2 * (self.hi - self.lo + 1) as u64
        }
    }

    pub fn length_nt(&self) -> usize {
        self.category as usize
    }
}

/// Value ranges per category. There is deliberately no category 1:
/// single-nucleotide words are not allowed.
pub const CATEGORY_TABLE: [CategoryEntry; 8] = [
    CategoryEntry {
        category: 0,
        lo: 0,
        hi: 0,
    },
    CategoryEntry {
        category: 2,
        lo: 1,
        hi: 5,
    },
    CategoryEntry {
        category: 3,
        lo: 6,
        hi: 25,
    },
    CategoryEntry {
        category: 4,
        lo: 26,
        hi: 75,
    },
    CategoryEntry {
        category: 5,
        lo: 76,
        hi: 275,
    },
    CategoryEntry {
        category: 6,
        lo: 276,
        hi: 775,
    },
    CategoryEntry {
        category: 7,
        lo: 776,
        hi: 2775,
    },
    CategoryEntry {
        category: 8,
        lo: 2776,
        hi: 7775,
    },
];

pub fn category_entry(category: u8) -> Result<CategoryEntry, PaircodeError> {
    CATEGORY_TABLE
        .iter()
        .copied()
        .find(|e| e.category == category)
        .ok_or(PaircodeError::BadCategory(category))
}

pub fn category_of(value: i32) -> Result<CategoryEntry, PaircodeError> {
    let mag = value.unsigned_abs();
    CATEGORY_TABLE
        .iter()
        .copied()
        .find(|e| mag >= e.lo as u32 && mag <= e.hi as u32)
        .ok_or(PaircodeError::ValueOutOfRange(value as i64))
}

/// Position of `value` in `[-hi, .., -lo, lo, .., hi]` of its category.
fn value_index(entry: &CategoryEntry, value: i32) -> u64 {
    if value < 0 {
        (value + entry.hi) as u64
    } else {
        (entry.hi - entry.lo + 1 + value - entry.lo) as u64
    }
}

/// Appends the codeword for a non-zero `value` and returns its category;
/// zero writes nothing and returns category 0.
pub fn write_value(value: i32, out: &mut Vec<Nucleotide>) -> Result<u8, PaircodeError> {
    let entry = category_of(value)?;
    if entry.category != 0 {
        write_codeword(entry.length_nt(), value_index(&entry, value), out)?;
    }
    Ok(entry.category)
}

pub fn encode_value(value: i32) -> Result<(u8, Option<PaircodeWord>), PaircodeError> {
    let entry = category_of(value)?;
    if entry.category == 0 {
        return Ok((0, None));
    }
    let word = codeword(entry.length_nt(), value_index(&entry, value))?;
    Ok((entry.category, Some(word)))
}

pub fn decode_value(category: u8, symbols: &[Nucleotide]) -> Result<i32, PaircodeError> {
    let entry = category_entry(category)?;
    if symbols.len() != entry.length_nt() {
        return Err(PaircodeError::Malformed { offset: 0 });
    }
    if category == 0 {
        return Ok(0);
    }
    let index = read_codeword(symbols)?;
    let half = (entry.hi - entry.lo + 1) as u64;
    if index >= 2 * half {
        return Err(PaircodeError::Malformed { offset: 0 });
    }
    Ok(if index < half {
        index as i32 - entry.hi
    } else {
        entry.lo + (index - half) as i32
    })
}
