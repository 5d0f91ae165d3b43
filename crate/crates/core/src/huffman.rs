//! Canonical Huffman codes over an arbitrary radix.
//!
//! The ternary coder in [`crate::trit`] and the binary baseline in
//! [`crate::binary`] are both thin wrappers over [`PrefixCode`].
//!
//! Table serialization (all integers big-endian):
//!
//! ```text
//! u8        number of padding (dummy) symbols
//! u8        L, the longest code length
//! u16 x L   number of symbols with code length 1..=L
//! u16 x n   symbol ids in canonical order (ascending length, then id)
//! ```
//!
//! Dummy symbols always carry the largest ids, so the decoder recovers
//! them as the `d` largest ids in the list.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

pub type SymbolId = u32;

/// Longest code length accepted by the builder and the table parser.
pub const MAX_CODE_LENGTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HuffmanError {
    #[error("frequency table has no symbol with a positive count")]
    EmptyTable,
    #[error("symbol {0} is not in the code")]
    UnknownSymbol(SymbolId),
    #[error("code length {0} exceeds {MAX_CODE_LENGTH}")]
    TooLong(usize),
    #[error("symbol id {0} does not fit the 16-bit table format")]
    IdTooLarge(SymbolId),
    #[error("malformed code table: {0}")]
    BadTable(&'static str),
    #[error("digit stream ended inside a codeword")]
    Exhausted,
    #[error("decoded padding symbol {0}")]
    DummySymbol(SymbolId),
    #[error("digit {0} out of range for radix {1}")]
    BadDigit(u8, usize),
}

/// Symbol counts keyed by opaque symbol id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolFrequencyTable {
    entries: BTreeMap<SymbolId, u64>,
}

impl SymbolFrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, id: SymbolId, count: u64) {
        *self.entries.entry(id).or_insert(0) += count;
    }

    pub fn increment(&mut self, id: SymbolId) {
        self.add(id, 1);
    }

    pub fn count(&self, id: SymbolId) -> u64 {
        self.entries.get(&id).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, u64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }
}

impl FromIterator<(SymbolId, u64)> for SymbolFrequencyTable {
    fn from_iter<I: IntoIterator<Item = (SymbolId, u64)>>(iter: I) -> Self {
        let mut t = Self::new();
        for (id, c) in iter {
            t.add(id, c);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Child {
    Empty,
    Node(u32),
    Leaf(SymbolId),
}

/// Result of feeding one digit to a [`Walker`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    More,
    Symbol(SymbolId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixCode {
    radix: usize,
    /// `(id, length)` in canonical order, dummies included.
    canonical: Vec<(SymbolId, usize)>,
    codes: BTreeMap<SymbolId, Vec<u8>>,
    dummies: usize,
    dummy_ids: Vec<SymbolId>,
    tree: Vec<[Child; 3]>,
}

impl PrefixCode {
    /// Builds an optimal `radix`-ary Huffman code. Ties merge by
    /// `(weight, smallest contained id)`; codes are then reassigned
    /// canonically.
    pub fn build(freqs: &SymbolFrequencyTable, radix: usize) -> Result<Self, HuffmanError> {
        assert!((2..=3).contains(&radix));
        if freqs.iter().all(|(_, c)| c == 0) {
            return Err(HuffmanError::EmptyTable);
        }
        let mut leaves: Vec<(SymbolId, u64)> = freqs.iter().collect();
        let real = leaves.len();
        let mut next_id = leaves.last().map(|&(id, _)| id + 1).unwrap_or(0);
        let padded = padded_size(real, radix);
        while leaves.len() < padded {
            leaves.push((next_id, 0));
            next_id += 1;
        }
        let lengths = code_lengths(&leaves, radix);
        let mut canonical: Vec<(SymbolId, usize)> = leaves
            .iter()
            .zip(lengths)
            .map(|(&(id, _), len)| (id, len))
            .collect();
        canonical.sort_by_key(|&(id, len)| (len, id));
        Self::from_canonical(radix, canonical, padded - real)
    }

    fn from_canonical(
        radix: usize,
        canonical: Vec<(SymbolId, usize)>,
        dummies: usize,
    ) -> Result<Self, HuffmanError> {
        let mut codes = BTreeMap::new();
        let mut code: u128 = 0;
        let mut prev_len = 0usize;
        for (i, &(id, len)) in canonical.iter().enumerate() {
            if len == 0 || len > MAX_CODE_LENGTH {
                return Err(HuffmanError::TooLong(len));
            }
            if i > 0 {
                code = (code + 1) * (radix as u128).pow((len - prev_len) as u32);
            }
            if code >= (radix as u128).pow(len as u32) {
                return Err(HuffmanError::BadTable(
                    "lengths violate the Kraft inequality",
                ));
            }
            let mut digits = vec![0u8; len];
            let mut c = code;
            for d in digits.iter_mut().rev() {
                *d = (c % radix as u128) as u8;
                c /= radix as u128;
            }
            if codes.insert(id, digits).is_some() {
                return Err(HuffmanError::BadTable("duplicate symbol id"));
            }
            prev_len = len;
        }
        let mut ids: Vec<SymbolId> = canonical.iter().map(|&(id, _)| id).collect();
        ids.sort_unstable();
        let dummy_ids = ids[ids.len() - dummies..].to_vec();
        let mut pc = PrefixCode {
            radix,
            canonical,
            codes,
            dummies,
            dummy_ids,
            tree: Vec::new(),
        };
        pc.build_tree();
        Ok(pc)
    }

    fn build_tree(&mut self) {
        let mut tree = vec![[Child::Empty; 3]];
        for (&id, digits) in &self.codes {
            let mut node = 0usize;
            for (k, &d) in digits.iter().enumerate() {
                let d = d as usize;
                if k + 1 == digits.len() {
                    tree[node][d] = Child::Leaf(id);
                } else {
                    node = match tree[node][d] {
                        Child::Node(n) => n as usize,
                        _ => {
                            tree.push([Child::Empty; 3]);
                            let n = tree.len() - 1;
                            tree[node][d] = Child::Node(n as u32);
                            n
                        }
                    };
                }
            }
        }
        self.tree = tree;
    }

    pub fn radix(&self) -> usize {
        self.radix
    }

    pub fn code(&self, id: SymbolId) -> Option<&[u8]> {
        if self.is_dummy(id) {
            return None;
        }
        self.codes.get(&id).map(Vec::as_slice)
    }

    pub fn len_of(&self, id: SymbolId) -> Option<usize> {
        self.code(id).map(<[u8]>::len)
    }

    /// `(id, length)` in canonical order, padding symbols included.
    pub fn canonical(&self) -> &[(SymbolId, usize)] {
        &self.canonical
    }

    pub fn dummy_count(&self) -> usize {
        self.dummies
    }

    pub fn is_dummy(&self, id: SymbolId) -> bool {
        self.dummy_ids.contains(&id)
    }

    /// Real symbols with their code lengths, ascending id.
    pub fn lengths(&self) -> Vec<(SymbolId, usize)> {
        self.codes
            .iter()
            .filter(|(&id, _)| !self.is_dummy(id))
            .map(|(&id, c)| (id, c.len()))
            .collect()
    }

    /// `sum radix^-len` over all symbols, padding included.
    pub fn kraft_sum(&self) -> f64 {
        self.canonical
            .iter()
            .map(|&(_, l)| (self.radix as f64).powi(-(l as i32)))
            .sum()
    }

    pub fn encode_into(&self, symbols: &[SymbolId], out: &mut Vec<u8>) -> Result<(), HuffmanError> {
        for &s in symbols {
            out.extend_from_slice(self.code(s).ok_or(HuffmanError::UnknownSymbol(s))?);
        }
        Ok(())
    }

    pub fn walker(&self) -> Walker<'_> {
        Walker {
            code: self,
            node: 0,
        }
    }

    /// Decodes `count` symbols from the front of `digits`, returning them
    /// and the number of digits consumed.
    pub fn decode(
        &self,
        digits: &[u8],
        count: usize,
    ) -> Result<(Vec<SymbolId>, usize), HuffmanError> {
        let mut out = Vec::with_capacity(count);
        let mut w = self.walker();
        let mut used = 0;
        let mut it = digits.iter();
        while out.len() < count {
            let &d = it.next().ok_or(HuffmanError::Exhausted)?;
            used += 1;
            if let Step::Symbol(s) = w.push(d)? {
                out.push(s);
            }
        }
        Ok((out, used))
    }

    pub fn serialize(&self, out: &mut Vec<u8>) -> Result<(), HuffmanError> {
        let max_len = self.canonical.iter().map(|&(_, l)| l).max().unwrap_or(0);
        out.push(self.dummies as u8);
        out.push(max_len as u8);
        for len in 1..=max_len {
            let n = self.canonical.iter().filter(|&&(_, l)| l == len).count();
            out.extend_from_slice(&(n as u16).to_be_bytes());
        }
        for &(id, _) in &self.canonical {
            let id16 = u16::try_from(id).map_err(|_| HuffmanError::IdTooLarge(id))?;
            out.extend_from_slice(&id16.to_be_bytes());
        }
        Ok(())
    }

    /// Parses a table from the front of `input`, advancing it.
    pub fn deserialize(input: &mut &[u8], radix: usize) -> Result<Self, HuffmanError> {
        let dummies = take(input, 1)?[0] as usize;
        let max_len = take(input, 1)?[0] as usize;
        if max_len == 0 || max_len > MAX_CODE_LENGTH {
            return Err(HuffmanError::BadTable("bad maximum length"));
        }
        let mut per_len = Vec::with_capacity(max_len);
        for _ in 0..max_len {
            let b = take(input, 2)?;
            per_len.push(u16::from_be_bytes([b[0], b[1]]) as usize);
        }
        let mut canonical = Vec::new();
        for (i, &n) in per_len.iter().enumerate() {
            for _ in 0..n {
                let b = take(input, 2)?;
                canonical.push((u16::from_be_bytes([b[0], b[1]]) as SymbolId, i + 1));
            }
        }
        if canonical.is_empty() || dummies >= canonical.len() {
            return Err(HuffmanError::BadTable("symbol count"));
        }
        let pc = Self::from_canonical(radix, canonical, dummies)?;
        if (pc.kraft_sum() - 1.0).abs() > 1e-9 {
            return Err(HuffmanError::BadTable("code is not complete"));
        }
        Ok(pc)
    }
}

fn take<'a>(input: &mut &'a [u8], n: usize) -> Result<&'a [u8], HuffmanError> {
    if input.len() < n {
        return Err(HuffmanError::BadTable("truncated"));
    }
    let (head, rest) = input.split_at(n);
    *input = rest;
    Ok(head)
}

/// Incremental decoder: feed one digit at a time.
#[derive(Debug, Clone)]
pub struct Walker<'a> {
    code: &'a PrefixCode,
    node: usize,
}

impl Walker<'_> {
    pub fn push(&mut self, digit: u8) -> Result<Step, HuffmanError> {
        if digit as usize >= self.code.radix {
            return Err(HuffmanError::BadDigit(digit, self.code.radix));
        }
        match self.code.tree[self.node][digit as usize] {
            Child::Node(n) => {
                self.node = n as usize;
                Ok(Step::More)
            }
            Child::Leaf(id) => {
                self.node = 0;
                if self.code.is_dummy(id) {
                    Err(HuffmanError::DummySymbol(id))
                } else {
                    Ok(Step::Symbol(id))
                }
            }
            // Unreachable for complete codes built here.
            Child::Empty => Err(HuffmanError::BadTable("incomplete tree")),
        }
    }

    pub fn at_boundary(&self) -> bool {
        self.node == 0
    }
}

/// Leaf count after padding so that every merge takes exactly `radix`
/// nodes. A lone symbol still receives a one-digit code.
fn padded_size(n: usize, radix: usize) -> usize {
    if n <= 1 {
        return radix;
    }
    let mut m = n;
    while !(m - 1).is_multiple_of(radix - 1) {
        m += 1;
    }
    m
}

/// Huffman depths for already-padded leaves, in input order.
fn code_lengths(leaves: &[(SymbolId, u64)], radix: usize) -> Vec<usize> {
    let n = leaves.len();
    let mut parent = vec![usize::MAX; n];
    let mut heap: BinaryHeap<Reverse<(u64, SymbolId, usize)>> = leaves
        .iter()
        .enumerate()
        .map(|(i, &(id, w))| Reverse((w, id, i)))
        .collect();
    while heap.len() > 1 {
        let mut weight = 0;
        let mut min_id = SymbolId::MAX;
        let node = parent.len();
        parent.push(usize::MAX);
        for _ in 0..radix {
            let Reverse((w, id, idx)) = heap.pop().expect("padded leaf count");
            weight += w;
            min_id = min_id.min(id);
            parent[idx] = node;
        }
        heap.push(Reverse((weight, min_id, node)));
    }
    (0..n)
        .map(|mut i| {
            let mut depth = 0;
            while parent[i] != usize::MAX {
                i = parent[i];
                depth += 1;
            }
            depth
        })
        .collect()
}
