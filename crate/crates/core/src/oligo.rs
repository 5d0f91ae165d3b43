//! Splitting a strand into indexed oligos and putting it back together.
//!
//! Oligo `i` is laid out as
//!
//! ```text
//! codeword(12, i) [length prefix] separator payload
//! ```
//!
//! The length prefix appears only in oligo 0: the strand length as a
//! big-endian `u32`, transcoded at 5 nt/byte (20 nt). It does not use up
//! payload space, so every payload is a plain slice `[i·L, i·L + L)` of the
//! strand. The separator is the first of A, T, C, G that differs from the
//! nucleotide before it and from the first payload nucleotide.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::nucleotide::{Nucleotide, NucleotideSequence};
use crate::paircode::{capacity, read_codeword, write_codeword};
use crate::transcode::{detranscode_bytes, transcode_into};

pub const INDEX_NT: usize = 12;
pub const SEPARATOR_NT: usize = 1;
pub const HEADER_NT: usize = INDEX_NT + SEPARATOR_NT;
pub const LENGTH_PREFIX_NT: usize = 20;
pub const MAX_OLIGO_NT: usize = 300;
pub const MIN_OLIGO_NT: usize = 50;
pub const DEFAULT_PAYLOAD_LEN: usize = 187;
/// Oligo 0 is the longest: header, length prefix and a full payload.
pub const MAX_PAYLOAD_LEN: usize = MAX_OLIGO_NT - HEADER_NT - LENGTH_PREFIX_NT;
pub const MIN_PAYLOAD_LEN: usize = MIN_OLIGO_NT - HEADER_NT;

const SEPARATOR_ORDER: [Nucleotide; 4] =
    [Nucleotide::A, Nucleotide::T, Nucleotide::C, Nucleotide::G];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OligoError {
    #[error("payload length {0} outside {MIN_PAYLOAD_LEN}..={MAX_PAYLOAD_LEN}")]
    PayloadLen(usize),
    #[error("empty strand")]
    EmptyStrand,
    #[error("strand needs {0} oligos, more than the index space")]
    TooLong(usize),
    #[error("oligo too short ({0} nt)")]
    Short(usize),
    #[error("unreadable index word")]
    BadIndex,
    #[error("unreadable length prefix")]
    BadLengthPrefix,
    #[error("index {0} appears with different payloads")]
    Ambiguous(u64),
    #[error("no usable oligos")]
    NothingToReassemble,
}

pub fn check_payload_len(payload_len: usize) -> Result<(), OligoError> {
    if (MIN_PAYLOAD_LEN..=MAX_PAYLOAD_LEN).contains(&payload_len) {
        Ok(())
    } else {
        Err(OligoError::PayloadLen(payload_len))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Oligo {
    pub index: u64,
    /// Strand length, carried by oligo 0 only.
    pub strand_len: Option<u32>,
    pub separator: Nucleotide,
    pub payload: NucleotideSequence,
}

fn separator_between(before: Nucleotide, after: Option<Nucleotide>) -> Nucleotide {
    *SEPARATOR_ORDER
        .iter()
        .find(|&&n| n != before && Some(n) != after)
        .expect("four choices, at most two excluded")
}

impl Oligo {
    pub fn new(index: u64, strand_len: Option<u32>, payload: NucleotideSequence) -> Self {
        let mut head = Vec::new();
        Self::write_head(index, strand_len, &mut head);
        let separator = separator_between(*head.last().unwrap(), payload.first().copied());
        Self {
            index,
            strand_len,
            separator,
            payload,
        }
    }

    fn write_head(index: u64, strand_len: Option<u32>, out: &mut Vec<Nucleotide>) {
        write_codeword(INDEX_NT, index, out).expect("index checked against capacity");
        if let Some(n) = strand_len {
            transcode_into(&n.to_be_bytes(), out);
        }
    }

    pub fn to_sequence(&self) -> NucleotideSequence {
        let mut out = Vec::with_capacity(self.len());
        Self::write_head(self.index, self.strand_len, &mut out);
        out.push(self.separator);
        out.extend_from_slice(&self.payload);
        out.into()
    }

    pub fn len(&self) -> usize {
        HEADER_NT + self.strand_len.map_or(0, |_| LENGTH_PREFIX_NT) + self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self) -> String {
        format!("oligo_{}", self.index)
    }

    /// Parses one sequenced oligo. The separator is not checked; a damaged
    /// separator only shifts the payload.
    pub fn parse(seq: &[Nucleotide]) -> Result<Self, OligoError> {
        if seq.len() < HEADER_NT {
            return Err(OligoError::Short(seq.len()));
        }
        let index = read_codeword(&seq[..INDEX_NT]).map_err(|_| OligoError::BadIndex)?;
        let mut at = INDEX_NT;
        let strand_len = if index == 0 {
            let prefix = seq
                .get(at..at + LENGTH_PREFIX_NT)
                .ok_or(OligoError::Short(seq.len()))?;
            let b = detranscode_bytes(prefix).map_err(|_| OligoError::BadLengthPrefix)?;
            at += LENGTH_PREFIX_NT;
            Some(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        } else {
            None
        };
        let separator = *seq.get(at).ok_or(OligoError::Short(seq.len()))?;
        Ok(Self {
            index,
            strand_len,
            separator,
            payload: seq[at + 1..].into(),
        })
    }
}

pub fn fragment(strand: &[Nucleotide], payload_len: usize) -> Result<Vec<Oligo>, OligoError> {
    check_payload_len(payload_len)?;
    if strand.is_empty() {
        return Err(OligoError::EmptyStrand);
    }
    let count = strand.len().div_ceil(payload_len);
    let total = u32::try_from(strand.len()).map_err(|_| OligoError::TooLong(count))?;
    if count as u64 > capacity(INDEX_NT).expect("valid length") {
        return Err(OligoError::TooLong(count));
    }
    Ok(strand
        .chunks(payload_len)
        .enumerate()
        .map(|(i, chunk)| Oligo::new(i as u64, (i == 0).then_some(total), chunk.into()))
        .collect())
}

/// Placeholder for payload positions with no data: `ATAT…`.
pub fn filler(len: usize) -> impl Iterator<Item = Nucleotide> {
    [Nucleotide::A, Nucleotide::T].into_iter().cycle().take(len)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reassembly {
    pub strand: NucleotideSequence,
    /// Indices with no oligo; their positions hold filler.
    pub missing: Vec<u64>,
    /// Indices whose payload length was wrong and got truncated or padded.
    pub resized: Vec<u64>,
    /// Indices beyond the strand's end, ignored.
    pub extraneous: Vec<u64>,
    pub payload_len: usize,
}

impl Reassembly {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty() && self.resized.is_empty() && self.extraneous.is_empty()
    }
}

fn mode(lengths: impl Iterator<Item = usize>) -> Option<usize> {
    let mut counts = BTreeMap::new();
    for l in lengths {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    // ties go to the longer length
    counts
        .into_iter()
        .max_by_key(|&(l, c)| (c, l))
        .map(|(l, _)| l)
}

/// Rebuilds the strand positionally. `payload_len` defaults to the most
/// common payload length among the non-final oligos. Input order does not
/// matter; identical duplicates are merged.
pub fn reassemble(oligos: &[Oligo], payload_len: Option<usize>) -> Result<Reassembly, OligoError> {
    let mut by_index: BTreeMap<u64, &Oligo> = BTreeMap::new();
    for o in oligos {
        if let Some(prev) = by_index.insert(o.index, o) {
            if prev.payload != o.payload {
                return Err(OligoError::Ambiguous(o.index));
            }
        }
    }
    let (&last, _) = by_index
        .last_key_value()
        .ok_or(OligoError::NothingToReassemble)?;
    let l = match payload_len {
        Some(l) => l,
        None => mode(by_index.range(..last).map(|(_, o)| o.payload.len()))
            .unwrap_or_else(|| by_index[&last].payload.len()),
    };
    if l == 0 {
        return Err(OligoError::PayloadLen(0));
    }
    let total = match by_index.get(&0).and_then(|o| o.strand_len) {
        Some(t) => t as usize,
        None => last as usize * l + by_index[&last].payload.len().min(l),
    };
    let count = total.div_ceil(l) as u64;
    let mut out = Reassembly {
        strand: NucleotideSequence::default(),
        missing: Vec::new(),
        resized: Vec::new(),
        extraneous: by_index.range(count..).map(|(&i, _)| i).collect(),
        payload_len: l,
    };
    let mut strand = Vec::with_capacity(total);
    for i in 0..count {
        let want = l.min(total - i as usize * l);
        match by_index.get(&i) {
            Some(o) => {
                let have = o.payload.len();
                if have != want {
                    out.resized.push(i);
                }
                strand.extend_from_slice(&o.payload[..have.min(want)]);
                strand.extend(filler(want.saturating_sub(have)));
            }
            None => {
                out.missing.push(i);
                strand.extend(filler(want));
            }
        }
    }
    out.strand = strand.into();
    Ok(out)
}

/// Parses raw oligo sequences, returning the readable ones and the input
/// positions of those whose header could not be read.
pub fn parse_all<S: AsRef<[Nucleotide]>>(seqs: &[S]) -> (Vec<Oligo>, Vec<(usize, OligoError)>) {
    let mut ok = Vec::new();
    let mut dropped = Vec::new();
    for (i, s) in seqs.iter().enumerate() {
        match Oligo::parse(s.as_ref()) {
            Ok(o) => ok.push(o),
            Err(e) => dropped.push((i, e)),
        }
    }
    (ok, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcode::transcode_bytes;
    use proptest::prelude::*;

    fn strand(n_bytes: usize, seed: u8) -> NucleotideSequence {
        let bytes: Vec<u8> = (0..n_bytes)
            .map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed))
            .collect();
        transcode_bytes(&bytes)
    }

    #[test]
    fn single_oligo() {
        let s = strand(40, 1);
        assert_eq!(s.len(), 200);
        let s: NucleotideSequence = s[..187].into();
        let o = fragment(&s, 187).unwrap();
        assert_eq!(o.len(), 1);
        let seq = o[0].to_sequence();
        assert_eq!(
            &seq[..12],
            &crate::paircode::codeword(12, 0).unwrap().symbols[..]
        );
        assert_eq!(seq.len(), 12 + 20 + 1 + 187);
    }

    #[test]
    fn four_hundred_nt_in_three_oligos() {
        let s = strand(80, 2);
        let o = fragment(&s, 187).unwrap();
        let sizes: Vec<usize> = o.iter().map(|o| o.payload.len()).collect();
        assert_eq!(sizes, vec![187, 187, 26]);
        assert_eq!(o[0].strand_len, Some(400));
        assert_eq!(o[1].strand_len, None);
    }

    #[test]
    fn payload_len_bounds() {
        let s = strand(10, 0);
        assert_eq!(fragment(&s, 36), Err(OligoError::PayloadLen(36)));
        assert!(fragment(&s, 37).is_ok());
        assert!(fragment(&s, 267).is_ok());
        assert_eq!(fragment(&s, 268), Err(OligoError::PayloadLen(268)));
        assert_eq!(fragment(&[], 100), Err(OligoError::EmptyStrand));
    }

    #[test]
    fn separator_rule() {
        use Nucleotide::*;
        assert_eq!(separator_between(A, Some(T)), C);
        assert_eq!(separator_between(T, Some(A)), C);
        assert_eq!(separator_between(C, Some(C)), A);
        assert_eq!(separator_between(A, None), T);
    }

    #[test]
    fn lost_oligo_is_filled_in_place() {
        let s = strand(120, 3);
        let mut o = fragment(&s, 100).unwrap();
        let lost = o.remove(2);
        o.reverse();
        let r = reassemble(&o, None).unwrap();
        assert_eq!(r.missing, vec![2]);
        assert_eq!(r.strand.len(), s.len());
        let span = 200..200 + lost.payload.len();
        let differing: Vec<usize> = (0..s.len()).filter(|&i| r.strand[i] != s[i]).collect();
        assert!(differing.iter().all(|i| span.contains(i)));
        assert_eq!(&r.strand[..200], &s[..200]);
        assert_eq!(&r.strand[300..], &s[300..]);
    }

    #[test]
    fn deletion_inside_a_payload_stays_local() {
        let s = strand(120, 4);
        let mut seqs: Vec<NucleotideSequence> = fragment(&s, 100)
            .unwrap()
            .iter()
            .map(Oligo::to_sequence)
            .collect();
        let mut v = seqs[3].clone().into_vec();
        v.remove(40);
        seqs[3] = v.into();
        let (o, dropped) = parse_all(&seqs);
        assert!(dropped.is_empty());
        let r = reassemble(&o, None).unwrap();
        assert_eq!(r.resized, vec![3]);
        assert_eq!(&r.strand[..300], &s[..300]);
        assert_eq!(&r.strand[400..], &s[400..]);
    }

    #[test]
    fn duplicates() {
        let s = strand(60, 5);
        let mut o = fragment(&s, 100).unwrap();
        o.push(o[1].clone());
        assert_eq!(reassemble(&o, None).unwrap().strand, s);
        let mut other = o[1].clone();
        other.payload = NucleotideSequence::from_iter(filler(100));
        o.push(other);
        assert_eq!(reassemble(&o, None), Err(OligoError::Ambiguous(1)));
    }

    #[test]
    fn bad_header_is_dropped() {
        let s = strand(60, 6);
        let mut seqs: Vec<NucleotideSequence> = fragment(&s, 100)
            .unwrap()
            .iter()
            .map(Oligo::to_sequence)
            .collect();
        // "GG" is not a pair of the index alphabet
        let mut v = seqs[1].clone().into_vec();
        v[0] = Nucleotide::G;
        v[1] = Nucleotide::G;
        seqs[1] = v.into();
        let (o, dropped) = parse_all(&seqs);
        assert_eq!(dropped, vec![(1, OligoError::BadIndex)]);
        assert_eq!(reassemble(&o, None).unwrap().missing, vec![1]);
    }

    proptest! {
        #[test]
        fn round_trip(bytes in prop::collection::vec(any::<u8>(), 1..400), l in MIN_PAYLOAD_LEN..=MAX_PAYLOAD_LEN) {
            let s = transcode_bytes(&bytes);
            let oligos = fragment(&s, l).unwrap();
            let seqs: Vec<NucleotideSequence> = oligos.iter().map(Oligo::to_sequence).collect();
            for q in &seqs {
                prop_assert!(q.len() <= MAX_OLIGO_NT && q.len() >= HEADER_NT);
                prop_assert!(q.validate(3).runs_ok());
            }
            let (parsed, dropped) = parse_all(&seqs);
            prop_assert!(dropped.is_empty());
            prop_assert_eq!(&parsed, &oligos);
            let r = reassemble(&parsed, None).unwrap();
            prop_assert!(r.is_complete());
            prop_assert_eq!(r.strand, s);
        }
    }
}
