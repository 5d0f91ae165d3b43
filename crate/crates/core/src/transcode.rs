//! Byte-to-nucleotide transcoding: every byte becomes the 5-nt PAIRCODE
//! word with that index (capacity 400, so indices 256..400 never occur).

use thiserror::Error;

use crate::nucleotide::{Nucleotide, NucleotideSequence};
use crate::paircode::{read_codeword, write_codeword};

pub const NT_PER_BYTE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscodeError {
    #[error("length {0} nt is not a multiple of {NT_PER_BYTE}")]
    Length(usize),
    #[error("invalid byte codeword in group {group}")]
    BadGroup { group: usize },
}

pub fn transcode_into(bytes: &[u8], out: &mut Vec<Nucleotide>) {
    out.reserve(bytes.len() * NT_PER_BYTE);
    for &b in bytes {
        write_codeword(NT_PER_BYTE, b as u64, out).expect("byte fits a 5-nt word");
    }
}

pub fn transcode_bytes(bytes: &[u8]) -> NucleotideSequence {
    let mut out = Vec::new();
    transcode_into(bytes, &mut out);
    out.into()
}

fn group_byte(group: &[Nucleotide]) -> Option<u8> {
    read_codeword(group).ok().and_then(|i| u8::try_from(i).ok())
}

pub fn detranscode_bytes(seq: &[Nucleotide]) -> Result<Vec<u8>, TranscodeError> {
    if !seq.len().is_multiple_of(NT_PER_BYTE) {
        return Err(TranscodeError::Length(seq.len()));
    }
    seq.chunks_exact(NT_PER_BYTE)
        .enumerate()
        .map(|(group, g)| group_byte(g).ok_or(TranscodeError::BadGroup { group }))
        .collect()
}

/// Decodes whole groups up to the first invalid one. Returns the bytes
/// recovered and, if decoding stopped early, the index of the bad group.
/// A trailing partial group is dropped silently.
pub fn detranscode_lenient(seq: &[Nucleotide]) -> (Vec<u8>, Option<usize>) {
    let mut out = Vec::with_capacity(seq.len() / NT_PER_BYTE);
    for (group, g) in seq.chunks_exact(NT_PER_BYTE).enumerate() {
        match group_byte(g) {
            Some(b) => out.push(b),
            None => return (out, Some(group)),
        }
    }
    (out, None)
}

/// Decodes every whole group in place. Groups that are not byte codewords
/// become `0x00`; their group indices are returned. A trailing partial group
/// is dropped.
pub fn detranscode_lossy(seq: &[Nucleotide]) -> (Vec<u8>, Vec<usize>) {
    let mut bad = Vec::new();
    let bytes = seq
        .chunks_exact(NT_PER_BYTE)
        .enumerate()
        .map(|(group, g)| {
            group_byte(g).unwrap_or_else(|| {
                bad.push(group);
                0
            })
        })
        .collect();
    (bytes, bad)
}
