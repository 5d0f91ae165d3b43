//! JPEG-DNA: the block pipeline of [`crate::pipeline`] with a quaternary
//! entropy layer.
//!
//! DC categories and AC run/category symbols go through two ternary
//! Huffman codes; each trit is written as a nucleotide that differs from
//! the one before it. Every non-zero value follows its symbol as the
//! PAIRCODE word of length equal to its category. The rotation state runs
//! through the whole strand, PAIRCODE words included, so no Huffman
//! nucleotide ever repeats its predecessor.
//!
//! Strand layout:
//!
//! ```text
//! transcode(u16 header length || header)  payload
//!
//! header = "JD1" | width u16 | height u16 | quality u8 | DC table | AC table
//! ```
//!
//! Integers are big-endian and the tables use the format described in
//! [`crate::huffman`]. The payload's rotation starts from the last
//! nucleotide of the transcoded header. AC symbols are `run << 4 | category`;
//! end-of-block is `0x00` and the sixteen-zero extension is `0xF0`.

use thiserror::Error;

use crate::image::ImageGray8;
use crate::nucleotide::{Nucleotide, NucleotideSequence};
use crate::paircode::{self, PaircodeError};
use crate::pipeline::{
    forward_pipeline, inverse_pipeline, zero_fill, AcRun, BlockIndexStream, BlockIndices,
    CorruptionKind, DecodeFailure, DecodeOutcome, Frame, PipelineError, BLOCK_AREA, ZRL_RUN,
};
use crate::transcode::{detranscode_bytes, transcode_into, TranscodeError, NT_PER_BYTE};
use crate::trit::{
    build_code, nt_to_trit, trit_to_nt, Step, SymbolFrequencyTable, SymbolId, TernaryCode,
    TritError,
};

pub const MAGIC: &[u8; 3] = b"JD1";
pub const EOB: SymbolId = 0x00;
pub const ZRL: SymbolId = 0xF0;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("value not codable: {0}")]
    Value(#[from] PaircodeError),
    #[error("Huffman table: {0}")]
    Table(#[from] TritError),
    #[error("header: {0}")]
    Header(String),
    #[error("header transcoding: {0}")]
    HeaderTranscode(#[from] TranscodeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JpegDnaHeader {
    pub frame: Frame,
    pub dc_code: TernaryCode,
    pub ac_code: TernaryCode,
}

impl JpegDnaHeader {
    pub fn to_bytes(&self) -> Result<Vec<u8>, CodecError> {
        let mut out = MAGIC.to_vec();
        self.frame.write_bytes(&mut out);
        self.dc_code.serialize(&mut out)?;
        self.ac_code.serialize(&mut out)?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let rest = bytes
            .strip_prefix(MAGIC.as_slice())
            .ok_or_else(|| CodecError::Header("bad magic".into()))?;
        let mut input = rest;
        let frame = Frame::read_bytes(&mut input)?;
        let dc_code = TernaryCode::deserialize(&mut input)?;
        let ac_code = TernaryCode::deserialize(&mut input)?;
        if !input.is_empty() {
            return Err(CodecError::Header("trailing header bytes".into()));
        }
        Ok(Self {
            frame,
            dc_code,
            ac_code,
        })
    }

    /// The transcoded, length-prefixed header.
    pub fn to_nucleotides(&self) -> Result<NucleotideSequence, CodecError> {
        let body = self.to_bytes()?;
        let len =
            u16::try_from(body.len()).map_err(|_| CodecError::Header("header too large".into()))?;
        let mut bytes = len.to_be_bytes().to_vec();
        bytes.extend_from_slice(&body);
        let mut out = Vec::new();
        transcode_into(&bytes, &mut out);
        Ok(out.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JpegDnaStream {
    pub header: JpegDnaHeader,
    pub header_nt: NucleotideSequence,
    pub payload: NucleotideSequence,
}

impl JpegDnaStream {
    pub fn total_nt(&self) -> usize {
        self.header_nt.len() + self.payload.len()
    }

    pub fn to_sequence(&self) -> NucleotideSequence {
        self.header_nt.concat(&self.payload)
    }

    /// Splits a strand into header and payload. Header damage is fatal.
    pub fn from_sequence(seq: &[Nucleotide]) -> Result<Self, CodecError> {
        let prefix = 2 * NT_PER_BYTE;
        if seq.len() < prefix {
            return Err(CodecError::Header(
                "strand shorter than the length prefix".into(),
            ));
        }
        let len_bytes = detranscode_bytes(&seq[..prefix])?;
        let len = u16::from_be_bytes([len_bytes[0], len_bytes[1]]) as usize;
        let end = prefix + len * NT_PER_BYTE;
        if seq.len() < end {
            return Err(CodecError::Header("strand shorter than the header".into()));
        }
        let header = JpegDnaHeader::from_bytes(&detranscode_bytes(&seq[prefix..end])?)?;
        Ok(Self {
            header,
            header_nt: seq[..end].into(),
            payload: seq[end..].into(),
        })
    }

    fn rotation_start(&self) -> Nucleotide {
        *self.header_nt.last().expect("header is never empty")
    }
}

fn dc_symbol(category: u8) -> SymbolId {
    category as SymbolId
}

fn ac_symbol(a: &AcRun) -> Result<SymbolId, PaircodeError> {
    if a.is_zrl() {
        return Ok(ZRL);
    }
    let cat = paircode::category_of(a.value)?.category;
    Ok(((a.run as SymbolId) << 4) | cat as SymbolId)
}

/// Symbol frequencies of a block stream (first pass).
pub fn count_symbols(
    indices: &BlockIndexStream,
) -> Result<(SymbolFrequencyTable, SymbolFrequencyTable), CodecError> {
    let mut dc = SymbolFrequencyTable::new();
    let mut ac = SymbolFrequencyTable::new();
    for b in &indices.blocks {
        dc.increment(dc_symbol(paircode::category_of(b.dc_diff)?.category));
        for a in &b.ac {
            ac.increment(ac_symbol(a)?);
        }
        if b.has_eob() {
            ac.increment(EOB);
        }
    }
    Ok((dc, ac))
}

struct NtWriter {
    out: Vec<Nucleotide>,
    prev: Nucleotide,
}

impl NtWriter {
    fn symbol(&mut self, code: &TernaryCode, s: SymbolId) -> Result<(), CodecError> {
        let trits = code.code(s).ok_or(TritError::Huffman(
            crate::huffman::HuffmanError::UnknownSymbol(s),
        ))?;
        for &t in trits {
            self.prev = trit_to_nt(t, self.prev);
            self.out.push(self.prev);
        }
        Ok(())
    }

    fn value(&mut self, v: i32) -> Result<(), CodecError> {
        if paircode::write_value(v, &mut self.out)? != 0 {
            self.prev = *self.out.last().unwrap();
        }
        Ok(())
    }
}

/// Two-pass quaternary entropy coding of `indices`.
pub fn entropy_encode(
    indices: &BlockIndexStream,
    frame: Frame,
) -> Result<JpegDnaStream, CodecError> {
    indices.check()?;
    if frame.blocks() != (indices.blocks_wide, indices.blocks_high) {
        return Err(PipelineError::BlockCount {
            expected: frame.block_count(),
            found: indices.blocks.len(),
        }
        .into());
    }
    let (dc_freq, ac_freq) = count_symbols(indices)?;
    let dc_code = build_code(&dc_freq)?;
    let ac_code = if ac_freq.is_empty() {
        // every block ends in EOB or 63 entries, so this is defensive only
        build_code(&[(EOB, 1)].into_iter().collect())?
    } else {
        build_code(&ac_freq)?
    };
    let header = JpegDnaHeader {
        frame,
        dc_code,
        ac_code,
    };
    let header_nt = header.to_nucleotides()?;
    let mut w = NtWriter {
        out: Vec::new(),
        prev: *header_nt.last().unwrap(),
    };
    for b in &indices.blocks {
        let cat = paircode::category_of(b.dc_diff)?.category;
        w.symbol(&header.dc_code, dc_symbol(cat))?;
        w.value(b.dc_diff)?;
        for a in &b.ac {
            w.symbol(&header.ac_code, ac_symbol(a)?)?;
            if !a.is_zrl() {
                w.value(a.value)?;
            }
        }
        if b.has_eob() {
            w.symbol(&header.ac_code, EOB)?;
        }
    }
    Ok(JpegDnaStream {
        header,
        header_nt,
        payload: w.out.into(),
    })
}

struct NtReader<'a> {
    data: &'a [Nucleotide],
    pos: usize,
    prev: Nucleotide,
}

impl NtReader<'_> {
    fn symbol(&mut self, code: &TernaryCode) -> Result<SymbolId, CorruptionKind> {
        let mut walker = code.walker();
        loop {
            let &n = self.data.get(self.pos).ok_or(CorruptionKind::Exhausted)?;
            let t = nt_to_trit(n, self.prev).ok_or(CorruptionKind::AdjacentRepeat)?;
            self.prev = n;
            self.pos += 1;
            match walker.push(t) {
                Ok(Step::More) => {}
                Ok(Step::Symbol(s)) => return Ok(s),
                Err(_) => return Err(CorruptionKind::DummySymbol),
            }
        }
    }

    fn value(&mut self, category: u8) -> Result<i32, CorruptionKind> {
        if category == 0 {
            return Ok(0);
        }
        let len = category as usize;
        let word = self
            .data
            .get(self.pos..self.pos + len)
            .ok_or(CorruptionKind::Exhausted)?;
        let v = paircode::decode_value(category, word).map_err(|e| match e {
            PaircodeError::BadCategory(_) => CorruptionKind::BadSymbol,
            _ => CorruptionKind::MalformedWord,
        })?;
        self.pos += len;
        self.prev = word[len - 1];
        Ok(v)
    }

    fn block(
        &mut self,
        dc: &TernaryCode,
        ac: &TernaryCode,
    ) -> Result<BlockIndices, CorruptionKind> {
        let dc_cat = self.symbol(dc)?;
        let dc_cat = u8::try_from(dc_cat).map_err(|_| CorruptionKind::BadSymbol)?;
        let dc_diff = self.value(dc_cat)?;
        let mut block = BlockIndices {
            dc_diff,
            ac: Vec::new(),
        };
        let mut span = 0usize;
        while span < BLOCK_AREA - 1 {
            let s = self.symbol(ac)?;
            if s == EOB {
                break;
            }
            let run = (s >> 4) as u8;
            let cat = (s & 0xF) as u8;
            if s > 0xFF || (cat == 0 && run != ZRL_RUN) {
                return Err(CorruptionKind::BadSymbol);
            }
            span += run as usize + 1;
            if span > BLOCK_AREA - 1 {
                return Err(CorruptionKind::BlockOverrun);
            }
            let value = self.value(cat)?;
            block.ac.push(AcRun { run, value });
        }
        if block.ac.last().is_some_and(AcRun::is_zrl) {
            return Err(CorruptionKind::BadSymbol);
        }
        Ok(block)
    }
}

/// Decodes the payload. Exact on clean input; on damaged input, decoding
/// stops at the first structural violation and the remaining blocks are
/// zero-filled.
pub fn entropy_decode(stream: &JpegDnaStream) -> DecodeOutcome {
    let frame = stream.header.frame;
    let (bw, bh) = frame.blocks();
    let n = bw * bh;
    let mut reader = NtReader {
        data: &stream.payload,
        pos: 0,
        prev: stream.rotation_start(),
    };
    let mut blocks = Vec::with_capacity(n);
    let mut block_ends = Vec::with_capacity(n);
    let mut failure = None;
    for block in 0..n {
        match reader.block(&stream.header.dc_code, &stream.header.ac_code) {
            Ok(b) => {
                blocks.push(b);
                block_ends.push(reader.pos);
            }
            Err(kind) => {
                failure = Some(DecodeFailure {
                    block,
                    position: reader.pos,
                    kind,
                });
                break;
            }
        }
    }
    zero_fill(&mut blocks, n);
    let trailing = if failure.is_none() {
        stream.payload.len() - reader.pos
    } else {
        0
    };
    DecodeOutcome {
        indices: BlockIndexStream {
            blocks_wide: bw,
            blocks_high: bh,
            blocks,
        },
        failure,
        block_ends,
        trailing,
    }
}

pub fn encode_image(img: &ImageGray8, quality: u8) -> Result<JpegDnaStream, CodecError> {
    let frame = Frame::of(img, quality)?;
    let indices = forward_pipeline(img, quality)?;
    entropy_encode(&indices, frame)
}

/// Decoded image together with the entropy decoder's damage report.
#[derive(Debug, Clone)]
pub struct DecodedImage {
    pub image: ImageGray8,
    pub outcome: DecodeOutcome,
}

pub fn decode_image(stream: &JpegDnaStream) -> Result<DecodedImage, CodecError> {
    let outcome = entropy_decode(stream);
    let f = stream.header.frame;
    let image = inverse_pipeline(
        &outcome.indices,
        f.quality,
        f.width as usize,
        f.height as usize,
    )?;
    Ok(DecodedImage { image, outcome })
}

/// Full decode from a raw strand (header + payload).
pub fn decode_strand(seq: &[Nucleotide]) -> Result<DecodedImage, CodecError> {
    decode_image(&JpegDnaStream::from_sequence(seq)?)
}
