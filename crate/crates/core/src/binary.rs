//! Classical binary entropy coding of a [`BlockIndexStream`], and the
//! "transcoding" method built on it: the binary stream's bytes mapped to
//! nucleotides at 5 nt/byte.
//!
//! Byte layout (big-endian):
//!
//! ```text
//! "JB1" | width u16 | height u16 | quality u8 | DC table | AC table | payload
//! ```
//!
//! Tables use the [`crate::huffman`] serialization with radix 2. The payload
//! is the bit string MSB first, padded with 1-bits to a byte boundary.
//! Categories follow classical JPEG: category k holds 2^(k-1) <= |v| < 2^k,
//! coded in k bits, negatives as `v + 2^k - 1`.

use bitstream_io::{BigEndian, BitRead, BitReader, BitWrite, BitWriter};
use thiserror::Error;

use crate::huffman::{HuffmanError, PrefixCode, Step, SymbolFrequencyTable, SymbolId};
use crate::image::ImageGray8;
use crate::jpegdna::{DecodedImage, EOB, ZRL};
use crate::nucleotide::{Nucleotide, NucleotideSequence};
use crate::pipeline::{
    forward_pipeline, inverse_pipeline, zero_fill, AcRun, BlockIndexStream, BlockIndices,
    CorruptionKind, DecodeFailure, DecodeOutcome, Frame, PipelineError, BLOCK_AREA, ZRL_RUN,
};
use crate::transcode::{detranscode_lossy, transcode_bytes};

pub const MAGIC: &[u8; 3] = b"JB1";
/// Largest classical category; DCT indices of 8-bit samples stay well below.
pub const MAX_CATEGORY: u8 = 15;

#[derive(Debug, Error)]
pub enum BinaryError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("Huffman table: {0}")]
    Table(#[from] HuffmanError),
    #[error("value {0} exceeds category {MAX_CATEGORY}")]
    Value(i32),
    #[error("header: {0}")]
    Header(String),
}

/// Classical magnitude category: number of bits of |v|.
pub fn category(v: i32) -> u8 {
    (32 - v.unsigned_abs().leading_zeros()) as u8
}

/// The `category(v)` low bits representing `v`.
pub fn magnitude_bits(v: i32) -> u32 {
    let k = category(v) as u32;
    if v >= 0 {
        v as u32
    } else {
        (v + (1 << k) - 1) as u32
    }
}

pub fn value_from_bits(k: u8, bits: u32) -> i32 {
    if k == 0 {
        return 0;
    }
    if bits >> (k - 1) & 1 == 1 {
        bits as i32
    } else {
        bits as i32 - (1 << k) + 1
    }
}

fn checked_category(v: i32) -> Result<u8, BinaryError> {
    let k = category(v);
    if k > MAX_CATEGORY {
        return Err(BinaryError::Value(v));
    }
    Ok(k)
}

fn ac_symbol(a: &AcRun) -> Result<SymbolId, BinaryError> {
    if a.is_zrl() {
        return Ok(ZRL);
    }
    Ok(((a.run as SymbolId) << 4) | checked_category(a.value)? as SymbolId)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryHeader {
    pub frame: Frame,
    pub dc_code: PrefixCode,
    pub ac_code: PrefixCode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryJpegStream {
    pub header: BinaryHeader,
    pub payload: Vec<u8>,
}

impl BinaryJpegStream {
    pub fn to_bytes(&self) -> Result<Vec<u8>, BinaryError> {
        let mut out = MAGIC.to_vec();
        self.header.frame.write_bytes(&mut out);
        self.header.dc_code.serialize(&mut out)?;
        self.header.ac_code.serialize(&mut out)?;
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Parses the header; everything after it is payload. Header damage is
    /// fatal.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BinaryError> {
        let mut input = bytes
            .strip_prefix(MAGIC.as_slice())
            .ok_or_else(|| BinaryError::Header("bad magic".into()))?;
        let frame = Frame::read_bytes(&mut input)?;
        let dc_code = PrefixCode::deserialize(&mut input, 2)?;
        let ac_code = PrefixCode::deserialize(&mut input, 2)?;
        Ok(Self {
            header: BinaryHeader {
                frame,
                dc_code,
                ac_code,
            },
            payload: input.to_vec(),
        })
    }

    pub fn header_len(&self) -> usize {
        self.to_bytes()
            .map(|b| b.len() - self.payload.len())
            .unwrap_or(0)
    }
}

pub fn count_symbols(
    indices: &BlockIndexStream,
) -> Result<(SymbolFrequencyTable, SymbolFrequencyTable), BinaryError> {
    let mut dc = SymbolFrequencyTable::new();
    let mut ac = SymbolFrequencyTable::new();
    for b in &indices.blocks {
        dc.increment(checked_category(b.dc_diff)? as SymbolId);
        for a in &b.ac {
            ac.increment(ac_symbol(a)?);
        }
        if b.has_eob() {
            ac.increment(EOB);
        }
    }
    if ac.is_empty() {
        ac.increment(EOB);
    }
    Ok((dc, ac))
}

struct BitSink(BitWriter<Vec<u8>, BigEndian>);

impl BitSink {
    fn symbol(&mut self, code: &PrefixCode, s: SymbolId) -> Result<(), BinaryError> {
        let digits = code.code(s).ok_or(HuffmanError::UnknownSymbol(s))?;
        for &d in digits {
            self.bit(d == 1);
        }
        Ok(())
    }

    fn bit(&mut self, b: bool) {
        self.0.write_bit(b).expect("writing to a Vec");
    }

    fn value(&mut self, v: i32) {
        let k = category(v) as u32;
        if k > 0 {
            self.0
                .write_var(k, magnitude_bits(v))
                .expect("writing to a Vec");
        }
    }

    fn finish(mut self) -> Vec<u8> {
        while !self.0.byte_aligned() {
            self.bit(true);
        }
        self.0.into_writer()
    }
}

pub fn binary_entropy_encode(
    indices: &BlockIndexStream,
    frame: Frame,
) -> Result<BinaryJpegStream, BinaryError> {
    indices.check()?;
    if frame.blocks() != (indices.blocks_wide, indices.blocks_high) {
        return Err(PipelineError::BlockCount {
            expected: frame.block_count(),
            found: indices.blocks.len(),
        }
        .into());
    }
    let (dc_freq, ac_freq) = count_symbols(indices)?;
    let header = BinaryHeader {
        frame,
        dc_code: PrefixCode::build(&dc_freq, 2)?,
        ac_code: PrefixCode::build(&ac_freq, 2)?,
    };
    let mut w = BitSink(BitWriter::endian(Vec::new(), BigEndian));
    for b in &indices.blocks {
        w.symbol(&header.dc_code, category(b.dc_diff) as SymbolId)?;
        w.value(b.dc_diff);
        for a in &b.ac {
            w.symbol(&header.ac_code, ac_symbol(a)?)?;
            w.value(a.value);
        }
        if b.has_eob() {
            w.symbol(&header.ac_code, EOB)?;
        }
    }
    Ok(BinaryJpegStream {
        header,
        payload: w.finish(),
    })
}

struct BitSource<'a> {
    r: BitReader<&'a [u8], BigEndian>,
    pos: usize,
}

impl BitSource<'_> {
    fn bit(&mut self) -> Result<bool, CorruptionKind> {
        let b = self.r.read_bit().map_err(|_| CorruptionKind::Exhausted)?;
        self.pos += 1;
        Ok(b)
    }

    fn symbol(&mut self, code: &PrefixCode) -> Result<SymbolId, CorruptionKind> {
        let mut walker = code.walker();
        loop {
            let d = self.bit()? as u8;
            match walker.push(d) {
                Ok(Step::More) => {}
                Ok(Step::Symbol(s)) => return Ok(s),
                Err(_) => return Err(CorruptionKind::DummySymbol),
            }
        }
    }

    fn value(&mut self, k: u8) -> Result<i32, CorruptionKind> {
        if k == 0 {
            return Ok(0);
        }
        let bits: u32 = self
            .r
            .read_var(k as u32)
            .map_err(|_| CorruptionKind::Exhausted)?;
        self.pos += k as usize;
        Ok(value_from_bits(k, bits))
    }

    fn block(&mut self, dc: &PrefixCode, ac: &PrefixCode) -> Result<BlockIndices, CorruptionKind> {
        let k = self.symbol(dc)?;
        if k > MAX_CATEGORY as SymbolId {
            return Err(CorruptionKind::BadSymbol);
        }
        let dc_diff = self.value(k as u8)?;
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
            let k = (s & 0xF) as u8;
            if s > 0xFF || (k == 0 && run != ZRL_RUN) {
                return Err(CorruptionKind::BadSymbol);
            }
            span += run as usize + 1;
            if span > BLOCK_AREA - 1 {
                return Err(CorruptionKind::BlockOverrun);
            }
            block.ac.push(AcRun {
                run,
                value: self.value(k)?,
            });
        }
        if block.ac.last().is_some_and(AcRun::is_zrl) {
            return Err(CorruptionKind::BadSymbol);
        }
        Ok(block)
    }
}

/// Inverse of [`binary_entropy_encode`]; damaged payloads are decoded up to
/// the first violation and zero-filled. Positions are in bits.
pub fn binary_entropy_decode(stream: &BinaryJpegStream) -> DecodeOutcome {
    let (bw, bh) = stream.header.frame.blocks();
    let n = bw * bh;
    let mut src = BitSource {
        r: BitReader::endian(stream.payload.as_slice(), BigEndian),
        pos: 0,
    };
    let mut blocks = Vec::with_capacity(n);
    let mut block_ends = Vec::with_capacity(n);
    let mut failure = None;
    for block in 0..n {
        match src.block(&stream.header.dc_code, &stream.header.ac_code) {
            Ok(b) => {
                blocks.push(b);
                block_ends.push(src.pos);
            }
            Err(kind) => {
                failure = Some(DecodeFailure {
                    block,
                    position: src.pos,
                    kind,
                });
                break;
            }
        }
    }
    zero_fill(&mut blocks, n);
    let trailing = if failure.is_none() {
        // padding to the byte boundary is not leftover data
        (stream.payload.len() * 8).saturating_sub(src.pos.next_multiple_of(8))
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

pub fn encode_image_binary(img: &ImageGray8, quality: u8) -> Result<BinaryJpegStream, BinaryError> {
    let frame = Frame::of(img, quality)?;
    binary_entropy_encode(&forward_pipeline(img, quality)?, frame)
}

pub fn decode_image_binary(stream: &BinaryJpegStream) -> Result<DecodedImage, BinaryError> {
    let outcome = binary_entropy_decode(stream);
    let f = stream.header.frame;
    let image = inverse_pipeline(
        &outcome.indices,
        f.quality,
        f.width as usize,
        f.height as usize,
    )?;
    Ok(DecodedImage { image, outcome })
}

/// The transcoding method: binary JPEG-style bytes, 5 nt per byte.
pub fn encode_transcoded(img: &ImageGray8, quality: u8) -> Result<NucleotideSequence, BinaryError> {
    Ok(transcode_bytes(
        &encode_image_binary(img, quality)?.to_bytes()?,
    ))
}

/// Decodes a transcoded strand. Every 5-nt group is read at its position,
/// so after an insertion or deletion all later bytes come out wrong; groups
/// that are not byte codewords read as `0x00`. The binary decoder then runs
/// until it meets a structural violation and zero-fills from there.
pub fn decode_transcoded(seq: &[Nucleotide]) -> Result<DecodedImage, BinaryError> {
    let (bytes, _) = detranscode_lossy(seq);
    decode_image_binary(&BinaryJpegStream::from_bytes(&bytes)?)
}
