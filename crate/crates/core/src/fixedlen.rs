//! Fixed-length coding: orthonormal Haar DWT, one uniform quantizer per
//! subband, and one fixed-length PAIRCODE word per coefficient.
//!
//! Every coefficient sits at an offset computable from the layout alone, so
//! damage to one word never moves another.
//!
//! Subbands are stored LL first, then HL, LH, HH for each level from the
//! coarsest to the finest, each in raster order. HL holds horizontal detail
//! (right half of a level), LH vertical detail (bottom half).
//!
//! Strand layout: `transcode(header) payload`, header bytes (big-endian)
//!
//! ```text
//! "FL1" | width u16 | height u16 | levels u8 | per subband: step f64, min index i32, word length u8
//! ```

use std::f64::consts::FRAC_1_SQRT_2;

use thiserror::Error;

use crate::image::ImageGray8;
use crate::nucleotide::{Nucleotide, NucleotideSequence};
use crate::paircode::{capacity, length_for, read_codeword, write_codeword, MAX_LENGTH};
use crate::transcode::{detranscode_bytes, transcode_into, NT_PER_BYTE};

pub const MAGIC: &[u8; 3] = b"FL1";
pub const DEFAULT_LEVELS: u8 = 3;
pub const MAX_LEVELS: u8 = 8;
const FIXED_HEADER_BYTES: usize = 8;
const BAND_BYTES: usize = 13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixedError {
    #[error("levels must be in 1..={MAX_LEVELS}, got {0}")]
    Levels(u8),
    #[error("quantizer step must be positive and finite, got {0}")]
    Step(f64),
    #[error("subband {band}: word length {length} cannot hold {range} indices")]
    Capacity { band: usize, length: u8, range: u64 },
    #[error("layout has {found} subbands, expected {expected}")]
    BandCount { expected: usize, found: usize },
    #[error("image {width}x{height} does not match layout {lw}x{lh}")]
    Dimensions {
        width: usize,
        height: usize,
        lw: usize,
        lh: usize,
    },
    #[error("header: {0}")]
    Header(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    LL,
    HL,
    LH,
    HH,
}

/// A subband's rectangle inside the transformed plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subband {
    pub orientation: Orientation,
    /// 1 is the finest level; the LL band carries the coarsest level.
    pub level: u8,
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Subband {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dimensions after padding to a multiple of `2^levels`.
pub fn padded_dims(width: usize, height: usize, levels: u8) -> (usize, usize) {
    let m = 1usize << levels;
    (width.div_ceil(m) * m, height.div_ceil(m) * m)
}

/// Subbands of a `width`×`height` plane (already padded) in stream order.
pub fn subbands(width: usize, height: usize, levels: u8) -> Vec<Subband> {
    let (w, h) = (width >> levels, height >> levels);
    let mut out = vec![Subband {
        orientation: Orientation::LL,
        level: levels,
        x: 0,
        y: 0,
        width: w,
        height: h,
    }];
    for level in (1..=levels).rev() {
        let (w, h) = (width >> level, height >> level);
        for (orientation, x, y) in [
            (Orientation::HL, w, 0),
            (Orientation::LH, 0, h),
            (Orientation::HH, w, h),
        ] {
            out.push(Subband {
                orientation,
                level,
                x,
                y,
                width: w,
                height: h,
            });
        }
    }
    out
}

/// Real-valued plane holding Haar coefficients in the usual nested layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn from_image(img: &ImageGray8) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.samples().iter().map(|&s| s as f64).collect(),
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    fn band_values(&self, b: &Subband) -> impl Iterator<Item = f64> + '_ {
        let b = *b;
        (b.y..b.y + b.height).flat_map(move |y| (b.x..b.x + b.width).map(move |x| self.at(x, y)))
    }
}

fn haar_step(buf: &mut [f64], tmp: &mut Vec<f64>) {
    let half = buf.len() / 2;
    tmp.clear();
    tmp.extend((0..half).map(|i| (buf[2 * i] + buf[2 * i + 1]) * FRAC_1_SQRT_2));
    tmp.extend((0..half).map(|i| (buf[2 * i] - buf[2 * i + 1]) * FRAC_1_SQRT_2));
    buf.copy_from_slice(tmp);
}

fn haar_unstep(buf: &mut [f64], tmp: &mut Vec<f64>) {
    let half = buf.len() / 2;
    tmp.clear();
    for i in 0..half {
        let (s, d) = (buf[i], buf[half + i]);
        tmp.push((s + d) * FRAC_1_SQRT_2);
        tmp.push((s - d) * FRAC_1_SQRT_2);
    }
    buf.copy_from_slice(tmp);
}

/// Applies `f` to every row, then every column, of the top-left `w`×`h`.
fn separable(
    p: &mut Plane,
    w: usize,
    h: usize,
    rows_first: bool,
    f: fn(&mut [f64], &mut Vec<f64>),
) {
    let mut tmp = Vec::new();
    let mut line = Vec::new();
    let rows = |p: &mut Plane, tmp: &mut Vec<f64>| {
        for y in 0..h {
            let start = y * p.width;
            f(&mut p.data[start..start + w], tmp);
        }
    };
    let cols = |p: &mut Plane, tmp: &mut Vec<f64>, line: &mut Vec<f64>| {
        for x in 0..w {
            line.clear();
            line.extend((0..h).map(|y| p.data[y * p.width + x]));
            f(line, tmp);
            for (y, &v) in line.iter().enumerate() {
                p.data[y * p.width + x] = v;
            }
        }
    };
    if rows_first {
        rows(p, &mut tmp);
        cols(p, &mut tmp, &mut line);
    } else {
        cols(p, &mut tmp, &mut line);
        rows(p, &mut tmp);
    }
}

/// Forward transform in place. Dimensions must be multiples of `2^levels`.
pub fn dwt_forward(p: &mut Plane, levels: u8) {
    assert!(p.width.is_multiple_of(1 << levels) && p.height.is_multiple_of(1 << levels));
    for l in 0..levels {
        separable(p, p.width >> l, p.height >> l, true, haar_step);
    }
}

pub fn dwt_inverse(p: &mut Plane, levels: u8) {
    assert!(p.width.is_multiple_of(1 << levels) && p.height.is_multiple_of(1 << levels));
    for l in (0..levels).rev() {
        separable(p, p.width >> l, p.height >> l, false, haar_unstep);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandQuantizer {
    pub step: f64,
    /// Index coded as codeword 0.
    pub min_index: i32,
    /// Codeword length in nucleotides.
    pub length: u8,
}

impl BandQuantizer {
    pub fn index_range(&self) -> u64 {
        capacity(self.length as usize).unwrap_or(0)
    }

    pub fn max_index(&self) -> i64 {
        (self.min_index as i128 + self.index_range() as i128 - 1).min(i64::MAX as i128) as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandLayout {
    pub width: usize,
    pub height: usize,
    pub levels: u8,
    pub bands: Vec<BandQuantizer>,
}

/// Quantizer step of a subband: `base` for LL, doubling with each level
/// toward the finest details.
pub fn default_step(base: f64, levels: u8, band: &Subband) -> f64 {
    match band.orientation {
        Orientation::LL => base,
        _ => base * (1u64 << (levels - band.level)) as f64,
    }
}

pub fn quantize(coef: f64, step: f64) -> i32 {
    (coef / step).round() as i32
}

fn check_levels(levels: u8) -> Result<(), FixedError> {
    if (1..=MAX_LEVELS).contains(&levels) {
        Ok(())
    } else {
        Err(FixedError::Levels(levels))
    }
}

impl SubbandLayout {
    pub fn padded_dims(&self) -> (usize, usize) {
        padded_dims(self.width, self.height, self.levels)
    }

    pub fn subbands(&self) -> Vec<Subband> {
        let (w, h) = self.padded_dims();
        subbands(w, h, self.levels)
    }

    pub fn check(&self) -> Result<(), FixedError> {
        check_levels(self.levels)?;
        let expected = 3 * self.levels as usize + 1;
        if self.bands.len() != expected {
            return Err(FixedError::BandCount {
                expected,
                found: self.bands.len(),
            });
        }
        for (band, q) in self.bands.iter().enumerate() {
            if !(q.step > 0.0 && q.step.is_finite()) {
                return Err(FixedError::Step(q.step));
            }
            if !(2..=MAX_LENGTH).contains(&(q.length as usize)) {
                return Err(FixedError::Capacity {
                    band,
                    length: q.length,
                    range: 0,
                });
            }
        }
        Ok(())
    }

    /// Sized from a pre-scan of `img`: each band's word length is the
    /// shortest whose capacity covers the band's actual index range.
    pub fn plan(img: &ImageGray8, levels: u8, base_step: f64) -> Result<Self, FixedError> {
        check_levels(levels)?;
        if !(base_step > 0.0 && base_step.is_finite()) {
            return Err(FixedError::Step(base_step));
        }
        let plane = transformed(img, levels);
        let mut bands = Vec::new();
        for (i, b) in subbands(plane.width, plane.height, levels)
            .iter()
            .enumerate()
        {
            let step = default_step(base_step, levels, b);
            let (lo, hi) = plane
                .band_values(b)
                .map(|c| quantize(c, step))
                .fold((i32::MAX, i32::MIN), |(lo, hi), q| (lo.min(q), hi.max(q)));
            let range = (hi as i64 - lo as i64 + 1) as u64;
            let length = length_for(range).map_err(|_| FixedError::Capacity {
                band: i,
                length: MAX_LENGTH as u8,
                range,
            })?;
            bands.push(BandQuantizer {
                step,
                min_index: lo,
                length: length.max(2) as u8,
            });
        }
        Ok(Self {
            width: img.width(),
            height: img.height(),
            levels,
            bands,
        })
    }

    /// Payload length in nucleotides.
    pub fn payload_nt(&self) -> usize {
        self.subbands()
            .iter()
            .zip(&self.bands)
            .map(|(b, q)| b.len() * q.length as usize)
            .sum()
    }

    /// Start offset of every coefficient's word, in stream order, plus the
    /// total as a final entry.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = vec![0];
        let mut at = 0;
        for (b, q) in self.subbands().iter().zip(&self.bands) {
            for _ in 0..b.len() {
                at += q.length as usize;
                out.push(at);
            }
        }
        out
    }

    pub fn header_bytes(&self) -> usize {
        FIXED_HEADER_BYTES + BAND_BYTES * self.bands.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&(self.width as u16).to_be_bytes());
        out.extend_from_slice(&(self.height as u16).to_be_bytes());
        out.push(self.levels);
        for q in &self.bands {
            out.extend_from_slice(&q.step.to_be_bytes());
            out.extend_from_slice(&q.min_index.to_be_bytes());
            out.push(q.length);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FixedError> {
        let bad = |m: &str| FixedError::Header(m.to_string());
        if bytes.len() < FIXED_HEADER_BYTES || &bytes[..3] != MAGIC {
            return Err(bad("bad magic"));
        }
        let width = u16::from_be_bytes([bytes[3], bytes[4]]) as usize;
        let height = u16::from_be_bytes([bytes[5], bytes[6]]) as usize;
        let levels = bytes[7];
        check_levels(levels)?;
        if width == 0 || height == 0 {
            return Err(bad("zero dimension"));
        }
        let n = 3 * levels as usize + 1;
        let body = &bytes[FIXED_HEADER_BYTES..];
        if body.len() != n * BAND_BYTES {
            return Err(bad("wrong header length"));
        }
        let bands = body
            .chunks_exact(BAND_BYTES)
            .map(|c| BandQuantizer {
                step: f64::from_be_bytes(c[..8].try_into().unwrap()),
                min_index: i32::from_be_bytes(c[8..12].try_into().unwrap()),
                length: c[12],
            })
            .collect();
        let layout = Self {
            width,
            height,
            levels,
            bands,
        };
        layout.check()?;
        Ok(layout)
    }

    /// Transcoded header length in nucleotides.
    pub fn header_nt(&self) -> usize {
        self.header_bytes() * NT_PER_BYTE
    }
}

fn transformed(img: &ImageGray8, levels: u8) -> Plane {
    let mut plane = Plane::from_image(&img.padded_to(1 << levels));
    dwt_forward(&mut plane, levels);
    plane
}

/// Quantizer indices in stream order.
pub fn quantize_image(img: &ImageGray8, layout: &SubbandLayout) -> Result<Vec<i32>, FixedError> {
    layout.check()?;
    if (img.width(), img.height()) != (layout.width, layout.height) {
        return Err(FixedError::Dimensions {
            width: img.width(),
            height: img.height(),
            lw: layout.width,
            lh: layout.height,
        });
    }
    let plane = transformed(img, layout.levels);
    let mut out = Vec::with_capacity(plane.data.len());
    for (b, q) in layout.subbands().iter().zip(&layout.bands) {
        out.extend(plane.band_values(b).map(|c| quantize(c, q.step)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedEncoding {
    pub payload: NucleotideSequence,
    /// Indices pulled back into their band's codeword range.
    pub clamped: usize,
}

pub fn encode_indices(
    indices: &[i32],
    layout: &SubbandLayout,
) -> Result<FixedEncoding, FixedError> {
    layout.check()?;
    let mut out = Vec::with_capacity(layout.payload_nt());
    let mut clamped = 0;
    let mut it = indices.iter();
    for (b, q) in layout.subbands().iter().zip(&layout.bands) {
        for _ in 0..b.len() {
            let &v = it
                .next()
                .ok_or_else(|| FixedError::Header("too few indices".into()))?;
            let c = (v as i64).clamp(q.min_index as i64, q.max_index());
            if c != v as i64 {
                clamped += 1;
            }
            write_codeword(q.length as usize, (c - q.min_index as i64) as u64, &mut out)
                .expect("index within capacity");
        }
    }
    Ok(FixedEncoding {
        payload: out.into(),
        clamped,
    })
}

pub fn encode_fixed(img: &ImageGray8, layout: &SubbandLayout) -> Result<FixedEncoding, FixedError> {
    encode_indices(&quantize_image(img, layout)?, layout)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexDecode {
    pub indices: Vec<i32>,
    /// Coefficients (stream order) whose word was not a valid codeword.
    pub malformed: Vec<usize>,
    /// Coefficients whose word lies beyond the end of the payload.
    pub missing: usize,
}

/// Reads every coefficient's word at its fixed offset. A bad or absent word
/// yields index 0 for that coefficient only.
pub fn decode_indices(
    payload: &[Nucleotide],
    layout: &SubbandLayout,
) -> Result<IndexDecode, FixedError> {
    layout.check()?;
    let mut out = IndexDecode {
        indices: Vec::new(),
        malformed: Vec::new(),
        missing: 0,
    };
    let mut at = 0;
    for (b, q) in layout.subbands().iter().zip(&layout.bands) {
        let len = q.length as usize;
        for _ in 0..b.len() {
            let k = out.indices.len();
            let v = match payload.get(at..at + len) {
                None => {
                    out.missing += 1;
                    0
                }
                Some(word) => match read_codeword(word) {
                    Ok(i) => {
                        (q.min_index as i64 + i as i64).clamp(i32::MIN as i64, i32::MAX as i64)
                            as i32
                    }
                    Err(_) => {
                        out.malformed.push(k);
                        0
                    }
                },
            };
            out.indices.push(v);
            at += len;
        }
    }
    Ok(out)
}

/// Dequantizes, inverts the transform, rounds and crops.
pub fn reconstruct(indices: &[i32], layout: &SubbandLayout) -> Result<ImageGray8, FixedError> {
    layout.check()?;
    let (w, h) = layout.padded_dims();
    let mut plane = Plane {
        width: w,
        height: h,
        data: vec![0.0; w * h],
    };
    let mut it = indices.iter();
    for (b, q) in layout.subbands().iter().zip(&layout.bands) {
        for y in b.y..b.y + b.height {
            for x in b.x..b.x + b.width {
                let v = *it
                    .next()
                    .ok_or_else(|| FixedError::Header("too few indices".into()))?;
                plane.data[y * w + x] = v as f64 * q.step;
            }
        }
    }
    dwt_inverse(&mut plane, layout.levels);
    let full = ImageGray8::from_fn(w, h, |x, y| plane.at(x, y).round().clamp(0.0, 255.0) as u8);
    Ok(full.cropped(layout.width, layout.height))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedDecoded {
    pub image: ImageGray8,
    pub decode: IndexDecode,
}

pub fn decode_fixed(
    payload: &[Nucleotide],
    layout: &SubbandLayout,
) -> Result<FixedDecoded, FixedError> {
    let decode = decode_indices(payload, layout)?;
    let image = reconstruct(&decode.indices, layout)?;
    Ok(FixedDecoded { image, decode })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedStrand {
    pub layout: SubbandLayout,
    pub header_nt: NucleotideSequence,
    pub payload: NucleotideSequence,
    pub clamped: usize,
}

impl FixedStrand {
    pub fn to_sequence(&self) -> NucleotideSequence {
        self.header_nt.concat(&self.payload)
    }

    pub fn total_nt(&self) -> usize {
        self.header_nt.len() + self.payload.len()
    }
}

/// Plans the layout, encodes, and puts the transcoded header in front.
pub fn encode_strand(
    img: &ImageGray8,
    levels: u8,
    base_step: f64,
) -> Result<FixedStrand, FixedError> {
    let layout = SubbandLayout::plan(img, levels, base_step)?;
    let enc = encode_fixed(img, &layout)?;
    let mut header_nt = Vec::new();
    transcode_into(&layout.to_bytes(), &mut header_nt);
    Ok(FixedStrand {
        layout,
        header_nt: header_nt.into(),
        payload: enc.payload,
        clamped: enc.clamped,
    })
}

/// Reads the header off a strand. Header damage is fatal.
pub fn split_strand(seq: &[Nucleotide]) -> Result<(SubbandLayout, &[Nucleotide]), FixedError> {
    let bad = |m: &str| FixedError::Header(m.to_string());
    let head_nt = FIXED_HEADER_BYTES * NT_PER_BYTE;
    let head = detranscode_bytes(seq.get(..head_nt).ok_or_else(|| bad("strand too short"))?)
        .map_err(|e| bad(&e.to_string()))?;
    let levels = head[7];
    check_levels(levels)?;
    let total = (FIXED_HEADER_BYTES + BAND_BYTES * (3 * levels as usize + 1)) * NT_PER_BYTE;
    let bytes = detranscode_bytes(seq.get(..total).ok_or_else(|| bad("strand too short"))?)
        .map_err(|e| bad(&e.to_string()))?;
    Ok((SubbandLayout::from_bytes(&bytes)?, &seq[total..]))
}

pub fn decode_strand(seq: &[Nucleotide]) -> Result<FixedDecoded, FixedError> {
    let (layout, payload) = split_strand(seq)?;
    decode_fixed(payload, &layout)
}
