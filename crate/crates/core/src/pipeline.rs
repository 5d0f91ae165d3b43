//! Block transform pipeline shared by the JPEG-DNA and binary coders:
//! level shift, 8x8 orthonormal DCT-II, quality-scaled quantization,
//! zigzag scan, DC differences and AC run-lengths.

use std::f64::consts::PI;
use std::sync::OnceLock;

use thiserror::Error;

use crate::image::ImageGray8;

pub const BLOCK: usize = 8;
pub const BLOCK_AREA: usize = 64;

/// Zero-run extension: 16 zeros in a row.
pub const ZRL_RUN: u8 = 15;

/// Zigzag position -> row-major index within the block.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20,
    13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59,
    52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Standard luminance quantization table, row-major.
pub const LUMA_QUANT: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, 12, 12, 14, 19, 26, 58, 60, 55, 14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62, 18, 22, 37, 56, 68, 109, 103, 77, 24, 35, 55, 64, 81, 104, 113,
    92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("quality {0} outside 1..=100")]
    Quality(u8),
    #[error("block {block}: {reason}")]
    BadBlock { block: usize, reason: &'static str },
    #[error("image dimensions must be 1..=65535")]
    Dimensions,
    #[error("stream has {found} blocks, {expected} expected")]
    BlockCount { expected: usize, found: usize },
}

/// Image geometry and quality carried in every stream header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub width: u16,
    pub height: u16,
    pub quality: u8,
}

impl Frame {
    pub fn new(width: usize, height: usize, quality: u8) -> Result<Frame, PipelineError> {
        check_quality(quality)?;
        let w = u16::try_from(width).map_err(|_| PipelineError::Dimensions)?;
        let h = u16::try_from(height).map_err(|_| PipelineError::Dimensions)?;
        if w == 0 || h == 0 {
            return Err(PipelineError::Dimensions);
        }
        Ok(Frame {
            width: w,
            height: h,
            quality,
        })
    }

    pub fn of(img: &ImageGray8, quality: u8) -> Result<Frame, PipelineError> {
        Self::new(img.width(), img.height(), quality)
    }

    pub fn blocks(&self) -> (usize, usize) {
        BlockIndexStream::for_image(self.width as usize, self.height as usize)
    }

    pub fn block_count(&self) -> usize {
        let (w, h) = self.blocks();
        w * h
    }

    pub fn pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.push(self.quality);
    }

    pub fn read_bytes(input: &mut &[u8]) -> Result<Frame, PipelineError> {
        if input.len() < 5 {
            return Err(PipelineError::Dimensions);
        }
        let b = &input[..5];
        let f = Frame::new(
            u16::from_be_bytes([b[0], b[1]]) as usize,
            u16::from_be_bytes([b[2], b[3]]) as usize,
            b[4],
        )?;
        *input = &input[5..];
        Ok(f)
    }
}

/// Why a corrupted payload stopped decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionKind {
    /// Payload ended inside a block.
    Exhausted,
    /// A Huffman-coded nucleotide repeated its predecessor.
    AdjacentRepeat,
    /// A padding symbol of the Huffman table was decoded.
    DummySymbol,
    /// A value codeword was not a valid codeword.
    MalformedWord,
    /// A symbol that cannot occur (category out of table, bad run/size).
    BadSymbol,
    /// AC data ran past coefficient 63.
    BlockOverrun,
}

/// Where decoding of a corrupted payload gave up. Blocks from `block`
/// onwards were replaced by all-zero blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeFailure {
    pub block: usize,
    /// Payload offset (nucleotides or bits) of the failing read.
    pub position: usize,
    pub kind: CorruptionKind,
}

/// Block data recovered from a payload plus damage information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub indices: BlockIndexStream,
    pub failure: Option<DecodeFailure>,
    /// Payload offset just past each cleanly decoded block.
    pub block_ends: Vec<usize>,
    /// Payload symbols left over after the last block.
    pub trailing: usize,
}

impl DecodeOutcome {
    pub fn is_clean(&self) -> bool {
        self.failure.is_none() && self.trailing == 0
    }
}

pub fn check_quality(quality: u8) -> Result<(), PipelineError> {
    if (1..=100).contains(&quality) {
        Ok(())
    } else {
        Err(PipelineError::Quality(quality))
    }
}

/// Quantization matrix (row-major) for `quality` in 1..=100:
/// scale = 5000/q below 50, else 200 - 2q; entries clamped to 1..=255.
pub fn quant_table(quality: u8) -> Result<[u16; 64], PipelineError> {
    check_quality(quality)?;
    let q = quality as u32;
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut t = [0u16; 64];
    for (dst, &base) in t.iter_mut().zip(LUMA_QUANT.iter()) {
        *dst = ((base as u32 * scale + 50) / 100).clamp(1, 255) as u16;
    }
    Ok(t)
}

fn basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; 8]; 8];
        for (u, row) in m.iter_mut().enumerate() {
            let cu = if u == 0 { (0.125f64).sqrt() } else { 0.5 };
            for (x, v) in row.iter_mut().enumerate() {
                *v = cu * (((2 * x + 1) * u) as f64 * PI / 16.0).cos();
            }
        }
        m
    })
}

/// Orthonormal 2-D DCT-II of a row-major block.
pub fn fdct(block: &[f64; 64]) -> [f64; 64] {
    let c = basis();
    let mut tmp = [0.0; 64];
    // rows: tmp[y][u] = sum_x c[u][x] f[y][x]
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| c[u][x] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            out[v * 8 + u] = (0..8).map(|y| c[v][y] * tmp[y * 8 + u]).sum();
        }
    }
    out
}

pub fn idct(coef: &[f64; 64]) -> [f64; 64] {
    let c = basis();
    let mut tmp = [0.0; 64];
    for v in 0..8 {
        for x in 0..8 {
            tmp[v * 8 + x] = (0..8).map(|u| c[u][x] * coef[v * 8 + u]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|v| c[v][y] * tmp[v * 8 + x]).sum();
        }
    }
    out
}

/// Quantizer index: the coefficient is snapped to a 1e-6 grid (so exact
/// ties are not decided by floating-point noise), divided by the step
/// and rounded half away from zero.
pub fn quantize(coef: f64, step: u16) -> i32 {
    let snapped = (coef * 1e6).round() / 1e6;
    (snapped / step as f64).round() as i32
}

/// One AC entry: `run` zeros then `value`. `value == 0` only appears with
/// `run == 15` and stands for sixteen zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AcRun {
    pub run: u8,
    pub value: i32,
}

impl AcRun {
    pub const ZRL: AcRun = AcRun {
        run: ZRL_RUN,
        value: 0,
    };

    pub fn is_zrl(&self) -> bool {
        *self == Self::ZRL
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BlockIndices {
    pub dc_diff: i32,
    pub ac: Vec<AcRun>,
}

impl BlockIndices {
    /// Zigzag positions consumed by the AC entries.
    pub fn ac_span(&self) -> usize {
        self.ac.iter().map(|a| a.run as usize + 1).sum()
    }

    /// An end-of-block marker follows unless the AC data reaches the last
    /// coefficient.
    pub fn has_eob(&self) -> bool {
        self.ac_span() < BLOCK_AREA - 1
    }

    pub fn check(&self) -> Result<(), &'static str> {
        if self.ac_span() > BLOCK_AREA - 1 {
            return Err("AC data overruns the block");
        }
        for a in &self.ac {
            if a.run > ZRL_RUN {
                return Err("run longer than 15");
            }
            if a.value == 0 && a.run != ZRL_RUN {
                return Err("zero value outside a ZRL");
            }
        }
        if self.ac.last().is_some_and(AcRun::is_zrl) {
            return Err("trailing ZRL");
        }
        Ok(())
    }

    /// Quantized coefficients in zigzag order, given the absolute DC.
    pub fn zigzag_coefficients(&self, dc: i32) -> [i32; 64] {
        let mut z = [0i32; 64];
        z[0] = dc;
        let mut pos = 1;
        for a in &self.ac {
            pos += a.run as usize;
            if pos >= BLOCK_AREA {
                break;
            }
            z[pos] = a.value;
            pos += 1;
        }
        z
    }

    /// Run-length form of zigzag coefficients (`zz[0]` is ignored).
    pub fn from_zigzag(dc_diff: i32, zz: &[i32; 64]) -> BlockIndices {
        let mut ac = Vec::new();
        let mut run = 0u8;
        for &c in &zz[1..] {
            if c == 0 {
                run += 1;
                continue;
            }
            while run > ZRL_RUN {
                ac.push(AcRun::ZRL);
                run -= 16;
            }
            ac.push(AcRun { run, value: c });
            run = 0;
        }
        BlockIndices { dc_diff, ac }
    }
}

/// Quantized block data for a whole image, blocks in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockIndexStream {
    pub blocks_wide: usize,
    pub blocks_high: usize,
    pub blocks: Vec<BlockIndices>,
}

/// Extends `blocks` to `n` all-zero blocks (absolute DC 0, a mid-gray
/// block) after a decoding failure. The first filled block's `dc_diff`
/// cancels the DC reached so far.
pub fn zero_fill(blocks: &mut Vec<BlockIndices>, n: usize) {
    if blocks.len() >= n {
        return;
    }
    let dc: i32 = blocks.iter().map(|b| b.dc_diff).sum();
    blocks.push(BlockIndices {
        dc_diff: -dc,
        ac: Vec::new(),
    });
    blocks.resize(n, BlockIndices::default());
}

impl BlockIndexStream {
    pub fn zeros(blocks_wide: usize, blocks_high: usize) -> Self {
        Self {
            blocks_wide,
            blocks_high,
            blocks: vec![BlockIndices::default(); blocks_wide * blocks_high],
        }
    }

    pub fn for_image(width: usize, height: usize) -> (usize, usize) {
        (width.div_ceil(BLOCK), height.div_ceil(BLOCK))
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        let expected = self.blocks_wide * self.blocks_high;
        if self.blocks.len() != expected {
            return Err(PipelineError::BlockCount {
                expected,
                found: self.blocks.len(),
            });
        }
        for (block, b) in self.blocks.iter().enumerate() {
            b.check()
                .map_err(|reason| PipelineError::BadBlock { block, reason })?;
        }
        Ok(())
    }

    /// Absolute DC per block from the difference chain.
    pub fn absolute_dc(&self) -> Vec<i32> {
        self.blocks
            .iter()
            .scan(0i32, |dc, b| {
                *dc += b.dc_diff;
                Some(*dc)
            })
            .collect()
    }

    /// Quantized coefficients of every block, row-major within a block.
    pub fn coefficient_blocks(&self) -> Vec<[i32; 64]> {
        self.blocks
            .iter()
            .zip(self.absolute_dc())
            .map(|(b, dc)| {
                let z = b.zigzag_coefficients(dc);
                let mut natural = [0i32; 64];
                for (k, &idx) in ZIGZAG.iter().enumerate() {
                    natural[idx] = z[k];
                }
                natural
            })
            .collect()
    }
}

/// Quantized coefficients (row-major) of one block of level-shifted samples.
pub fn quantize_block(samples: &[u8; 64], table: &[u16; 64]) -> [i32; 64] {
    let mut f = [0.0; 64];
    for (d, &s) in f.iter_mut().zip(samples.iter()) {
        *d = s as f64 - 128.0;
    }
    let coef = fdct(&f);
    let mut out = [0i32; 64];
    for i in 0..64 {
        out[i] = quantize(coef[i], table[i]);
    }
    out
}

pub fn forward_pipeline(img: &ImageGray8, quality: u8) -> Result<BlockIndexStream, PipelineError> {
    let table = quant_table(quality)?;
    let padded = img.padded_to(BLOCK);
    let bw = padded.width() / BLOCK;
    let bh = padded.height() / BLOCK;
    let mut blocks = Vec::with_capacity(bw * bh);
    let mut prev_dc = 0;
    for by in 0..bh {
        for bx in 0..bw {
            let mut samples = [0u8; 64];
            for y in 0..BLOCK {
                for x in 0..BLOCK {
                    samples[y * BLOCK + x] = padded.get(bx * BLOCK + x, by * BLOCK + y);
                }
            }
            let q = quantize_block(&samples, &table);
            let mut zz = [0i32; 64];
            for (k, &idx) in ZIGZAG.iter().enumerate() {
                zz[k] = q[idx];
            }
            blocks.push(BlockIndices::from_zigzag(zz[0] - prev_dc, &zz));
            prev_dc = zz[0];
        }
    }
    Ok(BlockIndexStream {
        blocks_wide: bw,
        blocks_high: bh,
        blocks,
    })
}

pub fn inverse_pipeline(
    indices: &BlockIndexStream,
    quality: u8,
    width: usize,
    height: usize,
) -> Result<ImageGray8, PipelineError> {
    let table = quant_table(quality)?;
    let (bw, bh) = (indices.blocks_wide, indices.blocks_high);
    let expected = BlockIndexStream::for_image(width, height);
    if (bw, bh) != expected || indices.blocks.len() != bw * bh {
        return Err(PipelineError::BlockCount {
            expected: expected.0 * expected.1,
            found: indices.blocks.len(),
        });
    }
    let pw = bw * BLOCK;
    let mut samples = vec![0u8; pw * bh * BLOCK];
    for (i, q) in indices.coefficient_blocks().iter().enumerate() {
        let mut coef = [0.0; 64];
        for k in 0..64 {
            coef[k] = q[k] as f64 * table[k] as f64;
        }
        let pix = idct(&coef);
        let (bx, by) = (i % bw, i / bw);
        for y in 0..BLOCK {
            for x in 0..BLOCK {
                let v = (pix[y * BLOCK + x] + 128.0).round().clamp(0.0, 255.0) as u8;
                samples[(by * BLOCK + y) * pw + bx * BLOCK + x] = v;
            }
        }
    }
    let full = ImageGray8::new(pw, bh * BLOCK, samples).expect("block grid dimensions");
    Ok(full.cropped(width, height))
}
