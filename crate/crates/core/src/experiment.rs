//! The three coding methods behind one interface, plus rate-distortion
//! sweeps, PSNR-targeted parameter search and single-deletion robustness
//! runs.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::binary::{self, decode_transcoded, encode_image_binary, BinaryError};
use crate::channel::random_position;
use crate::fixedlen::{self, FixedError, DEFAULT_LEVELS};
use crate::image::ImageGray8;
use crate::jpegdna::{self, CodecError};
use crate::metrics::{psnr, rate_report, ExperimentRecord, Overhead};
use crate::nucleotide::{Nucleotide, NucleotideSequence};
use crate::oligo::{self, Oligo, OligoError};
use crate::pipeline::{DecodeFailure, DecodeOutcome};
use crate::transcode::{detranscode_lossy, transcode_bytes, NT_PER_BYTE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    JpegDna,
    Transcode,
    FixedLen,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::JpegDna, Method::Transcode, Method::FixedLen];

    pub fn name(self) -> &'static str {
        match self {
            Method::JpegDna => "jpeg-dna",
            Method::Transcode => "transcode",
            Method::FixedLen => "fixedlen",
        }
    }

    /// Parameter grid ordered so that clean PSNR does not decrease along
    /// it: quality 1..=100, or fixed-length base steps
    /// `0.5 · 2^(k/4)` from 1024 down to 0.5.
    pub fn grid(self) -> Vec<f64> {
        match self {
            Method::JpegDna | Method::Transcode => (1..=100).map(|q| q as f64).collect(),
            Method::FixedLen => (0..=44)
                .rev()
                .map(|k| 0.5 * 2f64.powf(k as f64 / 4.0))
                .collect(),
        }
    }

    pub fn param_name(self) -> &'static str {
        match self {
            Method::FixedLen => "step",
            _ => "quality",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?} (jpeg-dna, transcode, fixedlen)"))
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Binary(#[from] BinaryError),
    #[error(transparent)]
    Fixed(#[from] FixedError),
    #[error(transparent)]
    Oligo(#[from] OligoError),
    #[error("quality must be an integer in 1..=100, got {0}")]
    Quality(f64),
}

fn quality(param: f64) -> Result<u8, ExperimentError> {
    if param.fract() == 0.0 && (1.0..=100.0).contains(&param) {
        Ok(param as u8)
    } else {
        Err(ExperimentError::Quality(param))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub strand: NucleotideSequence,
    /// Leading nucleotides holding header data.
    pub header_nt: usize,
    pub stream_bytes: Option<usize>,
}

pub fn encode(img: &ImageGray8, method: Method, param: f64) -> Result<Encoded, ExperimentError> {
    Ok(match method {
        Method::JpegDna => {
            let s = jpegdna::encode_image(img, quality(param)?)?;
            Encoded {
                header_nt: s.header_nt.len(),
                strand: s.to_sequence(),
                stream_bytes: None,
            }
        }
        Method::Transcode => {
            let s = encode_image_binary(img, quality(param)?)?;
            let bytes = s.to_bytes()?;
            Encoded {
                header_nt: 5 * s.header_len(),
                strand: transcode_bytes(&bytes),
                stream_bytes: Some(bytes.len()),
            }
        }
        Method::FixedLen => {
            let s = fixedlen::encode_strand(img, DEFAULT_LEVELS, param)?;
            Encoded {
                header_nt: s.header_nt.len(),
                strand: s.to_sequence(),
                stream_bytes: None,
            }
        }
    })
}

/// Identifies the method from the magic bytes at the head of a strand.
pub fn detect_method(strand: &[Nucleotide]) -> Option<Method> {
    let (head, _) = detranscode_lossy(&strand[..strand.len().min(5 * NT_PER_BYTE)]);
    if head.starts_with(binary::MAGIC) {
        Some(Method::Transcode)
    } else if head.starts_with(fixedlen::MAGIC) {
        Some(Method::FixedLen)
    } else if head.get(2..5) == Some(jpegdna::MAGIC.as_slice()) {
        Some(Method::JpegDna)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Damage {
    None,
    /// The entropy decoder stopped here and zero-filled the rest.
    Truncated(DecodeFailure),
    /// Fixed-length words that were unreadable or absent.
    Words {
        malformed: usize,
        missing: usize,
    },
    /// The header could not be read; the image is mid-gray.
    Fatal(String),
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub image: ImageGray8,
    pub damage: Damage,
    /// Block-level detail for the block-based methods.
    pub outcome: Option<DecodeOutcome>,
}

fn outcome_damage(o: &DecodeOutcome) -> Damage {
    o.failure.map_or(Damage::None, Damage::Truncated)
}

/// Decodes a strand. Header damage does not fail the call: it yields a
/// mid-gray `width`×`height` image flagged [`Damage::Fatal`].
pub fn decode(method: Method, strand: &[Nucleotide], width: usize, height: usize) -> Decoded {
    let fatal = |e: String| Decoded {
        image: ImageGray8::filled(width, height, 128),
        damage: Damage::Fatal(e),
        outcome: None,
    };
    match method {
        Method::JpegDna => match jpegdna::decode_strand(strand) {
            Ok(d) => Decoded {
                damage: outcome_damage(&d.outcome),
                image: d.image,
                outcome: Some(d.outcome),
            },
            Err(e) => fatal(e.to_string()),
        },
        Method::Transcode => match decode_transcoded(strand) {
            Ok(d) => Decoded {
                damage: outcome_damage(&d.outcome),
                image: d.image,
                outcome: Some(d.outcome),
            },
            Err(e) => fatal(e.to_string()),
        },
        Method::FixedLen => match fixedlen::decode_strand(strand) {
            Ok(d) => Decoded {
                damage: if d.decode.malformed.is_empty() && d.decode.missing == 0 {
                    Damage::None
                } else {
                    Damage::Words {
                        malformed: d.decode.malformed.len(),
                        missing: d.decode.missing,
                    }
                },
                image: d.image,
                outcome: None,
            },
            Err(e) => fatal(e.to_string()),
        },
    }
    .cropped_to(width, height)
}

impl Decoded {
    fn cropped_to(self, width: usize, height: usize) -> Self {
        if (self.image.width(), self.image.height()) == (width, height) {
            return self;
        }
        // a damaged header may announce other dimensions
        Decoded {
            image: ImageGray8::filled(width, height, 128),
            damage: Damage::Fatal("decoded dimensions differ from the original".into()),
            outcome: None,
        }
    }
}

/// Encode, decode and measure one parameter point.
pub fn measure(
    img: &ImageGray8,
    method: Method,
    param: f64,
    overhead: Overhead,
) -> Result<ExperimentRecord, ExperimentError> {
    let enc = encode(img, method, param)?;
    let dec = decode(method, &enc.strand, img.width(), img.height());
    Ok(ExperimentRecord {
        method: method.name().to_string(),
        param,
        psnr_db: psnr(img, &dec.image),
        rate: rate_report(&enc.strand, img.width(), img.height(), overhead)?,
        stream_bytes: enc.stream_bytes,
        corruption: None,
        post_corruption_psnr_db: None,
    })
}

pub fn sweep(
    img: &ImageGray8,
    method: Method,
    params: &[f64],
    overhead: Overhead,
) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    params
        .iter()
        .map(|&p| measure(img, method, p, overhead))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    pub param: f64,
    pub psnr_db: f64,
    /// Clean decodes performed.
    pub evaluations: usize,
}

/// Bisection over [`Method::grid`] for the point whose clean PSNR is closest
/// to `target`. Relies on PSNR being non-decreasing along the grid.
pub fn quality_search(
    img: &ImageGray8,
    method: Method,
    target: f64,
) -> Result<SearchResult, ExperimentError> {
    let grid = method.grid();
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut eval = |i: usize| -> Result<f64, ExperimentError> {
        if let Some(&v) = cache.get(&i) {
            return Ok(v);
        }
        let enc = encode(img, method, grid[i])?;
        let v = psnr(
            img,
            &decode(method, &enc.strand, img.width(), img.height()).image,
        );
        cache.insert(i, v);
        Ok(v)
    };
    // first grid index with PSNR >= target
    let (mut lo, mut hi) = (0usize, grid.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if eval(mid)? >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for i in [lo.saturating_sub(1), lo.min(grid.len() - 1)] {
        let v = eval(i)?;
        if best.is_none_or(|(_, b)| (v - target).abs() < (b - target).abs()) {
            best = Some((i, v));
        }
    }
    let (i, v) = best.unwrap();
    Ok(SearchResult {
        param: grid[i],
        psnr_db: v,
        evaluations: cache.len(),
    })
}

#[derive(Debug, Clone)]
pub struct DeletionSite {
    /// Position in the bare strand.
    pub strand_position: usize,
    /// Oligo hit, for oligo-formatted runs.
    pub oligo: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RobustnessResult {
    pub method: Method,
    pub param: f64,
    pub clean: Decoded,
    pub corrupt: Decoded,
    pub clean_psnr: f64,
    pub corrupt_psnr: f64,
    pub site: Option<DeletionSite>,
    pub record: ExperimentRecord,
}

impl RobustnessResult {
    pub fn psnr_drop(&self) -> f64 {
        self.clean_psnr - self.corrupt_psnr
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessOptions {
    /// `None` decodes the clean strand through the same path.
    pub seed: Option<u64>,
    pub payload_len: usize,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        Self {
            seed: Some(0),
            payload_len: oligo::DEFAULT_PAYLOAD_LEN,
        }
    }
}

/// Deletes one nucleotide inside the oligo covering the drawn payload
/// position, then reassembles positionally.
fn delete_in_oligo(
    enc: &Encoded,
    seed: u64,
    payload_len: usize,
) -> Result<(NucleotideSequence, DeletionSite), ExperimentError> {
    let region = enc.strand.len() - enc.header_nt;
    let pos = enc.header_nt + random_position(region, seed);
    let mut oligos = oligo::fragment(&enc.strand, payload_len)?;
    let k = pos / payload_len;
    let o = &oligos[k];
    let mut seq = o.to_sequence().into_vec();
    let head = seq.len() - o.payload.len();
    seq.remove(head + pos % payload_len);
    oligos[k] = Oligo::parse(&seq)?;
    let r = oligo::reassemble(&oligos, Some(payload_len))?;
    Ok((
        r.strand,
        DeletionSite {
            strand_position: pos,
            oligo: Some(k as u64),
        },
    ))
}

/// Runs one deletion experiment at `param`. JPEG-DNA and transcoding take the
/// deletion anywhere in the bare strand; fixed-length takes it inside one
/// oligo's payload, within the coefficient region.
pub fn robustness_at(
    img: &ImageGray8,
    method: Method,
    param: f64,
    opts: RobustnessOptions,
) -> Result<RobustnessResult, ExperimentError> {
    let (w, h) = (img.width(), img.height());
    let enc = encode(img, method, param)?;
    let clean = decode(method, &enc.strand, w, h);
    let (damaged, site) = match (opts.seed, method) {
        (None, _) => (enc.strand.clone(), None),
        (Some(seed), Method::FixedLen) => {
            let (s, site) = delete_in_oligo(&enc, seed, opts.payload_len)?;
            (s, Some(site))
        }
        (Some(seed), _) => {
            let pos = random_position(enc.strand.len(), seed);
            let mut s = enc.strand.clone().into_vec();
            s.remove(pos);
            (
                s.into(),
                Some(DeletionSite {
                    strand_position: pos,
                    oligo: None,
                }),
            )
        }
    };
    let corrupt = decode(method, &damaged, w, h);
    let clean_psnr = psnr(img, &clean.image);
    let corrupt_psnr = psnr(img, &corrupt.image);
    let mut record = ExperimentRecord {
        method: method.name().to_string(),
        param,
        psnr_db: clean_psnr,
        rate: rate_report(
            &enc.strand,
            w,
            h,
            Overhead::Oligos {
                payload_len: opts.payload_len,
            },
        )?,
        stream_bytes: enc.stream_bytes,
        corruption: None,
        post_corruption_psnr_db: Some(corrupt_psnr),
    };
    record.corruption = Some(match &site {
        None => "none".to_string(),
        Some(DeletionSite {
            strand_position,
            oligo: None,
        }) => format!("deletion@{strand_position}"),
        Some(DeletionSite {
            strand_position,
            oligo: Some(k),
        }) => format!("deletion@{strand_position}/oligo_{k}"),
    });
    Ok(RobustnessResult {
        method,
        param,
        clean,
        corrupt,
        clean_psnr,
        corrupt_psnr,
        site,
        record,
    })
}

/// [`quality_search`] for `target_psnr`, then [`robustness_at`] the result.
pub fn robustness_experiment(
    img: &ImageGray8,
    method: Method,
    target_psnr: f64,
    opts: RobustnessOptions,
) -> Result<(SearchResult, RobustnessResult), ExperimentError> {
    let found = quality_search(img, method, target_psnr)?;
    Ok((found, robustness_at(img, method, found.param, opts)?))
}
