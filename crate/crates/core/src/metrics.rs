//! PSNR, rate figures and the CSV record format used by sweeps.

use std::io;

use crate::image::ImageGray8;
use crate::nucleotide::{Nucleotide, NucleotideSequence};
use crate::oligo::{fragment, OligoError};

/// `10·log10(255² / MSE)`; `f64::INFINITY` for identical images.
pub fn psnr(a: &ImageGray8, b: &ImageGray8) -> f64 {
    assert_eq!(
        (a.width(), a.height()),
        (b.width(), b.height()),
        "PSNR needs images of equal size"
    );
    let se: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    if se == 0 {
        return f64::INFINITY;
    }
    let mse = se as f64 / a.pixel_count() as f64;
    10.0 * (255.0f64 * 255.0 / mse).log10()
}

pub fn format_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

/// How oligo overhead enters `total_nt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overhead {
    /// Count the bare strand only.
    Exclude,
    /// Fragment with this payload length and count every oligo nucleotide.
    Oligos { payload_len: usize },
}

impl Default for Overhead {
    fn default() -> Self {
        Overhead::Oligos {
            payload_len: crate::oligo::DEFAULT_PAYLOAD_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub total_nt: usize,
    /// Strand length before any oligo formatting.
    pub payload_nt: usize,
    pub nt_per_pixel: f64,
    /// Raw source bits per nucleotide: `8·W·H / total_nt`.
    pub coding_potential: f64,
    pub gc_fraction: f64,
    pub max_run: usize,
    pub oligo_count: usize,
    /// Oligos with more G/C than A/T.
    pub oligo_gc_violations: usize,
}

pub fn rate_report(
    strand: &[Nucleotide],
    width: usize,
    height: usize,
    overhead: Overhead,
) -> Result<RateReport, OligoError> {
    let pixels = (width * height) as f64;
    let seq = NucleotideSequence::from(strand);
    let (total_nt, max_run, oligo_count, oligo_gc_violations) = match overhead {
        Overhead::Exclude => (strand.len(), seq.max_run(), 0, 0),
        Overhead::Oligos { payload_len } => {
            let oligos: Vec<NucleotideSequence> = fragment(strand, payload_len)?
                .iter()
                .map(|o| o.to_sequence())
                .collect();
            (
                oligos.iter().map(|o| o.len()).sum(),
                oligos.iter().map(|o| o.max_run()).max().unwrap_or(0),
                oligos.len(),
                oligos
                    .iter()
                    .filter(|o| o.gc_count() > o.at_count())
                    .count(),
            )
        }
    };
    Ok(RateReport {
        total_nt,
        payload_nt: strand.len(),
        nt_per_pixel: total_nt as f64 / pixels,
        coding_potential: 8.0 * pixels / total_nt as f64,
        gc_fraction: seq.gc_fraction(),
        max_run,
        oligo_count,
        oligo_gc_violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub method: String,
    pub param: f64,
    pub psnr_db: f64,
    pub rate: RateReport,
    /// Size of the binary stream, for methods that have one.
    pub stream_bytes: Option<usize>,
    pub corruption: Option<String>,
    pub post_corruption_psnr_db: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 14] = [
    "method",
    "param",
    "psnr_db",
    "total_nt",
    "payload_nt",
    "nt_per_pixel",
    "coding_potential_bits_per_nt",
    "gc_fraction",
    "max_run",
    "oligo_count",
    "oligo_gc_violations",
    "stream_bytes",
    "corruption",
    "post_corruption_psnr_db",
];

impl ExperimentRecord {
    pub fn csv_fields(&self) -> [String; 14] {
        let r = &self.rate;
        [
            self.method.clone(),
            format!("{}", self.param),
            format_db(self.psnr_db),
            r.total_nt.to_string(),
            r.payload_nt.to_string(),
            format!("{:.6}", r.nt_per_pixel),
            format!("{:.6}", r.coding_potential),
            format!("{:.6}", r.gc_fraction),
            r.max_run.to_string(),
            r.oligo_count.to_string(),
            r.oligo_gc_violations.to_string(),
            self.stream_bytes.map(|b| b.to_string()).unwrap_or_default(),
            self.corruption.clone().unwrap_or_default(),
            self.post_corruption_psnr_db
                .map(format_db)
                .unwrap_or_default(),
        ]
    }
}

pub fn write_csv<W: io::Write>(records: &[ExperimentRecord], w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_COLUMNS)?;
    for r in records {
        wr.write_record(r.csv_fields())?;
    }
    wr.flush()?;
    Ok(())
}
