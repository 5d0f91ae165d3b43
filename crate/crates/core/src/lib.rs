//! Image coding for DNA storage.
//!
//! The crate provides:
//!
//! * [`paircode`]: fixed-length constrained codewords and the nucleotide
//!   category table,
//! * [`trit`]: ternary Huffman codes and the no-repeat rotation coder,
//! * [`jpegdna`]: a JPEG-style codec whose entropy layer emits
//!   nucleotides directly,
//! * [`binary`] and [`transcode`]: a binary JPEG-style coder whose bytes
//!   are mapped to 5-nt words,
//! * [`fixedlen`]: a Haar wavelet + scalar quantizer coder with fixed
//!   codeword lengths,
//! * [`oligo`]: fragmenting strands into indexed oligos,
//! * [`channel`]: seeded substitution/insertion/deletion noise,
//! * [`metrics`]: PSNR, rate figures and CSV records,
//! * [`experiment`]: the methods side by side, sweeps, parameter search
//!   and single-deletion robustness runs.

pub mod binary;
pub mod channel;
pub mod experiment;
pub mod fasta;
pub mod fixedlen;
pub mod huffman;
pub mod image;
pub mod jpegdna;
pub mod metrics;
pub mod nucleotide;
pub mod oligo;
pub mod paircode;
pub mod pipeline;
pub mod transcode;
pub mod trit;

pub use crate::image::ImageGray8;
pub use crate::nucleotide::{Nucleotide, NucleotideSequence};
