//! 8-bit grayscale images and binary PGM I/O.

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions {width}x{height} invalid for {len} samples")]
    Dimensions {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("not an 8-bit grayscale PGM")]
    NotGray8,
    #[error("PGM codec: {0}")]
    Codec(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGray8 {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl ImageGray8 {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0
            || height == 0
            || samples.len() != width * height
            || width > u16::MAX as usize
            || height > u16::MAX as usize
        {
            return Err(ImageError::Dimensions {
                width,
                height,
                len: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid dimensions")
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples).expect("valid dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn pixel_count(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    /// Copy extended to multiples of `m` by replicating the last column and row.
    pub fn padded_to(&self, m: usize) -> ImageGray8 {
        let w = self.width.div_ceil(m) * m;
        let h = self.height.div_ceil(m) * m;
        if w == self.width && h == self.height {
            return self.clone();
        }
        Self::from_fn(w, h, |x, y| {
            self.get(x.min(self.width - 1), y.min(self.height - 1))
        })
    }

    pub fn cropped(&self, width: usize, height: usize) -> ImageGray8 {
        assert!(width <= self.width && height <= self.height);
        Self::from_fn(width, height, |x, y| self.get(x, y))
    }

    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self, ImageError> {
        match image::load_from_memory_with_format(bytes, ImageFormat::Pnm)? {
            DynamicImage::ImageLuma8(buf) => {
                let (w, h) = buf.dimensions();
                Self::new(w as usize, h as usize, buf.into_raw())
            }
            _ => Err(ImageError::NotGray8),
        }
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        Self::from_pgm_bytes(&std::fs::read(path)?)
    }

    /// Binary `P5` encoding with maxval 255.
    pub fn to_pgm_bytes(&self) -> Result<Vec<u8>, ImageError> {
        let mut out = Vec::with_capacity(self.samples.len() + 32);
        PnmEncoder::new(&mut out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(
                &self.samples,
                self.width as u32,
                self.height as u32,
                ExtendedColorType::L8,
            )?;
        Ok(out)
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        std::fs::write(path, self.to_pgm_bytes()?)?;
        Ok(())
    }
}
