//! Single-channel frames, padding and PGM input/output.

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder, Luma};

use crate::block::{Block, Mask};
use crate::error::{shape_err, Error, Result};

/// A single-channel image stored as reals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(shape_err(
                format!("{} samples", width * height),
                format!("{} samples", data.len()),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x + self.width * y]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[x + self.width * y] = v;
    }

    pub fn block(&self, x0: usize, y0: usize, size: usize) -> Block {
        let mut b = Block::zeros(size);
        for y in 0..size {
            for x in 0..size {
                b.set(x, y, self.get(x0 + x, y0 + y));
            }
        }
        b
    }

    pub fn put_block(&mut self, x0: usize, y0: usize, b: &Block) {
        for y in 0..b.size() {
            for x in 0..b.size() {
                self.set(x0 + x, y0 + y, b.get(x, y));
            }
        }
    }

    /// Extends the frame to multiples of `b` by repeating the last column and row.
    pub fn pad_to_multiple(&self, b: usize) -> Frame {
        let w = self.width.div_ceil(b) * b;
        let h = self.height.div_ceil(b) * b;
        if w == self.width && h == self.height {
            return self.clone();
        }
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            let sy = y.min(self.height - 1);
            for x in 0..w {
                data.push(self.get(x.min(self.width - 1), sy));
            }
        }
        Frame {
            width: w,
            height: h,
            data,
        }
    }

    pub fn crop(&self, width: usize, height: usize) -> Frame {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            data.extend_from_slice(&self.data[y * self.width..y * self.width + width]);
        }
        Frame {
            width,
            height,
            data,
        }
    }

    pub fn to_gray8(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([self.get(x as usize, y as usize).round().clamp(0.0, 255.0) as u8])
        })
    }

    pub fn from_gray8(img: &GrayImage) -> Frame {
        Frame {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.pixels().map(|p| p.0[0] as f64).collect(),
        }
    }
}

/// Pads a mask to multiples of `b` with unoccupied samples.
pub fn pad_mask(mask: &Mask, b: usize) -> Mask {
    let w = mask.width().div_ceil(b) * b;
    let h = mask.height().div_ceil(b) * b;
    if w == mask.width() && h == mask.height() {
        return mask.clone();
    }
    let mut weights = vec![0.0; w * h];
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            weights[x + w * y] = mask.weight(x, y);
        }
    }
    Mask::weighted(w, h, weights).expect("weights copied from a valid mask")
}

fn load_gray(path: &Path) -> Result<GrayImage> {
    let img = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()?;
    Ok(img.into_luma8())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Frame> {
    Ok(Frame::from_gray8(&load_gray(path.as_ref())?))
}

fn save_gray(path: &Path, img: &GrayImage) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    PnmEncoder::new(file)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            img.as_raw(),
            img.width(),
            img.height(),
            ExtendedColorType::L8,
        )?;
    Ok(())
}

pub fn write_pgm(path: impl AsRef<Path>, frame: &Frame) -> Result<()> {
    save_gray(path.as_ref(), &frame.to_gray8())
}

/// Any nonzero sample is occupied.
pub fn read_mask_pgm(path: impl AsRef<Path>) -> Result<Mask> {
    let img = load_gray(path.as_ref())?;
    let bits: Vec<bool> = img.pixels().map(|p| p.0[0] != 0).collect();
    Mask::from_bools(img.width() as usize, img.height() as usize, &bits)
}

pub fn write_mask_pgm(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    if !mask.is_binary() {
        return Err(Error::NonBinaryMask);
    }
    let img = GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.weight(x as usize, y as usize) > 0.0 {
            255
        } else {
            0
        }])
    });
    save_gray(path.as_ref(), &img)
}
