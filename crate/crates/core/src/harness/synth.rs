//! Seeded synthetic frames with blob-shaped occupancy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::frame::Frame;
use crate::block::Mask;
use crate::error::{Error, Result};

/// Occupancy is decided per cell of this size.
pub const OCCUPANCY_CELL: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub blob_count: usize,
    pub noise_sigma: f64,
    /// Sample value of unoccupied pixels.
    pub background: f64,
}

impl SynthConfig {
    pub fn new(width: usize, height: usize, seed: u64, blob_count: usize) -> Self {
        Self {
            width,
            height,
            seed,
            blob_count,
            noise_sigma: 2.0,
            background: 128.0,
        }
    }
}

/// Elliptical blobs rasterized onto the occupancy cell grid. Radii are at
/// least two cells, so no blob is smaller than a single cell.
pub fn blob_mask(
    width: usize,
    height: usize,
    blob_count: usize,
    rng: &mut impl Rng,
) -> Result<Mask> {
    if !width.is_multiple_of(OCCUPANCY_CELL)
        || !height.is_multiple_of(OCCUPANCY_CELL)
        || width == 0
        || height == 0
    {
        return Err(Error::InvalidParameter(format!(
            "frame {width}x{height} is not a multiple of {OCCUPANCY_CELL}"
        )));
    }
    let cw = width / OCCUPANCY_CELL;
    let ch = height / OCCUPANCY_CELL;
    let r_min = 2.0f64;
    let r_max = (cw.min(ch) as f64 / 5.0).max(r_min + 1.0);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..blob_count)
        .map(|_| {
            (
                rng.random_range(0.0..cw as f64),
                rng.random_range(0.0..ch as f64),
                rng.random_range(r_min..r_max),
                rng.random_range(r_min..r_max),
            )
        })
        .collect();
    let mut cells = vec![false; cw * ch];
    for cy in 0..ch {
        for cx in 0..cw {
            let (px, py) = (cx as f64 + 0.5, cy as f64 + 0.5);
            cells[cx + cw * cy] = blobs.iter().any(|&(x, y, rx, ry)| {
                let dx = (px - x) / rx;
                let dy = (py - y) / ry;
                dx * dx + dy * dy <= 1.0
            });
        }
    }
    let bits: Vec<bool> = (0..width * height)
        .map(|i| cells[(i % width) / OCCUPANCY_CELL + cw * ((i / width) / OCCUPANCY_CELL)])
        .collect();
    Mask::from_bools(width, height, &bits)
}

/// Occupied pixels follow a smooth gradient with mild texture and Gaussian
/// noise; unoccupied pixels hold a constant background.
pub fn generate(cfg: &SynthConfig) -> Result<(Frame, Mask)> {
    if cfg.noise_sigma.is_nan() || cfg.noise_sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise sigma {}",
            cfg.noise_sigma
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mask = blob_mask(cfg.width, cfg.height, cfg.blob_count, &mut rng)?;
    let noise =
        Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let gx = rng.random_range(40.0..100.0);
    let gy = rng.random_range(20.0..80.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let mut frame = Frame::filled(cfg.width, cfg.height, cfg.background);
    for y in 0..cfg.height {
        for x in 0..cfg.width {
            if mask.weight(x, y) == 0.0 {
                continue;
            }
            let (fx, fy) = (x as f64 / w, y as f64 / h);
            let texture = 6.0 * (std::f64::consts::TAU * (3.0 * fx + 2.0 * fy) + phase).sin();
            let v = 50.0 + gx * fx + gy * fy + texture + noise.sample(&mut rng);
            frame.set(x, y, v.round().clamp(0.0, 255.0));
        }
    }
    Ok((frame, mask))
}

pub fn occupancy(mask: &Mask) -> f64 {
    mask.occupied_count() as f64 / (mask.width() * mask.height()) as f64
}
