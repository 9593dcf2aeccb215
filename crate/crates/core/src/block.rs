//! Square sample grids and occupancy masks.
//!
//! Samples are stored row-major: the flat index of position `(x, y)` is
//! `x + size * y`, so the horizontal coordinate runs fastest. The same
//! convention is used for frequency positions in coefficient blocks.

use crate::error::{shape_err, Error, Result};

/// A square `size x size` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    size: usize,
    data: Vec<T>,
}

/// Spatial residual samples.
pub type Block = Grid<f64>;
/// Transform coefficients, indexed by frequency position.
pub type CoeffBlock = Grid<f64>;
/// Quantized integer levels.
pub type LevelBlock = Grid<i32>;

impl<T: Copy + Default> Grid<T> {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            data: vec![T::default(); size * size],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(size: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != size * size {
            return Err(shape_err(
                format!("{} samples", size * size),
                format!("{} samples", data.len()),
            ));
        }
        Ok(Self { size, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            size: self.size,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Copy> Grid<T> {
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[x + self.size * y]
    }

    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[x + self.size * y] = v;
    }
}

impl Grid<f64> {
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Grid<i32> {
    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|&&l| l != 0).count()
    }
}

/// Occupancy weights over a rectangular area; `1` marks an occupied sample.
///
/// Binary masks are the normal case. Fractional weights in `[0, 1]` are
/// accepted by [`Mask::weighted`] for the general extrapolation path only.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Mask {
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            weights: vec![1.0; width * height],
        }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            weights: vec![0.0; width * height],
        }
    }

    pub fn square_full(size: usize) -> Self {
        Self::full(size, size)
    }

    pub fn from_bools(width: usize, height: usize, bits: &[bool]) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(shape_err(
                format!("{width}x{height} mask"),
                format!("{} entries", bits.len()),
            ));
        }
        Ok(Self {
            width,
            height,
            weights: bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        })
    }

    pub fn square_from_bools(size: usize, bits: &[bool]) -> Result<Self> {
        Self::from_bools(size, size, bits)
    }

    pub fn weighted(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || weights.len() != width * height {
            return Err(shape_err(
                format!("{width}x{height} mask"),
                format!("{} entries", weights.len()),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidParameter(format!(
                "mask weight {w} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.weights[x + self.width * y]
    }

    pub fn is_occupied(&self, idx: usize) -> bool {
        self.weights[idx] > 0.0
    }

    pub fn is_binary(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0 || w == 1.0)
    }

    pub fn occupied_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn is_full(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn is_unoccupied(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    /// Mask of the `size x size` tile whose top-left corner is `(x0, y0)`.
    /// Positions outside the mask are treated as unoccupied.
    pub fn tile(&self, x0: usize, y0: usize, size: usize) -> Mask {
        let mut weights = vec![0.0; size * size];
        for y in 0..size {
            for x in 0..size {
                let (fx, fy) = (x0 + x, y0 + y);
                if fx < self.width && fy < self.height {
                    weights[x + size * y] = self.weight(fx, fy);
                }
            }
        }
        Mask {
            width: size,
            height: size,
            weights,
        }
    }

    pub(crate) fn check_block<T>(&self, block: &Grid<T>) -> Result<()> {
        if self.width != block.size() || self.height != block.size() {
            return Err(shape_err(
                format!("{0}x{0} mask", block.size()),
                format!("{}x{} mask", self.width, self.height),
            ));
        }
        Ok(())
    }
}

/// Elementwise product `block * mask`, zeroing unoccupied samples.
pub fn apply_mask(block: &Block, mask: &Mask) -> Result<Block> {
    mask.check_block(block)?;
    Ok(Grid {
        size: block.size,
        data: block
            .data
            .iter()
            .zip(mask.weights())
            .map(|(s, m)| s * m)
            .collect(),
    })
}
