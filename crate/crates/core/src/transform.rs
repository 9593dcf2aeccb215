//! Orthonormal block transforms: DCT-II for 4/8/16/32 and DST-VII for 4x4.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::block::{Block, CoeffBlock};
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformType {
    Dst4,
    Dct4,
    Dct8,
    Dct16,
    Dct32,
}

impl TransformType {
    pub const ALL: [TransformType; 5] = [
        TransformType::Dst4,
        TransformType::Dct4,
        TransformType::Dct8,
        TransformType::Dct16,
        TransformType::Dct32,
    ];

    /// Transform width in samples.
    pub fn size(self) -> usize {
        match self {
            TransformType::Dst4 | TransformType::Dct4 => 4,
            TransformType::Dct8 => 8,
            TransformType::Dct16 => 16,
            TransformType::Dct32 => 32,
        }
    }

    /// The DCT of the given width.
    pub fn dct(size: usize) -> Result<Self> {
        match size {
            4 => Ok(TransformType::Dct4),
            8 => Ok(TransformType::Dct8),
            16 => Ok(TransformType::Dct16),
            32 => Ok(TransformType::Dct32),
            n => Err(Error::UnsupportedBlockSize(n)),
        }
    }

    fn slot(self) -> usize {
        match self {
            TransformType::Dst4 => 0,
            TransformType::Dct4 => 1,
            TransformType::Dct8 => 2,
            TransformType::Dct16 => 3,
            TransformType::Dct32 => 4,
        }
    }

    /// Shared, lazily built matrix for this type.
    pub fn matrix(self) -> &'static TransformMatrix {
        static CACHE: [OnceLock<TransformMatrix>; 5] = [
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
        ];
        CACHE[self.slot()].get_or_init(|| build_transform_matrix(self))
    }
}

impl fmt::Display for TransformType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TransformType::Dst4 => "DST_4",
            TransformType::Dct4 => "DCT_4",
            TransformType::Dct8 => "DCT_8",
            TransformType::Dct16 => "DCT_16",
            TransformType::Dct32 => "DCT_32",
        };
        f.write_str(s)
    }
}

impl FromStr for TransformType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "DST_4" | "DST4" => Ok(TransformType::Dst4),
            "DCT_4" | "DCT4" => Ok(TransformType::Dct4),
            "DCT_8" | "DCT8" => Ok(TransformType::Dct8),
            "DCT_16" | "DCT16" => Ok(TransformType::Dct16),
            "DCT_32" | "DCT32" => Ok(TransformType::Dct32),
            _ => Err(Error::InvalidParameter(format!("unknown transform `{s}`"))),
        }
    }
}

/// `B x B` matrix; row `mu` holds the 1-D basis function of frequency `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformMatrix {
    kind: TransformType,
    size: usize,
    rows: Vec<f64>,
}

impl TransformMatrix {
    pub fn kind(&self) -> TransformType {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn at(&self, freq: usize, pos: usize) -> f64 {
        self.rows[freq * self.size + pos]
    }

    pub fn row(&self, freq: usize) -> &[f64] {
        &self.rows[freq * self.size..(freq + 1) * self.size]
    }

    /// Largest absolute deviation of `T * T^T` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let b = self.size;
        let mut worst = 0.0f64;
        for r in 0..b {
            for c in 0..b {
                let dot: f64 = self
                    .row(r)
                    .iter()
                    .zip(self.row(c))
                    .map(|(x, y)| x * y)
                    .sum();
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

pub fn build_transform_matrix(kind: TransformType) -> TransformMatrix {
    let b = kind.size();
    let bf = b as f64;
    let mut rows = vec![0.0; b * b];
    for mu in 0..b {
        for i in 0..b {
            let (m, x) = (mu as f64, i as f64);
            rows[mu * b + i] = match kind {
                TransformType::Dst4 => {
                    (4.0 / (2.0 * bf + 1.0)).sqrt()
                        * (PI * (2.0 * x + 1.0) * (m + 1.0) / (2.0 * bf + 1.0)).sin()
                }
                _ => {
                    let scale = if mu == 0 {
                        (1.0 / bf).sqrt()
                    } else {
                        (2.0 / bf).sqrt()
                    };
                    scale * (PI * (2.0 * x + 1.0) * m / (2.0 * bf)).cos()
                }
            };
        }
    }
    TransformMatrix {
        kind,
        size: b,
        rows,
    }
}

/// `S[mu] = sum_i T[mu][i] * s[i]`.
pub fn forward_1d(signal: &[f64], t: &TransformMatrix) -> Result<Vec<f64>> {
    let b = t.size();
    if signal.len() != b {
        return Err(shape_err(
            format!("{b} samples"),
            format!("{} samples", signal.len()),
        ));
    }
    Ok((0..b)
        .map(|mu| t.row(mu).iter().zip(signal).map(|(a, s)| a * s).sum())
        .collect())
}

/// `s[i] = sum_mu T[mu][i] * S[mu]`.
pub fn inverse_1d(coeffs: &[f64], t: &TransformMatrix) -> Result<Vec<f64>> {
    let b = t.size();
    if coeffs.len() != b {
        return Err(shape_err(
            format!("{b} coefficients"),
            format!("{}", coeffs.len()),
        ));
    }
    let mut out = vec![0.0; b];
    for (mu, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(t.row(mu)) {
            *o += c * a;
        }
    }
    Ok(out)
}

fn check_shape<T>(block: &crate::block::Grid<T>, t: &TransformMatrix) -> Result<()> {
    if block.size() != t.size() {
        return Err(shape_err(
            format!("{0}x{0} block", t.size()),
            format!("{0}x{0} block", block.size()),
        ));
    }
    Ok(())
}

/// Separable forward transform: rows then columns.
pub fn forward_2d(block: &Block, t: &TransformMatrix) -> Result<CoeffBlock> {
    check_shape(block, t)?;
    let b = t.size();
    let s = block.as_slice();
    // horizontal pass: tmp[y][mu1] = sum_x T[mu1][x] s[y][x]
    let mut tmp = vec![0.0; b * b];
    for y in 0..b {
        let line = &s[y * b..(y + 1) * b];
        for mu1 in 0..b {
            tmp[y * b + mu1] = t.row(mu1).iter().zip(line).map(|(a, v)| a * v).sum();
        }
    }
    let mut out = vec![0.0; b * b];
    for mu2 in 0..b {
        let basis = t.row(mu2);
        for y in 0..b {
            let w = basis[y];
            let src = &tmp[y * b..(y + 1) * b];
            let dst = &mut out[mu2 * b..(mu2 + 1) * b];
            for (d, v) in dst.iter_mut().zip(src) {
                *d += w * v;
            }
        }
    }
    CoeffBlock::from_vec(b, out)
}

pub fn inverse_2d(coeffs: &CoeffBlock, t: &TransformMatrix) -> Result<Block> {
    check_shape(coeffs, t)?;
    let b = t.size();
    let c = coeffs.as_slice();
    // vertical pass: tmp[y][mu1] = sum_mu2 T[mu2][y] C[mu2][mu1]
    let mut tmp = vec![0.0; b * b];
    for mu2 in 0..b {
        let src = &c[mu2 * b..(mu2 + 1) * b];
        if src.iter().all(|&v| v == 0.0) {
            continue;
        }
        for y in 0..b {
            let w = t.at(mu2, y);
            let dst = &mut tmp[y * b..(y + 1) * b];
            for (d, v) in dst.iter_mut().zip(src) {
                *d += w * v;
            }
        }
    }
    let mut out = vec![0.0; b * b];
    for y in 0..b {
        let line = &tmp[y * b..(y + 1) * b];
        let dst = &mut out[y * b..(y + 1) * b];
        for (mu1, &v) in line.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (d, a) in dst.iter_mut().zip(t.row(mu1)) {
                *d += v * a;
            }
        }
    }
    Block::from_vec(b, out)
}
