//! Scalar quantization, QP-derived step size and Lagrange multiplier,
//! masked distortion and RD cost.

use crate::block::{Block, CoeffBlock, LevelBlock, Mask};
use crate::error::{shape_err, Error, Result};

/// Rounding offset of the dead-zone quantizer (intra convention).
pub const DEFAULT_DEAD_ZONE: f64 = 1.0 / 3.0;

pub const MAX_QP: i64 = 51;

fn check_qp(qp: i64) -> Result<()> {
    if !(0..=MAX_QP).contains(&qp) {
        return Err(Error::QpOutOfRange(qp));
    }
    Ok(())
}

/// `2^((qp - 4) / 6)`
pub fn qstep_from_qp(qp: i64) -> Result<f64> {
    check_qp(qp)?;
    Ok(2f64.powf((qp as f64 - 4.0) / 6.0))
}

/// `0.57 * 2^((qp - 12) / 3)`
pub fn lambda_from_qp(qp: i64) -> Result<f64> {
    check_qp(qp)?;
    Ok(0.57 * 2f64.powf((qp as f64 - 12.0) / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    pub qp: u8,
    pub qstep: f64,
    pub lambda: f64,
    pub dead_zone: f64,
}

impl QuantParams {
    pub fn from_qp(qp: i64) -> Result<Self> {
        Ok(Self {
            qp: qp as u8,
            qstep: qstep_from_qp(qp)?,
            lambda: lambda_from_qp(qp)?,
            dead_zone: DEFAULT_DEAD_ZONE,
        })
    }

    /// Explicit step size and multiplier, bypassing the QP formulas.
    pub fn custom(qp: i64, qstep: f64, lambda: f64) -> Result<Self> {
        check_qp(qp)?;
        if !(qstep > 0.0 && qstep.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "qstep must be positive, got {qstep}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            qp: qp as u8,
            qstep,
            lambda,
            dead_zone: DEFAULT_DEAD_ZONE,
        })
    }

    pub fn quantize_value(&self, c: f64) -> i32 {
        quantize_value(c, self.qstep, self.dead_zone)
    }
}

/// `sign(c) * floor(|c| / qstep + f)`
pub fn quantize_value(c: f64, qstep: f64, dead_zone: f64) -> i32 {
    let level = (c.abs() / qstep + dead_zone).floor();
    if c < 0.0 {
        -(level as i32)
    } else {
        level as i32
    }
}

pub fn quantize(coeffs: &CoeffBlock, qstep: f64) -> LevelBlock {
    quantize_with(coeffs, qstep, DEFAULT_DEAD_ZONE)
}

pub fn quantize_with(coeffs: &CoeffBlock, qstep: f64, dead_zone: f64) -> LevelBlock {
    coeffs.map(|&c| quantize_value(c, qstep, dead_zone))
}

pub fn dequantize(levels: &LevelBlock, qstep: f64) -> CoeffBlock {
    levels.map(|&l| l as f64 * qstep)
}

/// Number of nonzero levels.
pub fn density(levels: &LevelBlock) -> usize {
    levels.nonzero_count()
}

/// `sum_i (a_i - b_i)^2 * m_i`
pub fn masked_sse(a: &Block, b: &Block, mask: &Mask) -> Result<f64> {
    if a.size() != b.size() {
        return Err(shape_err(
            format!("{0}x{0} block", a.size()),
            format!("{0}x{0} block", b.size()),
        ));
    }
    mask.check_block(a)?;
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .zip(mask.weights())
        .map(|((x, y), m)| (x - y) * (x - y) * m)
        .sum())
}

pub fn sse(a: &Block, b: &Block) -> Result<f64> {
    masked_sse(a, b, &Mask::square_full(a.size()))
}

/// `J = D + lambda * R`
pub fn rd_cost(distortion: f64, bits: f64, lambda: f64) -> f64 {
    distortion + lambda * bits
}
