//! Frame-level experiments: fixed-grid block coding with DC prediction,
//! per-method statistics, block-share analysis and BD-rate.

pub mod bdrate;
pub mod frame;
pub mod samples;
pub mod synth;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{encode_block, CodingConfig, MethodKind};
use crate::block::{Block, LevelBlock, Mask};
use crate::error::{shape_err, Error, Result};
use crate::quant::QuantParams;
use crate::rate::RateModelParams;
use crate::transform::TransformType;

pub use bdrate::{bd_rate, RdPoint};
pub use frame::{pad_mask, read_mask_pgm, read_pgm, write_mask_pgm, write_pgm, Frame};
pub use samples::{exp_golomb_bits, extract_rate_samples};
pub use synth::{generate, SynthConfig};

/// PSNR reported when the occupied pixels are reconstructed exactly.
pub const PSNR_CAP: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameJob {
    pub name: String,
    pub frame: Frame,
    pub mask: Mask,
    pub block_size: usize,
    pub qps: Vec<i64>,
    pub methods: Vec<MethodKind>,
    pub seed: u64,
    pub bit_depth: u32,
    /// Bit estimator for `REF`, `RM` and `OD`.
    pub rate_model: RateModelParams,
    pub log_model: RateModelParams,
    pub stat_model: RateModelParams,
}

impl FrameJob {
    pub fn new(name: impl Into<String>, frame: Frame, mask: Mask, block_size: usize) -> Self {
        Self {
            name: name.into(),
            frame,
            mask,
            block_size,
            qps: vec![22, 27, 32, 37],
            methods: MethodKind::ALL.to_vec(),
            seed: 0,
            bit_depth: 8,
            rate_model: RateModelParams::STAT_DEFAULT,
            log_model: RateModelParams::LOG_DEFAULT,
            stat_model: RateModelParams::STAT_DEFAULT,
        }
    }

    pub fn with_qps(mut self, qps: &[i64]) -> Self {
        self.qps = qps.to_vec();
        self
    }

    pub fn with_methods(mut self, methods: &[MethodKind]) -> Self {
        self.methods = methods.to_vec();
        self
    }

    /// Replaces the default model of the parameters' kind.
    pub fn with_model(mut self, params: RateModelParams) -> Self {
        match params.model_kind {
            crate::rate::RateModelKind::Log => self.log_model = params,
            crate::rate::RateModelKind::Stat => {
                self.stat_model = params;
                self.rate_model = params;
            }
        }
        self
    }

    pub fn transform(&self) -> Result<TransformType> {
        TransformType::dct(self.block_size)
    }

    fn validate(&self) -> Result<()> {
        if self.frame.width() != self.mask.width() || self.frame.height() != self.mask.height() {
            return Err(shape_err(
                format!("{}x{} mask", self.frame.width(), self.frame.height()),
                format!("{}x{} mask", self.mask.width(), self.mask.height()),
            ));
        }
        if self.frame.width() == 0 || self.frame.height() == 0 {
            return Err(Error::InvalidParameter("empty frame".into()));
        }
        if !(8..=16).contains(&self.bit_depth) {
            return Err(Error::InvalidParameter(format!(
                "bit depth {}",
                self.bit_depth
            )));
        }
        self.transform()?;
        for &qp in &self.qps {
            QuantParams::from_qp(qp)?;
        }
        Ok(())
    }

    fn coding_config(&self, qp: i64) -> Result<CodingConfig> {
        let mut cfg = CodingConfig::from_qp(self.transform()?, qp)?;
        cfg.rate_model = self.rate_model;
        cfg.log_model = self.log_model;
        cfg.stat_model = self.stat_model;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    pub x: usize,
    pub y: usize,
    pub occupied: usize,
    pub mixed: bool,
    pub levels: LevelBlock,
    pub bits: f64,
    pub masked_sse: f64,
}

/// Totals of one (frame, method, QP) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frame: String,
    pub method: String,
    pub qp: i64,
    pub block_size: usize,
    pub blocks: usize,
    pub mixed_blocks: usize,
    pub bits_est: f64,
    pub masked_sse: f64,
    pub psnr_occupied: f64,
}

impl FrameStats {
    pub fn rd_point(&self) -> RdPoint {
        RdPoint::new(self.bits_est, self.psnr_occupied)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: MethodKind,
    pub qp: i64,
    pub stats: FrameStats,
    pub blocks: Vec<BlockRecord>,
    pub reconstruction: Frame,
}

fn dc_prediction(recon: &Frame, x0: usize, y0: usize, b: usize, bit_depth: u32) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    if y0 > 0 {
        sum += (0..b).map(|x| recon.get(x0 + x, y0 - 1)).sum::<f64>();
        n += b;
    }
    if x0 > 0 {
        sum += (0..b).map(|y| recon.get(x0 - 1, y0 + y)).sum::<f64>();
        n += b;
    }
    if n == 0 {
        128.0 * f64::from(1u32 << (bit_depth - 8))
    } else {
        sum / n as f64
    }
}

pub fn psnr(masked_sse: f64, occupied: usize, bit_depth: u32) -> f64 {
    if occupied == 0 || masked_sse <= 0.0 {
        return PSNR_CAP;
    }
    let peak = f64::from((1u32 << bit_depth) - 1);
    (10.0 * (peak * peak * occupied as f64 / masked_sse).log10()).min(PSNR_CAP)
}

/// Codes the padded frame block by block in raster order with one method.
/// Prediction reads previously reconstructed samples, residual `q = p - x`
/// and reconstruction `x_hat = p - s_hat`.
pub fn run_method(job: &FrameJob, method: MethodKind, qp: i64) -> Result<MethodRun> {
    job.validate()?;
    let b = job.block_size;
    let frame = job.frame.pad_to_multiple(b);
    let mask = pad_mask(&job.mask, b);
    let cfg = job.coding_config(qp)?;
    let mut recon = Frame::filled(frame.width(), frame.height(), 0.0);
    let mut records = Vec::new();
    let (mut bits, mut sse) = (0.0, 0.0);
    let mut mixed_blocks = 0;
    for y0 in (0..frame.height()).step_by(b) {
        for x0 in (0..frame.width()).step_by(b) {
            let tile = mask.tile(x0, y0, b);
            let occupied = tile.occupied_count();
            let mixed = occupied > 0 && occupied < b * b;
            mixed_blocks += usize::from(mixed);
            let p = dc_prediction(&recon, x0, y0, b, job.bit_depth);
            let x = frame.block(x0, y0, b);
            let q = x.map(|v| p - v);
            let (levels, s_hat, block_bits, block_sse) = if occupied == 0 && method.is_mask_aware()
            {
                (LevelBlock::zeros(b), Block::zeros(b), 0.0, 0.0)
            } else {
                let o = encode_block(&q, &tile, &cfg, method)?;
                (
                    o.levels,
                    o.reconstruction,
                    o.estimated_bits,
                    o.masked_distortion,
                )
            };
            recon.put_block(x0, y0, &s_hat.map(|v| p - v));
            bits += block_bits;
            sse += block_sse;
            records.push(BlockRecord {
                x: x0,
                y: y0,
                occupied,
                mixed,
                levels,
                bits: block_bits,
                masked_sse: block_sse,
            });
        }
    }
    let stats = FrameStats {
        frame: job.name.clone(),
        method: method.to_string(),
        qp,
        block_size: b,
        blocks: records.len(),
        mixed_blocks,
        bits_est: bits,
        masked_sse: sse,
        psnr_occupied: psnr(sse, mask.occupied_count(), job.bit_depth),
    };
    Ok(MethodRun {
        method,
        qp,
        stats,
        blocks: records,
        reconstruction: recon.crop(job.frame.width(), job.frame.height()),
    })
}

/// Runs every (QP, method) pair of the job in parallel; results are ordered
/// by QP, then method, as listed in the job.
pub fn run_frame(job: &FrameJob) -> Result<Vec<MethodRun>> {
    job.validate()?;
    for m in &job.methods {
        if job.methods.iter().filter(|o| *o == m).count() > 1 {
            return Err(Error::InvalidParameter(format!("method {m} listed twice")));
        }
    }
    let pairs: Vec<(i64, MethodKind)> = job
        .qps
        .iter()
        .flat_map(|&qp| job.methods.iter().map(move |&m| (qp, m)))
        .collect();
    pairs
        .par_iter()
        .map(|&(qp, m)| run_method(job, m, qp))
        .collect()
}

pub const STATS_HEADER: [&str; 9] = [
    "frame",
    "method",
    "qp",
    "block_size",
    "blocks",
    "mixed_blocks",
    "bits_est",
    "masked_sse",
    "psnr_occupied",
];

pub fn write_stats<W: Write>(writer: W, stats: &[FrameStats]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(STATS_HEADER)?;
    for s in stats {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stats(path: impl AsRef<std::path::Path>) -> Result<Vec<FrameStats>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Share of frame pixels lying in blocks with both occupied and unoccupied pixels.
pub fn mixed_block_share(mask: &Mask, b: usize) -> Result<f64> {
    if b == 0
        || !mask.width().is_multiple_of(b)
        || !mask.height().is_multiple_of(b)
        || mask.width() == 0
        || mask.height() == 0
    {
        return Err(shape_err(
            format!("dimensions divisible by {b}"),
            format!("{}x{}", mask.width(), mask.height()),
        ));
    }
    let mut mixed = 0usize;
    for y0 in (0..mask.height()).step_by(b) {
        for x0 in (0..mask.width()).step_by(b) {
            let occ = mask.tile(x0, y0, b).occupied_count();
            if occ > 0 && occ < b * b {
                mixed += b * b;
            }
        }
    }
    Ok(mixed as f64 / (mask.width() * mask.height()) as f64)
}
