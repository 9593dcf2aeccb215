//! Block coding paths used for comparison, and an exhaustive oracle.
//!
//! * `REF`: plain transform coding of the residual, distortion over all samples.
//! * `RM`: residual zeroed on unoccupied samples before the transform.
//! * `OD`: the `REF` coefficient path with distortion counted on occupied samples.
//! * `ROSEL` / `ROSES`: selective extrapolation with the `log` / `stat` rate model.

use std::fmt;
use std::str::FromStr;

use crate::block::{apply_mask, Block, CoeffBlock, LevelBlock, Mask};
use crate::dictionary::{mask_dictionary, BasisDictionary};
use crate::error::{Error, Result};
use crate::quant::{dequantize, masked_sse, quantize_with, rd_cost, sse, QuantParams};
use crate::rate::{RateModelKind, RateModelParams};
use crate::rose::{joint_ls_update, rose, rose_fast, RoseConfig, RoseResult};
use crate::transform::{forward_2d, inverse_2d, TransformType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Ref,
    Rm,
    Od,
    RoseL,
    RoseS,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [
        MethodKind::Ref,
        MethodKind::Rm,
        MethodKind::Od,
        MethodKind::RoseL,
        MethodKind::RoseS,
    ];

    /// Whether the method knows about the occupancy map.
    pub fn is_mask_aware(self) -> bool {
        self != MethodKind::Ref
    }

    pub fn rose_rate_model(self) -> Option<RateModelKind> {
        match self {
            MethodKind::RoseL => Some(RateModelKind::Log),
            MethodKind::RoseS => Some(RateModelKind::Stat),
            _ => None,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodKind::Ref => "REF",
            MethodKind::Rm => "RM",
            MethodKind::Od => "OD",
            MethodKind::RoseL => "ROSEL",
            MethodKind::RoseS => "ROSES",
        })
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "REF" => Ok(MethodKind::Ref),
            "RM" => Ok(MethodKind::Rm),
            "OD" => Ok(MethodKind::Od),
            "ROSEL" => Ok(MethodKind::RoseL),
            "ROSES" => Ok(MethodKind::RoseS),
            _ => Err(Error::UnknownMethod(s.to_string())),
        }
    }
}

/// Settings shared by all block coding paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingConfig {
    pub transform: TransformType,
    pub quant: QuantParams,
    /// Bit estimator for the `REF`, `RM` and `OD` paths.
    pub rate_model: RateModelParams,
    pub log_model: RateModelParams,
    pub stat_model: RateModelParams,
    /// Zero unoccupied residual samples before running selective extrapolation.
    pub mask_before_rose: bool,
    pub max_iterations_override: Option<usize>,
    pub lambda_override: Option<f64>,
}

impl CodingConfig {
    pub fn new(transform: TransformType, quant: QuantParams) -> Self {
        Self {
            transform,
            quant,
            rate_model: RateModelParams::STAT_DEFAULT,
            log_model: RateModelParams::LOG_DEFAULT,
            stat_model: RateModelParams::STAT_DEFAULT,
            mask_before_rose: true,
            max_iterations_override: None,
            lambda_override: None,
        }
    }

    pub fn from_qp(transform: TransformType, qp: i64) -> Result<Self> {
        Ok(Self::new(transform, QuantParams::from_qp(qp)?))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_override.unwrap_or(self.quant.lambda)
    }

    pub fn model_for(&self, kind: RateModelKind) -> RateModelParams {
        match kind {
            RateModelKind::Log => self.log_model,
            RateModelKind::Stat => self.stat_model,
        }
    }

    pub fn rose_config(&self, kind: RateModelKind) -> RoseConfig {
        RoseConfig {
            transform: self.transform,
            quant: self.quant,
            rate_model: self.model_for(kind),
            max_iterations_override: self.max_iterations_override,
            lambda_override: self.lambda_override,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCodingOutcome {
    pub method: MethodKind,
    pub levels: LevelBlock,
    /// Decoded residual `inverse(dequantize(levels))`.
    pub reconstruction: Block,
    /// Squared error over occupied samples.
    pub masked_distortion: f64,
    /// Squared error over every sample.
    pub full_distortion: f64,
    pub estimated_bits: f64,
    pub rd_cost: f64,
}

/// Quantized levels, reconstruction, distortion and cost of real-valued coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub levels: LevelBlock,
    pub reconstruction: Block,
    pub masked_distortion: f64,
    pub full_distortion: f64,
    pub estimated_bits: f64,
}

pub fn evaluate_coefficients(
    s: &Block,
    mask: &Mask,
    coeffs: &CoeffBlock,
    transform: TransformType,
    quant: &QuantParams,
    rate_model: &RateModelParams,
) -> Result<Evaluation> {
    let levels = quantize_with(coeffs, quant.qstep, quant.dead_zone);
    let reconstruction = inverse_2d(&dequantize(&levels, quant.qstep), transform.matrix())?;
    Ok(Evaluation {
        masked_distortion: masked_sse(s, &reconstruction, mask)?,
        full_distortion: sse(s, &reconstruction)?,
        estimated_bits: rate_model.estimate_block_bits(&levels),
        levels,
        reconstruction,
    })
}

fn outcome(method: MethodKind, e: Evaluation, lambda: f64) -> BlockCodingOutcome {
    let d = if method == MethodKind::Ref {
        e.full_distortion
    } else {
        e.masked_distortion
    };
    BlockCodingOutcome {
        method,
        rd_cost: rd_cost(d, e.estimated_bits, lambda),
        levels: e.levels,
        reconstruction: e.reconstruction,
        masked_distortion: e.masked_distortion,
        full_distortion: e.full_distortion,
        estimated_bits: e.estimated_bits,
    }
}

fn check(s: &Block, mask: &Mask, cfg: &CodingConfig) -> Result<()> {
    if s.size() != cfg.transform.size() {
        return Err(crate::error::shape_err(
            format!("{0}x{0} block", cfg.transform.size()),
            format!("{0}x{0} block", s.size()),
        ));
    }
    mask.check_block(s)
}

fn encode_transform_path(
    method: MethodKind,
    input: &Block,
    s: &Block,
    mask: &Mask,
    cfg: &CodingConfig,
) -> Result<BlockCodingOutcome> {
    let coeffs = forward_2d(input, cfg.transform.matrix())?;
    let e = evaluate_coefficients(s, mask, &coeffs, cfg.transform, &cfg.quant, &cfg.rate_model)?;
    Ok(outcome(method, e, cfg.lambda()))
}

pub fn encode_ref(s: &Block, mask: &Mask, cfg: &CodingConfig) -> Result<BlockCodingOutcome> {
    check(s, mask, cfg)?;
    encode_transform_path(MethodKind::Ref, s, s, mask, cfg)
}

pub fn encode_rm(s: &Block, mask: &Mask, cfg: &CodingConfig) -> Result<BlockCodingOutcome> {
    check(s, mask, cfg)?;
    let masked = apply_mask(s, mask)?;
    encode_transform_path(MethodKind::Rm, &masked, s, mask, cfg)
}

pub fn encode_od(s: &Block, mask: &Mask, cfg: &CodingConfig) -> Result<BlockCodingOutcome> {
    check(s, mask, cfg)?;
    encode_transform_path(MethodKind::Od, s, s, mask, cfg)
}

/// Runs selective extrapolation and returns the coded outcome together with
/// the raw extrapolation result.
pub fn encode_rose_detailed(
    s: &Block,
    mask: &Mask,
    cfg: &CodingConfig,
    kind: MethodKind,
) -> Result<(BlockCodingOutcome, RoseResult)> {
    check(s, mask, cfg)?;
    let rate_kind = kind.rose_rate_model().ok_or_else(|| {
        Error::InvalidParameter(format!("{kind} is not a selective extrapolation method"))
    })?;
    let input = if cfg.mask_before_rose && !mask.is_full() {
        apply_mask(s, mask)?
    } else {
        s.clone()
    };
    let rcfg = cfg.rose_config(rate_kind);
    let result = if mask.is_binary() {
        rose_fast(&input, mask, &rcfg)?
    } else {
        rose(&input, mask, &rcfg)?
    };
    let e = evaluate_coefficients(
        s,
        mask,
        &result.coeffs,
        cfg.transform,
        &cfg.quant,
        &rcfg.rate_model,
    )?;
    Ok((outcome(kind, e, cfg.lambda()), result))
}

pub fn encode_rose(
    s: &Block,
    mask: &Mask,
    cfg: &CodingConfig,
    kind: MethodKind,
) -> Result<BlockCodingOutcome> {
    encode_rose_detailed(s, mask, cfg, kind).map(|(o, _)| o)
}

/// Dispatches to the coding path of `method`.
pub fn encode_block(
    s: &Block,
    mask: &Mask,
    cfg: &CodingConfig,
    method: MethodKind,
) -> Result<BlockCodingOutcome> {
    match method {
        MethodKind::Ref => encode_ref(s, mask, cfg),
        MethodKind::Rm => encode_rm(s, mask, cfg),
        MethodKind::Od => encode_od(s, mask, cfg),
        MethodKind::RoseL | MethodKind::RoseS => encode_rose(s, mask, cfg, method),
    }
}

/// Best coefficient subset found by exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub selected: Vec<usize>,
    pub values: Vec<f64>,
    pub coeffs: CoeffBlock,
    pub evaluation: Evaluation,
    pub cost: f64,
}

/// Largest subset size the oracle enumerates.
pub const ORACLE_MAX_COEFFS: usize = 3;

/// Enumerates every subset of at most `n_max` basis functions of a 4x4
/// transform, fits each by masked least squares, quantizes and returns the
/// one with the lowest `masked distortion + lambda * bits`. Ties go to the
/// lexicographically smallest index set.
pub fn oracle_exhaustive(
    s: &Block,
    mask: &Mask,
    cfg: &RoseConfig,
    n_max: usize,
) -> Result<OracleResult> {
    if cfg.transform.size() != 4 || s.size() != 4 {
        return Err(Error::OracleRange(format!("block size {}", s.size())));
    }
    if n_max > ORACLE_MAX_COEFFS {
        return Err(Error::OracleRange(format!("n_max {n_max}")));
    }
    mask.check_block(s)?;
    cfg.validate()?;
    let lambda = cfg.lambda();
    let dict = BasisDictionary::shared(cfg.transform);
    let md = mask_dictionary(dict, mask)?;
    let sm = md.compact_signal(s.as_slice());
    let admissible: Vec<usize> = (0..dict.atom_count())
        .filter(|&k| !md.is_excluded(k))
        .collect();

    let eval = |subset: &[usize]| -> Result<(Vec<f64>, CoeffBlock, Evaluation, f64)> {
        let values = if subset.is_empty() {
            Vec::new()
        } else {
            joint_ls_update(subset, &md, &sm)?
        };
        let mut coeffs = CoeffBlock::zeros(4);
        for (&k, &v) in subset.iter().zip(&values) {
            coeffs.as_mut_slice()[k] = v;
        }
        let e =
            evaluate_coefficients(s, mask, &coeffs, cfg.transform, &cfg.quant, &cfg.rate_model)?;
        let cost = rd_cost(e.masked_distortion, e.estimated_bits, lambda);
        Ok((values, coeffs, e, cost))
    };

    let mut subsets: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..n_max.min(admissible.len()) {
        let mut next = Vec::new();
        for base in &frontier {
            let start = base.last().map_or(0, |&last| {
                admissible.iter().position(|&k| k == last).unwrap() + 1
            });
            for &k in &admissible[start..] {
                let mut grown = base.clone();
                grown.push(k);
                next.push(grown);
            }
        }
        subsets.extend(next.iter().cloned());
        frontier = next;
    }

    type Scored = (Vec<usize>, Vec<f64>, CoeffBlock, Evaluation, f64);
    let mut best: Option<Scored> = None;
    for subset in subsets {
        let (values, coeffs, e, cost) = eval(&subset)?;
        let replace = match &best {
            None => true,
            Some((bs, _, _, _, bc)) => {
                let tol = 1e-12 * bc.abs().max(1.0);
                cost < bc - tol || ((cost - bc).abs() <= tol && subset < *bs)
            }
        };
        if replace {
            best = Some((subset, values, coeffs, e, cost));
        }
    }
    let (selected, values, coeffs, evaluation, cost) = best.expect("empty subset always evaluated");
    Ok(OracleResult {
        selected,
        values,
        coeffs,
        evaluation,
        cost,
    })
}

/// Cost of a selective extrapolation result under the oracle's criterion.
pub fn rose_cost(s: &Block, mask: &Mask, cfg: &RoseConfig, result: &RoseResult) -> Result<f64> {
    let e = evaluate_coefficients(
        s,
        mask,
        &result.coeffs,
        cfg.transform,
        &cfg.quant,
        &cfg.rate_model,
    )?;
    Ok(rd_cost(e.masked_distortion, e.estimated_bits, cfg.lambda()))
}
