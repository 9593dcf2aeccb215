//! Least-squares training of rate model parameters and sample files.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::{compute_stats, logistic, RateModelKind, RateModelParams};
use crate::block::LevelBlock;
use crate::error::{Error, Result};

/// One training observation: a block of levels and the bits it cost.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSample {
    pub levels: LevelBlock,
    pub bits: f64,
}

impl RateSample {
    fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels
            .as_slice()
            .iter()
            .filter(|&&l| l != 0)
            .map(|&l| l.unsigned_abs() as f64)
    }

    fn stat_features(&self) -> [f64; 4] {
        let s = compute_stats(&self.levels);
        [
            s.count as f64,
            s.log_sum,
            s.last_scan_sum as f64,
            s.entropy_sum,
        ]
    }
}

pub const LM_MAX_ITERATIONS: usize = 2000;
/// Relative change of the residual norm at which the fit has converged.
pub const LM_TOLERANCE: f64 = 1e-9;

const RANK_TOLERANCE: f64 = 1e-10;

pub fn fit_params(samples: &[RateSample], kind: RateModelKind) -> Result<RateModelParams> {
    if samples.len() < 4 {
        return Err(Error::RankDeficient {
            rank: samples.len(),
            cols: 4,
        });
    }
    match kind {
        RateModelKind::Stat => fit_stat(samples),
        RateModelKind::Log => fit_log(samples),
    }
}

fn fit_stat(samples: &[RateSample]) -> Result<RateModelParams> {
    let rows: Vec<[f64; 4]> = samples.iter().map(RateSample::stat_features).collect();
    let a = DMatrix::from_fn(rows.len(), 4, |r, c| rows[r][c]);
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.bits));
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.max();
    let eps = RANK_TOLERANCE * max_sv;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    if rank < 4 {
        return Err(Error::RankDeficient { rank, cols: 4 });
    }
    let x = svd
        .solve(&b, eps)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    RateModelParams::new(RateModelKind::Stat, x[0], x[1], x[2], x[3])
}

fn log_residuals(samples: &[RateSample], p: &[f64; 4]) -> Vec<f64> {
    samples
        .iter()
        .map(|s| {
            let est: f64 = s
                .magnitudes()
                .map(|m| p[0] * m + p[1] * logistic(p[2] * m - p[3]))
                .sum();
            est - s.bits
        })
        .collect()
}

/// Levenberg-Marquardt from the trained defaults and from a fixed grid of
/// logistic shapes whose linear weights are solved in closed form; the best
/// converged fit wins.
fn fit_log(samples: &[RateSample]) -> Result<RateModelParams> {
    let mut starts = vec![RateModelParams::LOG_DEFAULT.as_array()];
    for gamma in [0.1, 0.3, 1.0, 3.0] {
        for delta in [0.0, 2.0, 5.0, 10.0] {
            if let Some([a, b]) = linear_weights(samples, gamma, delta) {
                starts.push([a, b, gamma, delta]);
            }
        }
    }
    let mut best: Option<([f64; 4], f64)> = None;
    let mut last_err = None;
    for start in starts {
        match levenberg_marquardt(samples, start) {
            Ok((p, cost)) => {
                if best.is_none_or(|(_, c)| cost < c) {
                    best = Some((p, cost));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((p, _)) => RateModelParams::new(RateModelKind::Log, p[0], p[1], p[2], p[3]),
        None => Err(last_err.unwrap_or(Error::NoConvergence(LM_MAX_ITERATIONS))),
    }
}

/// Least-squares `alpha`, `beta` for a fixed logistic shape.
fn linear_weights(samples: &[RateSample], gamma: f64, delta: f64) -> Option<[f64; 2]> {
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let (mut m_sum, mut g_sum) = (0.0, 0.0);
        for m in s.magnitudes() {
            m_sum += m;
            g_sum += logistic(gamma * m - delta);
        }
        a11 += m_sum * m_sum;
        a12 += m_sum * g_sum;
        a22 += g_sum * g_sum;
        b1 += m_sum * s.bits;
        b2 += g_sum * s.bits;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= RANK_TOLERANCE * (a11 * a22).max(1e-300) {
        return None;
    }
    Some([(b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det])
}

fn levenberg_marquardt(samples: &[RateSample], start: [f64; 4]) -> Result<([f64; 4], f64)> {
    let mut p = start;
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut res = log_residuals(samples, &p);
    let mut cost = norm(&res);
    let mut damping = 1e-3;
    for _ in 0..LM_MAX_ITERATIONS {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (s, &r) in samples.iter().zip(&res) {
            let mut row = Vector4::<f64>::zeros();
            for m in s.magnitudes() {
                let g = logistic(p[2] * m - p[3]);
                let dg = g * (1.0 - g);
                row[0] += m;
                row[1] += g;
                row[2] += p[1] * dg * m;
                row[3] -= p[1] * dg;
            }
            jtj += row * row.transpose();
            jtr += row * r;
        }

        loop {
            let mut lhs = jtj;
            for i in 0..4 {
                lhs[(i, i)] += damping * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&(-jtr))) else {
                damping *= 10.0;
                if damping > 1e16 {
                    return Err(Error::NoConvergence(LM_MAX_ITERATIONS));
                }
                continue;
            };
            let trial = [
                p[0] + step[0],
                p[1] + step[1],
                p[2] + step[2],
                p[3] + step[3],
            ];
            let trial_res = log_residuals(samples, &trial);
            let trial_cost = norm(&trial_res);
            if trial_cost.is_finite() && trial_cost <= cost {
                let improvement = cost - trial_cost;
                p = trial;
                res = trial_res;
                cost = trial_cost;
                damping = (damping / 3.0).max(1e-15);
                if improvement <= LM_TOLERANCE * cost.max(1e-300) {
                    return Ok((p, cost));
                }
                break;
            }
            damping *= 2.0;
            if damping > 1e16 {
                // no descent direction left: stationary point
                return Ok((p, cost));
            }
        }
    }
    Err(Error::NoConvergence(LM_MAX_ITERATIONS))
}

/// `(1/|B|) * sum |b_hat - b| / b`
pub fn mean_relative_error(samples: &[RateSample], params: &RateModelParams) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let mut total = 0.0;
    for (i, s) in samples.iter().enumerate() {
        if s.bits <= 0.0 {
            return Err(Error::ZeroObservedBits(i));
        }
        let est = params.estimate_block_bits(&s.levels);
        total += (est - s.bits).abs() / s.bits;
    }
    Ok(total / samples.len() as f64)
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleRow {
    block_size: usize,
    count: usize,
    log_sum: f64,
    last_scan_sum: u32,
    entropy_sum: f64,
    bits: f64,
    levels: String,
}

/// Writes samples as CSV; `levels` holds the raster-order block levels
/// separated by semicolons, the feature columns are informational.
pub fn write_samples<W: std::io::Write>(writer: W, samples: &[RateSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if samples.is_empty() {
        w.write_record([
            "block_size",
            "count",
            "log_sum",
            "last_scan_sum",
            "entropy_sum",
            "bits",
            "levels",
        ])?;
    }
    for s in samples {
        let st = compute_stats(&s.levels);
        let levels = s
            .levels
            .as_slice()
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(";");
        w.serialize(SampleRow {
            block_size: s.levels.size(),
            count: st.count,
            log_sum: st.log_sum,
            last_scan_sum: st.last_scan_sum,
            entropy_sum: st.entropy_sum,
            bits: s.bits,
            levels,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<RateSample>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: SampleRow = row?;
        let levels = row
            .levels
            .split(';')
            .map(|t| {
                t.trim()
                    .parse::<i32>()
                    .map_err(|e| Error::InvalidParameter(format!("bad level `{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(RateSample {
            levels: LevelBlock::from_vec(row.block_size, levels)?,
            bits: row.bits,
        });
    }
    Ok(out)
}
