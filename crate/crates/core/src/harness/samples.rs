//! Training samples for rate models. Bits come from an Exp-Golomb proxy
//! coder standing in for an entropy coder.

use rayon::prelude::*;

use super::{run_method, FrameJob};
use crate::baselines::MethodKind;
use crate::block::LevelBlock;
use crate::error::Result;
use crate::rate::{block_scan, RateSample, SUBBLOCK};

/// Length of the order-0 unsigned Exp-Golomb code of `k`.
pub fn ue_bits(k: u64) -> u32 {
    2 * (k + 1).ilog2() + 1
}

/// Length of the signed Exp-Golomb code of `v`.
pub fn se_bits(v: i64) -> u32 {
    let k = if v > 0 {
        2 * v as u64 - 1
    } else {
        2 * v.unsigned_abs()
    };
    ue_bits(k)
}

/// Subblock-wise code: the index of the last coded 4x4 subblock, a flag
/// for every earlier subblock, and for each coded subblock the scan position
/// of its last significant level followed by the levels up to it. An
/// all-zero block costs nothing.
pub fn exp_golomb_bits(levels: &LevelBlock) -> f64 {
    let scan = block_scan(levels.size());
    let l = levels.as_slice();
    let mut bits = 0u32;
    let mut last_coded = None;
    for (sb, chunk) in scan.chunks(SUBBLOCK * SUBBLOCK).enumerate() {
        if let Some(last) = chunk.iter().rposition(|&p| l[p] != 0) {
            bits += ue_bits(last as u64);
            bits += chunk[..=last]
                .iter()
                .map(|&p| se_bits(l[p] as i64))
                .sum::<u32>();
            last_coded = Some(sb);
        }
    }
    match last_coded {
        None => 0.0,
        // one flag per subblock before the last coded one
        Some(sb) => f64::from(bits + ue_bits(sb as u64) + sb as u32),
    }
}

/// Codes the frame conventionally at each QP of the job and keeps every block
/// with nonzero levels.
pub fn extract_rate_samples(job: &FrameJob) -> Result<Vec<RateSample>> {
    let per_qp: Vec<Vec<RateSample>> = job
        .qps
        .par_iter()
        .map(|&qp| {
            let run = run_method(job, MethodKind::Ref, qp)?;
            Ok(run
                .blocks
                .into_iter()
                .filter(|b| b.levels.nonzero_count() > 0)
                .map(|b| RateSample {
                    bits: exp_golomb_bits(&b.levels),
                    levels: b.levels,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_qp.into_iter().flatten().collect())
}
