//! Coefficient statistics over 4x4 subblocks.
//!
//! Subblocks are visited in raster order; inside a subblock positions follow
//! the classic JPEG zig-zag, with scan indices counted from 0.

use crate::block::LevelBlock;

pub const SUBBLOCK: usize = 4;

/// `(x, y)` of each zig-zag scan index inside a 4x4 subblock.
pub const ZIGZAG_4X4: [(usize, usize); 16] = zigzag_4x4();

const fn zigzag_4x4() -> [(usize, usize); 16] {
    let mut out = [(0, 0); 16];
    let mut n = 0;
    let mut d = 0;
    while d < 2 * SUBBLOCK - 1 {
        let lo = if d >= SUBBLOCK { d - SUBBLOCK + 1 } else { 0 };
        let hi = if d < SUBBLOCK { d } else { SUBBLOCK - 1 };
        let mut j = 0;
        while j <= hi - lo {
            // odd diagonals run top to bottom, even ones bottom to top
            let y = if d % 2 == 1 { lo + j } else { hi - j };
            out[n] = (d - y, y);
            n += 1;
            j += 1;
        }
        d += 1;
    }
    out
}

/// Scan index of each `(x, y)` position inside a subblock, flat as `x + 4y`.
const SCAN_INDEX_4X4: [u8; 16] = scan_index_4x4();

const fn scan_index_4x4() -> [u8; 16] {
    let mut out = [0u8; 16];
    let mut n = 0;
    while n < 16 {
        let (x, y) = ZIGZAG_4X4[n];
        out[x + SUBBLOCK * y] = n as u8;
        n += 1;
    }
    out
}

/// Subblock number and in-subblock scan index of a flat position
/// `x + block_size * y`.
pub fn locate(pos: usize, block_size: usize) -> (usize, u8) {
    let (x, y) = (pos % block_size, pos / block_size);
    let per_row = block_size.div_ceil(SUBBLOCK);
    let sb = x / SUBBLOCK + per_row * (y / SUBBLOCK);
    (sb, SCAN_INDEX_4X4[x % SUBBLOCK + SUBBLOCK * (y % SUBBLOCK)])
}

/// Global scan order: subblocks in raster order, zig-zag inside each.
pub fn block_scan(block_size: usize) -> Vec<usize> {
    let per_row = block_size.div_ceil(SUBBLOCK);
    let mut order = Vec::with_capacity(block_size * block_size);
    for sby in 0..per_row {
        for sbx in 0..per_row {
            for &(x, y) in &ZIGZAG_4X4 {
                order.push(sbx * SUBBLOCK + x + block_size * (sby * SUBBLOCK + y));
            }
        }
    }
    order
}

/// Binary entropy in bits with `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Statistics entering the statistics-based rate model.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffStats {
    /// Number of nonzero levels.
    pub count: usize,
    /// Sum of `log2 |level|` over nonzero levels.
    pub log_sum: f64,
    /// Sum over non-empty subblocks of the last nonzero scan index.
    pub last_scan_sum: u32,
    /// Sum over all subblocks of `H(N1 / 16)`.
    pub entropy_sum: f64,
    /// Per-subblock count of levels with magnitude above one.
    pub n_greater_one: Vec<u32>,
}

pub fn compute_stats(levels: &LevelBlock) -> CoeffStats {
    let mut acc = StatAccumulator::new(levels.size());
    for (pos, &l) in levels.as_slice().iter().enumerate() {
        acc.insert(pos, l);
    }
    acc.stats()
}

#[derive(Debug, Clone, Copy, Default)]
struct Subblock {
    last_scan: Option<u8>,
    n_gt1: u32,
}

impl Subblock {
    fn entropy(self) -> f64 {
        binary_entropy(self.n_gt1 as f64 / 16.0)
    }

    fn last(self) -> u32 {
        self.last_scan.map_or(0, u32::from)
    }
}

/// Running statistics that can price one extra level without mutation.
#[derive(Debug, Clone)]
pub struct StatAccumulator {
    block_size: usize,
    count: usize,
    log_sum: f64,
    last_scan_sum: u32,
    entropy_sum: f64,
    subblocks: Vec<Subblock>,
}

impl StatAccumulator {
    pub fn new(block_size: usize) -> Self {
        let n = block_size.div_ceil(SUBBLOCK).pow(2);
        Self {
            block_size,
            count: 0,
            log_sum: 0.0,
            last_scan_sum: 0,
            entropy_sum: 0.0,
            subblocks: vec![Subblock::default(); n],
        }
    }

    /// Adds a level at a position that holds no level yet. Zero is a no-op.
    pub fn insert(&mut self, pos: usize, level: i32) {
        if level == 0 {
            return;
        }
        let (count, log_sum, z, e) = self.with(pos, level);
        let (sb, scan) = locate(pos, self.block_size);
        let s = &mut self.subblocks[sb];
        s.last_scan = Some(s.last_scan.map_or(scan, |l| l.max(scan)));
        if level.unsigned_abs() > 1 {
            s.n_gt1 += 1;
        }
        self.count = count;
        self.log_sum = log_sum;
        self.last_scan_sum = z;
        self.entropy_sum = e;
    }

    /// `(count, L, Z, E)` after hypothetically adding `level` at `pos`.
    pub fn with(&self, pos: usize, level: i32) -> (usize, f64, u32, f64) {
        if level == 0 {
            return (
                self.count,
                self.log_sum,
                self.last_scan_sum,
                self.entropy_sum,
            );
        }
        let (sb, scan) = locate(pos, self.block_size);
        let old = self.subblocks[sb];
        let mut new = old;
        new.last_scan = Some(old.last_scan.map_or(scan, |l| l.max(scan)));
        if level.unsigned_abs() > 1 {
            new.n_gt1 += 1;
        }
        (
            self.count + 1,
            self.log_sum + (level.unsigned_abs() as f64).log2(),
            self.last_scan_sum - old.last() + new.last(),
            self.entropy_sum - old.entropy() + new.entropy(),
        )
    }

    pub fn stats(&self) -> CoeffStats {
        CoeffStats {
            count: self.count,
            log_sum: self.log_sum,
            last_scan_sum: self.last_scan_sum,
            entropy_sum: self.entropy_sum,
            n_greater_one: self.subblocks.iter().map(|s| s.n_gt1).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_table() {
        let expected = [
            (0, 0),
            (1, 0),
            (0, 1),
            (0, 2),
            (1, 1),
            (2, 0),
            (3, 0),
            (2, 1),
            (1, 2),
            (0, 3),
            (1, 3),
            (2, 2),
            (3, 1),
            (3, 2),
            (2, 3),
            (3, 3),
        ];
        assert_eq!(ZIGZAG_4X4, expected);
    }

    #[test]
    fn block_scan_is_permutation() {
        for b in [4, 8, 16, 32] {
            let mut s = block_scan(b);
            s.sort_unstable();
            assert_eq!(s, (0..b * b).collect::<Vec<_>>());
        }
    }

    #[test]
    fn locate_second_subblock() {
        // (5, 1) in an 8x8 block: subblock 1, local (1, 1) = scan 4
        assert_eq!(locate(5 + 8, 8), (1, 4));
        assert_eq!(locate(4 * 8, 8), (2, 0));
    }

    #[test]
    fn entropy_edges() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_block_stats() {
        let s = compute_stats(&LevelBlock::zeros(8));
        assert_eq!(
            (s.count, s.log_sum, s.last_scan_sum, s.entropy_sum),
            (0, 0.0, 0, 0.0)
        );
    }

    #[test]
    fn dc_only() {
        let mut l = LevelBlock::zeros(4);
        l.set(0, 0, 1);
        let s = compute_stats(&l);
        assert_eq!(
            (s.count, s.log_sum, s.last_scan_sum, s.entropy_sum),
            (1, 0.0, 0, 0.0)
        );
    }

    #[test]
    fn two_coefficient_example() {
        let mut l = LevelBlock::zeros(4);
        l.set(0, 0, 4);
        let (x, y) = ZIGZAG_4X4[5];
        l.set(x, y, -2);
        let s = compute_stats(&l);
        assert_eq!(s.count, 2);
        assert!((s.log_sum - 3.0).abs() < 1e-15);
        assert_eq!(s.last_scan_sum, 5);
        assert_eq!(s.n_greater_one, vec![2]);
        // H(1/8) evaluated independently
        let p: f64 = 0.125;
        let h = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        assert!((s.entropy_sum - h).abs() < 1e-15);
        assert!((s.entropy_sum - 0.5436).abs() < 1e-4);
    }

    #[test]
    fn incremental_matches_batch() {
        let mut l = LevelBlock::zeros(8);
        let entries = [(0usize, 3i32), (9, -1), (13, 2), (36, 1), (63, -5), (7, 1)];
        let mut acc = StatAccumulator::new(8);
        for &(pos, lev) in &entries {
            let predicted = acc.with(pos, lev);
            acc.insert(pos, lev);
            l.as_mut_slice()[pos] = lev;
            let s = compute_stats(&l);
            assert_eq!(predicted.0, s.count);
            assert!((predicted.1 - s.log_sum).abs() < 1e-12);
            assert_eq!(predicted.2, s.last_scan_sum);
            assert!((predicted.3 - s.entropy_sum).abs() < 1e-12);
        }
    }
}
