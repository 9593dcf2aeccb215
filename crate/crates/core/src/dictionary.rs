//! Spatial basis-function dictionaries and their masked precomputations.

use std::sync::OnceLock;

use crate::block::Mask;
use crate::error::{shape_err, Result};
use crate::transform::TransformType;

/// How dictionary atoms are laid out in space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `B x B` block, `B^2` atoms, index `k = k1 + B * k2`.
    Block2d,
    /// A single line of `B` samples, `B` atoms. Atom `k` sits at frequency
    /// position `(k, 0)` of a `B x B` coefficient block.
    Line1d,
}

/// All spatial basis functions of one transform type, flattened.
#[derive(Debug, Clone)]
pub struct BasisDictionary {
    kind: TransformType,
    layout: Layout,
    signal_len: usize,
    atoms: Vec<f64>,
}

impl BasisDictionary {
    /// Shared 2-D dictionary, built on first use.
    pub fn shared(kind: TransformType) -> &'static BasisDictionary {
        static CACHE: [OnceLock<BasisDictionary>; 5] = [
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
        ];
        let slot = TransformType::ALL.iter().position(|&t| t == kind).unwrap();
        CACHE[slot].get_or_init(|| build_dictionary(kind))
    }

    /// Shared 1-D dictionary, built on first use.
    pub fn shared_line(kind: TransformType) -> &'static BasisDictionary {
        static CACHE: [OnceLock<BasisDictionary>; 5] = [
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
        ];
        let slot = TransformType::ALL.iter().position(|&t| t == kind).unwrap();
        CACHE[slot].get_or_init(|| build_line_dictionary(kind))
    }

    pub fn kind(&self) -> TransformType {
        self.kind
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Transform width `B`.
    pub fn block_size(&self) -> usize {
        self.kind.size()
    }

    /// Number of samples in each atom.
    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len() / self.signal_len
    }

    pub fn atom(&self, k: usize) -> &[f64] {
        &self.atoms[k * self.signal_len..(k + 1) * self.signal_len]
    }

    /// Flat position of atom `k` inside a `B x B` coefficient block.
    pub fn coeff_position(&self, k: usize) -> usize {
        k
    }

    pub(crate) fn check_mask(&self, mask: &Mask) -> Result<()> {
        let b = self.block_size();
        let (w, h) = match self.layout {
            Layout::Block2d => (b, b),
            Layout::Line1d => (b, 1),
        };
        if mask.width() != w || mask.height() != h {
            return Err(shape_err(
                format!("{w}x{h} mask"),
                format!("{}x{} mask", mask.width(), mask.height()),
            ));
        }
        Ok(())
    }

    pub(crate) fn check_signal(&self, len: usize) -> Result<()> {
        if len != self.signal_len {
            return Err(shape_err(
                format!("{} samples", self.signal_len),
                format!("{len} samples"),
            ));
        }
        Ok(())
    }
}

/// Inverse transform of every unit coefficient: atom `k1 + B*k2` has value
/// `T[k1][x] * T[k2][y]` at spatial position `x + B*y`.
pub fn build_dictionary(kind: TransformType) -> BasisDictionary {
    let t = kind.matrix();
    let b = kind.size();
    let n = b * b;
    let mut atoms = vec![0.0; n * n];
    for k2 in 0..b {
        for k1 in 0..b {
            let atom = &mut atoms[(k1 + b * k2) * n..(k1 + b * k2 + 1) * n];
            for y in 0..b {
                let wy = t.at(k2, y);
                for x in 0..b {
                    atom[x + b * y] = t.at(k1, x) * wy;
                }
            }
        }
    }
    BasisDictionary {
        kind,
        layout: Layout::Block2d,
        signal_len: n,
        atoms,
    }
}

pub fn build_line_dictionary(kind: TransformType) -> BasisDictionary {
    let t = kind.matrix();
    let b = kind.size();
    let atoms = (0..b).flat_map(|k| t.row(k).to_vec()).collect();
    BasisDictionary {
        kind,
        layout: Layout::Line1d,
        signal_len: b,
        atoms,
    }
}

/// Candidates whose masked norm does not exceed this are never selected.
pub const EXCLUSION_THRESHOLD: f64 = 1e-12;

/// A dictionary restricted to the occupied samples of one mask.
#[derive(Debug, Clone)]
pub struct MaskedDictionary<'a> {
    dict: &'a BasisDictionary,
    occupied: Vec<usize>,
    masked_norms: Vec<f64>,
    compact: Vec<f64>,
}

pub fn mask_dictionary<'a>(dict: &'a BasisDictionary, mask: &Mask) -> Result<MaskedDictionary<'a>> {
    dict.check_mask(mask)?;
    let weights = mask.weights();
    let occupied: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let n_occ = occupied.len();
    let k_count = dict.atom_count();
    let mut compact = Vec::with_capacity(k_count * n_occ);
    let mut masked_norms = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let atom = dict.atom(k);
        let mut norm = 0.0;
        for &i in &occupied {
            let v = atom[i];
            compact.push(v);
            norm += v * v * weights[i];
        }
        masked_norms.push(norm);
    }
    Ok(MaskedDictionary {
        dict,
        occupied,
        masked_norms,
        compact,
    })
}

impl<'a> MaskedDictionary<'a> {
    pub fn dictionary(&self) -> &'a BasisDictionary {
        self.dict
    }

    /// Occupied sample positions in ascending order.
    pub fn occupied(&self) -> &[usize] {
        &self.occupied
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.len()
    }

    pub fn masked_norms(&self) -> &[f64] {
        &self.masked_norms
    }

    pub fn masked_norm(&self, k: usize) -> f64 {
        self.masked_norms[k]
    }

    pub fn is_excluded(&self, k: usize) -> bool {
        self.masked_norms[k] <= EXCLUSION_THRESHOLD
    }

    /// Atom `k` restricted to the occupied samples.
    pub fn compact_atom(&self, k: usize) -> &[f64] {
        let n = self.occupied.len();
        &self.compact[k * n..(k + 1) * n]
    }

    /// Gathers the occupied entries of a full-length signal.
    pub fn compact_signal(&self, signal: &[f64]) -> Vec<f64> {
        self.occupied.iter().map(|&i| signal[i]).collect()
    }

    /// Scatters a compacted vector back to full length, zeros elsewhere.
    pub fn scatter(&self, compact: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dict.signal_len()];
        for (&i, &v) in self.occupied.iter().zip(compact) {
            out[i] = v;
        }
        out
    }
}
