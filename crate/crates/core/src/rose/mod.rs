//! Rate-constrained selective extrapolation.
//!
//! A block is approximated on its occupied samples only, by greedily picking
//! spatial basis functions of the block transform. Each iteration projects
//! the current masked residual onto every unused basis function, picks the
//! one minimizing `masked error + lambda * bits`, re-solves all selected
//! coefficients jointly in the masked least-squares sense and updates the
//! residual. The number of iterations is bounded by the number of nonzero
//! levels a conventional encoder would produce for the same block.
//!
//! Two implementations share the iteration: [`rose`] works on full-length
//! vectors weighted by the mask (fractional weights allowed), [`rose_fast`]
//! works on vectors compacted to the occupied samples with precomputed
//! masked norms and requires a binary mask.

mod solver;

use crate::block::{Block, CoeffBlock, Mask};
use crate::dictionary::{
    mask_dictionary, BasisDictionary, Layout, MaskedDictionary, EXCLUSION_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::quant::{density, quantize_with, QuantParams};
use crate::rate::{RateModelParams, RateTracker};
use crate::transform::{forward_1d, forward_2d, TransformType};

use solver::JointSolver;
pub use solver::RANK_TOLERANCE;

/// Iteration stops once the masked residual energy falls to this fraction
/// of the masked signal energy.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RoseConfig {
    pub transform: TransformType,
    pub quant: QuantParams,
    pub rate_model: RateModelParams,
    pub max_iterations_override: Option<usize>,
    pub lambda_override: Option<f64>,
}

impl RoseConfig {
    pub fn new(transform: TransformType, quant: QuantParams, rate_model: RateModelParams) -> Self {
        Self {
            transform,
            quant,
            rate_model,
            max_iterations_override: None,
            lambda_override: None,
        }
    }

    pub fn from_qp(transform: TransformType, qp: i64, rate_model: RateModelParams) -> Result<Self> {
        Ok(Self::new(transform, QuantParams::from_qp(qp)?, rate_model))
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_override = Some(lambda);
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations_override = Some(n);
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_override.unwrap_or(self.quant.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda_override {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!("lambda override {l}")));
            }
        }
        self.rate_model.validate()
    }
}

/// Selected basis indices (in selection order) and their coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseModel {
    pub selected: Vec<usize>,
    pub values: Vec<f64>,
    pub iterations_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub index: usize,
    /// Masked residual energy after the joint update.
    pub residual_energy: f64,
    /// `max_k |<phi_k^m, r^m>| / ||s^m||` over selected `k`.
    pub stationarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoseResult {
    pub model: SparseModel,
    /// Selected values at their frequency positions, zero elsewhere.
    pub coeffs: CoeffBlock,
    pub masked_error: f64,
    pub estimated_bits: f64,
    /// Iteration budget `N` that was in force.
    pub budget: usize,
    pub history: Vec<IterationStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RosePath {
    General,
    Fast,
}

/// Masked inner-product space the iteration runs in.
trait MaskedSpace {
    fn atom_count(&self) -> usize;
    fn masked_norm(&self, k: usize) -> f64;
    /// The signal in this space's representation.
    fn signal(&self) -> Vec<f64>;
    fn dot(&self, v: &[f64], k: usize) -> f64;
    fn atom_dot(&self, j: usize, k: usize) -> f64;
    fn energy(&self, v: &[f64]) -> f64;
    /// `sum_i |r_i - c * phi_k,i|^2 m_i`
    fn model_error(&self, r: &[f64], c: f64, k: usize) -> f64;
    fn sub_atom(&self, v: &mut [f64], c: f64, k: usize);
}

struct WeightedSpace<'a> {
    dict: &'a BasisDictionary,
    weights: &'a [f64],
    signal: &'a [f64],
    norms: Vec<f64>,
}

impl<'a> WeightedSpace<'a> {
    fn new(dict: &'a BasisDictionary, weights: &'a [f64], signal: &'a [f64]) -> Self {
        let norms = (0..dict.atom_count())
            .map(|k| {
                dict.atom(k)
                    .iter()
                    .zip(weights)
                    .map(|(p, m)| p * p * m)
                    .sum()
            })
            .collect();
        Self {
            dict,
            weights,
            signal,
            norms,
        }
    }
}

impl MaskedSpace for WeightedSpace<'_> {
    fn atom_count(&self) -> usize {
        self.dict.atom_count()
    }

    fn masked_norm(&self, k: usize) -> f64 {
        self.norms[k]
    }

    fn signal(&self) -> Vec<f64> {
        self.signal.to_vec()
    }

    fn dot(&self, v: &[f64], k: usize) -> f64 {
        v.iter()
            .zip(self.dict.atom(k))
            .zip(self.weights)
            .map(|((r, p), m)| r * p * m)
            .sum()
    }

    fn atom_dot(&self, j: usize, k: usize) -> f64 {
        self.dot(self.dict.atom(j), k)
    }

    fn energy(&self, v: &[f64]) -> f64 {
        v.iter().zip(self.weights).map(|(r, m)| r * r * m).sum()
    }

    fn model_error(&self, r: &[f64], c: f64, k: usize) -> f64 {
        r.iter()
            .zip(self.dict.atom(k))
            .zip(self.weights)
            .map(|((r, p), m)| {
                let d = r - c * p;
                d * d * m
            })
            .sum()
    }

    fn sub_atom(&self, v: &mut [f64], c: f64, k: usize) {
        for (x, p) in v.iter_mut().zip(self.dict.atom(k)) {
            *x -= c * p;
        }
    }
}

struct CompactSpace<'d, 'a> {
    md: &'d MaskedDictionary<'a>,
    signal: Vec<f64>,
}

impl MaskedSpace for CompactSpace<'_, '_> {
    fn atom_count(&self) -> usize {
        self.md.dictionary().atom_count()
    }

    fn masked_norm(&self, k: usize) -> f64 {
        self.md.masked_norm(k)
    }

    fn signal(&self) -> Vec<f64> {
        self.signal.clone()
    }

    fn dot(&self, v: &[f64], k: usize) -> f64 {
        v.iter()
            .zip(self.md.compact_atom(k))
            .map(|(r, p)| r * p)
            .sum()
    }

    fn atom_dot(&self, j: usize, k: usize) -> f64 {
        self.dot(self.md.compact_atom(j), k)
    }

    fn energy(&self, v: &[f64]) -> f64 {
        v.iter().map(|r| r * r).sum()
    }

    fn model_error(&self, r: &[f64], c: f64, k: usize) -> f64 {
        r.iter()
            .zip(self.md.compact_atom(k))
            .map(|(r, p)| {
                let d = r - c * p;
                d * d
            })
            .sum()
    }

    fn sub_atom(&self, v: &mut [f64], c: f64, k: usize) {
        for (x, p) in v.iter_mut().zip(self.md.compact_atom(k)) {
            *x -= c * p;
        }
    }
}

/// Conventional coding density `N`: nonzero levels of the quantized transform.
pub fn analyze_density(s: &Block, cfg: &RoseConfig) -> Result<usize> {
    let coeffs = forward_2d(s, cfg.transform.matrix())?;
    Ok(density(&quantize_with(
        &coeffs,
        cfg.quant.qstep,
        cfg.quant.dead_zone,
    )))
}

/// Density of a 1-D signal under the line transform.
pub fn analyze_density_line(s: &[f64], cfg: &RoseConfig) -> Result<usize> {
    let coeffs = forward_1d(s, cfg.transform.matrix())?;
    Ok(coeffs
        .iter()
        .filter(|&&c| cfg.quant.quantize_value(c) != 0)
        .count())
}

/// Preliminary projection coefficients; `None` marks excluded candidates.
pub fn project_coefficients(residual_m: &[f64], md: &MaskedDictionary) -> Result<Vec<Option<f64>>> {
    if residual_m.len() != md.occupied_count() {
        return Err(crate::error::shape_err(
            format!("{} occupied samples", md.occupied_count()),
            format!("{} samples", residual_m.len()),
        ));
    }
    Ok((0..md.dictionary().atom_count())
        .map(|k| {
            let n = md.masked_norm(k);
            if n <= EXCLUSION_THRESHOLD {
                None
            } else {
                let num: f64 = residual_m
                    .iter()
                    .zip(md.compact_atom(k))
                    .map(|(r, p)| r * p)
                    .sum();
                Some(num / n)
            }
        })
        .collect())
}

fn rate_tracker(
    model: &SparseModel,
    rate: &RateModelParams,
    quant: &QuantParams,
    b: usize,
) -> RateTracker {
    let mut t = RateTracker::new(*rate, b);
    for (&k, &c) in model.selected.iter().zip(&model.values) {
        t.insert(k, quant.quantize_value(c));
    }
    t
}

struct Selection {
    k: usize,
    cost: f64,
}

/// Argmin of `model error + lambda * bits` over admissible unused candidates,
/// ties resolved to the smallest index.
#[allow(clippy::too_many_arguments)]
fn select_in<S: MaskedSpace>(
    space: &S,
    residual: &[f64],
    proj: &[Option<f64>],
    used: &[bool],
    tracker: &RateTracker,
    lambda: f64,
    quant: &QuantParams,
    tie_scale: f64,
) -> Option<Selection> {
    let mut best: Option<Selection> = None;
    for (k, c) in proj.iter().enumerate() {
        let Some(c) = *c else { continue };
        if used[k] {
            continue;
        }
        let err = space.model_error(residual, c, k);
        let bits = if lambda == 0.0 {
            0.0
        } else {
            tracker.bits_with(k, quant.quantize_value(c))
        };
        let cost = err + lambda * bits;
        let better = match &best {
            None => true,
            Some(b) => cost < b.cost - 1e-12 * b.cost.abs().max(tie_scale),
        };
        if better {
            best = Some(Selection { k, cost });
        }
    }
    best
}

/// Picks the next basis index for the compacted residual.
pub fn select_coefficient(
    residual_m: &[f64],
    proj: &[Option<f64>],
    md: &MaskedDictionary,
    lambda: f64,
    current: &SparseModel,
    rate_model: &RateModelParams,
    quant: &QuantParams,
) -> Result<usize> {
    let space = CompactSpace {
        md,
        signal: Vec::new(),
    };
    let mut used = vec![false; space.atom_count()];
    for &k in &current.selected {
        used[k] = true;
    }
    let tracker = rate_tracker(current, rate_model, quant, md.dictionary().block_size());
    let scale = space.energy(residual_m);
    select_in(
        &space, residual_m, proj, &used, &tracker, lambda, quant, scale,
    )
    .map(|s| s.k)
    .ok_or(Error::NoAdmissibleCandidate)
}

fn build_solver<S: MaskedSpace>(space: &S, selected: &[usize], signal: &[f64]) -> JointSolver {
    let mut solver = JointSolver::new();
    for (i, &k) in selected.iter().enumerate() {
        let cross: Vec<f64> = selected[..i]
            .iter()
            .map(|&j| space.atom_dot(j, k))
            .collect();
        solver.push(&cross, space.masked_norm(k), space.dot(signal, k));
    }
    solver
}

/// Solves for all selected coefficients at once and returns them with the
/// resulting residual. One refinement step is applied to the solution.
fn solve_and_residual<S: MaskedSpace>(
    space: &S,
    solver: &JointSolver,
    selected: &[usize],
    signal: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let residual_of = |c: &[f64]| {
        let mut r = signal.to_vec();
        for (&k, &v) in selected.iter().zip(c) {
            space.sub_atom(&mut r, v, k);
        }
        r
    };
    let mut c = solver.solve();
    let r = residual_of(&c);
    let correction_rhs: Vec<f64> = selected.iter().map(|&k| space.dot(&r, k)).collect();
    let d = solver.solve_for(&correction_rhs);
    for (v, dv) in c.iter_mut().zip(d) {
        *v += dv;
    }
    let r = residual_of(&c);
    (c, r)
}

/// Joint masked least-squares coefficients for a fixed selection.
pub fn joint_ls_update(selected: &[usize], md: &MaskedDictionary, s_m: &[f64]) -> Result<Vec<f64>> {
    if selected.is_empty() {
        return Err(Error::InvalidParameter("empty selection".into()));
    }
    if s_m.len() != md.occupied_count() {
        return Err(crate::error::shape_err(
            format!("{} occupied samples", md.occupied_count()),
            format!("{} samples", s_m.len()),
        ));
    }
    let space = CompactSpace {
        md,
        signal: s_m.to_vec(),
    };
    let solver = build_solver(&space, selected, s_m);
    Ok(solve_and_residual(&space, &solver, selected, s_m).0)
}

fn iterate<S: MaskedSpace>(
    space: &S,
    budget: usize,
    cfg: &RoseConfig,
    block_size: usize,
) -> RoseResult {
    let signal = space.signal();
    let lambda = cfg.lambda();
    let quant = &cfg.quant;
    let signal_energy = space.energy(&signal);
    let k_count = space.atom_count();

    let mut model = SparseModel::default();
    let mut used = vec![false; k_count];
    let mut residual = signal.clone();
    let mut residual_energy = signal_energy;
    let mut solver = JointSolver::new();
    let mut history = Vec::new();
    let signal_norm = signal_energy.sqrt();

    for nu in 0..budget {
        if residual_energy <= RESIDUAL_FLOOR * signal_energy {
            break;
        }
        let proj: Vec<Option<f64>> = (0..k_count)
            .map(|k| {
                let n = space.masked_norm(k);
                (n > EXCLUSION_THRESHOLD && !used[k]).then(|| space.dot(&residual, k) / n)
            })
            .collect();
        let tracker = rate_tracker(&model, &cfg.rate_model, quant, block_size);
        let Some(sel) = select_in(
            space,
            &residual,
            &proj,
            &used,
            &tracker,
            lambda,
            quant,
            signal_energy,
        ) else {
            break;
        };
        let k = sel.k;
        let cross: Vec<f64> = model
            .selected
            .iter()
            .map(|&j| space.atom_dot(j, k))
            .collect();
        solver.push(&cross, space.masked_norm(k), space.dot(&signal, k));
        used[k] = true;
        model.selected.push(k);

        let (values, r) = solve_and_residual(space, &solver, &model.selected, &signal);
        model.values = values;
        residual = r;
        residual_energy = space.energy(&residual);
        model.iterations_used = nu + 1;

        let stationarity = model
            .selected
            .iter()
            .map(|&j| space.dot(&residual, j).abs())
            .fold(0.0, f64::max)
            / signal_norm.max(f64::MIN_POSITIVE);
        history.push(IterationStats {
            index: k,
            residual_energy,
            stationarity,
        });
    }

    let mut coeffs = CoeffBlock::zeros(block_size);
    for (&k, &v) in model.selected.iter().zip(&model.values) {
        coeffs.as_mut_slice()[k] = v;
    }
    let levels = quantize_with(&coeffs, quant.qstep, quant.dead_zone);
    RoseResult {
        estimated_bits: cfg.rate_model.estimate_block_bits(&levels),
        model,
        coeffs,
        masked_error: residual_energy,
        budget,
        history,
    }
}

fn empty_result(block_size: usize, budget: usize) -> RoseResult {
    RoseResult {
        model: SparseModel::default(),
        coeffs: CoeffBlock::zeros(block_size),
        masked_error: 0.0,
        estimated_bits: 0.0,
        budget,
        history: Vec::new(),
    }
}

/// Runs the iteration on a flattened signal against any dictionary.
pub fn rose_with(
    dict: &BasisDictionary,
    signal: &[f64],
    mask: &Mask,
    budget: usize,
    cfg: &RoseConfig,
    path: RosePath,
) -> Result<RoseResult> {
    cfg.validate()?;
    dict.check_signal(signal.len())?;
    dict.check_mask(mask)?;
    let b = dict.block_size();
    if path == RosePath::Fast && !mask.is_binary() {
        return Err(Error::NonBinaryMask);
    }
    if budget == 0 || mask.occupied_count() == 0 {
        let mut r = empty_result(b, budget);
        r.masked_error = signal
            .iter()
            .zip(mask.weights())
            .map(|(s, m)| s * s * m)
            .sum();
        return Ok(r);
    }
    Ok(match path {
        RosePath::General => {
            let space = WeightedSpace::new(dict, mask.weights(), signal);
            iterate(&space, budget, cfg, b)
        }
        RosePath::Fast => {
            let md = mask_dictionary(dict, mask)?;
            let space = CompactSpace {
                signal: md.compact_signal(signal),
                md: &md,
            };
            iterate(&space, budget, cfg, b)
        }
    })
}

fn block_budget(s: &Block, cfg: &RoseConfig) -> Result<usize> {
    match cfg.max_iterations_override {
        Some(n) => Ok(n),
        None => analyze_density(s, cfg),
    }
}

/// General masked path (fractional mask weights allowed).
pub fn rose(s: &Block, mask: &Mask, cfg: &RoseConfig) -> Result<RoseResult> {
    let budget = block_budget(s, cfg)?;
    rose_with(
        BasisDictionary::shared(cfg.transform),
        s.as_slice(),
        mask,
        budget,
        cfg,
        RosePath::General,
    )
}

/// Compacted path on occupied samples only; the mask must be binary.
pub fn rose_fast(s: &Block, mask: &Mask, cfg: &RoseConfig) -> Result<RoseResult> {
    let budget = block_budget(s, cfg)?;
    rose_with(
        BasisDictionary::shared(cfg.transform),
        s.as_slice(),
        mask,
        budget,
        cfg,
        RosePath::Fast,
    )
}

/// 1-D variant for a single line of samples; `mask` is `B x 1`.
pub fn rose_line(s: &[f64], mask: &Mask, cfg: &RoseConfig, path: RosePath) -> Result<RoseResult> {
    let dict = BasisDictionary::shared_line(cfg.transform);
    debug_assert_eq!(dict.layout(), Layout::Line1d);
    let budget = match cfg.max_iterations_override {
        Some(n) => n,
        None => analyze_density_line(s, cfg)?,
    };
    rose_with(dict, s, mask, budget, cfg, path)
}

#[cfg(test)]
mod tests;
