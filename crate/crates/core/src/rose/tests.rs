use super::*;
use crate::block::apply_mask;
use crate::rate::{RateModelKind, ZIGZAG_4X4};
use crate::transform::inverse_2d;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const S0: [f64; 8] = [
    0.4904, 0.4157, 0.2778, 0.0975, -0.0975, -0.2778, -0.4157, -0.4904,
];

fn line_mask_without(i: usize) -> Mask {
    let bits: Vec<bool> = (0..8).map(|j| j != i).collect();
    Mask::from_bools(8, 1, &bits).unwrap()
}

fn cfg(kind: TransformType, qp: i64) -> RoseConfig {
    RoseConfig::from_qp(kind, qp, RateModelParams::STAT_DEFAULT).unwrap()
}

fn random_block(rng: &mut ChaCha8Rng, b: usize, amp: f64) -> Block {
    Block::from_vec(b, (0..b * b).map(|_| rng.random_range(-amp..amp)).collect()).unwrap()
}

fn random_mask(rng: &mut ChaCha8Rng, b: usize, p: f64) -> Mask {
    let bits: Vec<bool> = (0..b * b).map(|_| rng.random_bool(p)).collect();
    Mask::square_from_bools(b, &bits).unwrap()
}

#[test]
fn fig2_recovery_on_line() {
    let t = TransformType::Dct8.matrix();
    let mut s1 = t.row(1).to_vec();
    s1[7] = 0.0;
    let c = cfg(TransformType::Dct8, 32)
        .with_lambda(0.0)
        .with_max_iterations(1);
    for path in [RosePath::General, RosePath::Fast] {
        let r = rose_line(&s1, &line_mask_without(7), &c, path).unwrap();
        assert_eq!(r.model.selected, vec![1]);
        assert!((r.model.values[0] - 1.0).abs() < 1e-9);
        assert!(r.masked_error <= 1e-18, "{}", r.masked_error);
        assert!((r.coeffs.as_slice()[1] - 1.0).abs() < 1e-9);
        assert_eq!(r.coeffs.as_slice().iter().filter(|&&v| v != 0.0).count(), 1);
    }
}

#[test]
fn fig2_recovery_with_larger_budget() {
    let t = TransformType::Dct8.matrix();
    let mut s1 = t.row(1).to_vec();
    s1[7] = 0.0;
    let c = cfg(TransformType::Dct8, 32)
        .with_lambda(0.0)
        .with_max_iterations(4);
    let r = rose_line(&s1, &line_mask_without(7), &c, RosePath::Fast).unwrap();
    // exact after one step, the floor stops further iterations
    assert_eq!(r.model.iterations_used, 1);
}

#[test]
fn printed_line_recovers_within_print_precision() {
    let mut s1 = S0;
    s1[7] = 0.0;
    let c = cfg(TransformType::Dct8, 32)
        .with_lambda(0.0)
        .with_max_iterations(1);
    let r = rose_line(&s1, &line_mask_without(7), &c, RosePath::Fast).unwrap();
    assert_eq!(r.model.selected, vec![1]);
    assert!((r.model.values[0] - 1.0).abs() < 1e-4);
}

#[test]
fn line_density_of_fig2_signal() {
    let mut s1 = S0;
    s1[7] = 0.0;
    let c = RoseConfig::new(
        TransformType::Dct8,
        QuantParams::custom(4, 0.2, 1.0).unwrap(),
        RateModelParams::STAT_DEFAULT,
    );
    assert_eq!(analyze_density_line(&s1, &c).unwrap(), 6);
}

#[test]
fn density_examples() {
    let c = cfg(TransformType::Dct8, 32);
    assert_eq!(analyze_density(&Block::zeros(8), &c).unwrap(), 0);
    let dc = BasisDictionary::shared(TransformType::Dct8).atom(0);
    let s = Block::from_vec(8, dc.iter().map(|v| v * c.quant.qstep * 10.0).collect()).unwrap();
    assert_eq!(analyze_density(&s, &c).unwrap(), 1);
    assert!(analyze_density(&Block::zeros(4), &c).is_err());
}

#[test]
fn projection_full_mask_equals_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = random_block(&mut rng, 8, 50.0);
    let d = BasisDictionary::shared(TransformType::Dct8);
    let md = mask_dictionary(d, &Mask::square_full(8)).unwrap();
    let proj = project_coefficients(&md.compact_signal(s.as_slice()), &md).unwrap();
    let coeffs = forward_2d(&s, TransformType::Dct8.matrix()).unwrap();
    for (p, c) in proj.iter().zip(coeffs.as_slice()) {
        assert!((p.unwrap() - c).abs() < 1e-10);
    }
}

#[test]
fn projection_of_masked_basis_is_exact() {
    let d = BasisDictionary::shared_line(TransformType::Dct8);
    let md = mask_dictionary(d, &line_mask_without(7)).unwrap();
    let r = md.compact_signal(d.atom(1));
    let proj = project_coefficients(&r, &md).unwrap();
    assert_eq!(proj[1], Some(1.0));
    assert!(project_coefficients(&r[..3], &md).is_err());
}

#[test]
fn unoccupied_basis_is_excluded() {
    // a single occupied sample where the DST-free DCT_4 basis k=(1,0) ... use
    // an empty mask: every basis function is excluded
    let d = BasisDictionary::shared(TransformType::Dct4);
    let md = mask_dictionary(d, &Mask::empty(4, 4)).unwrap();
    let proj = project_coefficients(&[], &md).unwrap();
    assert!(proj.iter().all(Option::is_none));
    let err = select_coefficient(
        &[],
        &proj,
        &md,
        1.0,
        &SparseModel::default(),
        &RateModelParams::STAT_DEFAULT,
        &QuantParams::from_qp(32).unwrap(),
    );
    assert!(matches!(err, Err(Error::NoAdmissibleCandidate)));
}

#[test]
fn selection_fig2_lambda_zero() {
    let d = BasisDictionary::shared_line(TransformType::Dct8);
    let md = mask_dictionary(d, &line_mask_without(7)).unwrap();
    let mut s1 = d.atom(1).to_vec();
    s1[7] = 0.0;
    let r = md.compact_signal(&s1);
    let proj = project_coefficients(&r, &md).unwrap();
    let q = QuantParams::from_qp(32).unwrap();
    let k = select_coefficient(
        &r,
        &proj,
        &md,
        0.0,
        &SparseModel::default(),
        &RateModelParams::LOG_DEFAULT,
        &q,
    )
    .unwrap();
    assert_eq!(k, 1);
}

#[test]
fn zero_residual_selects_smallest_admissible() {
    let d = BasisDictionary::shared(TransformType::Dct4);
    let bits: Vec<bool> = (0..16).map(|i| i % 3 == 0).collect();
    let md = mask_dictionary(d, &Mask::square_from_bools(4, &bits).unwrap()).unwrap();
    let r = vec![0.0; md.occupied_count()];
    let proj = project_coefficients(&r, &md).unwrap();
    let first = (0..16).find(|&k| !md.is_excluded(k)).unwrap();
    let q = QuantParams::from_qp(32).unwrap();
    let k = select_coefficient(
        &r,
        &proj,
        &md,
        5.0,
        &SparseModel::default(),
        &RateModelParams::STAT_DEFAULT,
        &q,
    )
    .unwrap();
    assert_eq!(k, first);
}

#[test]
fn cheaper_candidate_wins_on_equal_error() {
    // flat positions 2 = (2,0) and 4 = (0,1) carry equal amplitude; the
    // second sits earlier in the zig-zag scan and is cheaper under `stat`
    let d = BasisDictionary::shared(TransformType::Dct4);
    let (hi, lo) = (2usize, 4usize);
    assert_eq!(ZIGZAG_4X4[5], (2, 0));
    assert_eq!(ZIGZAG_4X4[2], (0, 1));
    let amp = 60.0;
    let s: Vec<f64> = d
        .atom(hi)
        .iter()
        .zip(d.atom(lo))
        .map(|(a, b)| amp * (a + b))
        .collect();
    let md = mask_dictionary(d, &Mask::square_full(4)).unwrap();
    let r = md.compact_signal(&s);
    let proj = project_coefficients(&r, &md).unwrap();
    let q = QuantParams::from_qp(32).unwrap();
    let rate = RateModelParams::STAT_DEFAULT;
    let empty = SparseModel::default();

    let k0 = select_coefficient(&r, &proj, &md, 0.0, &empty, &rate, &q).unwrap();
    assert_eq!(k0, hi, "lambda = 0 falls back to the index tie-break");

    let lambda = q.lambda;
    let k = select_coefficient(&r, &proj, &md, lambda, &empty, &rate, &q).unwrap();
    assert_eq!(k, lo);

    // direct cost evaluation of both candidates
    let cost = |k: usize| {
        let c = proj[k].unwrap();
        let err: f64 = r
            .iter()
            .zip(d.atom(k))
            .map(|(x, p)| (x - c * p).powi(2))
            .sum();
        let mut levels = crate::block::LevelBlock::zeros(4);
        levels.as_mut_slice()[k] = q.quantize_value(c);
        err + lambda * crate::rate::estimate_bits_stat(&levels, &rate)
    };
    assert!(cost(lo) < cost(hi));
}

#[test]
fn joint_update_full_mask_decouples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = random_block(&mut rng, 8, 30.0);
    let d = BasisDictionary::shared(TransformType::Dct8);
    let md = mask_dictionary(d, &Mask::square_full(8)).unwrap();
    let coeffs = forward_2d(&s, TransformType::Dct8.matrix()).unwrap();
    let sel = [3usize, 17, 40];
    let c = joint_ls_update(&sel, &md, &md.compact_signal(s.as_slice())).unwrap();
    for (k, v) in sel.iter().zip(c) {
        assert!((v - coeffs.as_slice()[*k]).abs() < 1e-10);
    }
}

#[test]
fn joint_update_single_index_is_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_block(&mut rng, 4, 30.0);
    let mask = random_mask(&mut rng, 4, 0.5);
    let md = mask_dictionary(BasisDictionary::shared(TransformType::Dst4), &mask).unwrap();
    let sm = md.compact_signal(s.as_slice());
    let proj = project_coefficients(&sm, &md).unwrap();
    let k = (0..16).find(|&k| proj[k].is_some()).unwrap();
    let c = joint_ls_update(&[k], &md, &sm).unwrap();
    assert!((c[0] - proj[k].unwrap()).abs() < 1e-10);
}

#[test]
fn joint_update_two_indices_matches_explicit_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = BasisDictionary::shared(TransformType::Dct4);
    for _ in 0..50 {
        let s = random_block(&mut rng, 4, 40.0);
        let bits: Vec<bool> = {
            let mut idx: Vec<usize> = (0..16).collect();
            for i in (1..16).rev() {
                idx.swap(i, rng.random_range(0..=i));
            }
            let mut b = vec![false; 16];
            for &i in &idx[..8] {
                b[i] = true;
            }
            b
        };
        let mask = Mask::square_from_bools(4, &bits).unwrap();
        let (j, k) = (rng.random_range(0..8usize), rng.random_range(8..16usize));
        // oracle: explicit 2x2 Gram inverse on full-length masked vectors
        let m = mask.weights();
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).zip(m).map(|((x, y), w)| x * y * w).sum()
        };
        let (pj, pk) = (d.atom(j), d.atom(k));
        let (g11, g12, g22) = (dot(pj, pj), dot(pj, pk), dot(pk, pk));
        let (b1, b2) = (dot(pj, s.as_slice()), dot(pk, s.as_slice()));
        let det = g11 * g22 - g12 * g12;
        if det.abs() < 1e-6 {
            continue;
        }
        let c1 = (g22 * b1 - g12 * b2) / det;
        let c2 = (g11 * b2 - g12 * b1) / det;

        let md = mask_dictionary(d, &mask).unwrap();
        let c = joint_ls_update(&[j, k], &md, &md.compact_signal(s.as_slice())).unwrap();
        assert!((c[0] - c1).abs() < 1e-9 && (c[1] - c2).abs() < 1e-9);
    }
}

#[test]
fn empty_mask_gives_empty_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = random_block(&mut rng, 8, 100.0);
    let c = cfg(TransformType::Dct8, 22);
    for r in [
        rose(&s, &Mask::empty(8, 8), &c).unwrap(),
        rose_fast(&s, &Mask::empty(8, 8), &c).unwrap(),
    ] {
        assert!(r.model.selected.is_empty());
        assert!(r.coeffs.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(r.estimated_bits, 0.0);
    }
}

#[test]
fn full_mask_keeps_two_largest() {
    let t = TransformType::Dct8.matrix();
    let mut coeffs = CoeffBlock::zeros(8);
    coeffs.as_mut_slice()[..3].copy_from_slice(&[5.0, 3.0, 1.0]);
    let s = inverse_2d(&coeffs, t).unwrap();
    let c = cfg(TransformType::Dct8, 32)
        .with_lambda(0.0)
        .with_max_iterations(2);
    let r = rose_fast(&s, &Mask::square_full(8), &c).unwrap();
    let mut expected = CoeffBlock::zeros(8);
    expected.as_mut_slice()[..2].copy_from_slice(&[5.0, 3.0]);
    assert!(r.coeffs.max_abs_diff(&expected) < 1e-9);
    assert_eq!(r.model.selected, vec![0, 1]);
}

#[test]
fn single_occupied_sample_is_reproduced() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for kind in TransformType::ALL {
        let b = kind.size();
        let s = random_block(&mut rng, b, 80.0);
        let mut bits = vec![false; b * b];
        let pos = rng.random_range(0..b * b);
        bits[pos] = true;
        let mask = Mask::square_from_bools(b, &bits).unwrap();
        let c = cfg(kind, 27).with_max_iterations(1);
        let r = rose_fast(&s, &mask, &c).unwrap();
        let rec = inverse_2d(&r.coeffs, kind.matrix()).unwrap();
        assert!((rec.as_slice()[pos] - s.as_slice()[pos]).abs() < 1e-9);
        assert!(r.masked_error < 1e-12 * s.as_slice()[pos].powi(2).max(1.0));
    }
}

#[test]
fn fast_matches_general() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in TransformType::ALL {
        let b = kind.size();
        for _ in 0..6 {
            let s = random_block(&mut rng, b, 20.0);
            let p = rng.random_range(0.1..0.9);
            let mask = random_mask(&mut rng, b, p);
            let qp = rng.random_range(27..43);
            for rate in [RateModelParams::LOG_DEFAULT, RateModelParams::STAT_DEFAULT] {
                let c = RoseConfig::from_qp(kind, qp, rate)
                    .unwrap()
                    .with_max_iterations(8);
                let g = rose(&s, &mask, &c).unwrap();
                let f = rose_fast(&s, &mask, &c).unwrap();
                assert_eq!(g.model.selected, f.model.selected);
                assert!(g.coeffs.max_abs_diff(&f.coeffs) <= 1e-9);
            }
        }
    }
}

#[test]
fn fast_rejects_fractional_mask() {
    let mask = Mask::weighted(4, 4, vec![0.5; 16]).unwrap();
    let c = cfg(TransformType::Dct4, 30);
    let s = Block::zeros(4);
    assert!(matches!(
        rose_fast(&s, &mask, &c),
        Err(Error::NonBinaryMask)
    ));
    assert!(rose(&s, &mask, &c).is_ok());
}

#[test]
fn fractional_weights_reduce_weighted_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = random_block(&mut rng, 4, 40.0);
    let w: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
    let mask = Mask::weighted(4, 4, w.clone()).unwrap();
    let c = cfg(TransformType::Dct4, 22)
        .with_lambda(0.0)
        .with_max_iterations(4);
    let r = rose(&s, &mask, &c).unwrap();
    let start: f64 = s.as_slice().iter().zip(&w).map(|(x, m)| x * x * m).sum();
    assert!(r.masked_error < start);
    assert!(r
        .history
        .windows(2)
        .all(|p| p[1].residual_energy <= p[0].residual_energy * (1.0 + 1e-12)));
}

#[test]
fn shape_errors() {
    let c = cfg(TransformType::Dct8, 30);
    assert!(rose(&Block::zeros(4), &Mask::square_full(4), &c).is_err());
    assert!(rose_fast(&Block::zeros(8), &Mask::square_full(4), &c).is_err());
}

#[test]
fn invariants_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for kind in [
        TransformType::Dst4,
        TransformType::Dct4,
        TransformType::Dct8,
        TransformType::Dct16,
    ] {
        let b = kind.size();
        for _ in 0..10 {
            let s = random_block(&mut rng, b, 30.0);
            let mask = random_mask(&mut rng, b, 0.5);
            let c = cfg(kind, 32).with_lambda(0.0);
            let r = rose_fast(&s, &mask, &c).unwrap();
            assert!(r.model.iterations_used <= analyze_density(&s, &c).unwrap());
            let sm = apply_mask(&s, &mask).unwrap().energy();
            let mut prev = sm;
            for h in &r.history {
                assert!(h.residual_energy <= prev + 1e-12 * sm);
                assert!(h.stationarity <= 1e-8);
                prev = h.residual_energy;
            }
            let mut uniq = r.model.selected.clone();
            uniq.sort_unstable();
            uniq.dedup();
            assert_eq!(uniq.len(), r.model.selected.len());

            // at least as good as the best single basis function
            if let Some(first) = r.history.first() {
                let md = mask_dictionary(BasisDictionary::shared(kind), &mask).unwrap();
                let sv = md.compact_signal(s.as_slice());
                let best_single = (0..b * b)
                    .filter(|&k| !md.is_excluded(k))
                    .map(|k| {
                        let a = md.compact_atom(k);
                        let num: f64 = sv.iter().zip(a).map(|(x, p)| x * p).sum();
                        sm - num * num / md.masked_norm(k)
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!((first.residual_energy - best_single).abs() <= 1e-9 * sm.max(1.0));
                assert!(r.masked_error <= best_single + 1e-9 * sm.max(1.0));
            }
        }
    }
}

#[test]
fn log_and_stat_configs_both_run() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let s = random_block(&mut rng, 8, 40.0);
    let mask = random_mask(&mut rng, 8, 0.6);
    for kind in [RateModelKind::Log, RateModelKind::Stat] {
        let c = RoseConfig::from_qp(TransformType::Dct8, 27, RateModelParams::default_for(kind))
            .unwrap();
        let r = rose_fast(&s, &mask, &c).unwrap();
        assert!(r.model.iterations_used <= r.budget);
        assert!(r.model.values.iter().all(|v| v.is_finite()));
    }
}
