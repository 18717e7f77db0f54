use std::collections::HashMap;

use proptest::prelude::*;
use rand::Rng;
use slicegen_core::error::Error;
use slicegen_core::models::*;
use slicegen_core::numeric::{gaussian_matrix, RngStream};
use slicegen_core::projectors::sample_dense;
use slicegen_core::quantize::*;

fn rng(seed: u64) -> RngStream {
    RngStream::new(seed, 53)
}

/// Bits recomputed from raw assignments with exact integer counting.
fn recount_bits(assignments: &[usize], levels: usize) -> u64 {
    let d = assignments.len();
    let mut counts: HashMap<usize, u64> = HashMap::new();
    for &a in assignments {
        *counts.entry(a).or_default() += 1;
    }
    let h: f64 = counts.values().map(|&c| -(c as f64 / d as f64) * (c as f64 / d as f64).log2()).sum();
    let x = d as f64 * h;
    let payload = if (x - x.round()).abs() < 1e-9 * x.max(1.0) { x.round() } else { x.ceil() };
    let mut log = 0;
    while (1usize << log) < d {
        log += 1;
    }
    payload as u64 + levels as u64 * (16 + log) + 2
}

#[test]
fn single_level_costs_only_the_codebook() {
    let w = gaussian_matrix(&rng(0), 100, 1).into_vec();
    let qw = quantize(&w, &Codebook::new(vec![0.25], Precision::Half).unwrap()).unwrap();
    assert!(qw.assignments.iter().all(|&a| a == 0));
    assert_eq!(qw.probabilities, vec![1.0]);
    assert_eq!(qw.bit_bound, 16 + 7 + 2);
    assert_eq!(quantization_bound_bits(&qw), qw.bit_bound);
}

#[test]
fn weights_on_levels_have_zero_distortion() {
    let levels = vec![-1.5, -0.25, 0.5, 2.0];
    let cb = Codebook::new(levels.clone(), Precision::Half).unwrap();
    let w: Vec<f64> = (0..40).map(|i| levels[i % 4]).collect();
    let qw = quantize(&w, &cb).unwrap();
    assert_eq!(qw.max_distortion, 0.0);
    assert_eq!(qw.values(), w);
}

#[test]
fn balanced_binary_codebook_on_thousand_weights() {
    let w: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
    let qw = quantize(&w, &Codebook::new(vec![-1.0, 1.0], Precision::Half).unwrap()).unwrap();
    assert_eq!(qw.bit_bound, 1054);
    assert_eq!(bit_bound(1000, 2, 1.0), 1054);
}

#[test]
fn uniform_four_levels_on_hundred_weights() {
    let w: Vec<f64> = (0..100).map(|i| (i % 4) as f64).collect();
    let qw = quantize(&w, &Codebook::new(vec![0.0, 1.0, 2.0, 3.0], Precision::Half).unwrap()).unwrap();
    assert_eq!(qw.probabilities, vec![0.25; 4]);
    assert_eq!(qw.bit_bound, 294);
}

#[test]
fn ceil_log2_values() {
    assert_eq!([1, 2, 3, 4, 5, 100, 1000, 1024, 1025].map(ceil_log2), [0, 1, 2, 2, 3, 7, 10, 10, 11]);
}

#[test]
fn empty_codebook_is_rejected() {
    assert!(matches!(Codebook::new(vec![], Precision::Half), Err(Error::EmptyCodebook)));
    assert!(matches!(Codebook::from_quantiles(&[1.0], 0, Precision::Half), Err(Error::EmptyCodebook)));
}

#[test]
fn half_precision_levels_round_trip() {
    let cb = Codebook::new(vec![0.1, -3.3, 1e-3], Precision::Half).unwrap();
    for &c in cb.levels() {
        assert_eq!(half::f16::from_f64(c).to_f64(), c);
    }
    assert!(cb.levels().windows(2).all(|p| p[0] < p[1]));
    let json = serde_json::to_string(&cb).unwrap();
    assert!(json.contains("levels_f16"));
    assert_eq!(serde_json::from_str::<Codebook>(&json).unwrap(), cb);
    let full = Codebook::new(vec![0.1], Precision::Full).unwrap();
    assert_eq!(full.levels(), &[0.1]);
    assert_eq!(serde_json::from_str::<Codebook>(&serde_json::to_string(&full).unwrap()).unwrap(), full);
}

#[test]
fn quantized_weights_serialize() {
    let w = gaussian_matrix(&rng(1), 50, 1).into_vec();
    let qw = quantize(&w, &Codebook::from_quantiles(&w, 3, Precision::Half).unwrap()).unwrap();
    assert_eq!(serde_json::from_str::<QuantizedWeights>(&serde_json::to_string(&qw).unwrap()).unwrap(), qw);
}

proptest! {
    #[test]
    fn bit_bound_matches_counting_oracle(seed in 0u64..5000, d in 1usize..600, l in 1usize..12) {
        let w = gaussian_matrix(&rng(seed), d, 1).into_vec();
        let cb = Codebook::from_quantiles(&w, l, Precision::Half).unwrap();
        let qw = quantize(&w, &cb).unwrap();
        prop_assert_eq!(qw.bit_bound, recount_bits(&qw.assignments, cb.len()));
        let mut counts = vec![0usize; cb.len()];
        qw.assignments.iter().for_each(|&a| counts[a] += 1);
        for (p, c) in qw.probabilities.iter().zip(&counts) {
            prop_assert_eq!(*p, *c as f64 / d as f64);
        }
        let h: f64 = qw.probabilities.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum();
        prop_assert!(qw.bit_bound as f64 >= (d as f64 * h).ceil() - 1.0);
    }

    #[test]
    fn assignments_are_nearest_with_low_ties(levels in prop::collection::vec(-8i32..8, 1..8), xs in prop::collection::vec(-20i32..20, 1..40)) {
        // Quarter-integer grid so midpoints occur and are exact.
        let cb = Codebook::new(levels.iter().map(|v| *v as f64).collect(), Precision::Half).unwrap();
        let w: Vec<f64> = xs.iter().map(|v| *v as f64 * 0.5).collect();
        let qw = quantize(&w, &cb).unwrap();
        for (x, &k) in w.iter().zip(&qw.assignments) {
            let dist = (x - cb.levels()[k]).abs();
            for (j, c) in cb.levels().iter().enumerate() {
                prop_assert!(dist <= (x - c).abs());
                if (x - c).abs() == dist {
                    prop_assert!(k <= j);
                }
            }
        }
        prop_assert_eq!(quantize(&w, &cb).unwrap(), qw);
    }
}

#[test]
fn bit_bound_grows_with_level_count() {
    let w = gaussian_matrix(&rng(2), 1000, 1).into_vec();
    let bits: Vec<u64> = [2, 4, 8, 16]
        .iter()
        .map(|&l| quantize(&w, &Codebook::from_quantiles(&w, l, Precision::Half).unwrap()).unwrap().bit_bound)
        .collect();
    assert!(bits.windows(2).all(|p| p[0] <= p[1]), "{bits:?}");
}

fn tiny_task(seed: u64, n: usize) -> Dataset {
    let x = gaussian_matrix(&rng(seed), n, 3);
    let y = (0..n).map(|i| usize::from(x[(i, 0)] + 0.5 * x[(i, 1)] > 0.0)).collect();
    Dataset::new(x, Labels::Class { y, classes: 2 }, "tiny").unwrap()
}

fn quant_cfg(levels: usize, epochs: usize, precision: Precision) -> QuantTrainConfig {
    QuantTrainConfig {
        levels,
        train: TrainConfig { optimizer: OptimizerKind::Adam, lr: 0.05, batch_size: 8, epochs, ..Default::default() },
        level_lr: None,
        precision,
    }
}

#[test]
fn levels_at_the_weights_reproduce_unquantized_training() {
    let data = tiny_task(10, 40);
    let net = Mlp::new(vec![3, 4, 2]);
    let p = sample_dense(&rng(11), net.num_params(), 6).unwrap();
    let loss = LossSpec::clamped_ce(1e-4);
    let mut cfg = quant_cfg(6, 1, Precision::Full);
    cfg.train.batch_size = 8;

    let mut plain = SubspaceModel::new_hard(net.clone(), p.clone(), &rng(12)).unwrap();
    let mut quant = plain.clone();
    let book = Codebook::new(quant.latent().unwrap().to_vec(), Precision::Full).unwrap();
    assert_eq!(book.len(), 6);
    let a = train(&mut plain, &data, &loss, &cfg.train, &rng(13)).unwrap();
    let b = train_quantized(&mut quant, &data, &loss, &cfg, Some(book), &rng(13)).unwrap();
    assert_eq!(a.history.len(), 5);
    for (x, y) in a.history.iter().zip(&b.report.history) {
        assert!((x.risk - y.risk).abs() <= 1e-6, "{} vs {}", x.risk, y.risk);
    }
    assert!(b.collapses.is_empty());
}

#[test]
fn quantized_training_requires_hard_mode() {
    let data = tiny_task(14, 16);
    let net = Mlp::new(vec![3, 2]);
    let mut full = SubspaceModel::new_full(net.clone(), &rng(15));
    let cfg = quant_cfg(2, 1, Precision::Half);
    assert!(train_quantized(&mut full, &data, &LossSpec::clamped_ce(1e-4), &cfg, None, &rng(16)).is_err());
    let p = sample_dense(&rng(17), net.num_params(), 3).unwrap();
    let mut hard = SubspaceModel::new_hard(net, p, &rng(18)).unwrap();
    let mut capped = cfg.clone();
    capped.train.spectral_cap = Some(1.0);
    assert!(train_quantized(&mut hard, &data, &LossSpec::clamped_ce(1e-4), &capped, None, &rng(19)).is_err());
}

#[test]
fn trained_codebooks_stay_half_precision_and_sorted() {
    let data = tiny_task(20, 64);
    let net = Mlp::new(vec![3, 8, 2]);
    let p = sample_dense(&rng(21), net.num_params(), 12).unwrap();
    let mut m = SubspaceModel::new_hard(net, p, &rng(22)).unwrap();
    let out = train_quantized(&mut m, &data, &LossSpec::clamped_ce(1e-4), &quant_cfg(4, 5, Precision::Half), None, &rng(23)).unwrap();
    let levels = out.quantized.codebook.levels();
    assert!(levels.windows(2).all(|p| p[0] < p[1]));
    assert!(levels.iter().all(|&c| half::f16::from_f64(c).to_f64() == c));
    assert_eq!(out.quantized.bit_bound, recount_bits(&out.quantized.assignments, levels.len()));
    for c in &out.collapses {
        assert!(c.levels_after < c.levels_before);
    }
}

#[test]
fn straight_through_error_shrinks_as_levels_double() {
    let mut errs = Vec::new();
    for l in [2, 4, 8, 16] {
        let mut total = 0.0;
        for seed in 0..4 {
            let data = tiny_task(30 + seed, 64);
            let net = Mlp::new(vec![3, 8, 2]);
            let p = sample_dense(&rng(40 + seed), net.num_params(), 24).unwrap();
            let mut m = SubspaceModel::new_hard(net, p, &rng(50 + seed)).unwrap();
            let out = train_quantized(&mut m, &data, &LossSpec::clamped_ce(1e-4), &quant_cfg(l, 5, Precision::Half), None, &rng(60 + seed)).unwrap();
            let latent = m.latent().unwrap();
            total += latent.iter().zip(out.quantized.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / latent.len() as f64;
        }
        errs.push(total / 4.0);
    }
    assert!(errs.windows(2).all(|p| p[1] < p[0]), "{errs:?}");
}

/// Plug-in entropy (bits) of a discrete sample.
fn plug_in_entropy<K: std::hash::Hash + Eq>(xs: impl Iterator<Item = K>) -> f64 {
    let mut counts: HashMap<K, usize> = HashMap::new();
    let mut n = 0;
    for x in xs {
        *counts.entry(x).or_default() += 1;
        n += 1;
    }
    counts.values().map(|&c| -(c as f64 / n as f64) * (c as f64 / n as f64).log2()).sum()
}

#[test]
fn entropy_surrogate_dominates_plug_in_information() {
    let runs = 24;
    let mut outcomes = Vec::new();
    let mut min_bits = u64::MAX;
    let net = LinearBinary { features: 3 };
    let p = sample_dense(&rng(70), net.num_params(), 2).unwrap();
    for r in 0..runs {
        // Training set drawn fresh per run; the first label is the paired sample.
        let data = tiny_task(1000 + r, 16);
        let mut m = SubspaceModel::new_hard(net.clone(), p.clone(), &rng(80)).unwrap();
        let out = train_quantized(&mut m, &data, &LossSpec::clamped_ce(1e-4), &quant_cfg(2, 3, Precision::Half), None, &rng(90 + r)).unwrap();
        let key: Vec<u64> = out.quantized.values().iter().map(|v| v.to_bits()).collect();
        outcomes.push((key, data.class_labels().unwrap()[0]));
        min_bits = min_bits.min(out.quantized.bit_bound);
    }
    let h_q = plug_in_entropy(outcomes.iter().map(|(q, _)| q.clone()));
    let h_z = plug_in_entropy(outcomes.iter().map(|(_, z)| *z));
    let h_qz = plug_in_entropy(outcomes.iter().cloned());
    let info = h_q + h_z - h_qz;
    assert!(info <= h_q + 1e-12);
    assert!(h_q <= min_bits as f64);
}

#[test]
fn quantile_codebook_spreads_levels() {
    let mut r = rng(3).rng();
    let w: Vec<f64> = (0..999).map(|_| r.gen_range(0.0..1.0)).collect();
    let cb = Codebook::from_quantiles(&w, 3, Precision::Full).unwrap();
    let expected = [1.0 / 6.0, 0.5, 5.0 / 6.0];
    for (c, e) in cb.levels().iter().zip(expected) {
        assert!((c - e).abs() < 0.05);
    }
}
