use std::io::Write;
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;
use proptest::prelude::*;
use slicegen_core::numeric::RngStream;
use slicegen_harness::data::{parse_idx, two_gaussian_test_size};
use slicegen_harness::{gen_two_gaussian_classification, load_mnist_idx, HarnessError};

fn idx_bytes(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for d in dims {
        out.extend(d.to_be_bytes());
    }
    out.extend_from_slice(payload);
    out
}

/// Writes a tiny MNIST-shaped pair of `items` images of `side × side` pixels.
/// Pixel `k` of image `i` is `(7i + k) mod 256`, label `i mod 10`.
fn write_pair(dir: &Path, items: usize, side: usize, gz: bool) -> (PathBuf, PathBuf) {
    let pixels: Vec<u8> = (0..items).flat_map(|i| (0..side * side).map(move |k| ((7 * i + k) % 256) as u8)).collect();
    let labels: Vec<u8> = (0..items).map(|i| (i % 10) as u8).collect();
    let img = idx_bytes(0x803, &[items as u32, side as u32, side as u32], &pixels);
    let lab = idx_bytes(0x801, &[items as u32], &labels);
    let ext = if gz { ".gz" } else { "" };
    let ip = dir.join(format!("images{ext}"));
    let lp = dir.join(format!("labels{ext}"));
    for (p, bytes) in [(&ip, img), (&lp, lab)] {
        if gz {
            let mut e = GzEncoder::new(Vec::new(), Compression::default());
            e.write_all(&bytes).unwrap();
            std::fs::write(p, e.finish().unwrap()).unwrap();
        } else {
            std::fs::write(p, bytes).unwrap();
        }
    }
    (ip, lp)
}

fn rng() -> RngStream {
    RngStream::new(7, 1)
}

#[test]
fn two_gaussian_class_means_and_variance() {
    let (s, n) = (20, 4000);
    let split = gen_two_gaussian_classification(&rng(), s, n).unwrap();
    assert_eq!(split.train.len(), n);
    assert_eq!(split.test.len(), two_gaussian_test_size(n));
    assert_eq!(split.test.len(), 1000);
    let y = split.train.class_labels().unwrap();
    let x = &split.train.features;
    for (class, mu) in [(0usize, -1.0), (1, 1.0)] {
        let rows: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
        let m = rows.len() as f64;
        assert!(m > 0.4 * n as f64, "class {class} has only {m} samples");
        for j in 0..s {
            let col: Vec<f64> = rows.iter().map(|&i| x.row(i)[j]).collect();
            let mean = col.iter().sum::<f64>() / m;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            // Standard error of the mean is 2/√m; of the variance about 4√(2/m).
            assert!((mean - mu).abs() < 3.0 * 2.0 / m.sqrt() + 0.05, "class {class} coord {j}: mean {mean}");
            assert!((var - 4.0).abs() < 4.0 * 4.0 * (2.0 / m).sqrt(), "class {class} coord {j}: var {var}");
        }
    }
}

#[test]
fn two_gaussian_is_seeded() {
    let a = gen_two_gaussian_classification(&rng(), 3, 50).unwrap();
    let b = gen_two_gaussian_classification(&rng(), 3, 50).unwrap();
    let c = gen_two_gaussian_classification(&RngStream::new(8, 1), 3, 50).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.test, b.test);
    assert_ne!(a.train, c.train);
    assert_ne!(a.train.features, a.test.features.clone());
}

#[test]
fn two_gaussian_rejects_empty_shapes() {
    assert!(gen_two_gaussian_classification(&rng(), 0, 10).is_err());
    assert!(gen_two_gaussian_classification(&rng(), 3, 0).is_err());
}

#[test]
fn loads_raw_and_gzipped_identically() {
    let dir = tempfile::tempdir().unwrap();
    let raw_dir = dir.path().join("raw");
    let gz_dir = dir.path().join("gz");
    std::fs::create_dir_all(&raw_dir).unwrap();
    std::fs::create_dir_all(&gz_dir).unwrap();
    let (ri, rl) = write_pair(&raw_dir, 12, 4, false);
    let (gi, gl) = write_pair(&gz_dir, 12, 4, true);
    let a = load_mnist_idx(&ri, &rl, None, None, &rng()).unwrap();
    let b = load_mnist_idx(&gi, &gl, None, None, &rng()).unwrap();
    assert_eq!(a.features, b.features);
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.len(), 12);
    assert_eq!(a.features.cols(), 16);
    assert_eq!(a.num_classes(), Some(10));
    assert_eq!(a.class_labels().unwrap()[11], 1);
    // Pixel 3 of image 2 is 17, scaled to [0, 1].
    assert_eq!(a.features.row(2)[3], 17.0 / 255.0);
}

#[test]
fn subset_is_deterministic_and_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let (i, l) = write_pair(dir.path(), 40, 3, false);
    let a = load_mnist_idx(&i, &l, Some(15), None, &rng()).unwrap();
    let b = load_mnist_idx(&i, &l, Some(15), None, &rng()).unwrap();
    let c = load_mnist_idx(&i, &l, Some(15), None, &RngStream::new(99, 1)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.features, c.features);
    assert_eq!(a.len(), 15);
    // First pixel of image i is 7i mod 256, which identifies the image.
    let mut ids: Vec<u64> = (0..15).map(|r| (a.features.row(r)[0] * 255.0).round() as u64).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), 15, "subset drew an image twice");
    assert!(matches!(load_mnist_idx(&i, &l, Some(41), None, &rng()), Err(HarnessError::Config(_))));
}

#[test]
fn radius_caps_feature_norms() {
    let dir = tempfile::tempdir().unwrap();
    let (i, l) = write_pair(dir.path(), 30, 5, false);
    let r = 1.5;
    let ds = load_mnist_idx(&i, &l, None, Some(r), &rng()).unwrap();
    assert!(ds.max_feature_norm() <= r + 1e-9);
    let full = load_mnist_idx(&i, &l, None, None, &rng()).unwrap();
    assert!(full.max_feature_norm() > r);
    assert!(load_mnist_idx(&i, &l, None, Some(0.0), &rng()).is_err());
}

#[test]
fn rejects_wrong_magic() {
    let dir = tempfile::tempdir().unwrap();
    let (i, l) = write_pair(dir.path(), 4, 2, false);
    // Images and labels swapped.
    let err = load_mnist_idx(&l, &i, None, None, &rng()).unwrap_err();
    assert!(matches!(err, HarnessError::Idx { .. }), "{err}");
    assert!(err.to_string().contains("magic"), "{err}");
}

#[test]
fn rejects_truncated_files() {
    let dir = tempfile::tempdir().unwrap();
    let (i, l) = write_pair(dir.path(), 4, 2, false);
    let bytes = std::fs::read(&i).unwrap();
    std::fs::write(&i, &bytes[..bytes.len() - 1]).unwrap();
    let err = load_mnist_idx(&i, &l, None, None, &rng()).unwrap_err();
    assert!(err.to_string().contains("truncated"), "{err}");
    std::fs::write(&i, &bytes[..6]).unwrap();
    let err = load_mnist_idx(&i, &l, None, None, &rng()).unwrap_err();
    assert!(err.to_string().contains("truncated"), "{err}");
}

#[test]
fn rejects_label_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let (i, l) = write_pair(dir.path(), 4, 2, false);
    std::fs::write(&l, idx_bytes(0x801, &[4], &[0, 1, 10, 3])).unwrap();
    let err = load_mnist_idx(&i, &l, None, None, &rng()).unwrap_err();
    assert!(err.to_string().contains("label 10"), "{err}");
}

#[test]
fn rejects_count_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (i, l) = write_pair(dir.path(), 4, 2, false);
    std::fs::write(&l, idx_bytes(0x801, &[3], &[0, 1, 2])).unwrap();
    assert!(matches!(load_mnist_idx(&i, &l, None, None, &rng()), Err(HarnessError::Idx { .. })));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("absent");
    assert!(matches!(load_mnist_idx(&p, &p, None, None, &rng()), Err(HarnessError::Io { .. })));
}

proptest! {
    #[test]
    fn idx_round_trips(dims in prop::collection::vec(1u32..5, 1..4), seed in any::<u8>()) {
        let total: usize = dims.iter().map(|&d| d as usize).product();
        let payload: Vec<u8> = (0..total).map(|k| (k as u8).wrapping_mul(31).wrapping_add(seed)).collect();
        let magic = 0x800 | dims.len() as u32;
        let bytes = idx_bytes(magic, &dims, &payload);
        let (got, body) = parse_idx(&bytes, magic, Path::new("p")).unwrap();
        prop_assert_eq!(got, dims.iter().map(|&d| d as usize).collect::<Vec<_>>());
        prop_assert_eq!(body, &payload[..]);
        // Any strict prefix or a trailing byte is rejected.
        let cut = bytes.len() - 1 - (seed as usize % bytes.len().min(8));
        prop_assert!(parse_idx(&bytes[..cut], magic, Path::new("p")).is_err());
        let mut long = bytes.clone();
        long.push(0);
        prop_assert!(parse_idx(&long, magic, Path::new("p")).is_err());
    }

    #[test]
    fn clipped_norms_never_exceed_radius(r in 0.05f64..20.0) {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = write_pair(dir.path(), 10, 4, false);
        let ds = load_mnist_idx(&i, &l, None, Some(r), &rng()).unwrap();
        prop_assert!(ds.max_feature_norm() <= r + 1e-9);
    }
}
