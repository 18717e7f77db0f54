//! Synthetic generators and MNIST ingestion.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use slicegen_core::models::{Dataset, Labels};
use slicegen_core::numeric::{gaussian_matrix, purpose, Matrix, RngStream};

use crate::error::{HarnessError, Result};

/// Training set with its held-out companion.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
}

/// Held-out size used for the two-Gaussian task: `⌊20n/80⌋`.
pub fn two_gaussian_test_size(n: usize) -> usize {
    20 * n / 80
}

fn two_gaussian_sample(rng: &RngStream, s: usize, n: usize, tag: &str) -> Result<Dataset> {
    let mut r = rng.rng();
    let mut y = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * s);
    for _ in 0..n {
        let label = usize::from(r.gen_bool(0.5));
        let mu = if label == 1 { 1.0 } else { -1.0 };
        for _ in 0..s {
            let e: f64 = StandardNormal.sample(&mut r);
            data.push(mu + 2.0 * e);
        }
        y.push(label);
    }
    let x = Matrix::from_vec(n, s, data)?;
    Ok(Dataset::new(x, Labels::Class { y, classes: 2 }, format!("two_gaussians(s={s}) {tag}"))?)
}

/// `Y` uniform on `{0, 1}`, `X | Y ~ N(µ_Y, 4I_s)` with `µ₀ = −1⃗`, `µ₁ = 1⃗`.
/// The test split holds `⌊20n/80⌋` fresh samples.
pub fn gen_two_gaussian_classification(rng: &RngStream, s: usize, n: usize) -> Result<Split> {
    if s == 0 || n == 0 {
        return Err(HarnessError::config("two-Gaussian task needs s >= 1 and n >= 1"));
    }
    let train = two_gaussian_sample(&rng.child(purpose::DATA), s, n, "train")?;
    let m = two_gaussian_test_size(n).max(1);
    let test = two_gaussian_sample(&rng.child(purpose::TEST), s, m, "test")?;
    Ok(Split { train, test })
}

/// `n` standard Gaussian samples in `R^D`, one per row.
pub fn gen_gaussian_samples(rng: &RngStream, n: usize, dim: usize) -> Matrix {
    gaussian_matrix(rng, n, dim)
}

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out).map_err(|e| HarnessError::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn idx_err(path: &Path, reason: impl Into<String>) -> HarnessError {
    HarnessError::Idx { path: path.to_path_buf(), reason: reason.into() }
}

/// Parse an IDX buffer with unsigned-byte payload. Returns the dimensions and
/// the payload.
pub fn parse_idx<'a>(bytes: &'a [u8], expected_magic: u32, path: &Path) -> Result<(Vec<usize>, &'a [u8])> {
    if bytes.len() < 4 {
        return Err(idx_err(path, "truncated header"));
    }
    let magic = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes"));
    if magic != expected_magic {
        return Err(idx_err(path, format!("magic {magic:#010x}, expected {expected_magic:#010x}")));
    }
    let ndim = (magic & 0xff) as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(idx_err(path, "truncated dimension header"));
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|k| u32::from_be_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().expect("4 bytes")) as usize)
        .collect();
    let total = dims.iter().try_fold(1usize, |a, &b| a.checked_mul(b)).ok_or_else(|| idx_err(path, "dimensions overflow"))?;
    let payload = &bytes[header..];
    if payload.len() < total {
        return Err(idx_err(path, format!("truncated payload: {} of {total} bytes", payload.len())));
    }
    if payload.len() > total {
        return Err(idx_err(path, format!("{} trailing bytes", payload.len() - total)));
    }
    Ok((dims, payload))
}

/// Load an MNIST image/label pair (raw or gzipped IDX). Pixels are scaled to
/// `[0, 1]`. With `subset_n` a random subset is drawn without replacement;
/// otherwise all items are kept in file order. With `radius` every feature
/// vector is rescaled to norm at most `radius`.
pub fn load_mnist_idx(
    images_path: &Path,
    labels_path: &Path,
    subset_n: Option<usize>,
    radius: Option<f64>,
    rng: &RngStream,
) -> Result<Dataset> {
    let img_bytes = read_maybe_gz(images_path)?;
    let lab_bytes = read_maybe_gz(labels_path)?;
    let (idims, pixels) = parse_idx(&img_bytes, IMAGES_MAGIC, images_path)?;
    let (ldims, labels) = parse_idx(&lab_bytes, LABELS_MAGIC, labels_path)?;
    let items = idims[0];
    if ldims[0] != items {
        return Err(idx_err(labels_path, format!("{} labels for {items} images", ldims[0])));
    }
    let features: usize = idims[1..].iter().product();
    if let Some(bad) = labels.iter().find(|&&l| l > 9) {
        return Err(idx_err(labels_path, format!("label {bad} out of range 0..=9")));
    }
    let order: Vec<usize> = match subset_n {
        Some(k) if k > items => {
            return Err(HarnessError::config(format!("subset of {k} requested from {items} items")));
        }
        Some(k) => {
            let mut idx: Vec<usize> = (0..items).collect();
            idx.shuffle(&mut rng.child(purpose::SUBSET).rng());
            idx.truncate(k);
            idx
        }
        None => (0..items).collect(),
    };
    let mut data = Vec::with_capacity(order.len() * features);
    for &i in &order {
        data.extend(pixels[i * features..(i + 1) * features].iter().map(|&p| f64::from(p) / 255.0));
    }
    let y = order.iter().map(|&i| usize::from(labels[i])).collect();
    let x = Matrix::from_vec(order.len(), features, data)?;
    let mut ds = Dataset::new(x, Labels::Class { y, classes: 10 }, format!("mnist:{}", images_path.display()))?;
    if let Some(r) = radius {
        if !(r > 0.0) {
            return Err(HarnessError::config("radius must be positive"));
        }
        ds.clip_feature_norms(r);
    }
    Ok(ds)
}

/// Shuffle `pool` with `rng` and split it into `n` training items followed by
/// `test` held-out items (all remaining items when `test` is unset).
pub fn split_pool(pool: &Dataset, n: usize, test: Option<usize>, rng: &RngStream) -> Result<Split> {
    let avail = pool.len();
    let m = test.unwrap_or(avail.saturating_sub(n));
    if n == 0 || m == 0 || n + m > avail {
        return Err(HarnessError::config(format!("cannot take {n} train + {m} test items from a pool of {avail}")));
    }
    let mut idx: Vec<usize> = (0..avail).collect();
    idx.shuffle(&mut rng.rng());
    Ok(Split { train: pool.subset(&idx[..n]), test: pool.subset(&idx[n..n + m]) })
}
