use rand_distr::{Distribution, StandardNormal};

use super::{Diagnostics, Estimator, MIEstimate, SamplePairs};
use crate::error::{Error, Result};
use crate::numeric::{digamma_int, purpose, Matrix, RngStream};
use crate::parallel::par_map;

const JITTER_SCALE: f64 = 1e-10;

/// Add `1e-10 × column std` Gaussian noise so exact ties cannot occur.
fn jitter(m: &Matrix, rng: &mut impl rand::Rng) -> Matrix {
    let (rows, cols) = m.shape();
    let mut scale = vec![0.0; cols];
    for (j, s) in scale.iter_mut().enumerate() {
        let col = m.col(j);
        let sd = crate::numeric::variance(&col).sqrt();
        *s = JITTER_SCALE * if sd > 0.0 { sd } else { 1.0 };
    }
    let mut out = m.clone();
    for i in 0..rows {
        for j in 0..cols {
            let e: f64 = StandardNormal.sample(rng);
            out.as_mut_slice()[i * cols + j] += scale[j] * e;
        }
    }
    out
}

fn cheb(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Kraskov–Stögbauer–Grassberger estimator (first variant): max-norm in
/// both marginals and in the joint space, strict neighbour counts.
pub fn mi_ksg(pairs: &SamplePairs, k: usize, rng: &RngStream) -> Result<MIEstimate> {
    let m = pairs.len();
    if k == 0 || m <= k {
        return Err(Error::InvalidArgument(format!("KSG needs m > k >= 1, got m = {m}, k = {k}")));
    }
    let mut r = rng.child(purpose::JITTER).rng();
    let xs = jitter(&pairs.xs, &mut r);
    let ys = jitter(&pairs.ys, &mut r);
    let terms = par_map(m, |i| {
        let (xi, yi) = (xs.row(i), ys.row(i));
        // k smallest joint distances, ascending.
        let mut best = vec![f64::INFINITY; k];
        let mut dx = vec![0.0; m];
        let mut dy = vec![0.0; m];
        for j in 0..m {
            if j == i {
                continue;
            }
            dx[j] = cheb(xi, xs.row(j));
            dy[j] = cheb(yi, ys.row(j));
            let dz = dx[j].max(dy[j]);
            if dz < best[k - 1] {
                let mut p = k - 1;
                while p > 0 && best[p - 1] > dz {
                    best[p] = best[p - 1];
                    p -= 1;
                }
                best[p] = dz;
            }
        }
        let eps = best[k - 1];
        let mut nx = 0;
        let mut ny = 0;
        for j in 0..m {
            if j != i {
                nx += usize::from(dx[j] < eps);
                ny += usize::from(dy[j] < eps);
            }
        }
        digamma_int(nx + 1) + digamma_int(ny + 1)
    });
    let avg = terms.iter().sum::<f64>() / m as f64;
    let raw = digamma_int(k) + digamma_int(m) - avg;
    Ok(MIEstimate::new(raw, Estimator::Ksg { k }, m, Diagnostics::default()))
}
