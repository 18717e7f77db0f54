use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::{Matrix, RngStream};

/// Column-sparse projector: each column has `k` entries `±1/√k` at distinct
/// uniformly chosen rows. Columns are unit norm but only nearly orthogonal.
#[derive(Debug, Clone)]
pub(super) struct SparseProjector {
    ambient: usize,
    /// Per column: (row, value), sorted by row.
    columns: Vec<Vec<(u32, f64)>>,
}

impl SparseProjector {
    pub(super) fn sample(rng: &RngStream, ambient: usize, dim: usize, density: Option<f64>) -> Result<Self> {
        let k = match density {
            None => (ambient as f64).sqrt().ceil() as usize,
            Some(p) if p > 0.0 && p <= 1.0 => (p * ambient as f64).ceil() as usize,
            Some(p) => return Err(Error::InvalidArgument(format!("density {p} outside (0, 1]"))),
        }
        .clamp(1, ambient);
        let mut r = rng.rng();
        let value = 1.0 / (k as f64).sqrt();
        let columns = (0..dim)
            .map(|_| {
                let mut rows: Vec<usize> = rand::seq::index::sample(&mut r, ambient, k).into_vec();
                rows.sort_unstable();
                rows.into_iter()
                    .map(|row| (row as u32, if r.gen::<bool>() { value } else { -value }))
                    .collect()
            })
            .collect();
        Ok(Self { ambient, columns })
    }

    pub(super) fn project_into(&self, w: &[f64], out: &mut [f64]) {
        for (o, col) in out.iter_mut().zip(&self.columns) {
            *o = col.iter().map(|&(r, v)| v * w[r as usize]).sum();
        }
    }

    pub(super) fn lift_into(&self, wp: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&c, col) in wp.iter().zip(&self.columns) {
            for &(r, v) in col {
                out[r as usize] += v * c;
            }
        }
    }

    pub(super) fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.ambient, self.columns.len());
        for (j, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                m[(r as usize, j)] = v;
            }
        }
        m
    }

    pub(super) fn nonzeros_per_column(&self) -> Vec<usize> {
        self.columns.iter().map(Vec::len).collect()
    }

    pub(super) fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.columns.iter().enumerate() {
            for (j, b) in self.columns.iter().enumerate().skip(i) {
                let g = sorted_dot(a, b);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

fn sorted_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}
