use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gaussian_matrix, orthonormalize, Matrix, RngStream};

/// Factor shapes of a Kronecker projector `Θ = Θ₁ ⊗ Θ₂`.
///
/// The ambient vector is viewed as a `D₁ × D₂` row-major matrix, padded with
/// zeros up to `D₁·D₂ ≥ D`. Rows of `Θ₁` that would touch padding are zero,
/// so only the first `d1_active` blocks of `D₂` coordinates are reachable and
/// `Θ` stays exactly orthonormal. The subspace dimension is `d₁·d₂ ≥ d`,
/// truncated to the first `d` Kronecker columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KroneckerShape {
    pub big1: usize,
    pub big2: usize,
    pub d1_active: usize,
    pub small1: usize,
    pub small2: usize,
}

/// `D₁` is the smallest divisor `≥ ⌈√D'⌉` of the first `D' ≥ D` that has a
/// divisor in `[⌈√D'⌉, 2⌈√D'⌉]`; `D₂ = D'/D₁`.
pub fn kronecker_shape(ambient: usize) -> (usize, usize) {
    let mut padded = ambient.max(1);
    loop {
        let s = (padded as f64).sqrt().ceil() as usize;
        if let Some(b1) = (s..=2 * s).find(|b| padded % b == 0) {
            return (b1, padded / b1);
        }
        padded += 1;
    }
}

/// Smallest `d₁·d₂ ≥ d` with `d₁ ≤ max1`, `d₂ ≤ max2`; ties go to the most
/// balanced pair, then to the larger `d₁`.
pub fn kronecker_dims(dim: usize, max1: usize, max2: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, f64, usize, usize)> = None;
    for d1 in 1..=max1.min(dim) {
        let d2 = dim.div_ceil(d1);
        if d2 > max2 || d2 == 0 {
            continue;
        }
        let prod = d1 * d2;
        let imbalance = ((d1 as f64) / (d2 as f64)).ln().abs();
        let better = match best {
            None => true,
            Some((p, imb, b1, _)) => {
                prod < p || (prod == p && (imbalance < imb - 1e-12 || ((imbalance - imb).abs() <= 1e-12 && d1 > b1)))
            }
        };
        if better {
            best = Some((prod, imbalance, d1, d2));
        }
    }
    best.map(|(_, _, d1, d2)| (d1, d2))
}

#[derive(Debug, Clone)]
pub(super) struct KroneckerProjector {
    pub(super) shape: KroneckerShape,
    ambient: usize,
    dim: usize,
    /// `d1_active × d₁`
    theta1: Matrix,
    /// `D₂ × d₂`
    theta2: Matrix,
}

impl KroneckerProjector {
    pub(super) fn sample(rng: &RngStream, ambient: usize, dim: usize) -> Result<Self> {
        let (mut big1, mut big2) = kronecker_shape(ambient);
        let mut d1_active = big1 - (big1 * big2 - ambient).div_ceil(big2);
        if kronecker_dims(dim, d1_active, big2).is_none() {
            // Padding leaves fewer than d reachable coordinates; use an exact
            // factorization of D instead, however unbalanced.
            let s = (ambient as f64).sqrt().ceil() as usize;
            big1 = (s..=ambient).find(|b| ambient % b == 0).unwrap_or(ambient);
            big2 = ambient / big1;
            d1_active = big1;
        }
        let (small1, small2) = kronecker_dims(dim, d1_active, big2).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no Kronecker factorization of d = {dim} fits D = {ambient} ({d1_active} x {big2} active)"
            ))
        })?;
        let theta1 = orthonormalize(&gaussian_matrix(&rng.child(1), d1_active, small1))?;
        let theta2 = orthonormalize(&gaussian_matrix(&rng.child(2), big2, small2))?;
        Ok(Self {
            shape: KroneckerShape { big1, big2, d1_active, small1, small2 },
            ambient,
            dim,
            theta1,
            theta2,
        })
    }

    fn active_len(&self) -> usize {
        self.shape.d1_active * self.shape.big2
    }

    pub(super) fn project_into(&self, w: &[f64], out: &mut [f64]) {
        let s = self.shape;
        let wm = Matrix::from_vec(s.d1_active, s.big2, w[..self.active_len()].to_vec())
            .expect("active block shape");
        // Pick the cheaper association order.
        let small = if s.small1 <= s.small2 {
            self.theta1.matmul_tn(&wm).and_then(|a| a.matmul(&self.theta2))
        } else {
            wm.matmul(&self.theta2).and_then(|b| self.theta1.matmul_tn(&b))
        }
        .expect("factor shapes agree");
        out.copy_from_slice(&small.as_slice()[..self.dim]);
    }

    pub(super) fn lift_into(&self, wp: &[f64], out: &mut [f64]) {
        let s = self.shape;
        let mut padded = vec![0.0; s.small1 * s.small2];
        padded[..self.dim].copy_from_slice(wp);
        let wm = Matrix::from_vec(s.small1, s.small2, padded).expect("small block shape");
        let big = if s.small1 <= s.small2 {
            self.theta1.matmul(&wm).and_then(|a| a.matmul_nt(&self.theta2))
        } else {
            wm.matmul_nt(&self.theta2).and_then(|b| self.theta1.matmul(&b))
        }
        .expect("factor shapes agree");
        let n = self.active_len();
        out[..n].copy_from_slice(big.as_slice());
        out[n..].iter_mut().for_each(|o| *o = 0.0);
    }

    pub(super) fn to_dense(&self) -> Matrix {
        let s = self.shape;
        let mut m = Matrix::zeros(self.ambient, self.dim);
        for r1 in 0..s.d1_active {
            for r2 in 0..s.big2 {
                let r = r1 * s.big2 + r2;
                for c in 0..self.dim {
                    let (a, b) = (c / s.small2, c % s.small2);
                    m[(r, c)] = self.theta1[(r1, a)] * self.theta2[(r2, b)];
                }
            }
        }
        m
    }

    pub(super) fn orthonormality_error(&self) -> f64 {
        let s = self.shape;
        let g1 = self.theta1.gram();
        let g2 = self.theta2.gram();
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = g1[(i / s.small2, j / s.small2)] * g2[(i % s.small2, j % s.small2)];
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}
