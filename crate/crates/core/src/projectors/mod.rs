//! Random projections `Θ ∈ R^{D×d}` with project (`Θᵀw`), lift (`Θw'`) and
//! compress (`ΘΘᵀw`) actions.
//!
//! A projector is fully determined by its [`ProjectorSpec`]; the realized
//! matrices are regenerated from the seed whenever a spec is loaded.

mod dense;
mod kronecker;
mod sparse;

use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::numeric::{purpose, Matrix, RngStream};

pub use kronecker::{kronecker_dims, kronecker_shape, KroneckerShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dense,
    Sparse,
    Kronecker,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Dense => "dense",
            Family::Sparse => "sparse",
            Family::Kronecker => "kronecker",
        })
    }
}

/// Everything needed to regenerate a projector bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorSpec {
    pub family: Family,
    #[serde(rename = "D")]
    pub ambient: usize,
    #[serde(rename = "d")]
    pub dim: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

impl ProjectorSpec {
    pub fn realize(&self) -> Result<Projector> {
        if self.dim == 0 || self.dim > self.ambient {
            return Err(Error::InvalidArgument(format!(
                "subspace dimension d = {} must satisfy 1 <= d <= D = {}",
                self.dim, self.ambient
            )));
        }
        let rng = RngStream::new(self.seed, purpose::PROJECTOR);
        let kind = match self.family {
            Family::Dense => Kind::Dense(dense::sample(&rng, self.ambient, self.dim)?),
            Family::Sparse => {
                Kind::Sparse(sparse::SparseProjector::sample(&rng, self.ambient, self.dim, self.density)?)
            }
            Family::Kronecker => {
                Kind::Kronecker(kronecker::KroneckerProjector::sample(&rng, self.ambient, self.dim)?)
            }
        };
        Ok(Projector { spec: self.clone(), kind })
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Dense(Matrix),
    Sparse(sparse::SparseProjector),
    Kronecker(kronecker::KroneckerProjector),
}

/// A realized random projection.
#[derive(Debug, Clone)]
pub struct Projector {
    spec: ProjectorSpec,
    kind: Kind,
}

pub fn sample_dense(rng: &RngStream, ambient: usize, dim: usize) -> Result<Projector> {
    sample(Family::Dense, rng, ambient, dim)
}

pub fn sample_sparse(rng: &RngStream, ambient: usize, dim: usize, density: Option<f64>) -> Result<Projector> {
    ProjectorSpec { family: Family::Sparse, ambient, dim, seed: rng.fold(), density }.realize()
}

pub fn sample_kronecker(rng: &RngStream, ambient: usize, dim: usize) -> Result<Projector> {
    sample(Family::Kronecker, rng, ambient, dim)
}

pub fn sample(family: Family, rng: &RngStream, ambient: usize, dim: usize) -> Result<Projector> {
    ProjectorSpec { family, ambient, dim, seed: rng.fold(), density: None }.realize()
}

impl Projector {
    pub fn spec(&self) -> &ProjectorSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn ambient(&self) -> usize {
        self.spec.ambient
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Whether `ΘᵀΘ = I` holds by construction (dense and Kronecker).
    pub fn exact_orthonormal(&self) -> bool {
        !matches!(self.kind, Kind::Sparse(_))
    }

    pub fn project_into(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        dim_check("project input", self.ambient(), w.len())?;
        dim_check("project output", self.dim(), out.len())?;
        match &self.kind {
            Kind::Dense(t) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (r, &wr) in w.iter().enumerate() {
                    if wr != 0.0 {
                        crate::numeric::axpy(wr, t.row(r), out);
                    }
                }
            }
            Kind::Sparse(s) => s.project_into(w, out),
            Kind::Kronecker(k) => k.project_into(w, out),
        }
        Ok(())
    }

    pub fn lift_into(&self, wp: &[f64], out: &mut [f64]) -> Result<()> {
        dim_check("lift input", self.dim(), wp.len())?;
        dim_check("lift output", self.ambient(), out.len())?;
        match &self.kind {
            Kind::Dense(t) => {
                for (r, o) in out.iter_mut().enumerate() {
                    *o = crate::numeric::dot(t.row(r), wp);
                }
            }
            Kind::Sparse(s) => s.lift_into(wp, out),
            Kind::Kronecker(k) => k.lift_into(wp, out),
        }
        Ok(())
    }

    /// `Θᵀw`
    pub fn project(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.project_into(w, &mut out)?;
        Ok(out)
    }

    /// `Θw'`
    pub fn lift(&self, wp: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.ambient()];
        self.lift_into(wp, &mut out)?;
        Ok(out)
    }

    /// `ΘΘᵀw`
    pub fn compress(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.lift(&self.project(w)?)
    }

    /// Project every row of `w` (`n × D`) to get an `n × d` matrix.
    pub fn project_rows(&self, w: &Matrix) -> Result<Matrix> {
        dim_check("project_rows", self.ambient(), w.cols())?;
        if let Kind::Dense(t) = &self.kind {
            return w.matmul(t);
        }
        let mut out = Matrix::zeros(w.rows(), self.dim());
        for i in 0..w.rows() {
            self.project_into(w.row(i), out.row_mut(i))?;
        }
        Ok(out)
    }

    /// Materialize `Θ` as a dense `D × d` matrix. Intended for small sizes.
    pub fn to_dense(&self) -> Matrix {
        match &self.kind {
            Kind::Dense(t) => t.clone(),
            Kind::Sparse(s) => s.to_dense(),
            Kind::Kronecker(k) => k.to_dense(),
        }
    }

    /// `‖ΘᵀΘ − I‖_max`.
    pub fn orthonormality_error(&self) -> f64 {
        match &self.kind {
            Kind::Dense(t) => t.gram().max_abs_dev_from_identity(),
            Kind::Sparse(s) => s.orthonormality_error(),
            Kind::Kronecker(k) => k.orthonormality_error(),
        }
    }

    /// Non-zero entries stored per column (sparse family only).
    pub fn nonzeros_per_column(&self) -> Option<Vec<usize>> {
        match &self.kind {
            Kind::Sparse(s) => Some(s.nonzeros_per_column()),
            _ => None,
        }
    }

    pub fn kronecker_shape(&self) -> Option<KroneckerShape> {
        match &self.kind {
            Kind::Kronecker(k) => Some(k.shape),
            _ => None,
        }
    }

    /// Refuse approximately orthonormal projectors unless explicitly allowed.
    /// Returns the measured orthonormality error so callers can report it.
    pub fn require_orthonormal(&self, allow_approximate: bool) -> Result<f64> {
        if self.exact_orthonormal() {
            return Ok(0.0);
        }
        let err = self.orthonormality_error();
        if allow_approximate {
            Ok(err)
        } else {
            Err(Error::SparseRefused { ortho_error: err })
        }
    }
}
