use serde::{Deserialize, Serialize};

use super::network::Network;
use crate::error::{dim_check, Error, Result};
use crate::numeric::{spectral_top_gram, Matrix, RngStream};
use crate::projectors::Projector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Mode {
    /// `W = Θw'`; only `w' ∈ R^d` is trained.
    Hard,
    /// `W = ΘΘᵀw₁ + (I − ΘΘᵀ)w₂` with a `λ·ρ(W, ΘΘᵀW)` penalty.
    Soft { lambda: f64 },
    /// Unconstrained `W ∈ R^D`.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Hard { latent: Vec<f64> },
    Soft { w1: Vec<f64>, w2: Vec<f64>, lambda: f64 },
    Full { w: Vec<f64> },
}

/// A network together with its subspace parameterization.
#[derive(Debug, Clone)]
pub struct SubspaceModel<N: Network> {
    pub net: N,
    pub projector: Option<Projector>,
    pub params: Params,
}

impl<N: Network> SubspaceModel<N> {
    fn check(net: &N, p: &Projector) -> Result<()> {
        dim_check("projector ambient dimension vs network parameters", net.num_params(), p.ambient())
    }

    /// Hard mode starting from `√(D/d)·Θᵀw₀`, which keeps the ambient scale of
    /// the fan-in initialization `w₀`.
    pub fn new_hard(net: N, projector: Projector, rng: &RngStream) -> Result<Self> {
        Self::check(&net, &projector)?;
        let scale = (projector.ambient() as f64 / projector.dim() as f64).sqrt();
        let mut latent = projector.project(&net.init(rng))?;
        latent.iter_mut().for_each(|v| *v *= scale);
        Ok(Self { net, projector: Some(projector), params: Params::Hard { latent } })
    }

    /// Hard mode with given subspace coordinates.
    pub fn with_latent(net: N, projector: Projector, latent: Vec<f64>) -> Result<Self> {
        Self::check(&net, &projector)?;
        dim_check("latent weights", projector.dim(), latent.len())?;
        Ok(Self { net, projector: Some(projector), params: Params::Hard { latent } })
    }

    /// Soft mode with `w₁ = w₂ = w₀`, so training starts from `W = w₀`.
    pub fn new_soft(net: N, projector: Projector, lambda: f64, rng: &RngStream) -> Result<Self> {
        Self::check(&net, &projector)?;
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} must be nonnegative")));
        }
        let w = net.init(rng);
        Ok(Self { net, projector: Some(projector), params: Params::Soft { w1: w.clone(), w2: w, lambda } })
    }

    pub fn new_full(net: N, rng: &RngStream) -> Self {
        let w = net.init(rng);
        Self { net, projector: None, params: Params::Full { w } }
    }

    pub fn mode(&self) -> Mode {
        match &self.params {
            Params::Hard { .. } => Mode::Hard,
            Params::Soft { lambda, .. } => Mode::Soft { lambda: *lambda },
            Params::Full { .. } => Mode::Full,
        }
    }

    pub fn latent(&self) -> Option<&[f64]> {
        match &self.params {
            Params::Hard { latent } => Some(latent),
            _ => None,
        }
    }

    fn projector(&self) -> Result<&Projector> {
        self.projector.as_ref().ok_or_else(|| Error::InvalidArgument("model has no projector".into()))
    }

    /// The ambient weight vector `W ∈ R^D`.
    pub fn ambient_weights(&self) -> Result<Vec<f64>> {
        match &self.params {
            Params::Hard { latent } => self.projector()?.lift(latent),
            Params::Soft { w1, w2, .. } => {
                let p = self.projector()?;
                let c1 = p.compress(w1)?;
                let c2 = p.compress(w2)?;
                Ok(w2.iter().zip(c1.iter().zip(&c2)).map(|(b, (a, cb))| a + b - cb).collect())
            }
            Params::Full { w } => Ok(w.clone()),
        }
    }

    /// `ρ(W, ΘΘᵀW)`; zero for full-space models.
    pub fn distortion(&self) -> Result<f64> {
        match &self.projector {
            None => Ok(0.0),
            Some(p) => distortion(&self.net.layer_shapes(), &self.ambient_weights()?, p),
        }
    }
}

/// Split a flat weight vector into its row-major layer matrices.
pub fn layer_blocks(shapes: &[(usize, usize)], w: &[f64]) -> Result<Vec<Matrix>> {
    let total: usize = shapes.iter().map(|(r, c)| r * c).sum();
    dim_check("layer blocks", total, w.len())?;
    let mut out = Vec::with_capacity(shapes.len());
    let mut off = 0;
    for &(r, c) in shapes {
        out.push(Matrix::from_vec(r, c, w[off..off + r * c].to_vec())?);
        off += r * c;
    }
    Ok(out)
}

/// `Σ_i ‖W⁽ⁱ⁾ − (ΘΘᵀW)⁽ⁱ⁾‖₂`, the sum of per-layer spectral norms of the
/// part of `W` outside the subspace.
pub fn distortion(shapes: &[(usize, usize)], w: &[f64], projector: &Projector) -> Result<f64> {
    let c = projector.compress(w)?;
    let resid: Vec<f64> = w.iter().zip(&c).map(|(a, b)| a - b).collect();
    let mut total = 0.0;
    for block in layer_blocks(shapes, &resid)? {
        if block.max_abs() == 0.0 {
            continue;
        }
        total += spectral_top_gram(&block)?.sigma;
    }
    Ok(total)
}
