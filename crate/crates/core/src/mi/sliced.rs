use serde::{Deserialize, Serialize};

use super::{estimate, mi_gaussian_closed_form, Estimator, MIEstimate, SamplePairs};
use crate::error::{dim_check, Result};
use crate::numeric::{Matrix, RngStream, Summary};
use crate::parallel::par_map;
use crate::projectors::Projector;

/// Per-projector estimates in projector order, with their mean and band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicedMi {
    pub per_theta: Vec<MIEstimate>,
    pub summary: Summary,
}

impl SlicedMi {
    fn from_estimates(per_theta: Vec<MIEstimate>) -> Self {
        let values: Vec<f64> = per_theta.iter().map(|e| e.value).collect();
        Self { summary: Summary::of(&values), per_theta }
    }

    pub fn any_near_deterministic(&self) -> bool {
        self.per_theta.iter().any(|e| e.near_deterministic)
    }
}

/// Estimate `I(ΘᵀW; Z)` for each projector. Row `r` of `weights` is the
/// trained weight vector of run `r` and row `r` of `samples` the data point
/// it is paired with; only the weights are projected.
pub fn sliced_mi(
    projectors: &[Projector],
    weights: &Matrix,
    samples: &Matrix,
    estimator: &Estimator,
    rng: &RngStream,
) -> Result<SlicedMi> {
    dim_check("weight and sample realizations", weights.rows(), samples.rows())?;
    let out = par_map(projectors.len(), |t| -> Result<MIEstimate> {
        let pairs = SamplePairs::new(projectors[t].project_rows(weights)?, samples.clone())?;
        estimate(&pairs, estimator, &rng.child(t as u64))
    });
    Ok(SlicedMi::from_estimates(out.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Closed-form sliced MI where `joint(Θ)` returns the Gaussian joint
/// covariance of `(ΘᵀW, Z)` and the dimension of the first block.
pub fn sliced_mi_gaussian<F>(projectors: &[Projector], joint: F) -> Result<SlicedMi>
where
    F: Fn(&Projector) -> Result<(Matrix, usize)> + Sync + Send,
{
    let out = par_map(projectors.len(), |t| -> Result<MIEstimate> {
        let (cov, dx) = joint(&projectors[t])?;
        mi_gaussian_closed_form(&cov, dx)
    });
    Ok(SlicedMi::from_estimates(out.into_iter().collect::<Result<Vec<_>>>()?))
}
