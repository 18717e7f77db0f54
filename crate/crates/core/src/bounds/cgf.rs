use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::minimize_scalar;

/// A convex function `ψ` dominating the cumulant generating function of the
/// centered loss, used through `inf_{t>0} (I + ψ(t))/t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CgfBound {
    /// `ψ(t) = σ²t²/2`.
    SubGaussian { sigma: f64 },
    /// Loss in `[0, C]`: sub-Gaussian with `σ = C/2`.
    Bounded { c: f64 },
    /// `ψ(t) = ‖λ‖²t²`, for a weighted sum of chi-square variables.
    GeneralizedChiSquare { lambda_sq: f64 },
    /// `ψ(t) = σ⁴t²(1 + 2λ/(1 + 2σ²t))`, a scaled noncentral chi-square
    /// with variance `σ²` and noncentrality `λ`.
    LinRegNoncentral { sigma_sq: f64, lambda: f64 },
}

const LOG_T_HALF_WIDTH: f64 = 25.0;
const LOG_T_TOL: f64 = 1e-11;

impl CgfBound {
    pub fn psi(&self, t: f64) -> f64 {
        match *self {
            CgfBound::SubGaussian { sigma } => 0.5 * sigma * sigma * t * t,
            CgfBound::Bounded { c } => 0.125 * c * c * t * t,
            CgfBound::GeneralizedChiSquare { lambda_sq } => lambda_sq * t * t,
            CgfBound::LinRegNoncentral { sigma_sq, lambda } => {
                sigma_sq * sigma_sq * t * t * (1.0 + 2.0 * lambda / (1.0 + 2.0 * sigma_sq * t))
            }
        }
    }

    /// `ψ''(0)/2`, the quadratic coefficient at the origin.
    fn curvature(&self) -> f64 {
        match *self {
            CgfBound::SubGaussian { sigma } => 0.5 * sigma * sigma,
            CgfBound::Bounded { c } => 0.125 * c * c,
            CgfBound::GeneralizedChiSquare { lambda_sq } => lambda_sq,
            CgfBound::LinRegNoncentral { sigma_sq, lambda } => sigma_sq * sigma_sq * (1.0 + 2.0 * lambda),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CgfBound::SubGaussian { sigma } => sigma >= 0.0,
            CgfBound::Bounded { c } => c >= 0.0,
            CgfBound::GeneralizedChiSquare { lambda_sq } => lambda_sq >= 0.0,
            CgfBound::LinRegNoncentral { sigma_sq, lambda } => sigma_sq >= 0.0 && lambda >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("negative constant in {self:?}")))
        }
    }

    /// `inf_t (I + ψ(t))/t` in closed form for purely quadratic `ψ`: `2√(aI)`.
    pub fn closed_form_inf(&self, mi: f64) -> Option<f64> {
        match self {
            CgfBound::LinRegNoncentral { .. } => None,
            _ => Some(2.0 * (self.curvature() * mi).sqrt()),
        }
    }

    /// `inf_{t>0} (I + ψ(t))/t`, minimized numerically over `log t`.
    pub fn inf_over_t(&self, mi: f64) -> Result<f64> {
        self.validate()?;
        if !(mi >= 0.0) {
            return Err(Error::InvalidArgument(format!("mutual information {mi} must be nonnegative")));
        }
        let a = self.curvature();
        if mi == 0.0 || a == 0.0 {
            // The ratio tends to zero as t → 0 (no information) or t → ∞ (no curvature).
            return Ok(0.0);
        }
        let s0 = 0.5 * (mi / a).ln();
        let f = |s: f64| {
            let t = s.exp();
            (mi + self.psi(t)) / t
        };
        let m = minimize_scalar(f, (s0 - LOG_T_HALF_WIDTH, s0 + LOG_T_HALF_WIDTH), LOG_T_TOL)?;
        if m.boundary {
            return Err(Error::InvalidArgument(format!("minimizer of the CGF ratio hit the bracket edge at log t = {}", m.t)));
        }
        Ok(m.value)
    }
}
