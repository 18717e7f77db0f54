use serde::{Deserialize, Serialize};

use super::cgf::CgfBound;
use super::report::{BoundConstants, BoundFamily, BoundReport, GenErrorEstimate, MiSource, RateDistortionTerms};
use crate::error::{dim_check, Error, Result};
use crate::mi::gme_sliced_mi;
use crate::models::ols_subspace_solve;
use crate::numeric::{dot, Matrix};
use crate::parallel::par_map;
use crate::projectors::Projector;

fn need(v: Option<f64>, name: &'static str) -> Result<f64> {
    match v {
        Some(x) if x >= 0.0 => Ok(x),
        Some(x) => Err(Error::InvalidArgument(format!("{name} = {x} must be nonnegative"))),
        None => Err(Error::MissingConstant(name)),
    }
}

fn check_mi(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(**v >= 0.0)) {
        Some(v) => Err(Error::InvalidArgument(format!("mutual information {v} must be nonnegative"))),
        None => Ok(()),
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    Ok(n as f64)
}

/// Convert a bit count to nats.
pub fn bits_to_nats(bits: u64) -> f64 {
    bits as f64 * std::f64::consts::LN_2
}

/// `√(2/n)·E_Θ √(σ²·I(W'; S_n))` from one information value per projector.
pub fn bound_disintegrated(mi_full: &[f64], consts: &BoundConstants, source: MiSource) -> Result<BoundReport> {
    check_mi(mi_full)?;
    let sigma = need(consts.sigma, "sigma")?;
    let n = check_n(consts.n)?;
    let per = mi_full.iter().map(|i| (2.0 / n).sqrt() * (sigma * sigma * i).sqrt()).collect();
    Ok(BoundReport::new(BoundFamily::Disintegrated, per, consts.clone(), Some(source)))
}

/// `(1/n)Σ_i E_Θ √(2σ²·I(W'; Z_i))`, or `(C/n)Σ_i E_Θ √(I/2)` when only the
/// loss range `C` is known. `mi_per_i[θ]` holds the per-sample values for one
/// projector; a single value stands for all samples when they are exchangeable.
pub fn bound_individual_sample(mi_per_i: &[Vec<f64>], consts: &BoundConstants, source: MiSource) -> Result<BoundReport> {
    let sigma = match (consts.sigma, consts.c) {
        (Some(_), _) => need(consts.sigma, "sigma")?,
        (None, Some(_)) => need(consts.c, "C")? / 2.0,
        (None, None) => return Err(Error::MissingConstant("sigma or C")),
    };
    let mut per = Vec::with_capacity(mi_per_i.len());
    for row in mi_per_i {
        check_mi(row)?;
        if row.is_empty() {
            return Err(Error::InvalidArgument("no per-sample information values".into()));
        }
        per.push(row.iter().map(|i| (2.0 * sigma * sigma * i).sqrt()).sum::<f64>() / row.len() as f64);
    }
    Ok(BoundReport::new(BoundFamily::IndividualSample, per, consts.clone(), Some(source)))
}

/// `√(2d/n)·√(σ²·log(2b√(dn)))` for weights confined to a ball of radius `b`
/// in the subspace.
pub fn bound_countable(consts: &BoundConstants) -> Result<BoundReport> {
    let sigma = need(consts.sigma, "sigma")?;
    let b = need(consts.b_theta, "b_theta")?;
    let n = check_n(consts.n)?;
    let d = consts.d as f64;
    if !(b > 0.0) || consts.d == 0 {
        return Err(Error::InvalidArgument("b_theta and d must be positive".into()));
    }
    let log_term = (2.0 * b * (d * n).sqrt()).ln().max(0.0);
    let value = (2.0 * d / n).sqrt() * (sigma * sigma * log_term).sqrt();
    Ok(BoundReport::new(BoundFamily::Countable, vec![value], consts.clone(), None))
}

/// `‖λ_Θ‖² = d(1 + 1/n)² + (D − d)` for the Gaussian mean problem.
pub fn gme_lambda_sq(big_d: usize, d: usize, n: usize) -> f64 {
    let nf = n as f64;
    d as f64 * (1.0 + 1.0 / nf).powi(2) + (big_d - d) as f64
}

/// `(2/n)·√(d(1 + 1/n)² + (D − d))`.
pub fn gme_constant(big_d: usize, d: usize, n: usize) -> f64 {
    2.0 / n as f64 * gme_lambda_sq(big_d, d, n).sqrt()
}

/// Exact generalization error `2d/n` of the subspace Gaussian mean estimator.
pub fn gme_exact_gen_error(d: usize, n: usize) -> f64 {
    2.0 * d as f64 / n as f64
}

/// Information input for the Gaussian mean bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum GmeMi {
    ClosedForm,
    /// One estimate of `I(ΘᵀZ̄; Z_i)` per projector (exchangeable in `i`).
    Estimated { values: Vec<f64>, source: MiSource },
}

/// Gaussian mean bound `C_{D,d,n}·Σ_i √I(ΘᵀZ̄; Z_i)` with the exact error attached.
pub fn bound_gme(big_d: usize, d: usize, n: usize, mi: GmeMi) -> Result<BoundReport> {
    if d == 0 || d > big_d {
        return Err(Error::InvalidArgument(format!("need 1 <= d <= D, got d = {d}, D = {big_d}")));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n = {n} must be at least 2")));
    }
    let c = gme_constant(big_d, d, n);
    let nf = n as f64;
    let (values, source) = match mi {
        GmeMi::ClosedForm => (vec![gme_sliced_mi(d, n)?], MiSource::exact("closed_form_gaussian")),
        GmeMi::Estimated { values, source } => (values, source),
    };
    check_mi(&values)?;
    let per = values.iter().map(|i| c * nf * i.sqrt()).collect();
    let consts = BoundConstants { d, big_d, n, ..Default::default() };
    Ok(BoundReport::new(BoundFamily::Gme, per, consts, Some(source))
        .with_gen_error(GenErrorEstimate::exact(gme_exact_gen_error(d, n))))
}

/// Per-sample quantities of the fixed-design linear regression bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinRegTerm {
    /// `h_i = x_iᵀΘ(ΘᵀXᵀXΘ)⁻¹Θᵀx_i`.
    pub leverage: f64,
    /// `I(W'; y_i) = −½ log(1 − h_i)`.
    pub mi: f64,
    /// `σ_i² = σ²(1 + h_i)`.
    pub sigma_sq: f64,
    /// `μ_i = x_iᵀ(W* − ΘW'_*)`, the approximation bias at `x_i`.
    pub bias: f64,
    /// Noncentrality `μ_i²/σ_i²`.
    pub lambda: f64,
}

/// Per-sample terms for one projector.
pub fn linreg_terms(x: &Matrix, w_star: &[f64], sigma_noise: f64, projector: &Projector) -> Result<Vec<LinRegTerm>> {
    dim_check("true weights", x.cols(), w_star.len())?;
    let target = x.matvec(w_star)?;
    let fit = ols_subspace_solve(projector, x, &target)?;
    let resid: Vec<f64> = w_star.iter().zip(&fit.ambient).map(|(a, b)| a - b).collect();
    let s2 = sigma_noise * sigma_noise;
    (0..x.rows())
        .map(|i| {
            let h = fit.leverage(i)?;
            if !(h < 1.0) {
                return Err(Error::InvalidArgument(format!("leverage {h} of sample {i} is not below 1")));
            }
            let sigma_sq = s2 * (1.0 + h);
            let bias = dot(x.row(i), &resid);
            Ok(LinRegTerm { leverage: h, mi: -0.5 * (-h).ln_1p(), sigma_sq, bias, lambda: bias * bias / sigma_sq })
        })
        .collect()
}

/// Exact generalization error `2σ²d/n` of subspace least squares.
pub fn linreg_exact_gen_error(sigma_noise: f64, d: usize, n: usize) -> f64 {
    2.0 * sigma_noise * sigma_noise * d as f64 / n as f64
}

/// `(1/n)Σ_i E_Θ inf_t (I_i + σ_i⁴t²(1 + 2λ_i/(1 + 2σ_i²t)))/t` with the
/// exact error attached.
pub fn bound_linreg(x: &Matrix, w_star: &[f64], sigma_noise: f64, projectors: &[Projector]) -> Result<BoundReport> {
    let first = projectors.first().ok_or_else(|| Error::InvalidArgument("no projectors".into()))?;
    let (n, big_d, d) = (x.rows(), x.cols(), first.dim());
    if n < big_d {
        return Err(Error::InvalidArgument(format!("fixed design needs n >= D, got n = {n}, D = {big_d}")));
    }
    let per = par_map(projectors.len(), |t| -> Result<f64> {
        let terms = linreg_terms(x, w_star, sigma_noise, &projectors[t])?;
        let mut acc = 0.0;
        for term in &terms {
            acc += CgfBound::LinRegNoncentral { sigma_sq: term.sigma_sq, lambda: term.lambda }.inf_over_t(term.mi)?;
        }
        Ok(acc / n as f64)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let consts = BoundConstants { sigma: Some(sigma_noise), d, big_d, n, ..Default::default() };
    Ok(BoundReport::new(BoundFamily::LinReg, per, consts, Some(MiSource::exact("closed_form_gaussian")))
        .with_gen_error(GenErrorEstimate::exact(linreg_exact_gen_error(sigma_noise, d, n))))
}

/// `β·M^{q−1}·R·Πα_i`: Lipschitz constant of the loss in the weights for a
/// `q`-layer network with layer norms `≤ M`, inputs `‖x‖ ≤ R` and
/// 1-Lipschitz activations.
pub fn composite_lipschitz(beta: f64, m_layer: f64, layers: usize, radius: f64) -> f64 {
    beta * m_layer.powi(layers as i32 - 1) * radius
}

/// `2L·E[ρ] + (C/n)Σ_i E_Θ √(I(ΘᵀW; Z_i)/2)` with both parts recorded.
/// `distortion[θ]` is the mean distortion under projector `θ`.
pub fn bound_rate_distortion(
    distortion: &[f64],
    mi_per_i: &[Vec<f64>],
    consts: &BoundConstants,
    source: MiSource,
) -> Result<BoundReport> {
    dim_check("distortion and information projector counts", distortion.len(), mi_per_i.len())?;
    let l = need(consts.lipschitz, "lipschitz")?;
    let c = need(consts.c, "C")?;
    let mut dist = Vec::with_capacity(distortion.len());
    let mut rate = Vec::with_capacity(distortion.len());
    for (rho, row) in distortion.iter().zip(mi_per_i) {
        check_mi(row)?;
        if row.is_empty() {
            return Err(Error::InvalidArgument("no per-sample information values".into()));
        }
        dist.push(2.0 * l * rho);
        rate.push(c * row.iter().map(|i| (i / 2.0).sqrt()).sum::<f64>() / row.len() as f64);
    }
    let per = dist.iter().zip(&rate).map(|(a, b)| a + b).collect();
    let mut r = BoundReport::new(BoundFamily::RateDistortion, per, consts.clone(), Some(source));
    r.terms = Some(RateDistortionTerms { distortion: dist, rate });
    Ok(r)
}

/// `C·√(d·log(2M√d/δ)/(2n))`, the rate of a `δ`-cover of the radius-`M` ball in `R^d`.
pub fn quantized_rate_term(c: f64, d: usize, n: usize, m: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !(m > 0.0) || d == 0 || n == 0 {
        return Err(Error::InvalidArgument("need delta > 0, M > 0, d >= 1, n >= 1".into()));
    }
    let df = d as f64;
    let log_term = (2.0 * m * df.sqrt() / delta).ln().max(0.0);
    Ok(c * (df * log_term / (2.0 * n as f64)).sqrt())
}

/// `2L(E[ρ] + δ) + C√(d·log(2M√d/δ)/(2n))`. `latent_norms[θ]` is the largest
/// `‖ΘᵀW‖` measured under projector `θ` and must not exceed `M`.
pub fn bound_quantized_rate_distortion(distortion: &[f64], latent_norms: &[f64], consts: &BoundConstants) -> Result<BoundReport> {
    dim_check("distortion and norm projector counts", distortion.len(), latent_norms.len())?;
    let l = need(consts.lipschitz, "lipschitz")?;
    let c = need(consts.c, "C")?;
    let m = need(consts.m, "M")?;
    let delta = consts.delta.unwrap_or(1.0 / (consts.n as f64).sqrt());
    if let Some(&worst) = latent_norms.iter().max_by(|a, b| a.total_cmp(b)) {
        if worst > m {
            return Err(Error::MViolated { measured: worst, bound: m });
        }
    }
    let rate_value = quantized_rate_term(c, consts.d, consts.n, m, delta)?;
    let dist: Vec<f64> = distortion.iter().map(|rho| 2.0 * l * (rho + delta)).collect();
    let rate = vec![rate_value; dist.len()];
    let per = dist.iter().map(|a| a + rate_value).collect();
    let mut consts = consts.clone();
    consts.delta = Some(delta);
    let mut r = BoundReport::new(BoundFamily::QuantizedRateDistortion, per, consts, None);
    r.terms = Some(RateDistortionTerms { distortion: dist, rate });
    Ok(r)
}

/// `(1/n)Σ_i E_Θ inf_t (I_i + ψ_{θ,i}(t))/t` for arbitrary CGF bounds.
pub fn bound_generic_cgf(
    mi_per_i: &[Vec<f64>],
    cgf: impl Fn(usize, usize) -> CgfBound,
    consts: &BoundConstants,
    source: MiSource,
) -> Result<BoundReport> {
    let mut per = Vec::with_capacity(mi_per_i.len());
    for (t, row) in mi_per_i.iter().enumerate() {
        if row.is_empty() {
            return Err(Error::InvalidArgument("no per-sample information values".into()));
        }
        let mut acc = 0.0;
        for (i, &mi) in row.iter().enumerate() {
            acc += cgf(t, i).inf_over_t(mi)?;
        }
        per.push(acc / row.len() as f64);
    }
    Ok(BoundReport::new(BoundFamily::GenericCgf, per, consts.clone(), Some(source)))
}

/// Lower bound on the generalization error from a CGF bound on the other
/// tail: `−(1/n)Σ_i E_Θ inf_t (I_i + ψ₊(t))/t`. Experimental; no experiment
/// here depends on it.
pub fn gen_lower_bound_generic(mi_per_i: &[Vec<f64>], cgf_plus: impl Fn(usize, usize) -> CgfBound) -> Result<f64> {
    let mut total = 0.0;
    for (t, row) in mi_per_i.iter().enumerate() {
        let mut acc = 0.0;
        for (i, &mi) in row.iter().enumerate() {
            acc += cgf_plus(t, i).inf_over_t(mi)?;
        }
        total += acc / row.len().max(1) as f64;
    }
    Ok(-total / mi_per_i.len().max(1) as f64)
}
