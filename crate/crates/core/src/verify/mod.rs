//! Numerical checks of the analytic identities and inequalities behind the
//! bounds, on Gaussian instances where every information term is exact.
//!
//! The tightness instance is a noisy mean estimator `W = Z̄ + ξ`,
//! `ξ ~ N(0, τ²I_D)`, so that `I(W; S_n)` is finite. Since `Z̄` is sufficient
//! for `S_n`, `I(ΘᵀW; S_n) = I(ΘᵀW; Z̄)`.

use serde::{Deserialize, Serialize};

use crate::bounds::{
    bound_countable, bound_generic_cgf, bound_gme, bound_individual_sample, quantized_rate_term, BoundConstants, CgfBound,
    GmeMi, MiSource,
};
use crate::error::Result;
use crate::mi::{gme_slice_covariance, gme_sliced_mi, mi_gaussian_closed_form};
use crate::numeric::{purpose, Matrix, RngStream};
use crate::parallel::par_map;
use crate::projectors::{sample, Family, Projector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Ambient dimensions `1..=max_dim` are checked with every `d ≤ D`.
    pub max_dim: usize,
    pub sample_sizes: Vec<usize>,
    pub noise_vars: Vec<f64>,
    pub n_theta: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Deliberately inflate the sliced side of the data-processing check.
    pub break_dpi: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            max_dim: 20,
            sample_sizes: vec![10, 100],
            noise_vars: vec![0.01, 1.0],
            n_theta: 3,
            seed: 0,
            tolerance: 1e-10,
            break_dpi: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    /// Must not exceed `rhs` (up to tolerance), or equal it for identities.
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Pass and fail counts per suite, in first-seen order.
    pub fn by_suite(&self) -> Vec<(String, usize, usize)> {
        let mut out: Vec<(String, usize, usize)> = Vec::new();
        for c in &self.checks {
            let idx = match out.iter().position(|(s, _, _)| *s == c.suite) {
                Some(i) => i,
                None => {
                    out.push((c.suite.clone(), 0, 0));
                    out.len() - 1
                }
            };
            if c.passed {
                out[idx].1 += 1;
            } else {
                out[idx].2 += 1;
            }
        }
        out
    }
}

fn le(suite: &str, name: String, lhs: f64, rhs: f64, tol: f64) -> Check {
    Check { suite: suite.into(), name, lhs, rhs, passed: lhs <= rhs + tol }
}

fn eq(suite: &str, name: String, lhs: f64, rhs: f64, tol: f64) -> Check {
    Check { suite: suite.into(), name, lhs, rhs, passed: (lhs - rhs).abs() <= tol * rhs.abs().max(1.0) }
}

/// Joint covariance of `(A, B)` from its blocks.
fn joint(a: &Matrix, ab: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = (a.rows(), b.rows());
    Matrix::from_fn(p + q, p + q, |i, j| match (i < p, j < p) {
        (true, true) => a[(i, j)],
        (true, false) => ab[(i, j - p)],
        (false, true) => ab[(j, i - p)],
        (false, false) => b[(i - p, j - p)],
    })
}

/// Exact information terms of the noisy mean estimator for one projector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyMeanInfo {
    /// `I(ΘᵀW; S_n)`.
    pub sliced_full: f64,
    /// `I(W; S_n)`.
    pub full: f64,
    /// `I(ΘᵀW; Z_i)`, the same for every `i`.
    pub sliced_single: f64,
    /// `I(W; Z_i)`.
    pub single: f64,
}

/// Information terms from joint-covariance log-determinants.
pub fn noisy_mean_info(theta: &Projector, n: usize, tau_sq: f64) -> Result<NoisyMeanInfo> {
    let t = theta.to_dense();
    let (big_d, d) = t.shape();
    let nf = n as f64;
    let v = 1.0 / nf + tau_sq;
    let mut var_w = t.gram();
    var_w.scale(v);
    let cross = Matrix::from_fn(d, big_d, |i, j| t[(j, i)] / nf);
    let mut var_mean = Matrix::identity(big_d);
    var_mean.scale(1.0 / nf);
    let mut var_full = Matrix::identity(big_d);
    var_full.scale(v);
    let mut cross_full = Matrix::identity(big_d);
    cross_full.scale(1.0 / nf);
    let eye = Matrix::identity(big_d);
    Ok(NoisyMeanInfo {
        sliced_full: mi_gaussian_closed_form(&joint(&var_w, &cross, &var_mean), d)?.raw,
        full: mi_gaussian_closed_form(&joint(&var_full, &cross_full, &var_mean), big_d)?.raw,
        sliced_single: mi_gaussian_closed_form(&joint(&var_w, &cross, &eye), d)?.raw,
        single: mi_gaussian_closed_form(&joint(&var_full, &cross_full, &eye), big_d)?.raw,
    })
}

/// The same terms from their scalar formulas.
pub fn noisy_mean_info_formula(big_d: usize, d: usize, n: usize, tau_sq: f64) -> NoisyMeanInfo {
    let nf = n as f64;
    let full_rate = 0.5 * (1.0 / (nf * tau_sq)).ln_1p();
    let single_rate = 0.5 * ((1.0 / nf + tau_sq) / ((nf - 1.0) / (nf * nf) + tau_sq)).ln();
    NoisyMeanInfo {
        sliced_full: d as f64 * full_rate,
        full: big_d as f64 * full_rate,
        sliced_single: d as f64 * single_rate,
        single: big_d as f64 * single_rate,
    }
}

fn projectors(cfg: &VerifyConfig, big_d: usize, d: usize) -> Result<Vec<Projector>> {
    let base = RngStream::new(cfg.seed, purpose::PROJECTOR);
    (0..cfg.n_theta)
        .map(|t| sample(Family::Dense, &base.derive(&[big_d as u64, d as u64, t as u64]), big_d, d))
        .collect()
}

fn instances(cfg: &VerifyConfig) -> Vec<(usize, usize)> {
    (1..=cfg.max_dim).flat_map(|big_d| (1..=big_d).map(move |d| (big_d, d))).collect()
}

/// Sliced information never beats the full information it slices, in the
/// forms used by the three tightness comparisons.
pub fn tightness_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    const S: &str = "tightness";
    let tol = cfg.tolerance;
    let inst = instances(cfg);
    let per = par_map(inst.len(), |k| -> Result<Vec<Check>> {
        let (big_d, d) = inst[k];
        let ps = projectors(cfg, big_d, d)?;
        let mut out = Vec::new();
        for &n in &cfg.sample_sizes {
            for &tau_sq in &cfg.noise_vars {
                let tag = format!("D={big_d} d={d} n={n} tau2={tau_sq}");
                let infos = ps.iter().map(|p| noisy_mean_info(p, n, tau_sq)).collect::<Result<Vec<_>>>()?;
                let oracle = noisy_mean_info_formula(big_d, d, n, tau_sq);
                let m = infos.len() as f64;
                let mean_sqrt = |f: fn(&NoisyMeanInfo) -> f64| infos.iter().map(|i| f(i).max(0.0).sqrt()).sum::<f64>() / m;
                out.push(le(S, format!("full sample {tag}"), mean_sqrt(|i| i.sliced_full), infos[0].full.sqrt(), tol));
                out.push(le(S, format!("single sample {tag}"), mean_sqrt(|i| i.sliced_single), infos[0].single.sqrt(), tol));
                for (t, i) in infos.iter().enumerate() {
                    // All n per-sample terms are equal, so the average is one term.
                    out.push(le(
                        S,
                        format!("per-sample vs full-sample theta={t} {tag}"),
                        i.sliced_single.max(0.0).sqrt(),
                        (i.sliced_full / n as f64).sqrt(),
                        tol,
                    ));
                    out.push(eq(S, format!("log-det vs formula, sliced theta={t} {tag}"), i.sliced_full, oracle.sliced_full, tol));
                    out.push(eq(S, format!("log-det vs formula, single theta={t} {tag}"), i.sliced_single, oracle.sliced_single, tol));
                }
                out.push(eq(S, format!("log-det vs formula, full {tag}"), infos[0].full, oracle.full, tol));
            }
        }
        Ok(out)
    });
    Ok(per.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

/// `I(ΘᵀZ̄; Z_i) ≤ I(Z̄; Z_i)` and the sliced value matches `(d/2)log(n/(n−1))`.
pub fn data_processing_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    const S: &str = "data_processing";
    let tol = cfg.tolerance;
    let inst = instances(cfg);
    let per = par_map(inst.len(), |k| -> Result<Vec<Check>> {
        let (big_d, d) = inst[k];
        let mut out = Vec::new();
        for &n in &cfg.sample_sizes {
            let full = gme_sliced_mi(big_d, n)?;
            for (t, p) in projectors(cfg, big_d, d)?.iter().enumerate() {
                let tag = format!("D={big_d} d={d} n={n} theta={t}");
                let mut sliced = mi_gaussian_closed_form(&gme_slice_covariance(p, n), d)?.raw;
                out.push(eq(S, format!("closed form {tag}"), sliced, gme_sliced_mi(d, n)?, tol));
                if cfg.break_dpi {
                    sliced += full + 1.0;
                }
                out.push(le(S, format!("sliced <= full {tag}"), sliced, full, tol));
            }
        }
        Ok(out)
    });
    Ok(per.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

/// Bounds that should grow with the subspace dimension do.
pub fn monotonicity_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    const S: &str = "monotonicity";
    let mut out = Vec::new();
    let big_d = cfg.max_dim.max(2);
    for &n in &cfg.sample_sizes {
        let mut prev: Option<(f64, f64, f64)> = None;
        for d in 1..=big_d {
            let g = bound_gme(big_d, d, n, GmeMi::ClosedForm)?.value();
            let c = bound_countable(&BoundConstants { sigma: Some(0.5), b_theta: Some(1.0), d, big_d, n, ..Default::default() })?.value();
            let q = quantized_rate_term(1.0, d, n, 1.0, 1.0 / (n as f64).sqrt())?;
            if let Some((pg, pc, pq)) = prev {
                out.push(le(S, format!("mean-estimation bound d={}->{d} n={n}", d - 1), pg, g, 0.0));
                out.push(le(S, format!("countable bound d={}->{d} n={n}", d - 1), pc, c, 0.0));
                out.push(le(S, format!("quantized rate term d={}->{d} n={n}", d - 1), pq, q, 0.0));
            }
            let exact = crate::bounds::gme_exact_gen_error(d, n);
            out.push(le(S, format!("mean-estimation soundness D={big_d} d={d} n={n}"), exact, g, 0.0));
            prev = Some((g, c, q));
        }
    }
    Ok(out)
}

/// The generic CGF bound reproduces each dedicated bound on its own CGF.
pub fn specialization_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    const S: &str = "specialization";
    let tol = 1e-9;
    let mut out = Vec::new();
    let big_d = cfg.max_dim.max(2);
    let src = || MiSource::exact("closed_form_gaussian");
    for &n in &cfg.sample_sizes {
        for d in 1..=big_d {
            let mi = vec![vec![gme_sliced_mi(d, n)?; 3]; 2];
            let consts = BoundConstants { d, big_d, n, ..Default::default() };
            let a = gme_lambda(big_d, d, n);
            let generic = bound_generic_cgf(&mi, |_, _| CgfBound::GeneralizedChiSquare { lambda_sq: a }, &consts, src())?.value();
            let dedicated = bound_gme(big_d, d, n, GmeMi::ClosedForm)?.value();
            out.push(eq(S, format!("chi-square vs mean-estimation D={big_d} d={d} n={n}"), generic, dedicated, tol));
            for sigma in [0.5, 2.0] {
                let c = BoundConstants { sigma: Some(sigma), ..consts.clone() };
                let g = bound_generic_cgf(&mi, |_, _| CgfBound::SubGaussian { sigma }, &c, src())?.value();
                let ded = bound_individual_sample(&mi, &c, src())?.value();
                out.push(eq(S, format!("sub-Gaussian sigma={sigma} d={d} n={n}"), g, ded, tol));
                let cb = BoundConstants { c: Some(2.0 * sigma), ..consts.clone() };
                let g = bound_generic_cgf(&mi, |_, _| CgfBound::Bounded { c: 2.0 * sigma }, &cb, src())?.value();
                let ded = bound_individual_sample(&mi, &cb, src())?.value();
                out.push(eq(S, format!("bounded C={} d={d} n={n}", 2.0 * sigma), g, ded, tol));
            }
        }
    }
    Ok(out)
}

fn gme_lambda(big_d: usize, d: usize, n: usize) -> f64 {
    crate::bounds::gme_lambda_sq(big_d, d, n)
}

/// Every suite, in a fixed order.
pub fn run_all(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut checks = tightness_suite(cfg)?;
    checks.extend(data_processing_suite(cfg)?);
    checks.extend(monotonicity_suite(cfg)?);
    checks.extend(specialization_suite(cfg)?);
    Ok(VerifyReport { checks })
}
