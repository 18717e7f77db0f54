use crate::error::{Error, Result};

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Numerically stable softmax of `logits` written into `out`.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = (l - m).exp();
        s += *o;
    }
    out.iter_mut().for_each(|o| *o /= s);
}

fn check_simplex(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidArgument("empty probability vector".into()));
    }
    if let Some(x) = p.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("probability entry {x} is not in [0, 1]")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("probabilities sum to {s}")));
    }
    Ok(())
}

/// Shannon entropy in bits, with `0 · log 0 = 0`.
pub fn discrete_entropy_bits(p: &[f64]) -> Result<f64> {
    check_simplex(p)?;
    Ok(-p.iter().filter(|x| **x > 0.0).map(|x| x * x.log2()).sum::<f64>())
}

/// Shannon entropy in nats, with `0 · log 0 = 0`.
pub fn discrete_entropy_nats(p: &[f64]) -> Result<f64> {
    check_simplex(p)?;
    Ok(-p.iter().filter(|x| **x > 0.0).map(|x| x * x.ln()).sum::<f64>())
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Digamma at a positive integer: `ψ(n) = −γ + Σ_{k<n} 1/k`.
pub fn digamma_int(n: usize) -> f64 {
    assert!(n >= 1, "digamma_int needs n >= 1");
    if n < 16 {
        return -EULER_GAMMA + (1..n).map(|k| 1.0 / k as f64).sum::<f64>();
    }
    // Asymptotic series; truncation error is below 1e-15 from n = 16 on.
    let x = n as f64;
    let x2 = 1.0 / (x * x);
    x.ln() - 0.5 / x - x2 * (1.0 / 12.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 252.0 - x2 / 240.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(discrete_entropy_bits(&[1.0]).unwrap(), 0.0);
        assert!((discrete_entropy_bits(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!(discrete_entropy_bits(&[0.5, 0.6]).is_err());
        assert!(discrete_entropy_bits(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn digamma_matches_harmonic_sum() {
        for n in [1usize, 2, 15, 16, 17, 100, 5000] {
            let exact = -EULER_GAMMA + (1..n).map(|k| 1.0 / k as f64).sum::<f64>();
            assert!((digamma_int(n) - exact).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn lse_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
