use crate::error::{Error, Result};

/// Result of a bracketed scalar minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub t: f64,
    pub value: f64,
    /// The minimizer sits at (or within tolerance of) an end of the bracket.
    pub boundary: bool,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a unimodal `f` on `[lo, hi]`.
///
/// Interior evaluations must be finite. The endpoints are evaluated too and win
/// if they are finite and no worse than the interior optimum.
pub fn minimize_scalar(f: impl Fn(f64) -> f64, bracket: (f64, f64), tol: f64) -> Result<Minimum> {
    let (lo, hi) = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bad bracket ({lo}, {hi}) or tol {tol}")));
    }
    let mut evals = 0usize;
    let mut eval = |t: f64| -> Result<f64> {
        evals += 1;
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonfiniteObjective { t })
        }
    };
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    let (mut t, mut value) = if fc <= fd { (c, fc) } else { (d, fd) };
    let mut boundary = t - lo <= 2.0 * tol || hi - t <= 2.0 * tol;
    for end in [lo, hi] {
        let v = f(end);
        evals += 1;
        if v.is_finite() && v <= value {
            t = end;
            value = v;
            boundary = true;
        }
    }
    Ok(Minimum { t, value, boundary, evaluations: evals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_over_t() {
        let m = minimize_scalar(|t| (1.0 + t * t) / t, (1e-9, 100.0), 1e-10).unwrap();
        assert!((m.t - 1.0).abs() < 1e-8);
        assert!((m.value - 2.0).abs() < 1e-12);
        assert!(!m.boundary);
    }

    #[test]
    fn degenerate_intercept_hits_boundary() {
        let m = minimize_scalar(|t| (0.0 + t * t) / t, (0.0, 100.0), 1e-10).unwrap();
        assert!(m.boundary);
        assert!(m.t < 1e-9 && m.value < 1e-9);
    }

    #[test]
    fn nonfinite_interior_is_an_error() {
        let r = minimize_scalar(|t| if t > 5.0 { f64::NAN } else { t }, (0.0, 10.0), 1e-6);
        assert!(matches!(r, Err(Error::NonfiniteObjective { .. })));
    }
}
