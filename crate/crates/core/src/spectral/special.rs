//! Mittag-Leffler-type growth constant used in perturbation bounds.

use crate::error::{invalid, Result};

const REL_TOL: f64 = 1e-16;
const MAX_TERMS: usize = 10_000;

/// `E_r(x) = [ sum_{n>=0} x^{2n} Gamma(r)^n / Gamma(n r + 1) ]^{1/2}` for `r` in `(0, 1]`, `x >= 0`.
///
/// Terms are formed in log space. Summation stops once the terms are past their
/// peak and below `1e-16` of the running sum. Fails when the value overflows
/// `f64` or the series has not settled after 10 000 terms.
pub fn mittag_leffler_e(r: f64, x: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return invalid(format!("order r must lie in (0, 1], got {r}"));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return invalid(format!("argument must be finite and nonnegative, got {x}"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let log_step = 2.0 * x.ln() + libm::lgamma(r);
    let mut sum = 1.0;
    let mut prev = 1.0;
    for n in 1..MAX_TERMS {
        let nf = n as f64;
        let term = (nf * log_step - libm::lgamma(nf * r + 1.0)).exp();
        sum += term;
        if !sum.is_finite() {
            return invalid(format!("E_{r}({x}) overflows f64"));
        }
        if term < prev && term < REL_TOL * sum {
            return Ok(sum.sqrt());
        }
        prev = term;
    }
    invalid(format!("series for E_{r}({x}) did not converge in {MAX_TERMS} terms"))
}
