//! Closed-form Gaussian moments of the linear additive model.
//!
//! For `dX = AX dt + B dW` with `A b = lambda b`, `B b = mu b` and `X_0 = 0`,
//! every mode of the exact solution and of both Euler schemes is a centered
//! Gaussian whose variance is a geometric sum. These are the ground truth for
//! the statistical tests and the deterministic lower-bound sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectral::steps_for;

/// Below this `|lambda| h` the geometric sums are summed term by term.
pub const DIRECT_SUM_THRESHOLD: f64 = 1e-10;

fn check_rate(lambda: f64) -> Result<f64> {
    if !(lambda < 0.0) || !lambda.is_finite() {
        return invalid(format!("eigenvalue must be finite and negative, got {lambda}"));
    }
    Ok(-lambda)
}

fn check_time(t_end: f64) -> Result<()> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return invalid(format!("terminal time must be positive, got {t_end}"));
    }
    Ok(())
}

/// `Var <b, X_T> = mu^2 (1 - e^{-2|lambda| T}) / (2 |lambda|)`.
pub fn var_exact_mode(lambda: f64, mu: f64, t_end: f64) -> Result<f64> {
    let a = check_rate(lambda)?;
    check_time(t_end)?;
    Ok(mu * mu * -(-2.0 * a * t_end).exp_m1() / (2.0 * a))
}

/// `Var <b, Y_1> = mu^2 h sum_{k=1}^{T/h} e^{-2|lambda| k h}`.
pub fn var_exp_euler_mode(lambda: f64, mu: f64, t_end: f64, h: f64) -> Result<f64> {
    let a = check_rate(lambda)?;
    check_time(t_end)?;
    let steps = steps_for(t_end, h)?;
    let x = a * h;
    if x < DIRECT_SUM_THRESHOLD {
        let q = (-2.0 * x).exp();
        return Ok(mu * mu * h * geometric_direct(q, steps));
    }
    let num = -(-2.0 * a * t_end).exp_m1();
    let den = -(-2.0 * x).exp_m1();
    Ok(mu * mu * h * (-2.0 * x).exp() * num / den)
}

/// `Var <b, Y_2> = mu^2 h sum_{k=1}^{T/h} (1 + h|lambda|)^{-2k}`.
pub fn var_impl_euler_mode(lambda: f64, mu: f64, t_end: f64, h: f64) -> Result<f64> {
    let a = check_rate(lambda)?;
    check_time(t_end)?;
    let steps = steps_for(t_end, h)?;
    let x = a * h;
    if x < DIRECT_SUM_THRESHOLD {
        let q = (1.0 + x).powi(-2);
        return Ok(mu * mu * h * geometric_direct(q, steps));
    }
    let num = -(-2.0 * steps as f64 * x.ln_1p()).exp_m1();
    Ok(mu * mu * num / (a * (2.0 + x)))
}

// sum_{k=1}^{n} q^k, compensated.
fn geometric_direct(q: f64, n: usize) -> f64 {
    let mut acc = Neumaier::default();
    let mut term = 1.0;
    for _ in 0..n {
        term *= q;
        acc.add(term);
    }
    acc.total()
}

/// Lower bound on `Var <b, X> - Var <b, Y_1>`: `mu^2 (1 - e^{-2|lambda|T}) h / (4 e^{|lambda| h})`.
pub fn gap_lower_bound_exp(lambda: f64, mu: f64, t_end: f64, h: f64) -> Result<f64> {
    let a = check_rate(lambda)?;
    check_time(t_end)?;
    check_step(h)?;
    Ok(mu * mu * -(-2.0 * a * t_end).exp_m1() * h / (4.0 * (a * h).exp()))
}

/// Lower bound on `Var <b, X> - Var <b, Y_2>`: `mu^2 (1 - e^{-2|lambda|T}) h / (4 (1 + h |lambda|))`.
pub fn gap_lower_bound_impl(lambda: f64, mu: f64, t_end: f64, h: f64) -> Result<f64> {
    let a = check_rate(lambda)?;
    check_time(t_end)?;
    check_step(h)?;
    let bound = mu * mu * -(-2.0 * a * t_end).exp_m1() * h / (4.0 * (1.0 + h * a));
    debug_assert!(bound >= gap_lower_bound_exp(lambda, mu, t_end, h)?);
    Ok(bound)
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return invalid(format!("step size must be positive, got {h}"));
    }
    Ok(())
}

/// Which random variable a variance sequence describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceSource {
    ExactX,
    ExpEulerY1,
    ImplEulerY2,
}

/// Per-mode variances of a centered Gaussian with independent coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeVariances {
    values: Vec<f64>,
    source: VarianceSource,
}

impl ModeVariances {
    pub fn new(values: Vec<f64>, source: VarianceSource) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return invalid(format!("variances must be finite and nonnegative, got {v}"));
        }
        Ok(ModeVariances { values, source })
    }

    /// Variances of `X_T`, `Y_1` or `Y_2` for the given eigenvalues and noise weights.
    pub fn for_model(eigenvalues: &[f64], mu: &[f64], t_end: f64, h: f64, source: VarianceSource) -> Result<Self> {
        crate::error::check_dim(eigenvalues.len(), mu.len())?;
        let values = eigenvalues
            .iter()
            .zip(mu)
            .map(|(&l, &m)| match source {
                VarianceSource::ExactX => var_exact_mode(l, m, t_end),
                VarianceSource::ExpEulerY1 => var_exp_euler_mode(l, m, t_end, h),
                VarianceSource::ImplEulerY2 => var_impl_euler_mode(l, m, t_end, h),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(values, source)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> VarianceSource {
        self.source
    }
}

/// `E ||V||^2 = sum sigma_i^2`.
pub fn expected_sq_norm(v: &ModeVariances) -> f64 {
    let mut acc = Neumaier::default();
    for s in &v.values {
        acc.add(*s);
    }
    acc.total()
}

/// `E exp(-||V||^2) = prod (1 + 2 sigma_i^2)^{-1/2}`, via a sum of logarithms.
pub fn exp_functional(v: &ModeVariances) -> f64 {
    let mut acc = Neumaier::default();
    for s in &v.values {
        acc.add((2.0 * s).ln_1p());
    }
    (-0.5 * acc.total()).exp()
}

/// `(EX2 - EY2) e^{-6 EX2}`, a lower bound on `E phi(Y) - E phi(X)` for `phi = exp(-||.||^2)`.
pub fn weak_gap_lower_bound_general(ex2: f64, ey2: f64) -> Result<f64> {
    if !(ey2 >= 0.0 && ex2 >= ey2) || !ex2.is_finite() {
        return invalid(format!("need EX2 >= EY2 >= 0, got EX2={ex2}, EY2={ey2}"));
    }
    Ok((ex2 - ey2) * (-6.0 * ex2).exp())
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn neg(x: f64) -> f64 {
    (-x).max(0.0)
}

fn check_concrete(c: f64, rho: f64, delta: f64, t_end: f64, h: f64) -> Result<()> {
    if !(c > 0.0) || !(rho > 0.0) || !c.is_finite() || !rho.is_finite() || !delta.is_finite() {
        return invalid(format!("need c > 0, rho > 0 and finite delta, got c={c}, rho={rho}, delta={delta}"));
    }
    check_time(t_end)?;
    steps_for(t_end, h)?;
    if 1.0 / rho + 2.0 * delta >= 1.0 {
        return invalid(format!(
            "need 1/rho + 2 delta < 1 for a decaying bound, got {}",
            1.0 / rho + 2.0 * delta
        ));
    }
    Ok(())
}

// Logarithm of the concrete variance-gap bound, before the exp(-6 EX2) factor.
fn log_concrete(c: f64, rho: f64, delta: f64, t_end: f64, h: f64) -> f64 {
    let p = pos(1.0 / rho + 2.0 * delta);
    (-(-2.0 * c * t_end).exp_m1()).ln() + (-(-1f64).exp_m1()).ln() + p * t_end.ln()
        + 2.0 * delta * c.ln()
        + (1.0 - p) * h.ln()
        - (1.0 + rho * neg(delta)) * 4f64.ln()
        - 2f64.powf(rho) * std::f64::consts::E * c * t_end
        - (rho + neg(1.0 + 2.0 * rho * delta)).ln()
}

/// Explicit lower bound on `E||X||^2 - E||Y_i||^2` for `lambda_n = -c n^rho`, `mu_n = |lambda_n|^delta`.
///
/// Decays like `h^{1 - (1/rho + 2 delta)^+}`.
pub fn concrete_gap_lower_bound(c: f64, rho: f64, delta: f64, t_end: f64, h: f64) -> Result<f64> {
    check_concrete(c, rho, delta, t_end, h)?;
    Ok(log_concrete(c, rho, delta, t_end, h).exp())
}

/// The weak-error counterpart: the concrete bound times `e^{-6 EX2}`.
pub fn weak_error_lower_bound_concrete(c: f64, rho: f64, delta: f64, t_end: f64, h: f64, ex2: f64) -> Result<f64> {
    check_concrete(c, rho, delta, t_end, h)?;
    if !(ex2 >= 0.0) || !ex2.is_finite() {
        return invalid(format!("EX2 must be finite and nonnegative, got {ex2}"));
    }
    Ok((log_concrete(c, rho, delta, t_end, h) - 6.0 * ex2).exp())
}

/// Bound on `sum_{n > M} Var <b_n, X>` for the concrete model, or `None` when the series diverges.
pub fn variance_tail_bound(c: f64, rho: f64, delta: f64, modes: usize) -> Option<f64> {
    // mu_n^2 / (2 |lambda_n|) = c^{2 delta - 1} n^{-s} / 2 with s = rho (1 - 2 delta).
    let s = rho * (1.0 - 2.0 * delta);
    if s <= 1.0 {
        return None;
    }
    let m = modes as f64;
    Some(c.powf(2.0 * delta - 1.0) / 2.0 * m.powf(1.0 - s) / (s - 1.0))
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
