//! Deterministic gap sweeps for the linear additive model `lambda_n = -c n^rho`, `mu_n = |lambda_n|^delta`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fit_rate;
use crate::error::{invalid, Result};
use crate::oracles::{
    concrete_gap_lower_bound, exp_functional, expected_sq_norm, var_exact_mode, var_exp_euler_mode,
    var_impl_euler_mode, variance_tail_bound, weak_error_lower_bound_concrete, ModeVariances, Neumaier,
    VarianceSource,
};
use crate::schemes::SchemeKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub h: f64,
    pub exact_gap: f64,
    pub lower_bound: f64,
}

/// Exact gaps and explicit lower bounds over a list of step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    /// `"variance-gap"` for `E||X||^2 - E||Y||^2`, `"weak-gap"` for `E phi(Y) - E phi(X)`.
    pub quantity: String,
    pub scheme: SchemeKind,
    pub rows: Vec<LowerBoundRow>,
    pub fitted_order: Option<f64>,
    pub fit_intercept: Option<f64>,
    pub fit_r2: Option<f64>,
    pub residuals: Vec<f64>,
    /// `true` when `exact_gap >= lower_bound` at every step size.
    pub bound_holds: bool,
    pub warnings: Vec<String>,
    pub config: BTreeMap<String, String>,
}

struct Setup {
    eig: Vec<f64>,
    mu: Vec<f64>,
    source: VarianceSource,
    warnings: Vec<String>,
}

fn setup(c: f64, rho: f64, delta: f64, modes: usize, scheme: SchemeKind) -> Result<Setup> {
    let source = match scheme {
        SchemeKind::ExponentialEuler => VarianceSource::ExpEulerY1,
        SchemeKind::LinearImplicitEuler => VarianceSource::ImplEulerY2,
        other => return invalid(format!("lower-bound sweeps compare against an Euler scheme, got {other}")),
    };
    if modes == 0 {
        return invalid("need at least one mode");
    }
    if !(c > 0.0) || !(rho > 0.0) {
        return invalid(format!("need c > 0 and rho > 0, got c={c}, rho={rho}"));
    }
    let eig: Vec<f64> = (1..=modes).map(|n| -c * (n as f64).powf(rho)).collect();
    let mu = eig.iter().map(|l| l.abs().powf(delta)).collect();
    Ok(Setup {
        eig,
        mu,
        source,
        warnings: Vec::new(),
    })
}

fn variance_gap(s: &Setup, t_end: f64, h: f64) -> Result<f64> {
    let mut acc = Neumaier::default();
    for (&l, &m) in s.eig.iter().zip(&s.mu) {
        let y = match s.source {
            VarianceSource::ExpEulerY1 => var_exp_euler_mode(l, m, t_end, h)?,
            _ => var_impl_euler_mode(l, m, t_end, h)?,
        };
        acc.add(var_exact_mode(l, m, t_end)? - y);
    }
    Ok(acc.total())
}

fn finish(
    quantity: &str,
    scheme: SchemeKind,
    rows: Vec<LowerBoundRow>,
    mut warnings: Vec<String>,
    config: BTreeMap<String, String>,
) -> LowerBoundReport {
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.exact_gap)).collect();
    let (fitted_order, fit_intercept, fit_r2, residuals) = match fit_rate(&pairs) {
        Ok(f) => {
            warnings.extend(f.warnings);
            (Some(f.order), Some(f.intercept), Some(f.r2), f.residuals)
        }
        Err(e) => {
            warnings.push(format!("no rate fit: {e}"));
            (None, None, None, Vec::new())
        }
    };
    let bound_holds = rows.iter().all(|r| r.exact_gap >= r.lower_bound);
    for r in rows.iter().filter(|r| r.exact_gap < r.lower_bound) {
        warnings.push(format!("gap {} below bound {} at h={}", r.exact_gap, r.lower_bound, r.h));
    }
    LowerBoundReport {
        quantity: quantity.into(),
        scheme,
        rows,
        fitted_order,
        fit_intercept,
        fit_r2,
        residuals,
        bound_holds,
        warnings,
        config,
    }
}

fn echo(c: f64, rho: f64, delta: f64, t_end: f64, modes: usize, hs: &[f64], scheme: SchemeKind) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("model.kind".into(), "diagonal-additive".into());
    m.insert("model.c".into(), c.to_string());
    m.insert("model.rho".into(), rho.to_string());
    m.insert("model.delta".into(), delta.to_string());
    m.insert("model.modes".into(), modes.to_string());
    m.insert("grid.T".into(), t_end.to_string());
    m.insert("grid.h".into(), hs.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","));
    m.insert("scheme".into(), scheme.name().into());
    m
}

/// `E||X||^2 - E||Y||^2` summed over `modes` modes against the explicit bound, per step size.
///
/// Warns when the variance tail beyond `modes` is not below `1e-3` of the smallest gap.
pub fn lower_bound_sweep(
    c: f64,
    rho: f64,
    delta: f64,
    t_end: f64,
    modes: usize,
    hs: &[f64],
    scheme: SchemeKind,
) -> Result<LowerBoundReport> {
    let mut s = setup(c, rho, delta, modes, scheme)?;
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        rows.push(LowerBoundRow {
            h,
            exact_gap: variance_gap(&s, t_end, h)?,
            lower_bound: concrete_gap_lower_bound(c, rho, delta, t_end, h)?,
        });
    }
    let min_gap = rows.iter().map(|r| r.exact_gap).fold(f64::INFINITY, f64::min);
    match variance_tail_bound(c, rho, delta, modes) {
        Some(tail) if tail < 1e-3 * min_gap => {}
        Some(tail) => s.warnings.push(format!(
            "variance tail beyond {modes} modes is up to {tail:.3e}, not below 1e-3 of the smallest gap {min_gap:.3e}"
        )),
        None => s.warnings.push("variance series diverges; truncation error is uncontrolled".into()),
    }
    Ok(finish(
        "variance-gap",
        scheme,
        rows,
        s.warnings,
        echo(c, rho, delta, t_end, modes, hs, scheme),
    ))
}

/// `E exp(-||Y||^2) - E exp(-||X||^2)` against its explicit bound, per step size.
pub fn weak_lower_bound_sweep(
    c: f64,
    rho: f64,
    delta: f64,
    t_end: f64,
    modes: usize,
    hs: &[f64],
    scheme: SchemeKind,
) -> Result<LowerBoundReport> {
    let s = setup(c, rho, delta, modes, scheme)?;
    let x = ModeVariances::for_model(&s.eig, &s.mu, t_end, t_end, VarianceSource::ExactX)?;
    let ex2 = expected_sq_norm(&x);
    let fx = exp_functional(&x);
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let y = ModeVariances::for_model(&s.eig, &s.mu, t_end, h, s.source)?;
        rows.push(LowerBoundRow {
            h,
            exact_gap: exp_functional(&y) - fx,
            lower_bound: weak_error_lower_bound_concrete(c, rho, delta, t_end, h, ex2)?,
        });
    }
    Ok(finish("weak-gap", scheme, rows, s.warnings, echo(c, rho, delta, t_end, modes, hs, scheme)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::poison_rng;
    use std::f64::consts::PI;

    fn hs() -> Vec<f64> {
        (3..=10).map(|k| 2f64.powi(-k)).collect()
    }

    #[test]
    fn sweeps_hold_and_use_no_randomness() {
        let _guard = poison_rng();
        for scheme in [SchemeKind::ExponentialEuler, SchemeKind::LinearImplicitEuler] {
            for delta in [0.0, -0.25] {
                let r = lower_bound_sweep(PI * PI, 2.0, delta, 1.0, 500, &hs(), scheme).unwrap();
                assert!(r.bound_holds);
                assert_eq!(r.rows.len(), 8);
                let w = weak_lower_bound_sweep(PI * PI, 2.0, delta, 1.0, 500, &hs(), scheme).unwrap();
                assert!(w.bound_holds);
                assert!(w.rows.iter().all(|r| r.exact_gap > 0.0));
            }
        }
    }

    #[test]
    fn tail_warning_for_few_modes() {
        let r = lower_bound_sweep(PI * PI, 2.0, 0.0, 1.0, 10, &hs(), SchemeKind::ExponentialEuler).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("tail")));
    }

    #[test]
    fn rejects_non_euler_scheme() {
        assert!(lower_bound_sweep(1.0, 2.0, 0.0, 1.0, 10, &hs(), SchemeKind::ExactLinearAdditive).is_err());
    }

    #[test]
    fn gap_matches_direct_mode_sum() {
        let r = lower_bound_sweep(PI * PI, 2.0, 0.0, 1.0, 50, &[0.125], SchemeKind::ExponentialEuler).unwrap();
        let mut want = 0.0;
        for n in 1..=50 {
            let a = PI * PI * (n * n) as f64;
            let ex = (1.0 - (-2.0 * a).exp()) / (2.0 * a);
            let y: f64 = (1..=8).map(|k| 0.125 * (-2.0 * a * k as f64 * 0.125).exp()).sum();
            want += ex - y;
        }
        assert!((r.rows[0].exact_gap - want).abs() < 1e-13);
    }
}
