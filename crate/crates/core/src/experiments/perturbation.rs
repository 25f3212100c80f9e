//! Sensitivity of Euler paths to the initial value.
//!
//! Two paths started at `xi_a` and `xi_b` share all noise. The mean-square
//! distance at every grid time is compared against
//! `sqrt(2) ||xi_a - xi_b|| E_{1-theta}[ y sqrt(2) T^{1-theta} / sqrt(1-theta) + z sqrt(2 T^{1-theta}) ]`,
//! where `y` and `z` bound the drift and Hilbert-Schmidt diffusion increments
//! with singularities `(t-s)^{-theta}` and `(t-s)^{-theta/2}`. The evolution
//! families of both schemes are contractions, so their supremum norm is 1.

use serde::{Deserialize, Serialize};

use super::engine::run_indexed;
use super::McConfig;
use crate::error::{check_dim, invalid, Result};
use crate::models::{Drift, ModelFamily, ModelSpec};
use crate::noise::{derive_seed, fill_column};
use crate::schemes::{SchemeKind, Stepper};
use crate::spectral::{mittag_leffler_e, CoeffState};

/// Singularity exponent and Lipschitz-type constants of drift and diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConstants {
    pub theta: f64,
    pub drift: f64,
    pub diffusion: f64,
}

/// Constants for the built-in families.
///
/// The diffusion bounds use `|b_k| <= sqrt(2)` at the collocation nodes, the
/// exactness of the discrete transform, and
/// `e^{-2 a tau} <= (1 + h a)^{-2m} <= 1 / (1 + 2 a tau)` with `tau = m h`,
/// which covers both schemes at once:
/// - Anderson: `sum_k 1 / (1 + 2 nu pi^2 k^2 tau) <= (8 nu tau)^{-1/2}`, so
///   `theta = 1/2`, `z = kappa (2 nu)^{-1/4}`.
/// - Cahn-Hilliard-Cook: `|lambda_k| >= (k pi)^4 / 2` for `k >= 1` gives
///   `sum_k <= 1 + 2^{-3/2} tau^{-1/4}`, so `theta = 1/4`,
///   `z = kappa sqrt(2 (T^{1/4} + 2^{-3/2}))`; the identity drift gives `y = T^{1/4}`.
/// - Diagonal additive: state-independent noise, `theta = 0`, `z = 0`.
///
/// A custom drift contributes `y = L T^theta` and needs its Lipschitz constant `L`.
pub fn perturbation_constants(model: &ModelSpec) -> Result<PerturbationConstants> {
    let t = model.t_end();
    let kappa = match model.diffusion() {
        crate::models::Diffusion::Multiplicative { kappa, .. } => kappa.abs(),
        crate::models::Diffusion::AdditiveDiagonal { .. } => 0.0,
    };
    let (theta, diffusion) = match model.family() {
        ModelFamily::Anderson { nu } => (0.5, kappa * (2.0 * nu).powf(-0.25)),
        ModelFamily::CahnHilliardCook => (0.25, kappa * (2.0 * (t.powf(0.25) + 2f64.powf(-1.5))).sqrt()),
        ModelFamily::DiagonalAdditive { .. } => (0.0, 0.0),
    };
    let lipschitz = match model.drift() {
        Drift::Zero => 0.0,
        Drift::Identity => 1.0,
        Drift::Custom { lipschitz: Some(l), .. } => *l,
        Drift::Custom { lipschitz: None, .. } => {
            return invalid("custom drift needs a declared Lipschitz constant for the perturbation bound");
        }
    };
    Ok(PerturbationConstants {
        theta,
        drift: lipschitz * t.powf(theta),
        diffusion,
    })
}

/// Outcome of one perturbation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationOutcome {
    /// `max_n sqrt(mean ||Y^a_n - Y^b_n||^2)`.
    pub lhs: f64,
    pub lhs_std_error: f64,
    /// Grid index where the maximum is attained.
    pub argmax: usize,
    pub rhs: f64,
    /// `rhs + 3 se - lhs`; nonnegative iff the check passes.
    pub margin: f64,
    pub pass: bool,
    pub constants: PerturbationConstants,
    pub samples: usize,
}

/// The bound's right-hand side for an initial distance `dist`.
pub fn perturbation_rhs(c: &PerturbationConstants, t_end: f64, dist: f64) -> Result<f64> {
    let r = 1.0 - c.theta;
    let tr = t_end.powf(r);
    let arg = c.drift * 2f64.sqrt() * tr / r.sqrt() + c.diffusion * (2.0 * tr).sqrt();
    Ok(2f64.sqrt() * dist * mittag_leffler_e(r, arg)?)
}

/// Run paired paths from `xi_a` and `xi_b` on `n` steps and test the bound.
pub fn perturbation_check(
    model: &ModelSpec,
    kind: SchemeKind,
    n: usize,
    mc: &McConfig,
    xi_a: &CoeffState,
    xi_b: &CoeffState,
) -> Result<PerturbationOutcome> {
    check_dim(model.modes(), xi_a.len())?;
    check_dim(model.modes(), xi_b.len())?;
    if mc.samples < 2 {
        return invalid(format!("need at least 2 samples, got {}", mc.samples));
    }
    if n == 0 {
        return invalid("need at least one step");
    }
    let constants = perturbation_constants(model)?;
    let h = model.t_end() / n as f64;
    Stepper::new(model, kind, h)?;
    let scale = h.sqrt();
    let m = model.modes();
    let dists = run_indexed(mc.samples, mc.threads, |s| {
        let mut st = Stepper::new(model, kind, h)?;
        let key = derive_seed(mc.seed, s as u64);
        let mut a = xi_a.to_vec();
        let mut b = xi_b.to_vec();
        let mut dw = vec![0.0; m];
        let mut out = Vec::with_capacity(n + 1);
        out.push(sq_dist(&a, &b));
        for k in 0..n {
            fill_column(key, k as u64, scale, &mut dw);
            st.step(&mut a, &dw);
            st.step(&mut b, &dw);
            out.push(sq_dist(&a, &b));
        }
        Ok(out)
    })?;
    let count = dists.len() as f64;
    let mut lhs = 0.0;
    let mut argmax = 0;
    let mut lhs_std_error = 0.0;
    for k in 0..=n {
        let mean = dists.iter().map(|d| d[k]).sum::<f64>() / count;
        let root = mean.sqrt();
        if root > lhs || k == 0 {
            let var = dists.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (count - 1.0);
            lhs = root;
            argmax = k;
            lhs_std_error = if root > 0.0 { (var / count).sqrt() / (2.0 * root) } else { 0.0 };
        }
    }
    let dist = sq_dist(xi_a, xi_b).sqrt();
    let rhs = perturbation_rhs(&constants, model.t_end(), dist)?;
    let margin = rhs + 3.0 * lhs_std_error - lhs;
    Ok(PerturbationOutcome {
        lhs,
        lhs_std_error,
        argmax,
        rhs,
        margin,
        pass: margin >= 0.0,
        constants,
        samples: mc.samples,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_anderson, build_chc, build_diagonal_additive};
    use std::f64::consts::PI;

    #[test]
    fn identical_starts_pass_with_zero_lhs() {
        let xi = CoeffState::unit(8, 0);
        let model = build_anderson(8, 0.1, 0.5, xi.clone(), 1.0).unwrap();
        let out = perturbation_check(&model, SchemeKind::ExponentialEuler, 16, &McConfig::new(10, 1), &xi, &xi).unwrap();
        assert_eq!(out.lhs, 0.0);
        assert!(out.pass);
    }

    #[test]
    fn noiseless_case_is_contraction() {
        let m = 8;
        let xa = CoeffState::unit(m, 0);
        let xb = CoeffState((0..m).map(|i| if i == 0 { 0.9 } else { 0.01 }).collect());
        let model = build_anderson(m, 0.1, 0.0, xa.clone(), 1.0).unwrap();
        let out = perturbation_check(&model, SchemeKind::LinearImplicitEuler, 32, &McConfig::new(4, 1), &xa, &xb).unwrap();
        let d = sq_dist(&xa, &xb).sqrt();
        assert_eq!(out.argmax, 0);
        assert!((out.lhs - d).abs() < 1e-15);
        assert!(out.rhs >= 2f64.sqrt() * d);
        assert!(out.pass);
    }

    #[test]
    fn anderson_seed_sweep() {
        let m = 16;
        let xa = CoeffState::unit(m, 0);
        let model = build_anderson(m, 0.1, 0.5, xa.clone(), 1.0).unwrap();
        for seed in 0..3 {
            for d in [0.1, 1.0] {
                let mut xb = xa.clone();
                xb[0] -= d;
                let out = perturbation_check(&model, SchemeKind::ExponentialEuler, 32, &McConfig::new(200, seed), &xa, &xb)
                    .unwrap();
                assert!(out.pass, "{out:?}");
            }
        }
    }

    #[test]
    fn constants_per_family() {
        let a = build_anderson(4, 0.1, 0.5, CoeffState::zeros(4), 1.0).unwrap();
        let c = perturbation_constants(&a).unwrap();
        assert_eq!(c.theta, 0.5);
        assert!((c.diffusion - 0.5 * 0.2f64.powf(-0.25)).abs() < 1e-15);
        assert_eq!(c.drift, 0.0);
        let chc = build_chc(4, 0.5, CoeffState::zeros(4), 1.0).unwrap();
        let c = perturbation_constants(&chc).unwrap();
        assert_eq!((c.theta, c.drift), (0.25, 1.0));
        let add = build_diagonal_additive(4, PI * PI, 2.0, 0.0, 1.0).unwrap();
        let c = perturbation_constants(&add).unwrap();
        assert_eq!((c.theta, c.drift, c.diffusion), (0.0, 0.0, 0.0));
        assert!((perturbation_rhs(&c, 1.0, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn custom_drift_needs_lipschitz_constant() {
        let a = build_anderson(4, 0.1, 0.5, CoeffState::zeros(4), 1.0).unwrap();
        let no_l = a.clone().with_custom_drift(|v| v.clone(), None);
        assert!(perturbation_constants(&no_l).is_err());
        let xi = CoeffState::zeros(4);
        assert!(perturbation_check(&no_l, SchemeKind::ExponentialEuler, 4, &McConfig::new(4, 0), &xi, &xi).is_err());
        let with_l = a.with_custom_drift(|v| v.clone(), Some(2.0));
        assert!((perturbation_constants(&with_l).unwrap().drift - 2.0).abs() < 1e-15);
    }

    #[test]
    fn diffusion_sum_bounds() {
        // Check the two series bounds the constants rest on.
        for tau in [1e-4, 1e-2, 0.5, 1.0] {
            let nu = 0.1;
            let s: f64 = (1..200_000).map(|k| 1.0 / (1.0 + 2.0 * nu * PI * PI * (k as f64).powi(2) * tau)).sum();
            assert!(s <= (8.0 * nu * tau).powf(-0.5));
            let s: f64 = (0..20_000)
                .map(|k| 1.0 / (1.0 + 2.0 * tau * -crate::models::chc_eigenvalue(k)))
                .sum();
            assert!(s <= 1.0 + 2f64.powf(-1.5) * tau.powf(-0.25));
        }
    }
}
